"""Quasi-classical limit: boundary expansion in eta and the Gaudin operators H_j."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import PAULI, Op, embed
from .vertex_model import ChainSpec, OpenBoundary, random_complex, random_unit_vector, transfer_matrix

ORTHO_TOL = 1e-12
DEFAULT_LADDER = (2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3)


class FDConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaudinBoundary:
    """Boundary data of the eta-expansion.

    ``xibar(eta) = -xi + xi1 eta`` and
    ``h2(eta) = h1 + h21 eta + h22 eta**2 / 2``, with ``h1 . h21 = 0`` and
    ``h1 . h22 = -|h21|**2`` so that ``h2`` stays normalized to second
    order.  ``h22`` defaults to ``-|h21|**2 h1``.
    """

    xi: complex
    xi1: complex
    h1: np.ndarray
    h21: np.ndarray
    h22: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "xi", complex(self.xi))
        object.__setattr__(self, "xi1", complex(self.xi1))
        h1 = np.asarray(self.h1, dtype=float)
        h21 = np.asarray(self.h21, dtype=float)
        if abs(np.linalg.norm(h1) - 1.0) > ORTHO_TOL:
            raise ValueError("h1 must be a unit vector")
        if abs(h1 @ h21) > ORTHO_TOL:
            raise ValueError(f"h1 . h21 = {h1 @ h21:.3e}, must vanish")
        h22 = -(h21 @ h21) * h1 if self.h22 is None else np.asarray(self.h22, dtype=float)
        if abs(h1 @ h22 + h21 @ h21) > ORTHO_TOL:
            raise ValueError("h1 . h22 must equal -|h21|^2")
        object.__setattr__(self, "h1", h1)
        object.__setattr__(self, "h21", h21)
        object.__setattr__(self, "h22", h22)

    @property
    def h21_sq(self) -> float:
        return float(self.h21 @ self.h21)

    @property
    def parallel(self) -> bool:
        """True when h2 = h1 to first order, i.e. the inhomogeneous BAE term vanishes."""
        return self.h21_sq == 0.0

    def with_h22(self, h22) -> "GaudinBoundary":
        return GaudinBoundary(self.xi, self.xi1, self.h1, self.h21, h22)

    @classmethod
    def random(cls, rng: np.random.Generator, h21_norm: float | None = None,
               parallel: bool = False) -> "GaudinBoundary":
        h1 = random_unit_vector(rng)
        w = rng.normal(size=3)
        w -= (w @ h1) * h1
        w /= np.linalg.norm(w)
        norm = rng.uniform(0.3, 1.2) if h21_norm is None else h21_norm
        h21 = np.zeros(3) if parallel else norm * w
        return cls(random_complex(rng), random_complex(rng), h1, h21)


def alternative_h22(g: GaudinBoundary, rng: np.random.Generator, size: float = 1.0) -> np.ndarray:
    """Another completion: add a random vector orthogonal to h1."""
    w = rng.normal(size=3)
    w -= (w @ g.h1) * g.h1
    return g.h22 + size * w


def boundary_at_eta(g: GaudinBoundary, eta: float) -> OpenBoundary:
    """Finite-eta boundary obtained from the expansion (h2 renormalized)."""
    if np.iscomplexobj(eta) and np.imag(eta) != 0:
        raise ValueError("the boundary expansion is built for real eta only")
    eta = float(np.real(eta))
    if g.parallel:
        return OpenBoundary(g.xi, -g.xi + g.xi1 * eta, g.h1, g.h1.copy())
    h2 = g.h1 + eta * g.h21 + 0.5 * eta ** 2 * g.h22
    norm = np.linalg.norm(h2)
    if norm == 0.0:
        raise ValueError("h2(eta) vanishes; eta too large")
    return OpenBoundary(g.xi, -g.xi + g.xi1 * eta, g.h1, h2 / norm)


def _theta(spec) -> np.ndarray:
    if isinstance(spec, ChainSpec):
        return spec.theta_array
    return np.asarray(spec, dtype=complex)


def _prefactor(j: int, th: np.ndarray) -> complex:
    t = th[j - 1]
    others = np.delete(th, j - 1)
    return complex(np.prod(t - others) * np.prod(t + th))


def leading_scalar(j: int, spec, g: GaudinBoundary) -> complex:
    """Coefficient of id in the O(eta) term of tau(theta_j)."""
    th = _theta(spec)
    t = th[j - 1]
    return _prefactor(j, th) * (t * t - g.xi ** 2)


def site_sigma(v, site: int, n_sites: int) -> Op:
    """``v . sigma_site`` on the full chain."""
    return sum(v[a] * embed(PAULI[a], site, n_sites) for a in range(3))


def heisenberg_pair(j: int, k: int, n_sites: int) -> Op:
    """sigma_j . sigma_k + id."""
    out = np.eye(2 ** n_sites, dtype=complex)
    for s in PAULI:
        out = out + embed(s, j, n_sites) @ embed(s, k, n_sites)
    return out


def hamiltonian(j: int, spec, g: GaudinBoundary) -> Op:
    """Closed-form Gaudin operator H_j (site index ``j`` is 1-based)."""
    th = _theta(spec)
    n = len(th)
    if not 1 <= j <= n:
        raise ValueError(f"site {j} out of range [1, {n}]")
    t, xi, xi1 = th[j - 1], g.xi, g.xi1
    dim = 2 ** n
    eye = np.eye(dim, dtype=complex)
    field = 1j * t ** 2 * np.cross(g.h1, g.h21) + t * (xi1 * g.h1 + xi * g.h21)
    m = (xi * xi1 + t - xi ** 2 / t) * eye + site_sigma(field, j, n)
    h1s = site_sigma(g.h1, j, n)
    left = xi * eye + t * h1s
    right = -xi * eye + t * h1s
    for k in range(1, n + 1):
        if k == j:
            continue
        pair = heisenberg_pair(j, k, n)
        m = m + (t ** 2 - xi ** 2) / (2 * (t - th[k - 1])) * pair
        m = m + left @ pair @ right / (2 * (t + th[k - 1]))
    return _prefactor(j, th) * m


def hamiltonians(spec, g: GaudinBoundary) -> list[Op]:
    n = len(_theta(spec))
    return [hamiltonian(j, spec, g) for j in range(1, n + 1)]


@dataclass(frozen=True)
class FDResult:
    op: Op
    error: float
    ladder: tuple


def _neville_to_zero(xs, ys):
    """Polynomial extrapolation to x = 0; returns the tableau's last-row entries."""
    cols = list(ys)
    last_row = [cols[-1]]
    n = len(xs)
    for m in range(1, n):
        cols = [(xs[i + m] * cols[i] - xs[i] * cols[i + 1]) / (xs[i + m] - xs[i])
                for i in range(n - m)]
        last_row.append(cols[-1])
    return last_row


def hamiltonian_fd(j: int, spec, g: GaudinBoundary, eta_ladder=DEFAULT_LADDER,
                   tol: float = 1e-6) -> FDResult:
    """H_j from finite-eta transfer matrices, extrapolated to eta = 0.

    Uses ``(tau(theta_j)/eta - leading_scalar id)/eta`` on each rung of the
    ladder and Neville (Richardson) extrapolation on top.  ``error`` is the
    relative change contributed by the last extrapolation level.
    """
    th = _theta(spec)
    ladder = tuple(float(e) for e in eta_ladder)
    if len(ladder) < 2:
        raise ValueError("need at least two eta values")
    lead = leading_scalar(j, th, g)
    eye = np.eye(2 ** len(th), dtype=complex)
    samples = []
    for eta in ladder:
        chain = ChainSpec(tuple(th), eta, sep_tol=0.0)
        tau = transfer_matrix(th[j - 1], chain, boundary_at_eta(g, eta))
        samples.append((tau / eta - lead * eye) / eta)
    row = _neville_to_zero(ladder, samples)
    best = row[-1]
    scale = np.linalg.norm(best) or 1.0
    errs = [np.linalg.norm(row[m] - row[m - 1]) / scale for m in range(1, len(row))]
    err = float(errs[-1])
    if len(errs) >= 2 and errs[-1] >= errs[-2] and err > tol:
        raise FDConvergenceError(f"extrapolation for H_{j} stalled at relative error {err:.2e}")
    return FDResult(best, err, ladder)
