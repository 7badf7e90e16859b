"""Rational six-vertex R-matrix, boundary K-matrices and the open-chain transfer matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matcore import ID2, PERM, AuxBlockMatrix, Op, embed, kron_all, pauli_dot, unit_matrix

SEPARATION_TOL = 1e-6
NORM_TOL = 1e-12


class InvalidChainSpec(ValueError):
    pass


@dataclass(frozen=True)
class ChainSpec:
    """Inhomogeneous chain: site positions ``theta`` and crossing parameter ``eta``.

    ``eta = 0`` is accepted; it is the quasi-classical (Gaudin) setting in
    which only ``theta`` matters.
    """

    theta: tuple
    eta: complex = 0.0
    sep_tol: float = SEPARATION_TOL

    def __post_init__(self):
        th = tuple(complex(t) for t in np.atleast_1d(self.theta))
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "eta", complex(self.eta))
        self.validate()

    @property
    def n_sites(self) -> int:
        return len(self.theta)

    @property
    def dim(self) -> int:
        return 2 ** self.n_sites

    @property
    def theta_array(self) -> np.ndarray:
        return np.array(self.theta, dtype=complex)

    def validate(self):
        th, eta, tol = self.theta_array, self.eta, self.sep_tol
        n = len(th)
        if n < 1:
            raise InvalidChainSpec("a chain needs at least one site")
        if not np.all(np.isfinite(th)) or not np.isfinite(eta):
            raise InvalidChainSpec("theta and eta must be finite")
        for j in range(n):
            if abs(th[j]) < tol:
                raise InvalidChainSpec(f"theta_{j + 1} = {th[j]} is too close to 0")
            if eta != 0 and (abs(2 * th[j] - eta) < tol or abs(2 * th[j] + eta) < tol):
                raise InvalidChainSpec(f"2 theta_{j + 1} is too close to +-eta")
            for i in range(j):
                if abs(th[i] - th[j]) < tol:
                    raise InvalidChainSpec(f"theta_{i + 1} and theta_{j + 1} coincide")
                if abs(th[i] + th[j]) < tol:
                    raise InvalidChainSpec(f"theta_{i + 1} + theta_{j + 1} vanishes")


def _check_unit(name, h):
    h = np.asarray(h, dtype=float)
    if h.shape != (3,):
        raise ValueError(f"{name} must be a real 3-vector")
    if abs(np.linalg.norm(h) - 1.0) > NORM_TOL:
        raise ValueError(f"{name} must have unit norm, |{name}| = {np.linalg.norm(h)!r}")
    return h


@dataclass(frozen=True)
class OpenBoundary:
    """Boundary data at finite ``eta``: K- = xi + u h1.sigma, K+ = xibar + (u+eta) h2.sigma."""

    xi: complex
    xibar: complex
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", complex(self.xi))
        object.__setattr__(self, "xibar", complex(self.xibar))
        object.__setattr__(self, "h1", _check_unit("h1", self.h1))
        object.__setattr__(self, "h2", _check_unit("h2", self.h2))

    @property
    def h1_dot_h2(self) -> float:
        if self.parallel:
            return 1.0
        return float(self.h1 @ self.h2)

    @property
    def parallel(self) -> bool:
        return bool(np.max(np.abs(self.h1 - self.h2)) <= NORM_TOL)

    @classmethod
    def random(cls, rng: np.random.Generator, parallel: bool = False) -> "OpenBoundary":
        h1 = random_unit_vector(rng)
        h2 = h1.copy() if parallel else random_unit_vector(rng)
        return cls(random_complex(rng), random_complex(rng), h1, h2)


def random_complex(rng: np.random.Generator, scale: float = 1.0) -> complex:
    return complex(scale * rng.normal(), 0.5 * scale * rng.normal())


def random_unit_vector(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def random_theta(n_sites: int, rng: np.random.Generator, eta: complex = 0.0,
                 min_gap: float = 0.2) -> tuple:
    """Draw well separated complex inhomogeneities (rejection sampling)."""
    while True:
        th = rng.uniform(0.3, 1.5, n_sites) * rng.choice([-1.0, 1.0], n_sites) \
            + 0.3j * rng.normal(size=n_sites)
        try:
            ChainSpec(tuple(th), eta, sep_tol=min_gap)
        except InvalidChainSpec:
            continue
        return tuple(complex(t) for t in th)


def unit_factor(u, eta):
    """Scalar in the unitarity relation, ``(u + eta)(u - eta)``."""
    return (u + eta) * (u - eta)


def r_matrix(u, eta) -> np.ndarray:
    """R(u) = u id + eta P on C^2 (x) C^2."""
    return u * np.eye(4, dtype=complex) + eta * PERM


def k_minus(u, b: OpenBoundary) -> np.ndarray:
    return b.xi * ID2 + u * pauli_dot(b.h1)


def k_plus(u, b: OpenBoundary, eta) -> np.ndarray:
    return b.xibar * ID2 + (u + eta) * pauli_dot(b.h2)


def _r_aux_site(v, eta, site: int, n_sites: int) -> AuxBlockMatrix:
    # R_{0i}(v) = v id + eta sum_ab E_ab (x) E_ba^{(i)}
    dim = 2 ** n_sites
    blocks = np.empty((2, 2, dim, dim), dtype=complex)
    for a in range(2):
        for b in range(2):
            blocks[a, b] = eta * embed(unit_matrix(b, a), site, n_sites)
            if a == b:
                blocks[a, b] += v * np.eye(dim)
    return AuxBlockMatrix(blocks)


def monodromies(u, spec: ChainSpec) -> tuple[AuxBlockMatrix, AuxBlockMatrix]:
    """Row-to-row monodromies.

    T(u) = R_{0N}(u - theta_N) ... R_{01}(u - theta_1) and
    That(u) = R_{01}(u + theta_1) ... R_{0N}(u + theta_N).
    """
    n, eta, th = spec.n_sites, spec.eta, spec.theta
    t = _r_aux_site(u - th[n - 1], eta, n, n)
    for i in range(n - 1, 0, -1):
        t = t @ _r_aux_site(u - th[i - 1], eta, i, n)
    that = _r_aux_site(u + th[0], eta, 1, n)
    for i in range(2, n + 1):
        that = that @ _r_aux_site(u + th[i - 1], eta, i, n)
    return t, that


def double_row_monodromy(u, spec: ChainSpec, b: OpenBoundary) -> AuxBlockMatrix:
    t, that = monodromies(u, spec)
    return t @ AuxBlockMatrix.from_scalar(k_minus(u, b), spec.dim) @ that


def transfer_matrix(u, spec: ChainSpec, b: OpenBoundary) -> Op:
    """tau(u) = tr_0 K+(u) T(u) K-(u) That(u)."""
    m = double_row_monodromy(u, spec, b).blocks
    kp = k_plus(u, b, spec.eta)
    return sum(kp[a, c] * m[c, a] for a in range(2) for c in range(2))


# -- residual checkers ------------------------------------------------------

def _rel(lhs, rhs, scale=0.0) -> float:
    # ``scale`` lets product identities normalize by their factors, so that
    # near-cancelling sides (u ~ eta in unitarity) do not inflate the ratio
    scale = max(np.linalg.norm(lhs), np.linalg.norm(rhs), scale)
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(lhs - rhs) / scale)


_P23 = kron_all([ID2, PERM])


def _r12(u, eta):
    return np.kron(r_matrix(u, eta), ID2)


def _r23(u, eta):
    return np.kron(ID2, r_matrix(u, eta))


def _r13(u, eta):
    return _P23 @ _r12(u, eta) @ _P23


def _r21(u, eta):
    return PERM @ r_matrix(u, eta) @ PERM


def partial_transpose_second(m: np.ndarray) -> np.ndarray:
    """Transpose in the second tensor factor of a 4x4 matrix."""
    return m.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4)


R_IDENTITIES = ("qybe", "unitarity", "crossing", "antisymmetry", "quasiclassical")
_ARITY = {"qybe": 3, "unitarity": 1, "crossing": 1, "antisymmetry": 0, "quasiclassical": 1}


def check_r_identity(kind: str, *points, eta) -> float:
    """Relative Frobenius residual of one of the R-matrix identities.

    ``points`` are the spectral parameters the identity needs: three for
    ``qybe``, one for ``unitarity``, ``crossing`` and ``quasiclassical``,
    none for ``antisymmetry``.
    """
    if kind not in _ARITY:
        raise ValueError(f"unknown identity {kind!r}; expected one of {R_IDENTITIES}")
    if len(points) != _ARITY[kind]:
        raise ValueError(f"{kind} takes {_ARITY[kind]} spectral points, got {len(points)}")
    if kind == "qybe":
        u1, u2, u3 = points
        lhs = _r12(u1 - u2, eta) @ _r13(u1 - u3, eta) @ _r23(u2 - u3, eta)
        rhs = _r23(u2 - u3, eta) @ _r13(u1 - u3, eta) @ _r12(u1 - u2, eta)
    elif kind == "unitarity":
        (u,) = points
        a, b = r_matrix(u, eta), _r21(-u, eta)
        lhs, rhs = a @ b, -unit_factor(u, eta) * np.eye(4)
        return _rel(lhs, rhs, np.linalg.norm(a) * np.linalg.norm(b) / 2)
    elif kind == "crossing":
        (u,) = points
        v1 = np.kron(np.array([[0, -1], [1, 0]], dtype=complex), ID2)  # -i sigma^y on space 1
        lhs = r_matrix(u, eta)
        rhs = v1 @ partial_transpose_second(r_matrix(-u - eta, eta)) @ v1
    elif kind == "antisymmetry":
        lhs = r_matrix(-eta, eta)
        rhs = -2 * eta * (np.eye(4) - PERM) / 2
    else:
        (u,) = points
        lhs = r_matrix(u, 0.0)
        rhs = u * np.eye(4)
    return _rel(lhs, rhs)


def check_reflection(kind: str, u1, u2, eta, b: OpenBoundary, dual_shift: str = "eta") -> float:
    """Relative residual of the reflection equation (``re``) or its dual (``dual_re``).

    The dual equation involves ``R(-u1 - u2 - 2 s)``; ``dual_shift="eta"``
    uses ``s = eta`` and ``dual_shift="literal"`` uses ``s = 1``.
    """
    k1 = lambda k: np.kron(k, ID2)  # noqa: E731
    k2 = lambda k: np.kron(ID2, k)  # noqa: E731
    if kind == "re":
        km1, km2 = k_minus(u1, b), k_minus(u2, b)
        lhs = r_matrix(u1 - u2, eta) @ k1(km1) @ _r21(u1 + u2, eta) @ k2(km2)
        rhs = k2(km2) @ r_matrix(u1 + u2, eta) @ k1(km1) @ _r21(u1 - u2, eta)
    elif kind == "dual_re":
        if dual_shift == "eta":
            s = eta
        elif dual_shift == "literal":
            s = 1.0
        else:
            raise ValueError(f"dual_shift must be 'eta' or 'literal', got {dual_shift!r}")
        kp1, kp2 = k_plus(u1, b, eta), k_plus(u2, b, eta)
        w = -u1 - u2 - 2 * s
        lhs = r_matrix(u2 - u1, eta) @ k1(kp1) @ _r21(w, eta) @ k2(kp2)
        rhs = k2(kp2) @ r_matrix(w, eta) @ k1(kp1) @ _r21(u2 - u1, eta)
    else:
        raise ValueError(f"unknown reflection equation {kind!r}; expected 're' or 'dual_re'")
    return _rel(lhs, rhs)
