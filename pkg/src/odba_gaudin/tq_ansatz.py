"""Inhomogeneous T-Q relation, chain and Gaudin Bethe equations, Gaudin energies.

Roots come in reflection pairs: ``{lam, -lam - eta}`` for the chain and
``{lam, -lam}`` in the Gaudin limit; every quantity here is invariant under
swapping a root for its partner.

When the inhomogeneous term vanishes (parallel boundaries, ``c = 0``) some
of the N roots may sit at infinity.  ``BetheRoots.n_infinite`` counts them;
they contribute no factor to ratios of Q and drop out of every sum.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gaudin_ops import GaudinBoundary
from .matcore import Poly, circle_nodes, poly_interp
from .vertex_model import ChainSpec, OpenBoundary

COLLISION_TOL = 1e-8
POLE_TOL = 1e-10


class CollisionError(ValueError):
    """A root sits on (or too close to) a singular point of the equations."""


class PoleError(ValueError):
    """Evaluation point coincides with a zero of Q."""


class DegreeError(ValueError):
    pass


@dataclass(frozen=True)
class BetheRoots:
    lam: np.ndarray
    mode: str = "gaudin"
    eta: complex = 0.0
    residual_norm: float = float("nan")
    canonical: bool = False
    n_infinite: int = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.mode not in ("chain", "gaudin"):
            raise ValueError(f"mode must be 'chain' or 'gaudin', got {self.mode!r}")
        object.__setattr__(self, "lam", np.atleast_1d(np.asarray(self.lam, dtype=complex)))
        eta = 0.0 if self.mode == "gaudin" else complex(self.eta)
        object.__setattr__(self, "eta", complex(eta))

    @property
    def n_roots(self) -> int:
        return len(self.lam) + self.n_infinite

    def reflect(self, z):
        return -z - self.eta

    def singular_points(self, theta) -> np.ndarray:
        th = np.asarray(theta, dtype=complex)
        pts = np.concatenate([th, -th])
        if self.mode == "chain":
            # lam = 0 or -eta zeroes every term of its own equation
            pts = np.concatenate([pts, pts - self.eta, [0.0, -self.eta]])
        return pts

    def colliding(self, theta, tol: float = COLLISION_TOL) -> bool:
        if len(self.lam) == 0:
            return False
        pts = self.singular_points(theta)
        return bool(np.min(np.abs(self.lam[:, None] - pts[None, :])) < tol)


@dataclass(frozen=True)
class TQContext:
    """Building blocks of the T-Q relation for a finite-eta open chain."""

    spec: ChainSpec
    boundary: OpenBoundary

    def __post_init__(self):
        if self.spec.eta == 0:
            raise ValueError("the chain T-Q relation needs a nonzero eta")

    @property
    def eta(self) -> complex:
        return self.spec.eta

    @property
    def c(self) -> float:
        return 2.0 * (self.boundary.h1_dot_h2 - 1.0)

    def abar(self, u):
        eta, th, b = self.eta, self.spec.theta_array, self.boundary
        u = np.asarray(u, dtype=complex)
        prod = np.prod((u[..., None] + th + eta) * (u[..., None] - th + eta), axis=-1)
        return (2 * u + 2 * eta) / (2 * u + eta) * (u + b.xi) * (u + b.xibar) * prod

    def dbar(self, u):
        eta, th, b = self.eta, self.spec.theta_array, self.boundary
        u = np.asarray(u, dtype=complex)
        prod = np.prod((u[..., None] + th) * (u[..., None] - th), axis=-1)
        return 2 * u / (2 * u + eta) * (u - b.xi + eta) * ((u + eta) - b.xibar) * prod

    def F(self, u):
        eta, th = self.eta, self.spec.theta_array
        u = np.asarray(u, dtype=complex)[..., None]
        return np.prod((u + th) * (u - th) * (u + th + eta) * (u - th + eta), axis=-1)


def _q(x, lam, eta):
    x = np.asarray(x, dtype=complex)
    return np.prod((x[..., None] - lam) * (x[..., None] + lam + eta), axis=-1)


def q_eval(u, r: BetheRoots):
    """Q(u) = prod (u - lam_j)(u + lam_j + eta) over the finite roots."""
    return _q(u, r.lam, r.eta)


def _check_infinite(r: BetheRoots, inhomogeneous: bool):
    if r.n_infinite and inhomogeneous:
        raise ValueError("roots at infinity are only allowed when the inhomogeneous term vanishes")


def lambda_eval(u, r: BetheRoots, ctx: TQContext):
    """Transfer-matrix eigenvalue from the T-Q relation."""
    if r.mode != "chain":
        raise ValueError("lambda_eval needs chain-mode roots")
    _check_infinite(r, ctx.c != 0)
    eta = ctx.eta
    u = complex(u)
    for lam in r.lam:
        for z in (lam, r.reflect(lam)):
            if abs(u - z) < POLE_TOL * max(1.0, abs(z)):
                raise PoleError(f"u = {u} hits a zero of Q")
    q = q_eval(u, r)
    return complex((ctx.abar(u) * q_eval(u - eta, r) + ctx.dbar(u) * q_eval(u + eta, r)
                    + ctx.c * u * (u + eta) * ctx.F(u)) / q)


def chain_bae_terms(lam, ctx: TQContext) -> np.ndarray:
    """The three summands of each chain Bethe equation, shape ``(3, M)``."""
    lam = np.asarray(lam, dtype=complex)
    eta = ctx.eta
    a = ctx.abar(lam) * _q(lam - eta, lam, eta)
    d = ctx.dbar(lam) * _q(lam + eta, lam, eta)
    f = ctx.c * lam * (lam + eta) * ctx.F(lam)
    return np.array([a, d, f])


def chain_bae_residual(r: BetheRoots, ctx: TQContext) -> np.ndarray:
    """Normalized residues of the T-Q relation at the roots."""
    if r.mode != "chain":
        raise ValueError("chain_bae_residual needs chain-mode roots")
    _check_infinite(r, ctx.c != 0)
    if r.colliding(ctx.spec.theta):
        raise CollisionError("root collides with +-theta, +-theta - eta, 0 or -eta")
    if np.any(np.abs(2 * r.lam + ctx.eta) < COLLISION_TOL):
        raise CollisionError("root at the reflection fixed point -eta/2")
    terms = chain_bae_terms(r.lam, ctx)
    scale = np.max(np.abs(terms), axis=0)
    scale = np.where(scale == 0, 1.0, scale)
    return terms.sum(axis=0) / scale


def gaudin_bae_terms(lam, g: GaudinBoundary, theta) -> np.ndarray:
    """Individual summands of each Gaudin Bethe equation (LHS minus RHS), shape ``(K, M)``."""
    lam = np.asarray(lam, dtype=complex)
    th = np.asarray(theta, dtype=complex)
    m = len(lam)
    xi, xi1 = g.xi, g.xi1
    w = 1 - xi1
    by_theta = np.concatenate([-1 / (lam[:, None] + th), -1 / (lam[:, None] - th)], axis=1)
    diff = lam[:, None] - lam[None, :]
    summ = lam[:, None] + lam[None, :]
    off = ~np.eye(m, dtype=bool)
    by_root = np.zeros((m, 2 * m), dtype=complex)
    with np.errstate(divide="ignore", invalid="ignore"):
        by_root[:, :m] = np.where(off, 2 / np.where(off, diff, 1), 0)
        by_root[:, m:] = np.where(off, 2 / np.where(off, summ, 1), 0)
    pair_prod = np.prod(np.where(off, diff * summ, 1), axis=1)
    rhs = g.h21_sq * lam / (2 * (lam ** 2 - xi ** 2)) \
        * np.prod((lam[:, None] + th) * (lam[:, None] - th), axis=1) / pair_prod
    cols = [w / (lam - xi), w / (lam + xi)]
    return np.column_stack(cols + [by_theta, by_root, -rhs[:, None]]).T


def gaudin_bae_residual(r: BetheRoots, g: GaudinBoundary, theta) -> np.ndarray:
    """LHS - RHS of the Gaudin Bethe equations, each row divided by its largest term."""
    if r.mode != "gaudin":
        raise ValueError("gaudin_bae_residual needs gaudin-mode roots")
    _check_infinite(r, g.h21_sq != 0)
    lam = r.lam
    if r.colliding(theta):
        raise CollisionError("root collides with +-theta")
    if len(lam):
        bad = np.abs(lam[:, None] - np.array([g.xi, -g.xi])[None, :])
        if np.min(bad) < COLLISION_TOL:
            raise CollisionError("root collides with +-xi")
        m = len(lam)
        if m > 1:
            gaps = np.abs(np.concatenate([lam[:, None] - lam[None, :], lam[:, None] + lam[None, :]], axis=1))
            gaps[np.arange(m), np.arange(m)] = np.inf
            gaps[np.arange(m), m + np.arange(m)] = np.inf
            if np.min(gaps) < COLLISION_TOL:
                raise CollisionError("two roots coincide up to reflection")
    terms = gaudin_bae_terms(lam, g, theta)
    scale = np.max(np.abs(terms), axis=0)
    scale = np.where(scale == 0, 1.0, scale)
    return terms.sum(axis=0) / scale


def gaudin_energy(j: int, r: BetheRoots, g: GaudinBoundary, theta) -> complex:
    """Eigenvalue of H_j on the Bethe state labelled by ``r`` (``j`` is 1-based)."""
    th = np.asarray(theta, dtype=complex)
    t = th[j - 1]
    if abs(t - g.xi) < COLLISION_TOL or abs(t + g.xi) < COLLISION_TOL:
        raise PoleError(f"theta_{j} = +-xi")
    lam = r.lam
    if len(lam) and np.min(np.abs(np.concatenate([t - lam, t + lam]))) < COLLISION_TOL:
        raise PoleError(f"theta_{j} coincides with a root")
    others = np.delete(th, j - 1)
    pre = (t ** 2 - g.xi ** 2) * 2 * t * np.prod((t + others) * (t - others))
    bracket = g.xi1 / (t - g.xi) + np.sum(1 / (t + others) + 1 / (t - others)) + 1 / t \
        - np.sum(1 / (t - lam) + 1 / (t + lam))
    return complex(pre * bracket)


def gaudin_energies(r: BetheRoots, g: GaudinBoundary, theta) -> np.ndarray:
    return np.array([gaudin_energy(j, r, g, theta) for j in range(1, len(theta) + 1)])


# -- eigenvalue properties --------------------------------------------------

def initial_value(spec: ChainSpec, b: OpenBoundary) -> complex:
    th, eta = spec.theta_array, spec.eta
    return complex(2 * b.xi * b.xibar * np.prod((eta - th) * (eta + th)))


def functional_rhs(j: int, spec: ChainSpec, b: OpenBoundary) -> complex:
    """Right-hand side of Lambda(theta_j) Lambda(theta_j - eta) = ... (``j`` 1-based).

    The K+ factor enters as det K+(theta_j - eta) = xibar^2 - theta_j^2.
    """
    th, eta = spec.theta_array, spec.eta
    t = th[j - 1]
    front = 4 * (t + eta) * (t - eta) * (b.xi ** 2 - t ** 2) * (b.xibar ** 2 - t ** 2) \
        / ((2 * t - eta) * (2 * t + eta))
    prod = np.prod((t + th + eta) * (t - th + eta) * (t + th - eta) * (t - th - eta))
    return complex(front * prod)


def default_radius(spec: ChainSpec, b: OpenBoundary) -> float:
    """Sampling radius for interpolation.

    Set by theta and eta only.  The boundary constants enter Lambda as
    bounded factors, and a larger circle would make the samples there
    dwarf Lambda near theta_j, costing relative accuracy.
    """
    scales = [1.0, abs(spec.eta)] + [abs(t) for t in spec.theta]
    return 1.5 * max(scales)


def tq_lambda_poly(r: BetheRoots, ctx: TQContext, radius: float | None = None,
                   tol: float = 1e-9) -> Poly:
    """Interpolate the T-Q eigenvalue at 2N+4 points as a degree 2N+2 polynomial."""
    n = ctx.spec.n_sites
    deg = 2 * n + 2
    rad = default_radius(ctx.spec, ctx.boundary) if radius is None else radius
    nodes = np.concatenate([circle_nodes(deg + 1, rad), circle_nodes(1, 0.6 * rad, phase=0.37)])
    return poly_interp([(u, lambda_eval(u, r, ctx)) for u in nodes], deg, tol=tol)


def lambda_relations_residuals(p: Poly, spec: ChainSpec, b: OpenBoundary,
                               rng: np.random.Generator | None = None,
                               n_random: int = 10) -> dict:
    """Relative residuals of the properties every eigenvalue Lambda(u) must satisfy.

    Keys: ``functional`` (list, one per site), ``crossing``, ``initial``,
    ``asymptotic`` and ``degree`` (the interpolation consistency mismatch).
    """
    n = spec.n_sites
    if p.degree != 2 * n + 2:
        raise DegreeError(f"expected degree {2 * n + 2}, got {p.degree}")
    rng = np.random.default_rng(0) if rng is None else rng
    eta = spec.eta
    functional = []
    for j in range(1, n + 1):
        t = spec.theta[j - 1]
        rhs = functional_rhs(j, spec, b)
        functional.append(float(abs(p(t) * p(t - eta) - rhs) / abs(rhs)))
    us = rng.normal(size=n_random) + 1j * rng.normal(size=n_random)
    vals = p(us)
    crossing = float(np.max(np.abs(p(-us - eta) - vals) / np.abs(vals)))
    init = initial_value(spec, b)
    target = 2 * b.h1_dot_h2
    return {
        "functional": functional,
        "crossing": crossing,
        "initial": float(abs(p(0.0) - init) / abs(init)),
        "asymptotic": float(abs(p.leading - target) / abs(target)),
        "degree": float(p.mismatch),
    }
