"""Multistart damped Newton for Bethe equations.

Solutions are canonicalized under the root reflection symmetry and
deduplicated after the fact; the residual itself is never modified.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .tq_ansatz import COLLISION_TOL, BetheRoots, CollisionError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolveOptions:
    max_iter: int = 200
    step_tol: float = 1e-13
    residual_tol: float = 1e-12
    damping: float = 0.5
    max_halvings: int = 30
    starts: int | None = None  # default 64 * 2**N
    seed: int = 0
    dedup_tol: float = 1e-7
    box: float | None = None  # default 2 max|theta|
    escape_radius: float = 1e4
    fd_step: float = 1e-7
    max_rounds: int = 4  # extra seed rounds, box doubled each time, while short of stop_when
    monodromy_loops: int = 40  # parameter loops tried after the first round when short; 0 disables

    def __post_init__(self):
        for name in ("step_tol", "residual_tol", "dedup_tol", "escape_radius", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.damping < 1:
            raise ValueError("damping must lie in (0, 1)")
        if self.starts is not None and self.starts < 1:
            raise ValueError("starts must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.monodromy_loops < 0:
            raise ValueError("monodromy_loops must be >= 0")


class ScaledResidual:
    """Residual assembled from summands; evaluates to their sum over the largest one.

    ``terms_fn(x)`` returns an array of shape ``(K, M)``.  Newton steps use
    the raw (holomorphic) sum; the row normalization is frozen per step.
    """

    def __init__(self, terms_fn: Callable):
        self.terms_fn = terms_fn

    def raw(self, x):
        terms = np.asarray(self.terms_fn(x), dtype=complex)
        scale = np.max(np.abs(terms), axis=0)
        return terms.sum(axis=0), np.where(scale == 0, 1.0, scale)

    def __call__(self, x):
        total, scale = self.raw(x)
        return total / scale


class NewtonFailure(RuntimeError):
    """Newton did not converge; ``reason`` is one of max_iter, singular_jacobian,
    collision, diverged, stalled."""

    def __init__(self, reason: str, x=None):
        super().__init__(reason)
        self.reason = reason
        self.x = x


def _eval(fn, x):
    try:
        r = fn(x)
        if isinstance(r, tuple):
            r = r[0] / r[1]
        r = np.asarray(r, dtype=complex)
    except (CollisionError, ZeroDivisionError, FloatingPointError):
        return None
    if not np.all(np.isfinite(r)):
        return None
    return r


def _raw(fn, x):
    """(raw residual, row scale) or None on a singular point."""
    try:
        if isinstance(fn, ScaledResidual):
            total, scale = fn.raw(x)
        else:
            total = np.asarray(fn(x), dtype=complex)
            scale = np.ones(len(total))
    except (CollisionError, ZeroDivisionError, FloatingPointError):
        return None
    if not (np.all(np.isfinite(total)) and np.all(np.isfinite(scale))):
        return None
    return total, scale


def _jacobian(fn, x, rel_step):
    n = len(x)
    jac = np.empty((n, n), dtype=complex)
    for k in range(n):
        h = rel_step * max(1.0, abs(x[k]))
        e = np.zeros(n, dtype=complex)
        e[k] = h
        fp, fm = _raw(fn, x + e), _raw(fn, x - e)
        if fp is None or fm is None:
            return None
        jac[:, k] = (fp[0] - fm[0]) / (2 * h)
    return jac


def newton_solve(residual_fn: Callable, x0, opts: SolveOptions) -> tuple[np.ndarray, float, int]:
    """Damped Newton on a holomorphic system; returns ``(x, residual_max, iterations)``.

    Raises :class:`NewtonFailure` whenever the residual tolerance is not met.
    """
    x = np.array(x0, dtype=complex)
    cur = _raw(residual_fn, x)
    if cur is None:
        raise NewtonFailure("collision", x)
    for it in range(opts.max_iter):
        total, scale = cur
        rmax = float(np.max(np.abs(total / scale))) if len(total) else 0.0
        if rmax <= opts.residual_tol:
            return x, rmax, it
        jac = _jacobian(residual_fn, x, opts.fd_step)
        if jac is None:
            raise NewtonFailure("collision", x)
        try:
            dx = np.linalg.solve(jac, -total)
        except np.linalg.LinAlgError:
            raise NewtonFailure("singular_jacobian", x) from None
        if not np.all(np.isfinite(dx)):
            raise NewtonFailure("singular_jacobian", x)
        merit = np.linalg.norm(total / scale)
        step = 1.0
        for _ in range(opts.max_halvings + 1):
            xn = x + step * dx
            nxt = _raw(residual_fn, xn)
            # weights frozen at the current iterate
            if nxt is not None and np.linalg.norm(nxt[0] / scale) < merit:
                break
            step *= opts.damping
        else:
            raise NewtonFailure("stalled", x)
        if np.max(np.abs(xn)) > opts.escape_radius:
            raise NewtonFailure("diverged", xn)
        small = np.linalg.norm(step * dx) <= opts.step_tol * max(1.0, np.linalg.norm(x))
        x, cur = xn, nxt
        if small:
            rmax = float(np.max(np.abs(cur[0] / cur[1])))
            if rmax <= opts.residual_tol:
                return x, rmax, it + 1
            raise NewtonFailure("stalled", x)
    rmax = float(np.max(np.abs(cur[0] / cur[1])))
    if rmax <= opts.residual_tol:
        return x, rmax, opts.max_iter
    raise NewtonFailure("max_iter", x)


def newton(residual_fn: Callable, x0, opts: SolveOptions | None = None, mode: str = "gaudin",
           eta: complex = 0.0, n_infinite: int = 0) -> BetheRoots:
    """Solve ``residual_fn(x) = 0`` from ``x0`` and return canonicalized roots."""
    opts = SolveOptions() if opts is None else opts
    x, rmax, iters = newton_solve(residual_fn, x0, opts)
    roots = BetheRoots(x, mode=mode, eta=eta, residual_norm=rmax, n_infinite=n_infinite,
                       meta={"iterations": iters})
    return canonicalize(roots)


def _representative(z: complex, eta: complex) -> complex:
    w = 2 * z + eta
    if w.real > 0 or (w.real == 0 and w.imag >= 0):
        return z
    return -z - eta


def canonicalize(r: BetheRoots) -> BetheRoots:
    """Replace each root by its reflection-pair representative and sort."""
    reps = [_representative(complex(z), r.eta) for z in r.lam]
    reps.sort(key=lambda z: (z.real, z.imag))
    return replace(r, lam=np.array(reps, dtype=complex), canonical=True)


def canonical_key(r: BetheRoots, digits: int = 6) -> tuple:
    c = r if r.canonical else canonicalize(r)
    return (r.mode, r.n_infinite) + tuple((round(z.real, digits), round(z.imag, digits)) for z in c.lam)


def root_distance(a: BetheRoots, b: BetheRoots) -> float:
    """Order-independent distance between two canonical root sets."""
    if len(a.lam) != len(b.lam) or a.n_infinite != b.n_infinite:
        return np.inf
    if len(a.lam) == 0:
        return 0.0
    cost = np.abs(a.lam[:, None] - b.lam[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def admissible(r: BetheRoots, theta=None, tol: float = COLLISION_TOL) -> bool:
    """Reject solutions sitting on singular or trivial configurations.

    A root at the reflection fixed point (``-eta/2``, or 0 in the Gaudin
    limit) solves its own equation identically, and two coincident roots
    make the chain equations blind to the coalescence; both are spurious.
    """
    lam = r.lam
    if theta is not None and r.colliding(theta, tol):
        return False
    if np.any(np.abs(2 * lam + r.eta) < tol * 10):
        return False
    m = len(lam)
    if m > 1:
        gaps = np.abs(lam[:, None] - lam[None, :])[~np.eye(m, dtype=bool)]
        if np.min(gaps) < 1e-6:
            return False
    return True


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("ODBA_THREADS", "1")))
    except ValueError:
        return 1


def make_seeds(n_roots: int, count: int, rng: np.random.Generator, box: float,
               theta: Sequence | None = None) -> np.ndarray:
    """Random starting points, uniform in a disk of radius ``box`` per coordinate.

    Every third seed is drawn near the +-theta values and their midpoints
    instead, and every fourth uses a disk five times wider (roots drift
    outwards as the inhomogeneous term weakens).
    """
    seeds = np.empty((count, n_roots), dtype=complex)
    th = None if theta is None else np.asarray(theta, dtype=complex)
    anchors = None
    if th is not None:
        sym = np.concatenate([th, -th])
        mids = (sym[:, None] + sym[None, :]) / 2
        anchors = np.concatenate([sym, mids[np.triu_indices(len(sym), 1)]])
        anchors = anchors[np.abs(anchors) > 1e-3]
    for s in range(count):
        if anchors is not None and len(anchors) and s % 3 == 2:
            base = rng.choice(anchors, size=n_roots)
            noise = 0.15 * (1 + np.abs(base)) * (rng.normal(size=n_roots) + 1j * rng.normal(size=n_roots))
            seeds[s] = base + noise
        else:
            scale = 5.0 * box if s % 4 == 1 else box
            rad = scale * np.sqrt(rng.uniform(size=n_roots))
            ang = rng.uniform(0, 2 * np.pi, size=n_roots)
            seeds[s] = rad * np.exp(1j * ang)
    return seeds


def is_new(r: BetheRoots, found: Sequence[BetheRoots], tol: float) -> bool:
    scale = max(1.0, float(np.max(np.abs(r.lam)))) if len(r.lam) else 1.0
    return all(root_distance(r, f) > tol * scale for f in found)


def enumerate_roots(residual_fn: Callable, n_roots: int, opts: SolveOptions | None = None,
                    stop_when: int | None = None, mode: str = "gaudin", eta: complex = 0.0,
                    theta: Sequence | None = None, n_infinite: int = 0,
                    extra_seeds: Sequence = (), accept: Callable | None = None,
                    completion: Callable | None = None) -> list[BetheRoots]:
    """Multistart Newton search for distinct solutions.

    Runs ``opts.starts`` attempts (after any ``extra_seeds``, which are tried
    first), keeps admissible converged solutions, and merges them by
    canonical distance.  If the first round stays short of ``stop_when``,
    ``completion(found, accept)`` (when given) may add more, and further
    rounds with a wider box follow only if still short.  Results are
    processed in seed order, so the output is reproducible for a fixed seed
    regardless of ``ODBA_THREADS``.
    """
    opts = SolveOptions() if opts is None else opts
    if n_roots == 0:
        r = _eval(residual_fn, np.zeros(0, dtype=complex))
        if r is None:
            return []
        return [BetheRoots(np.zeros(0), mode=mode, eta=eta, residual_norm=0.0,
                           canonical=True, n_infinite=n_infinite)]
    n_sites = len(theta) if theta is not None else n_roots
    starts = opts.starts if opts.starts is not None else 64 * 2 ** n_sites
    if opts.box is not None:
        box = opts.box
    elif theta is not None:
        box = 2.0 * float(np.max(np.abs(theta)))
    else:
        box = 2.0
    rng = np.random.default_rng(opts.seed)
    extra = [np.asarray(s, dtype=complex) for s in extra_seeds if len(s) == n_roots]
    accept = accept or (lambda r: admissible(r, theta))

    def attempt(x0):
        try:
            return newton(residual_fn, x0, opts, mode=mode, eta=eta, n_infinite=n_infinite)
        except NewtonFailure:
            return None

    found: list[BetheRoots] = []
    done = lambda: stop_when is not None and len(found) >= stop_when  # noqa: E731
    workers = _worker_count()
    chunk = max(1, workers * 4)
    pool = ThreadPoolExecutor(workers) if workers > 1 else None
    offset = 0
    try:
        for rnd in range(opts.max_rounds):
            seeds = make_seeds(n_roots, starts, rng, box * 2 ** rnd, theta)
            if rnd == 0 and extra:
                seeds = np.concatenate([np.array(extra), seeds])
            for lo in range(0, len(seeds), chunk):
                batch = seeds[lo:lo + chunk]
                results = list(pool.map(attempt, batch)) if pool else [attempt(x0) for x0 in batch]
                for i, r in enumerate(results):
                    if r is None or not accept(r) or not is_new(r, found, opts.dedup_tol):
                        continue
                    found.append(replace(r, meta={**r.meta, "seed_index": offset + lo + i, "round": rnd}))
                    if done():
                        break
                if done():
                    break
            offset += len(seeds)
            # without a target count a single round is all we can justify
            if done() or stop_when is None:
                break
            if rnd == 0 and completion is not None and found:
                found = list(completion(found, accept))
                if done():
                    break
            log.debug("round %d found %d of %d solutions; widening", rnd, len(found), stop_when)
    finally:
        if pool:
            pool.shutdown()
    found.sort(key=canonical_key)
    return found
