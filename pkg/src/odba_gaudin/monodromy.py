"""Path tracking and monodromy loops for completing Bethe solution sets.

A parametrized family ``family(p)`` returns the residual of the same Bethe
system at a complex parameter vector ``p``.  Carrying a solution around a
closed loop in parameter space permutes the solution set, so loops started
from a partial set keep turning up solutions that multistart Newton missed.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .roots import NewtonFailure, SolveOptions, _jacobian, _raw, _worker_count, is_new, newton
from .tq_ansatz import BetheRoots

log = logging.getLogger(__name__)


class TrackingFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class TrackOptions:
    initial_step: float = 0.05
    min_step: float = 1e-9
    max_step: float = 0.25
    corrector_iters: int = 4
    corrector_tol: float = 1e-9
    drift: float = 0.2  # corrector may move at most this far relative to |x|
    fd_step: float = 1e-7
    escape_radius: float = 1e4


def _correct(fn, y, opts: TrackOptions):
    prev = None
    for _ in range(opts.corrector_iters):
        cur = _raw(fn, y)
        jac = None if cur is None else _jacobian(fn, y, opts.fd_step)
        if jac is None:
            return None
        try:
            d = np.linalg.solve(jac, -cur[0])
        except np.linalg.LinAlgError:
            return None
        y = y + d
        nd = np.linalg.norm(d)
        if not np.isfinite(nd) or (prev is not None and nd > 0.5 * prev):
            return None
        if nd <= opts.corrector_tol * max(1.0, np.linalg.norm(y)):
            return y
        prev = nd
    return None


def track(family: Callable, pa, pb, x0, opts: TrackOptions | None = None) -> np.ndarray:
    """Follow a solution of ``family(p)`` along the segment ``pa -> pb``.

    Euler predictor, Newton corrector and step halving on failure.
    """
    opts = TrackOptions() if opts is None else opts
    pa, pb = np.asarray(pa, dtype=complex), np.asarray(pb, dtype=complex)
    x = np.array(x0, dtype=complex)
    t, dt = 0.0, opts.initial_step
    at = lambda s: family(pa + s * (pb - pa))  # noqa: E731
    while t < 1.0:
        dt = min(dt, 1.0 - t)
        fn = at(t)
        jac = _jacobian(fn, x, opts.fd_step)
        hp, hm = _raw(at(t + 1e-6), x), _raw(at(t - 1e-6), x)
        if jac is None or hp is None or hm is None:
            raise TrackingFailure("singular point on the path")
        try:
            xdot = -np.linalg.solve(jac, (hp[0] - hm[0]) / 2e-6)
        except np.linalg.LinAlgError:
            raise TrackingFailure("singular Jacobian") from None
        y = _correct(at(t + dt), x + dt * xdot, opts)
        if y is not None and np.linalg.norm(y - x - dt * xdot) <= opts.drift * max(1.0, np.linalg.norm(x)):
            x, t = y, t + dt
            dt = min(1.6 * dt, opts.max_step)
            if np.max(np.abs(x)) > opts.escape_radius:
                raise TrackingFailure("path escaped to infinity")
        else:
            dt /= 2
            if dt < opts.min_step:
                raise TrackingFailure(f"step size underflow at t = {t:.3g}")
    return x


def random_loop(p0, rng: np.random.Generator, spread: float = 1.0) -> list[np.ndarray]:
    """Triangle ``p0 -> a -> b -> p0`` with complex Gaussian vertices around ``p0``."""
    p0 = np.asarray(p0, dtype=complex)
    scale = spread * (np.abs(p0) + 0.5)
    pts = [p0 + scale * (rng.normal(size=p0.shape) + 1j * rng.normal(size=p0.shape)) for _ in range(2)]
    return [p0, pts[0], pts[1], p0]


def loop_image(family: Callable, loop: Sequence, x0, opts: TrackOptions | None = None) -> np.ndarray:
    x = np.asarray(x0, dtype=complex)
    for pa, pb in zip(loop[:-1], loop[1:]):
        x = track(family, pa, pb, x, opts)
    return x


def complete_by_monodromy(family: Callable, p0, residual_fn: Callable, found: list[BetheRoots],
                          target: int, opts: SolveOptions, accept: Callable, mode: str = "gaudin",
                          eta: complex = 0.0, n_infinite: int = 0,
                          track_opts: TrackOptions | None = None) -> list[BetheRoots]:
    """Add the solutions reached by up to ``opts.monodromy_loops`` loops.

    Every known solution is carried around each loop; endpoints are polished
    with Newton on ``residual_fn`` and kept if admissible and new.  The loop
    sequence is drawn from ``opts.seed`` and results are merged in order, so
    the outcome does not depend on the worker count.
    """
    found = list(found)
    if not found:
        return found
    rng = np.random.default_rng([opts.seed, 1])
    workers = _worker_count()
    pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def carry(args):
        loop, r = args
        try:
            x = loop_image(family, loop, r.lam, track_opts)
            return newton(residual_fn, x, opts, mode=mode, eta=eta, n_infinite=n_infinite)
        except (TrackingFailure, NewtonFailure):
            return None

    try:
        for k in range(opts.monodromy_loops):
            if len(found) >= target:
                break
            loop = random_loop(p0, rng)
            jobs = [(loop, r) for r in found]
            results = list(pool.map(carry, jobs)) if pool else [carry(j) for j in jobs]
            for r in results:
                if r is not None and accept(r) and is_new(r, found, opts.dedup_tol):
                    found.append(replace(r, meta={**r.meta, "loop": k}))
            log.debug("monodromy loop %d: %d of %d solutions", k, len(found), target)
    finally:
        if pool:
            pool.shutdown()
    return found
