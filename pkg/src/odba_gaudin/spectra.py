"""Exact-diagonalization side: joint spectra of commuting families and Bethe matching."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from math import comb
from types import SimpleNamespace

import numpy as np

from .gaudin_ops import GaudinBoundary, hamiltonians
from .matcore import EigenSolverError, Op, Poly, circle_nodes, eig_general, poly_interp, relative_commutator
from .monodromy import complete_by_monodromy
from .roots import ScaledResidual, SolveOptions, enumerate_roots
from .tq_ansatz import (BetheRoots, TQContext, chain_bae_residual, chain_bae_terms, default_radius,
                        gaudin_bae_residual, gaudin_bae_terms,
                        gaudin_energies, lambda_eval)
from .vertex_model import ChainSpec, OpenBoundary, transfer_matrix


class NonCommutingError(ValueError):
    pass


class DegeneracyError(RuntimeError):
    pass


@dataclass(frozen=True)
class LambdaPoly:
    state_index: int
    poly: Poly
    source: str = "exact_diag"


@dataclass(frozen=True)
class CommonBasis:
    basis: np.ndarray
    diagonals: np.ndarray  # shape (n_ops, dim)
    offdiag_residual: float
    condition: float


def common_eigenbasis(ops, rng: np.random.Generator | None = None, commute_tol: float = 1e-8,
                      offdiag_tol: float = 1e-8, gap_tol: float = 1e-8, retries: int = 5) -> CommonBasis:
    """Diagonalize a commuting family through one random real combination."""
    ops = [np.asarray(o, dtype=complex) for o in ops]
    for a in range(len(ops)):
        for b in range(a + 1, len(ops)):
            rc = relative_commutator(ops[a], ops[b])
            if rc > commute_tol:
                raise NonCommutingError(f"operators {a} and {b} do not commute (relative {rc:.2e})")
    rng = np.random.default_rng(12345) if rng is None else rng
    norms = [np.linalg.norm(o) or 1.0 for o in ops]
    last = None
    for _ in range(retries):
        coef = rng.uniform(0.5, 1.5, len(ops)) * rng.choice([-1.0, 1.0], len(ops))
        mix = sum(c * o / n for c, o, n in zip(coef, ops, norms))
        try:
            eig = eig_general(mix)
        except EigenSolverError as exc:
            last = exc
            continue
        w = eig.values
        scale = np.max(np.abs(w)) or 1.0
        gaps = np.abs(w[:, None] - w[None, :])
        gaps[np.diag_indices(len(w))] = np.inf
        if len(w) > 1 and np.min(gaps) < gap_tol * scale:
            last = DegeneracyError(f"combination spectrum gap {np.min(gaps) / scale:.2e}")
            continue
        v = eig.vectors
        vinv = np.linalg.inv(v)
        diags, off = [], 0.0
        for o in ops:
            d = vinv @ o @ v
            dd = np.diag(d).copy()
            ref = np.max(np.abs(dd)) or 1.0
            off = max(off, float(np.max(np.abs(d - np.diag(dd))) / ref))
            diags.append(dd)
        if off > offdiag_tol:
            last = DegeneracyError(f"off-diagonal residual {off:.2e} after transformation")
            continue
        return CommonBasis(v, np.array(diags), off, eig.condition)
    raise DegeneracyError(f"no usable common eigenbasis after {retries} tries: {last}")


def transfer_nodes(spec: ChainSpec, b: OpenBoundary, radius: float | None = None) -> np.ndarray:
    """2N+4 sampling points: 2N+3 on a circle plus one interior check point."""
    deg = 2 * spec.n_sites + 2
    rad = default_radius(spec, b) if radius is None else radius
    return np.concatenate([circle_nodes(deg + 1, rad), circle_nodes(1, 0.6 * rad, phase=0.37)])


def lambda_polys_from_transfer(spec: ChainSpec, b: OpenBoundary, basis: CommonBasis | None = None,
                               rng: np.random.Generator | None = None, radius: float | None = None,
                               tol: float = 1e-9) -> list[LambdaPoly]:
    """Per-state eigenvalue polynomials Lambda(u) of the transfer matrix.

    The common basis comes from tau at three interior points: on the large
    sampling circle tau is dominated by its identity-proportional leading
    term, and mixing those would squeeze the eigenvalue gaps.
    """
    nodes = transfer_nodes(spec, b, radius)
    taus = [transfer_matrix(u, spec, b) for u in nodes]
    if basis is None:
        inner = circle_nodes(3, 0.25 * default_radius(spec, b), phase=0.7)
        basis = common_eigenbasis([transfer_matrix(u, spec, b) for u in inner], rng=rng)
    vinv = np.linalg.inv(basis.basis)
    diags = np.array([np.diag(vinv @ t @ basis.basis) for t in taus])
    deg = 2 * spec.n_sites + 2
    return [LambdaPoly(s, poly_interp(list(zip(nodes, diags[:, s])), deg, tol=tol))
            for s in range(diags.shape[1])]


def transfer_eigenvalues(spec: ChainSpec, b: OpenBoundary, us, rng=None) -> np.ndarray:
    """Joint eigenvalues of tau at the points ``us``; shape ``(2**N, len(us))``."""
    basis = common_eigenbasis([transfer_matrix(u, spec, b) for u in us], rng=rng)
    return basis.diagonals.T


def gaudin_exact_spectrum(spec, g: GaudinBoundary, rng=None) -> np.ndarray:
    """Joint eigenvalues of H_1..H_N; shape ``(2**N, N)``."""
    return common_eigenbasis(hamiltonians(spec, g), rng=rng).diagonals.T


# -- matching ---------------------------------------------------------------

@dataclass
class SpectrumReport:
    records: list = field(default_factory=list)
    unmatched_exact: list = field(default_factory=list)
    unmatched_bethe: list = field(default_factory=list)
    total: int = 0
    tol: float = 0.0

    @property
    def matched(self) -> int:
        return len(self.records)

    @property
    def max_error(self) -> float:
        return max((r["error"] for r in self.records), default=0.0)

    @property
    def complete(self) -> bool:
        return self.matched == self.total


def tuple_distance(a, b) -> float:
    """Max over components of the relative error of ``a`` against reference ``b``."""
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    floor = 1e-12 * max(1.0, float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), floor)))


def match_spectra(bethe, exact, tol: float = 1e-8) -> SpectrumReport:
    """Greedy minimal-distance matching of Bethe tuples onto exact tuples.

    ``bethe`` is a list of ``(roots, values)`` pairs; ``exact`` a list of
    value tuples.  A pair is matched only if its distance is within ``tol``.
    """
    exact = [np.asarray(e, dtype=complex) for e in exact]
    pairs = sorted((tuple_distance(vals, e), bi, ei)
                   for bi, (_, vals) in enumerate(bethe) for ei, e in enumerate(exact))
    used_b, used_e = set(), set()
    report = SpectrumReport(total=len(exact), tol=tol)
    for d, bi, ei in pairs:
        if d > tol:
            break
        if bi in used_b or ei in used_e:
            continue
        used_b.add(bi)
        used_e.add(ei)
        roots, vals = bethe[bi]
        report.records.append({"exact_index": ei, "bethe_index": bi, "exact": exact[ei],
                               "bethe": np.asarray(vals, dtype=complex), "roots": roots, "error": d})
    report.records.sort(key=lambda r: r["exact_index"])
    report.unmatched_exact = [i for i in range(len(exact)) if i not in used_e]
    report.unmatched_bethe = [i for i in range(len(bethe)) if i not in used_b]
    return report


# -- Bethe side pipelines ---------------------------------------------------

def _sectors(n_sites: int, homogeneous: bool):
    """(finite root count, expected solution count) per sector."""
    if homogeneous:
        return [(m, comb(n_sites, m)) for m in range(n_sites + 1)]
    return [(n_sites, 2 ** n_sites)]


def gaudin_residual_fn(g: GaudinBoundary, theta, n_infinite: int = 0) -> ScaledResidual:
    theta = np.asarray(theta, dtype=complex)

    def terms(x):
        gaudin_bae_residual(BetheRoots(x, "gaudin", n_infinite=n_infinite), g, theta)  # guards
        return gaudin_bae_terms(x, g, theta)
    return ScaledResidual(terms)


def chain_residual_fn(ctx: TQContext, n_infinite: int = 0) -> ScaledResidual:
    eta = ctx.eta

    def terms(x):
        chain_bae_residual(BetheRoots(x, "chain", eta, n_infinite=n_infinite), ctx)  # guards
        return chain_bae_terms(x, ctx)
    return ScaledResidual(terms)


def gaudin_family(g: GaudinBoundary, theta):
    """Gaudin equations as a function of the complex coefficients ``(xi, xi1[, |h21|^2])``.

    Returns ``(family, p0)``.  With parallel boundaries ``|h21|^2`` stays 0,
    since moving it off zero changes the number of finite roots.
    """
    theta = np.asarray(theta, dtype=complex)

    def family(p):
        c = SimpleNamespace(xi=p[0], xi1=p[1], h21_sq=p[2] if len(p) > 2 else 0.0)
        return ScaledResidual(lambda x: gaudin_bae_terms(x, c, theta))
    p0 = [g.xi, g.xi1] if g.parallel else [g.xi, g.xi1, g.h21_sq]
    return family, np.array(p0, dtype=complex)


@dataclass(frozen=True)
class _ChainCoefficients(TQContext):
    c_value: complex = 0.0

    @property
    def c(self):
        return self.c_value


def chain_family(ctx: TQContext):
    """Chain equations as a function of ``(xi, xibar[, c])``; returns ``(family, p0)``."""
    spec, b = ctx.spec, ctx.boundary

    def family(p):
        k = _ChainCoefficients(spec, SimpleNamespace(xi=p[0], xibar=p[1]), p[2] if len(p) > 2 else 0.0)
        return ScaledResidual(lambda x: chain_bae_terms(x, k))
    p0 = [b.xi, b.xibar] if ctx.c == 0 else [b.xi, b.xibar, ctx.c]
    return family, np.array(p0, dtype=complex)


def _completion(family, p0, residual_fn, target, opts, mode, eta=0.0, n_infinite=0):
    if opts.monodromy_loops == 0:
        return None
    return lambda found, accept: complete_by_monodromy(family, p0, residual_fn, found, target, opts, accept,
                                                       mode=mode, eta=eta, n_infinite=n_infinite)


def solve_gaudin_bethe(spec, g: GaudinBoundary, opts: SolveOptions | None = None,
                       warm_start=()) -> list[BetheRoots]:
    """All Gaudin Bethe solutions the search finds.

    Multistart Newton first, then monodromy loops in the boundary
    coefficients if it falls short of the expected count.  With parallel
    boundaries the search runs sector by sector, M finite roots with N - M
    roots at infinity.
    """
    theta = spec.theta_array if isinstance(spec, ChainSpec) else np.asarray(spec, dtype=complex)
    n = len(theta)
    opts = SolveOptions() if opts is None else opts
    family, p0 = gaudin_family(g, theta)
    out = []
    for m, expected in _sectors(n, g.parallel):
        seeds = [r.lam for r in warm_start if len(r.lam) == m]
        fn = gaudin_residual_fn(g, theta, n - m)
        sols = enumerate_roots(fn, m, opts, stop_when=expected, mode="gaudin", theta=theta, n_infinite=n - m,
                               extra_seeds=seeds,
                               completion=_completion(family, p0, fn, expected, opts, "gaudin", 0.0, n - m))
        out.extend(sols)
    return out


def gaudin_bethe_spectrum(spec, g: GaudinBoundary, opts=None, warm_start=()):
    """List of ``(roots, (E_1..E_N))`` over all Bethe solutions found."""
    theta = spec.theta_array if isinstance(spec, ChainSpec) else np.asarray(spec, dtype=complex)
    return [(r, gaudin_energies(r, g, theta)) for r in solve_gaudin_bethe(theta, g, opts, warm_start)]


def solve_chain_bethe(spec: ChainSpec, b: OpenBoundary, opts: SolveOptions | None = None,
                      warm_start=()) -> list[BetheRoots]:
    ctx = TQContext(spec, b)
    n = spec.n_sites
    opts = SolveOptions() if opts is None else opts
    family, p0 = chain_family(ctx)
    out = []
    for m, expected in _sectors(n, ctx.c == 0):
        seeds = [r.lam for r in warm_start if len(r.lam) == m]
        fn = chain_residual_fn(ctx, n - m)
        sols = enumerate_roots(fn, m, opts, stop_when=expected, mode="chain", eta=spec.eta,
                               theta=spec.theta_array, n_infinite=n - m, extra_seeds=seeds,
                               completion=_completion(family, p0, fn, expected, opts, "chain", spec.eta, n - m))
        out.extend(sols)
    return out


def chain_bethe_values(spec: ChainSpec, b: OpenBoundary, roots, us):
    ctx = TQContext(spec, b)
    return [(r, np.array([lambda_eval(u, r, ctx) for u in us])) for r in roots]


def recheck(roots: BetheRoots, residual) -> BetheRoots:
    """Attach an independently recomputed residual norm."""
    res = np.max(np.abs(residual)) if len(residual) else 0.0
    return replace(roots, residual_norm=float(res))
