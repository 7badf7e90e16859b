"""Batch front end: ``odba-gaudin <mode> --config cfg.json``.

The report is a JSON document with top-level keys config, version, checks,
roots, spectra, matches and timings.  Complex numbers are ``[re, im]``
pairs.  Exit status: 0 when every check passes, 1 when one fails, 2 for an
invalid configuration.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import json
import logging
import sys
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__
from .gaudin_ops import GaudinBoundary, alternative_h22, hamiltonian, hamiltonian_fd, hamiltonians
from .matcore import relative_commutator
from .roots import SolveOptions
from .spectra import (chain_bethe_values, gaudin_bethe_spectrum, gaudin_exact_spectrum,
                      lambda_polys_from_transfer, match_spectra, solve_chain_bethe, transfer_eigenvalues)
from .tq_ansatz import TQContext, chain_bae_residual, gaudin_bae_residual, lambda_relations_residuals, tq_lambda_poly
from .vertex_model import (ChainSpec, InvalidChainSpec, OpenBoundary, R_IDENTITIES, check_r_identity,
                           check_reflection, random_complex, random_theta, transfer_matrix)

log = logging.getLogger(__name__)

MODES = ("verify-algebra", "build-operators", "solve-chain", "solve-gaudin", "match", "sweep")

TOLERANCES = {
    "r_identity": 1e-12,
    "reflection": 1e-12,
    "transfer_commutator": 1e-10,
    "gaudin_commutator": 1e-10,
    "gaudin_fd": 1e-6,
    "h22_insensitivity": 1e-6,
    "lambda_relations": 1e-9,
    "bae_residual": 1e-12,
    "spectrum_match": 1e-8,
}


class ConfigError(ValueError):
    pass


def parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ConfigError(f"complex numbers are [re, im] pairs, got {v!r}")
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", ""))
    return complex(v)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


@dataclass
class RunConfig:
    mode: str
    chain: dict = field(default_factory=lambda: {"N": 2, "theta": "random", "eta": "random"})
    boundary: object = "random"
    solver: dict = field(default_factory=dict)
    seed: int = 0
    output_path: str | None = None
    draws: int = 20
    grid: dict = field(default_factory=dict)
    csv_path: str | None = None

    @classmethod
    def from_dict(cls, d: dict, **overrides) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**{**d, **{k: v for k, v in overrides.items() if v is not None}})
        cfg.validate()
        return cfg

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        n = self.chain.get("N")
        if not isinstance(n, int) or n < 1:
            raise ConfigError("chain.N must be a positive integer")
        if self.mode == "sweep" and not self.grid:
            raise ConfigError("sweep mode needs a non-empty grid")
        bad = set(self.grid) - {"xi", "xi1", "h21_norm", "angle"}
        if bad:
            raise ConfigError(f"unsupported grid parameters {sorted(bad)}")
        try:
            SolveOptions(**self.solver)
        except TypeError as exc:
            raise ConfigError(f"bad solver options: {exc}") from None

    def echo(self) -> dict:
        return jsonable({f.name: getattr(self, f.name) for f in fields(self)})


class Context:
    """Random draws and check bookkeeping for one run."""

    def __init__(self, cfg: RunConfig, tol_scale: float = 1.0):
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.tol = {k: v * tol_scale for k, v in TOLERANCES.items()}
        self.checks = []
        self.timings = {}

    def check(self, name, value, tol_key, passed=None):
        tol = self.tol[tol_key]
        ok = bool(value <= tol) if passed is None else bool(passed)
        self.checks.append({"name": name, "value": float(value), "tol": tol, "passed": ok})
        return ok

    def timed(self, key):
        ctx = self

        class _T:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                ctx.timings[key] = ctx.timings.get(key, 0.0) + time.perf_counter() - self.t0
        return _T()

    def solve_opts(self, **extra) -> SolveOptions:
        return SolveOptions(**{"seed": self.cfg.seed, **self.cfg.solver, **extra})

    # -- problem data ---------------------------------------------------
    def eta(self) -> complex:
        e = self.cfg.chain.get("eta", "random")
        if e == "random":
            return complex(0.3 * self.rng.normal(), 0.2 * self.rng.normal())
        return parse_complex(e)

    def theta(self, eta=0.0) -> tuple:
        c = self.cfg.chain
        th = c.get("theta", "random")
        if th == "random":
            return random_theta(c["N"], self.rng, eta)
        th = tuple(parse_complex(t) for t in th)
        if len(th) != c["N"]:
            raise ConfigError(f"theta has {len(th)} entries but N = {c['N']}")
        ChainSpec(th, eta)  # raises InvalidChainSpec
        return th

    def _bdict(self):
        b = self.cfg.boundary
        if b == "random":
            return {"random": True}
        if not isinstance(b, dict):
            raise ConfigError("boundary must be 'random' or an object")
        return b

    def open_boundary(self) -> OpenBoundary:
        b = self._bdict()
        if b.get("random") or "xibar" not in b:
            return OpenBoundary.random(self.rng, parallel=bool(b.get("parallel", False)))
        return OpenBoundary(parse_complex(b["xi"]), parse_complex(b["xibar"]), b["h1"], b["h2"])

    def gaudin_boundary(self) -> GaudinBoundary:
        b = self._bdict()
        if b.get("random") or "xi1" not in b:
            return GaudinBoundary.random(self.rng, h21_norm=b.get("h21_norm"),
                                         parallel=bool(b.get("parallel", False)))
        return GaudinBoundary(parse_complex(b["xi"]), parse_complex(b["xi1"]), b["h1"], b["h21"],
                              b.get("h22"))


def _roots_record(r, residual=None):
    return {"lambda": r.lam, "mode": r.mode, "eta": r.eta, "n_infinite": r.n_infinite,
            "residual_norm": r.residual_norm if residual is None else residual}


# -- modes ------------------------------------------------------------------

def _verify_algebra(ctx: Context, report: dict):
    rng, draws, n = ctx.rng, ctx.cfg.draws, ctx.cfg.chain["N"]
    rnd = lambda: random_complex(rng)  # noqa: E731
    with ctx.timed("r_identities"):
        for kind in R_IDENTITIES:
            arity = {"qybe": 3, "antisymmetry": 0}.get(kind, 1)
            worst = max(check_r_identity(kind, *[rnd() for _ in range(arity)], eta=rnd()) for _ in range(draws))
            ctx.check(kind, worst, "r_identity")
    with ctx.timed("reflection"):
        re_w, dre_w, lit = 0.0, 0.0, 0.0
        for _ in range(draws):
            b = OpenBoundary.random(rng)
            u1, u2, eta = rnd(), rnd(), rnd()
            re_w = max(re_w, check_reflection("re", u1, u2, eta, b))
            dre_w = max(dre_w, check_reflection("dual_re", u1, u2, eta, b))
            lit = max(lit, check_reflection("dual_re", u1, u2, eta, b, dual_shift="literal"))
        ctx.check("re", re_w, "reflection")
        ctx.check("dual_re", dre_w, "reflection")
        report["spectra"]["dual_re_literal_shift_residual"] = lit
    with ctx.timed("commutativity"):
        eta = ctx.eta()
        spec = ChainSpec(ctx.theta(eta), eta)
        b = ctx.open_boundary()
        worst = max(relative_commutator(transfer_matrix(rnd(), spec, b), transfer_matrix(rnd(), spec, b))
                    for _ in range(5))
        ctx.check("transfer_commutator", worst, "transfer_commutator")
        g = ctx.gaudin_boundary()
        hs = hamiltonians(spec.theta, g)
        worst = max((relative_commutator(hs[i], hs[j]) for i in range(n) for j in range(i + 1, n)), default=0.0)
        ctx.check("gaudin_commutator", worst, "gaudin_commutator")


def _build_operators(ctx: Context, report: dict):
    theta = ctx.theta()
    g = ctx.gaudin_boundary()
    n = len(theta)
    with ctx.timed("operators"):
        hs = [hamiltonian(j, theta, g) for j in range(1, n + 1)]
        fd_worst, ins_worst = 0.0, 0.0
        g_alt = g.with_h22(alternative_h22(g, ctx.rng))
        for j in range(1, n + 1):
            a = hamiltonian_fd(j, theta, g).op
            b = hamiltonian_fd(j, theta, g_alt).op
            scale = np.linalg.norm(hs[j - 1])
            fd_worst = max(fd_worst, np.linalg.norm(a - hs[j - 1]) / scale)
            ins_worst = max(ins_worst, np.linalg.norm(a - b) / scale)
        ctx.check("gaudin_fd", fd_worst, "gaudin_fd")
        ctx.check("h22_insensitivity", ins_worst, "h22_insensitivity")
        worst = max((relative_commutator(hs[i], hs[j]) for i in range(n) for j in range(i + 1, n)), default=0.0)
        ctx.check("gaudin_commutator", worst, "gaudin_commutator")
    report["spectra"]["theta"] = theta
    report["spectra"]["gaudin_boundary"] = {"xi": g.xi, "xi1": g.xi1, "h1": g.h1, "h21": g.h21, "h22": g.h22}


def _solve_chain(ctx: Context, report: dict):
    eta = ctx.eta()
    spec = ChainSpec(ctx.theta(eta), eta)
    b = ctx.open_boundary()
    tq = TQContext(spec, b)
    with ctx.timed("solve"):
        roots = solve_chain_bethe(spec, b, ctx.solve_opts())
    worst_res, worst_rel = 0.0, 0.0
    for r in roots:
        res = float(np.max(np.abs(chain_bae_residual(r, tq)))) if len(r.lam) else 0.0
        worst_res = max(worst_res, res)
        rel = lambda_relations_residuals(tq_lambda_poly(r, tq), spec, b)
        worst_rel = max(worst_rel, max(rel["functional"]), rel["crossing"], rel["initial"],
                        rel["asymptotic"], rel["degree"])
        report["roots"].append(_roots_record(r, res))
    ctx.check("chain_bae_residual", worst_res, "bae_residual")
    ctx.check("tq_lambda_relations", worst_rel, "lambda_relations")
    with ctx.timed("exact"):
        us = ctx.rng.normal(size=5) + 1j * ctx.rng.normal(size=5)
        exact = transfer_eigenvalues(spec, b, us)
        rep = match_spectra(chain_bethe_values(spec, b, roots, us), exact, ctx.tol["spectrum_match"])
    report["spectra"].update({"theta": spec.theta, "eta": eta, "sample_points": us, "exact_lambda": exact})
    report["matches"]["chain"] = _match_summary(rep)
    ctx.check("chain_spectrum_matched", rep.max_error, "spectrum_match", passed=rep.complete)


def _match_summary(rep):
    return {"matched": rep.matched, "total": rep.total, "max_error": rep.max_error,
            "unmatched_exact": rep.unmatched_exact, "unmatched_bethe": rep.unmatched_bethe,
            "records": [{"exact_index": r["exact_index"], "bethe_index": r["bethe_index"],
                         "exact": r["exact"], "bethe": r["bethe"], "error": r["error"]} for r in rep.records]}


def _gaudin_point(ctx: Context, theta, g, report, label="", warm=(), exact=True):
    with ctx.timed("solve"):
        spectrum = gaudin_bethe_spectrum(theta, g, ctx.solve_opts(), warm_start=warm)
    worst = 0.0
    for r, e in spectrum:
        res = float(np.max(np.abs(gaudin_bae_residual(r, g, theta)))) if len(r.lam) else 0.0
        worst = max(worst, res)
        report["roots"].append({**_roots_record(r, res), "energies": e, "point": label})
    ctx.check(f"gaudin_bae_residual{label}", worst, "bae_residual")
    if not exact:
        return spectrum, None
    with ctx.timed("exact"):
        ex = gaudin_exact_spectrum(theta, g)
        rep = match_spectra(spectrum, ex, ctx.tol["spectrum_match"])
    report["matches"][f"gaudin{label}"] = _match_summary(rep)
    ctx.check(f"gaudin_spectrum_matched{label}", rep.max_error, "spectrum_match", passed=rep.complete)
    return spectrum, rep


def _solve_gaudin(ctx, report, exact):
    theta = ctx.theta()
    g = ctx.gaudin_boundary()
    report["spectra"]["theta"] = theta
    spectrum, rep = _gaudin_point(ctx, theta, g, report, exact=exact)
    report["spectra"]["n_solutions"] = len(spectrum)
    if rep is not None:
        ctx.csv_rows = _csv_rows(rep, "")


def _csv_rows(rep, label):
    rows = []
    for r in rep.records:
        for j, (ee, eb) in enumerate(zip(r["exact"], r["bethe"]), start=1):
            rel = abs(eb - ee) / abs(ee) if ee != 0 else abs(eb - ee)
            rows.append([f"{label}{r['exact_index']}", j, ee.real, ee.imag, eb.real, eb.imag, rel])
    return rows


def _rotate_about(v, axis, angle):
    return v * np.cos(angle) + np.cross(axis, v) * np.sin(angle) + axis * (axis @ v) * (1 - np.cos(angle))


def _sweep(ctx: Context, report: dict):
    theta = ctx.theta()
    base = ctx.gaudin_boundary()
    report["spectra"]["theta"] = theta
    keys = sorted(ctx.cfg.grid)
    points = list(itertools.product(*[ctx.cfg.grid[k] for k in keys]))
    warm, fractions, rows = (), [], []
    for idx, vals in enumerate(points):
        params = dict(zip(keys, vals))
        xi = parse_complex(params["xi"]) if "xi" in params else base.xi
        xi1 = parse_complex(params["xi1"]) if "xi1" in params else base.xi1
        h21 = base.h21
        norm0 = np.linalg.norm(h21)
        if "h21_norm" in params:
            direction = h21 / norm0 if norm0 > 0 else _unit_perp(base.h1)
            h21 = float(params["h21_norm"]) * direction
        if "angle" in params:
            h21 = _rotate_about(h21, base.h1, float(params["angle"]))
        label = f"@{idx}"
        try:
            g = GaudinBoundary(xi, xi1, base.h1, h21)
            spectrum, rep = _gaudin_point(ctx, theta, g, report, label, warm=warm)
            warm = [r for r, _ in spectrum]
            frac = rep.matched / rep.total
            rows += _csv_rows(rep, label)
        except (ValueError, RuntimeError) as exc:  # one bad point does not stop the sweep
            log.warning("sweep point %s failed: %s", params, exc)
            ctx.check(f"gaudin_spectrum_matched{label}", 1.0, "spectrum_match", passed=False)
            frac = 0.0
        fractions.append({"point": idx, "params": params, "matched_fraction": frac})
    report["matches"]["sweep"] = fractions
    ctx.csv_rows = rows


def _unit_perp(h1):
    w = np.cross(h1, [1.0, 0.0, 0.0])
    if np.linalg.norm(w) < 1e-6:
        w = np.cross(h1, [0.0, 1.0, 0.0])
    return w / np.linalg.norm(w)


def run(cfg: RunConfig, tol_scale: float = 1.0) -> tuple[dict, int]:
    """Execute one configured pipeline; returns ``(report, exit_status)``."""
    ctx = Context(cfg, tol_scale)
    ctx.csv_rows = []
    report = {"config": cfg.echo(), "version": __version__,
              "checks": {"tolerances": dict(ctx.tol), "results": ctx.checks},
              "roots": [], "spectra": {}, "matches": {}, "timings": ctx.timings}
    t0 = time.perf_counter()
    if cfg.mode == "verify-algebra":
        _verify_algebra(ctx, report)
    elif cfg.mode == "build-operators":
        _build_operators(ctx, report)
    elif cfg.mode == "solve-chain":
        _solve_chain(ctx, report)
    elif cfg.mode == "solve-gaudin":
        _solve_gaudin(ctx, report, exact=False)
    elif cfg.mode == "match":
        _solve_gaudin(ctx, report, exact=True)
    else:
        _sweep(ctx, report)
    ctx.timings["total"] = time.perf_counter() - t0
    report = jsonable(report)
    report["csv_rows"] = jsonable(ctx.csv_rows)
    status = 0 if all(c["passed"] for c in ctx.checks) else 1
    return report, status


def report_digest(report: dict) -> str:
    """SHA-256 of the report payload with timings removed."""
    payload = {k: v for k, v in report.items() if k not in ("timings", "csv_rows")}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


CSV_HEADER = ["state", "j", "E_exact_re", "E_exact_im", "E_bethe_re", "E_bethe_im", "rel_err"]


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        w.writerows(rows)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="odba-gaudin", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    p.add_argument("--out", default=None, help="report path (default: config output_path or stdout)")
    p.add_argument("--tol-scale", type=float, default=1.0, help="multiply every tolerance")
    p.add_argument("--csv", default=None, help="write the spectrum table as CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw = dict(raw)
        raw["mode"] = args.mode
        cfg = RunConfig.from_dict(raw, seed=args.seed, output_path=args.out, csv_path=args.csv)
        if args.tol_scale <= 0:
            raise ConfigError("--tol-scale must be positive")
        report, status = run(cfg, args.tol_scale)
    except (OSError, json.JSONDecodeError, ConfigError, InvalidChainSpec, TypeError, ValueError) as exc:
        print(f"odba-gaudin: error: {exc}", file=sys.stderr)
        return 2
    rows = report.pop("csv_rows")
    text = json.dumps(report, indent=2, sort_keys=True)
    if cfg.output_path:
        with open(cfg.output_path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if cfg.csv_path:
        write_csv(rows, cfg.csv_path)
    for c in report["checks"]["results"]:
        if not c["passed"]:
            print(f"FAILED {c['name']}: {c['value']:.3e} (tol {c['tol']:.1e})", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
