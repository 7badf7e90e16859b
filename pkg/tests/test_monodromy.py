import numpy as np
import pytest

from odba_gaudin.gaudin_ops import GaudinBoundary, boundary_at_eta
from odba_gaudin.monodromy import TrackingFailure, complete_by_monodromy, loop_image, random_loop, track
from odba_gaudin.roots import SolveOptions, admissible, enumerate_roots
from odba_gaudin.spectra import (chain_family, chain_residual_fn, gaudin_exact_spectrum, gaudin_family,
                                 gaudin_residual_fn, match_spectra)
from odba_gaudin.tq_ansatz import TQContext, gaudin_energies
from odba_gaudin.vertex_model import ChainSpec, random_theta


def sqrt_family(p):
    return lambda x: x ** 2 - p[0]


def test_track_segment():
    x = track(sqrt_family, [1.0], [4.0], [1.0])
    assert x[0] == pytest.approx(2.0, abs=1e-9)


def test_loop_around_branch_point_swaps_roots():
    around = [np.array([1.0]), np.array([-1 + 1j]), np.array([-1 - 1j]), np.array([1.0])]
    assert loop_image(sqrt_family, around, [1.0])[0] == pytest.approx(-1.0, abs=1e-9)
    beside = [np.array([1.0]), np.array([2 + 1j]), np.array([2 - 1j]), np.array([1.0])]
    assert loop_image(sqrt_family, beside, [1.0])[0] == pytest.approx(1.0, abs=1e-9)


def test_track_escape_raises():
    with pytest.raises(TrackingFailure):
        track(lambda p: (lambda x: x * p[0] - 1), [1.0], [0.0], [1.0])


def test_random_loop_closes():
    loop = random_loop([1.0, 2j], np.random.default_rng(0))
    assert len(loop) == 4
    assert np.array_equal(loop[0], loop[-1])


def test_gaudin_family_matches_residual(rng):
    theta = random_theta(3, rng)
    for g in (GaudinBoundary.random(rng), GaudinBoundary.random(rng, parallel=True)):
        family, p0 = gaudin_family(g, theta)
        assert len(p0) == (2 if g.parallel else 3)
        x = np.array([0.3 + 0.7j, 1.9 - 0.2j, -0.4 + 1.1j])
        a, b = family(p0).raw(x), gaudin_residual_fn(g, theta).raw(x)
        assert np.allclose(a[0], b[0], rtol=1e-14, atol=0) and np.allclose(a[1], b[1], rtol=1e-14, atol=0)


def test_chain_family_matches_residual(rng):
    spec = ChainSpec(random_theta(2, rng), 0.3 + 0.1j)
    g = GaudinBoundary.random(rng)
    ctx = TQContext(spec, boundary_at_eta(g, 0.3))
    family, p0 = chain_family(ctx)
    x = np.array([0.5 + 0.4j, -1.2 + 0.3j])
    assert np.allclose(family(p0).raw(x)[0], chain_residual_fn(ctx).raw(x)[0], rtol=1e-14, atol=0)


def test_completion_from_one_solution(rng):
    theta = random_theta(2, rng)
    g = GaudinBoundary.random(rng)
    fn = gaudin_residual_fn(g, theta)
    opts = SolveOptions(monodromy_loops=0)
    full = enumerate_roots(fn, 2, opts, stop_when=4, theta=theta)
    family, p0 = gaudin_family(g, theta)
    out = complete_by_monodromy(family, p0, fn, full[:1], 4, SolveOptions(),
                                lambda r: admissible(r, theta))
    assert len(out) == 4
    report = match_spectra([(r, gaudin_energies(r, g, theta)) for r in out], gaudin_exact_spectrum(theta, g))
    assert report.complete


def test_completion_needs_a_start():
    assert complete_by_monodromy(sqrt_family, [1.0], sqrt_family([1.0]), [], 2, SolveOptions(),
                                 lambda r: True) == []


def test_monodromy_loops_validation():
    with pytest.raises(ValueError):
        SolveOptions(monodromy_loops=-1)
