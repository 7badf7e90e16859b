import numpy as np
import pytest

from odba_gaudin.gaudin_ops import GaudinBoundary, hamiltonians
from odba_gaudin.matcore import SIGMA_X, SIGMA_Z
from odba_gaudin.roots import SolveOptions
from odba_gaudin.spectra import (CommonBasis, DegeneracyError, NonCommutingError, chain_bethe_values, common_eigenbasis,
                                 gaudin_bethe_spectrum, gaudin_exact_spectrum,
                                 lambda_polys_from_transfer, match_spectra, solve_chain_bethe,
                                 transfer_eigenvalues, tuple_distance)
from odba_gaudin.tq_ansatz import BetheRoots
from odba_gaudin.vertex_model import ChainSpec, OpenBoundary, random_theta, transfer_matrix

from .oracles import match_sets, n1_energies

FAST = SolveOptions(starts=256)


def test_common_basis_diagonal_input(rng):
    a, b = np.diag([1.0, 2.0, 3.0]), np.diag([5.0, -1.0, 0.5j])
    basis = common_eigenbasis([a, b], rng)
    assert isinstance(basis, CommonBasis)
    rows = sorted(map(tuple, basis.diagonals.T), key=lambda r: r[0].real)
    np.testing.assert_allclose(rows, [(1, 5), (2, -1), (3, 0.5j)], atol=1e-12)


def test_common_basis_gaudin(rng):
    theta = random_theta(2, rng)
    hs = hamiltonians(theta, GaudinBoundary.random(rng))
    basis = common_eigenbasis(hs, rng)
    assert basis.offdiag_residual <= 1e-9
    vinv = np.linalg.inv(basis.basis)
    for h, d in zip(hs, basis.diagonals):
        np.testing.assert_allclose(np.diag(vinv @ h @ basis.basis), d, atol=1e-9 * np.linalg.norm(h))


def test_common_basis_rejects_noncommuting(rng):
    with pytest.raises(NonCommutingError):
        common_eigenbasis([SIGMA_X, SIGMA_Z], rng)


def test_common_basis_independent_of_mixing(rng):
    theta = random_theta(3, rng)
    hs = hamiltonians(theta, GaudinBoundary.random(rng))
    a = common_eigenbasis(hs, np.random.default_rng(1)).diagonals.T
    b = common_eigenbasis(hs, np.random.default_rng(2)).diagonals.T
    assert max(min(tuple_distance(x, y) for y in b) for x in a) <= 1e-8


def test_single_site_transfer_polys(rng):
    eta = 0.3 + 0.1j
    spec = ChainSpec((0.7 - 0.2j,), eta)
    b = OpenBoundary.random(rng)
    polys = [lp.poly for lp in lambda_polys_from_transfer(spec, b)]
    assert len(polys) == 2 and all(p.degree == 4 for p in polys)
    for u in (0.37 + 0.4j, -1.3, 2.1j):
        tau = transfer_matrix(u, spec, b)
        vals = [p(u) for p in polys]
        assert sum(vals) == pytest.approx(np.trace(tau), rel=1e-10)
        assert vals[0] * vals[1] == pytest.approx(np.linalg.det(tau), rel=1e-9)


def test_transfer_polys_state_properties(rng):
    eta = 0.45
    spec = ChainSpec(random_theta(2, rng, eta), eta)
    b = OpenBoundary.random(rng)
    init = 2 * b.xi * b.xibar * np.prod(eta ** 2 - spec.theta_array ** 2)
    for lp in lambda_polys_from_transfer(spec, b):
        assert lp.poly(0.0) == pytest.approx(init, rel=1e-9)
        assert lp.poly.leading == pytest.approx(2 * b.h1 @ b.h2, rel=1e-10)


def test_gaudin_exact_single_site(rng):
    g = GaudinBoundary.random(rng)
    t = 1.1 + 0.15j
    ex = gaudin_exact_spectrum((t,), g)
    assert ex.shape == (2, 1)
    assert match_sets(ex[:, 0], n1_energies(t, g.xi, g.xi1, g.h21_sq)) <= 1e-10


def test_gaudin_exact_trace_identity(rng):
    theta = random_theta(3, rng)
    g = GaudinBoundary.random(rng)
    ex = gaudin_exact_spectrum(theta, g)
    for j, h in enumerate(hamiltonians(theta, g)):
        assert ex[:, j].sum() == pytest.approx(np.trace(h), rel=1e-10)


def test_parallel_reduced_spectrum(rng):
    """h21 = 0, xi1 = 0: the spin-flip pair is degenerate and the M = N sector escapes to infinity.

    The joint spectrum is then not simple, so the reduced model is checked
    operator by operator against direct diagonalization.
    """
    theta = random_theta(2, rng)
    g = GaudinBoundary(0.6 + 0.3j, 0.0, [0, 0, 1], [0, 0, 0])
    hs = hamiltonians(theta, g)
    with pytest.raises(DegeneracyError):
        common_eigenbasis(hs, rng)
    # the M = N sector is empty here, so do not spend extra rounds on it
    bethe = gaudin_bethe_spectrum(theta, g, SolveOptions(starts=128, max_rounds=1))
    assert sorted(r.n_infinite for r, _ in bethe) == [1, 1, 2]
    for j, h in enumerate(hs):
        exact = np.linalg.eigvals(h)
        got = np.array([e[j] for _, e in bethe])
        scale = np.abs(exact).max()
        assert max(np.min(np.abs(got - x)) for x in exact) <= 1e-8 * scale
        assert max(np.min(np.abs(exact - y)) for y in got) <= 1e-8 * scale


def test_match_identical():
    ex = [np.array([1.0, 2.0]), np.array([3.0, -1j])]
    rep = match_spectra([(None, e) for e in ex], ex)
    assert rep.complete and rep.max_error == 0.0


def test_match_missing_one():
    ex = [np.array([1.0, 2.0]), np.array([3.0, -1j]), np.array([0.5, 0.5]), np.array([7.0, 1.0])]
    rep = match_spectra([(None, e) for e in ex[:3]], ex)
    assert rep.matched == 3 and rep.unmatched_exact == [3] and not rep.complete


def test_match_tuple_not_component(rng):
    ex = [np.array([1.0, 2.0]), np.array([2.0, 1.0])]
    rep = match_spectra([(None, np.array([1.0, 1.0]))], ex)
    assert rep.matched == 0 and rep.unmatched_bethe == [0]


def test_gaudin_pipeline_two_sites(rng):
    theta = random_theta(2, rng)
    g = GaudinBoundary.random(rng)
    rep = match_spectra(gaudin_bethe_spectrum(theta, g, FAST), gaudin_exact_spectrum(theta, g))
    assert rep.matched == 4 and rep.max_error <= 1e-8


def test_chain_pipeline_two_sites(rng):
    eta = 0.35 + 0.05j
    spec = ChainSpec(random_theta(2, rng, eta), eta)
    b = OpenBoundary.random(rng)
    us = np.array([0.3 + 0.7j, -1.1, 0.9j, 1.4 - 0.2j, -0.6 - 0.8j])
    roots = solve_chain_bethe(spec, b, FAST)
    rep = match_spectra(chain_bethe_values(spec, b, roots, us), transfer_eigenvalues(spec, b, us))
    assert rep.complete and rep.max_error <= 1e-8


def test_warm_start_reproduces(rng):
    theta = random_theta(2, rng)
    g = GaudinBoundary.random(rng)
    first = [r for r, _ in gaudin_bethe_spectrum(theta, g, FAST)]
    again = gaudin_bethe_spectrum(theta, g, SolveOptions(starts=1), warm_start=first)
    assert len(again) == 4


def test_bethe_roots_records_sector():
    r = BetheRoots([0.2], n_infinite=2)
    assert r.n_roots == 3
