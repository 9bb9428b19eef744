import pickle

import numpy as np
import pytest

from bicircular_hhg.ensemble import (QuadratureGrid, build_quadrature,
                                     classical_rules_hold, default_quadrature, ensemble_spectrum, g2_zero,
                                     helicity, node_amplitudes, reduce_moments, worker_count)
from bicircular_hhg.errors import EnsembleError, UndefinedStatisticError, ValidationError
from bicircular_hhg.field import DriveConfig, FluctuationSpec, husimi_of_state, sample_classical_field
from bicircular_hhg.sfa import AtomSpec
from bicircular_hhg.spectra import single_sample_spectrum

ATOM = AtomSpec()
Q_MAX = 24


def squeezed_cfg(intensity=1e-8, target="2omega"):
    return DriveConfig(fluctuation=FluctuationSpec(kind="squeezed", target_mode=target, intensity=intensity))


def thermal_cfg(intensity=1e-9):
    return DriveConfig(fluctuation=FluctuationSpec(kind="thermal", target_mode="2omega", intensity=intensity))


@pytest.fixture(scope="module")
def squeezed_ens():
    cfg = squeezed_cfg()
    grid = default_quadrature(husimi_of_state(cfg.fluctuation))
    return ensemble_spectrum(ATOM, cfg, grid, q_max=Q_MAX)


def toy_ensemble(i_r, i_l, weights=None):
    i_r, i_l = np.atleast_2d(i_r).astype(float), np.atleast_2d(i_l).astype(float)
    w = np.full(len(i_r), 1 / len(i_r)) if weights is None else np.asarray(weights)
    grid = QuadratureGrid(np.zeros(len(w), complex), w, "monte_carlo")
    return reduce_moments(np.sqrt(i_r).astype(complex), np.sqrt(i_l).astype(complex), grid, i_r.shape[1])


# quadrature

def test_single_node_quadrature():
    h = husimi_of_state(FluctuationSpec(kind="squeezed", intensity=1e-8))
    for scheme in ("gauss_hermite_1d", "gauss_hermite_2d", "monte_carlo"):
        g = build_quadrature(h, scheme, 1)
        assert len(g) == 1 and g.nodes[0] == h.center and g.weights[0] == 1.0


@pytest.mark.parametrize("scheme,n", [("gauss_hermite_1d", 21), ("gauss_hermite_2d", 7),
                                      ("gauss_hermite_2d", (9, 5)), ("monte_carlo", 500)])
def test_quadrature_normalized(scheme, n):
    h = husimi_of_state(FluctuationSpec(kind="squeezed", intensity=1e-9))
    g = build_quadrature(h, scheme, n, seed=3)
    assert abs(g.integrate(lambda a: np.ones_like(a.real)) - 1) < 1e-12


def test_gauss_hermite_second_moment():
    h = husimi_of_state(FluctuationSpec(kind="squeezed", quadrature="amplitude", intensity=1e-8))
    g = build_quadrature(h, "gauss_hermite_1d", 21)
    val = g.integrate(lambda a: np.abs(a) ** 2).real
    assert abs(val - h.sigma_major) <= 1e-10 * h.sigma_major
    # fourth moment of a 1D Gaussian is 3 sigma^2
    val4 = g.integrate(lambda a: np.abs(a) ** 4).real
    assert val4 == pytest.approx(3 * h.sigma_major**2, rel=1e-12)


def test_1d_nodes_on_major_axis():
    h = husimi_of_state(FluctuationSpec(kind="squeezed", quadrature="phase", intensity=1e-8))
    g = build_quadrature(h, "gauss_hermite_1d", 5)
    ang = np.exp(1j * h.major_axis_angle)
    assert np.allclose((g.nodes / ang).imag, 0, atol=1e-25)


def test_thermal_refuses_1d():
    h = husimi_of_state(FluctuationSpec(kind="thermal", intensity=1e-9))
    with pytest.raises(ValidationError):
        build_quadrature(h, "gauss_hermite_1d", 21)
    assert default_quadrature(h).scheme == "gauss_hermite_2d"
    assert len(default_quadrature(h)) == 225


def test_quadrature_minimum_nodes():
    h = husimi_of_state(FluctuationSpec(kind="squeezed", intensity=1e-9))
    with pytest.raises(ValidationError):
        build_quadrature(h, "gauss_hermite_1d", 2)
    with pytest.raises(ValidationError):
        build_quadrature(h, "gauss_hermite_2d", 2)
    with pytest.raises(ValidationError):
        build_quadrature(h, "simpson", 5)


def test_quadrature_grid_validation():
    with pytest.raises(ValidationError):
        QuadratureGrid(np.zeros(2, complex), np.array([0.5, 0.6]), "monte_carlo")
    with pytest.raises(ValidationError):
        QuadratureGrid(np.array([np.nan, 0j]), np.array([0.5, 0.5]), "monte_carlo")


def test_monte_carlo_seeded():
    h = husimi_of_state(FluctuationSpec(kind="thermal", intensity=1e-9))
    a = build_quadrature(h, "monte_carlo", 50, seed=1)
    b = build_quadrature(h, "monte_carlo", 50, seed=1)
    c = build_quadrature(h, "monte_carlo", 50, seed=2)
    assert np.array_equal(a.nodes, b.nodes) and not np.array_equal(a.nodes, c.nodes)


# statistics on synthetic ensembles

def test_helicity_limits():
    ens = toy_ensemble([[1.0]], [[0.0]])
    assert helicity(ens, 1) == 1.0
    ens = toy_ensemble([[0.0]], [[2.0]])
    assert helicity(ens, 1) == -1.0
    with pytest.raises(UndefinedStatisticError):
        helicity(toy_ensemble([[0.0]], [[0.0]]), 1)


def test_g2_single_node_is_one():
    ens = toy_ensemble([[3.7, 2.0]], [[1e-5, 4.0]])
    assert g2_zero(ens, 1, "R") == 1.0 and g2_zero(ens, 2, "L") == 1.0


def test_g2_absent_harmonic():
    with pytest.raises(UndefinedStatisticError):
        g2_zero(toy_ensemble([[0.0]], [[1.0]]), 1, "R")


def test_unknown_order_and_polarization():
    ens = toy_ensemble([[1.0]], [[1.0]])
    with pytest.raises(ValidationError):
        ens.m2(5, "R")
    with pytest.raises(ValidationError):
        ens.m2(1, "X")


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("BICIRCULAR_HHG_WORKERS", "3")
    assert worker_count() == 3
    assert worker_count(1) == 1
    monkeypatch.setenv("BICIRCULAR_HHG_WORKERS", "many")
    with pytest.raises(ValidationError):
        worker_count()


def test_ensemble_error_pickles():
    err = EnsembleError("boom", node_index=4, alpha=1e-5j)
    back = pickle.loads(pickle.dumps(err))
    assert back.node_index == 4 and back.alpha == 1e-5j and "boom" in str(back)


# physics

def test_single_node_reproduces_classical_spectrum():
    cfg = DriveConfig()
    grid = QuadratureGrid(np.array([0j]), np.array([1.0]), "gauss_hermite_1d")
    ens = ensemble_spectrum(ATOM, cfg, grid, q_max=Q_MAX)
    amps = single_sample_spectrum(ATOM, sample_classical_field(cfg), q_max=Q_MAX)
    assert np.allclose(ens.m2_R, [a.intensity_R for a in amps], rtol=1e-12, atol=0)
    assert classical_rules_hold(ens, 21)
    for q in (5, 8, 11, 14, 17, 20):
        assert helicity(ens, q) > 0.99
        assert helicity(ens, q + 2) < -0.99


def test_moment_inequality(squeezed_ens):
    for pol in ("R", "L"):
        m2, m4 = squeezed_ens._moment(2, pol), squeezed_ens._moment(4, pol)
        assert np.all(m2 >= 0) and np.all(m4 >= 0)
        assert np.all(m4 >= m2**2 * (1 - 1e-12))


def test_squeezing_populates_3n_bins(squeezed_ens):
    # at 1e-8 the 3n bins are far above the classical floor yet still weak
    # compared with their allowed neighbours
    classical = ensemble_spectrum(ATOM, DriveConfig(),
                                  QuadratureGrid(np.array([0j]), np.array([1.0]), "gauss_hermite_1d"), q_max=Q_MAX)
    for q in (9, 12, 15, 18, 21):
        total = squeezed_ens.m2(q, "R") + squeezed_ens.m2(q, "L")
        assert total > 1e10 * (classical.m2(q, "R") + classical.m2(q, "L"))


def test_q3_helicity_rcp_under_2omega_squeezing(squeezed_ens):
    assert helicity(squeezed_ens, 3) > 0


def test_native_polarization_stays_coherent(squeezed_ens):
    for q, pol in ((11, "R"), (13, "L"), (14, "R"), (16, "L"), (17, "R")):
        assert g2_zero(squeezed_ens, q, pol) == pytest.approx(1.0, abs=0.1)


def test_fluctuation_induced_g2_near_three(squeezed_ens):
    for q, pol in ((9, "R"), (12, "R"), (11, "L"), (14, "L")):
        assert g2_zero(squeezed_ens, q, pol) == pytest.approx(3.0, abs=0.3)


def test_ensemble_json(squeezed_ens):
    d = squeezed_ens.to_json("abc")
    assert d["config_hash"] == "abc" and d["scheme"] == "gauss_hermite_1d"
    assert len(d["nodes"]) == 21 and len(d["per_q"]) == Q_MAX
    assert set(d["per_q"][2]) == {"q", "m2_R", "m2_L", "m4_R", "m4_L", "g2_R", "g2_L", "helicity"}


def test_reduction_is_bit_identical():
    cfg = squeezed_cfg(1e-9)
    grid = build_quadrature(husimi_of_state(cfg.fluctuation), "gauss_hermite_1d", 5)
    a = ensemble_spectrum(ATOM, cfg, grid, q_max=12)
    b = ensemble_spectrum(ATOM, cfg, grid, q_max=12, workers=2)
    assert a.m2_R.tobytes() == b.m2_R.tobytes() and a.m4_L.tobytes() == b.m4_L.tobytes()


def test_m2_3n_monotonic_in_intensity():
    prev = None
    for intensity in (1e-10, 1e-9, 1e-8):
        cfg = squeezed_cfg(intensity)
        ens = ensemble_spectrum(ATOM, cfg, default_quadrature(husimi_of_state(cfg.fluctuation)), q_max=Q_MAX)
        cur = np.array([ens.m2(q, p) for q in (9, 12, 15, 18, 21) for p in "RL"])
        if prev is not None:
            assert np.all(cur >= prev)
        prev = cur


def test_1d_marginal_matches_2d(squeezed_ens):
    cfg = squeezed_cfg()
    h = husimi_of_state(cfg.fluctuation)
    assert h.sigma_major / h.sigma_minor > 1e4
    ens2 = ensemble_spectrum(ATOM, cfg, build_quadrature(h, "gauss_hermite_2d", (21, 3)), q_max=Q_MAX)
    for q in range(9, 22):
        for pol in "RL":
            assert ens2.m2(q, pol) == pytest.approx(squeezed_ens.m2(q, pol), rel=0.02)


def test_monte_carlo_agrees_with_gauss_hermite(squeezed_ens):
    cfg = squeezed_cfg()
    grid = build_quadrature(husimi_of_state(cfg.fluctuation), "monte_carlo", 64, seed=11)
    chi_r, chi_l = node_amplitudes(ATOM, cfg, grid, q_max=Q_MAX)
    for q, pol, chi in ((12, "R", chi_r), (18, "L", chi_l), (15, "R", chi_r)):
        samples = np.abs(chi[:, q - 1]) ** 2
        stderr = samples.std(ddof=1) / np.sqrt(len(samples))
        assert abs(samples.mean() - squeezed_ens.m2(q, pol)) < 3 * stderr
