import numpy as np
import pytest

from bicircular_hhg.errors import GridError, NumericalError, ValidationError
from bicircular_hhg.field import (DriveConfig, FieldSample, central_flat_cycle,
                                  sample_classical_field)
from bicircular_hhg.grid import EnvelopeSpec, TimeGrid
from bicircular_hhg.sfa import (AtomSpec, DipoleTrace, dipole_rotation_check, estimate_cutoff_order,
                                sfa_dipole_trace, vector_potential)
from bicircular_hhg.spectra import WindowSpec, single_sample_spectrum

W = 0.057
ATOM = AtomSpec()


def linear_sample(e0, cfg=None):
    cfg = cfg or DriveConfig(amplitude_e0=e0)
    g = cfg.time_grid
    t = g.times
    return FieldSample(0j, e0 * np.cos(W * t) * cfg.envelope(t, W), np.zeros_like(t), g, W, cfg.envelope)


def spectral_cutoff(intensity, floor=1e-20):
    """Last local maximum of the odd-order spectrum above the numerical floor.

    Beyond it the odd harmonics decay monotonically, which marks the end of
    the plateau.
    """
    odd = np.arange(1, len(intensity) + 1, 2)
    vals = intensity[odd - 1]
    keep = vals > floor * vals.max()
    odd, vals = odd[keep], vals[keep]
    peaks = [odd[i] for i in range(1, len(vals) - 1) if vals[i] > vals[i - 1] and vals[i] > vals[i + 1]]
    return peaks[-1]


def test_atom_validation():
    with pytest.raises(ValidationError):
        AtomSpec(ip=0.0)
    with pytest.raises(ValidationError):
        AtomSpec(dme_model="gaussian")


def test_zero_field_gives_zero_potential_and_dipole():
    g = DriveConfig().time_grid
    s = FieldSample(0j, np.zeros(g.n_points), np.zeros(g.n_points), g, W)
    ax, ay = vector_potential(s)
    assert not ax.any() and not ay.any()
    tr = sfa_dipole_trace(ATOM, s, span=(g.times[4000], g.times[4100]))
    assert not tr.d_par.any() and not tr.d_perp.any()


def test_vector_potential_monochromatic():
    cfg = DriveConfig(envelope=EnvelopeSpec(kind="flat"))
    g = cfg.time_grid
    t = g.times
    e0 = 0.037
    s = FieldSample(0j, e0 * np.cos(W * t), np.zeros_like(t), g, W)
    ax, _ = vector_potential(s)
    exact = -(e0 / W) * np.sin(W * t)
    # trapezoid error ~ E0 w dt^2 t / 12
    assert np.max(np.abs(ax - exact)) < 2 * e0 * W * g.dt**2 * t[-1] / 12


def test_vector_potential_vanishes_after_trapezoid_pulse():
    s = sample_classical_field(DriveConfig())
    ax, ay = vector_potential(s)
    assert abs(ax[0]) == 0 and abs(ay[0]) == 0
    assert np.hypot(ax[-1], ay[-1]) < 1e-6 * 0.037 / W


def test_linear_drive_odd_harmonics_only():
    s = linear_sample(0.053)
    amps = single_sample_spectrum(ATOM, s, q_max=30)
    assert all(a.chi_perp == 0 for a in amps)
    inten = np.array([abs(a.chi_par) ** 2 for a in amps])
    for q in range(2, 30, 2):
        assert inten[q - 1] * 1e4 < 0.5 * (inten[q - 2] + inten[q])


@pytest.mark.parametrize("e0", [0.037, 0.053, 0.075])
def test_linear_cutoff_follows_three_step_law(e0):
    ppc = 1536 if e0 > 0.06 else 768
    cfg = DriveConfig(amplitude_e0=e0, points_per_cycle=ppc)
    s = linear_sample(e0, cfg)
    amps = single_sample_spectrum(ATOM, s, q_max=60)
    inten = np.array([abs(a.chi_par) ** 2 for a in amps])
    up = e0**2 / (4 * W**2)
    law = (ATOM.ip + 3.17 * up) / W
    assert abs(spectral_cutoff(inten) - law) <= 2


@pytest.mark.parametrize("e0", [0.037, 0.053])
def test_cutoff_estimator_reproduces_317_law(e0):
    cfg = DriveConfig(amplitude_e0=e0)
    s = linear_sample(e0, cfg)
    est = estimate_cutoff_order(ATOM, s, ip_factor=1.0, span=central_flat_cycle(cfg))
    up = e0**2 / (4 * W**2)
    assert est == pytest.approx((ATOM.ip + 3.17 * up) / W, abs=0.1)


def test_bicircular_cutoff_estimate():
    cfg = DriveConfig()
    est = estimate_cutoff_order(ATOM, sample_classical_field(cfg), span=central_flat_cycle(cfg))
    assert 20 < est < 25


def test_grid_too_coarse_is_refused():
    g = TimeGrid(0.0, 7 * 2 * np.pi / W, 7 * 12 + 1)
    t = g.times
    s = FieldSample(0j, -0.037 * (np.sin(W * t) + np.sin(2 * W * t)),
                    0.037 * (np.cos(W * t) - np.cos(2 * W * t)), g, W)
    with pytest.raises(GridError, match="points per period"):
        sfa_dipole_trace(ATOM, s)


def test_non_finite_field_reports_location():
    s = sample_classical_field(DriveConfig())
    e = s.e_par.copy()
    e[3000] = np.nan
    bad = FieldSample(0j, e, s.e_perp, s.grid, W)
    with pytest.raises(NumericalError, match="t="):
        sfa_dipole_trace(ATOM, bad, span=(s.times[2990], s.times[3100]))


def test_mirror_symmetry_is_exact():
    s = sample_classical_field(DriveConfig(), 1e-3)
    m = FieldSample(s.alpha, s.e_par, -s.e_perp, s.grid, W)
    span = (s.times[3 * 768], s.times[4 * 768])
    a = sfa_dipole_trace(ATOM, s, span=span)
    b = sfa_dipole_trace(ATOM, m, span=span)
    assert np.array_equal(a.d_par, b.d_par)
    assert np.array_equal(a.d_perp, -b.d_perp)


def test_periodic_steady_state_in_flat_top():
    s = sample_classical_field(DriveConfig())
    n = 768
    tr = sfa_dipole_trace(ATOM, s, span=(s.times[3 * n], s.times[5 * n]))
    peak = np.max(np.hypot(tr.d_par, tr.d_perp))
    diff = np.hypot(tr.d_par[n:2 * n] - tr.d_par[:n], tr.d_perp[n:2 * n] - tr.d_perp[:n])
    assert diff.max() < 1e-2 * peak


def test_deterministic():
    s = sample_classical_field(DriveConfig(), 2e-4 + 1e-4j)
    span = (s.times[3000], s.times[3500])
    a = sfa_dipole_trace(ATOM, s, span=span)
    b = sfa_dipole_trace(ATOM, s, span=span)
    assert a.d_par.tobytes() == b.d_par.tobytes()
    assert a.d_perp.tobytes() == b.d_perp.tobytes()


def test_rotation_check_pure_bicircular():
    assert dipole_rotation_check(ATOM, DriveConfig()) < 1e-2


def test_rotation_check_without_envelope():
    assert dipole_rotation_check(ATOM, DriveConfig(envelope=EnvelopeSpec(kind="flat"))) < 1e-3


def test_rotation_check_grows_with_perturbation():
    cfg = DriveConfig()
    res = [dipole_rotation_check(ATOM, cfg, a) for a in (0.0, 1e-5, 1e-4)]
    assert res[0] < res[1] < res[2]


def test_dipole_csv(tmp_path):
    g = TimeGrid(0.0, 1.0, 3)
    tr = DipoleTrace(g, np.array([0.0, 1.0, 2.0]), np.zeros(3), W)
    tr.write_csv(tmp_path / "d.csv")
    assert (tmp_path / "d.csv").read_text().splitlines()[0] == "t_au,d_par,d_perp"
    with pytest.raises(ValidationError):
        DipoleTrace(g, np.zeros(2), np.zeros(3), W)


def test_window_must_lie_in_flat_top():
    with pytest.raises(ValidationError):
        WindowSpec(n_cycles=3, start_cycle=0).bounds(W, EnvelopeSpec())
