from fractions import Fraction

import numpy as np
import pytest

from bicircular_hhg.errors import ChannelNotFoundError, DomainError, ValidationError
from bicircular_hhg.selection_rules import (Channel, SymmetryGroup, channel_table, classical_allowed,
                                            dominant_channel, enumerate_channels, fit_yield_exponent,
                                            g2_powerlaw_squeezed, g2_powerlaw_thermal,
                                            residual_symmetry_group)


def test_q3_forbidden_without_fluctuations():
    assert enumerate_channels(3, 0, max_abs=6) == []


def test_q3_sm_channels():
    chans = enumerate_channels(3, 1, max_abs=2)
    assert Channel(-1, 1, 1, +1) in chans
    assert Channel(-1, 0, 2, -1) in chans


def test_q5_classical_channel():
    chans = enumerate_channels(5, 0, max_abs=3)
    assert Channel(1, 2, 0, +1) in chans
    for c in chans:
        if c.sigma == +1:
            assert c.n2p == c.n1 + 1


@pytest.mark.parametrize("q", range(1, 31))
@pytest.mark.parametrize("target", ["2omega", "omega"])
def test_channel_invariants(q, target):
    for c in enumerate_channels(q, 1, max_abs=5, target=target):
        assert c.n1 + c.n1p + 2 * (c.n2p + c.n2m) == q
        assert c.n2p - c.n2m - c.n1 + c.n1p == c.sigma and c.sigma in (-1, 1)
        assert max(abs(c.n1), abs(c.n2p), abs(c.n2m), abs(c.n1p)) <= 5


def test_s0_recovers_classical_rules():
    allowed = {q for q in range(1, 31) if enumerate_channels(q, 0)}
    assert allowed == {q for q in range(1, 31) if q % 3 != 0}
    for q in allowed:
        sigmas = {c.sigma for c in enumerate_channels(q, 0)}
        assert sigmas == {+1 if q % 3 == 2 else -1}


@pytest.mark.parametrize("target", ["2omega", "omega"])
def test_s1_allows_every_order(target):
    assert all(enumerate_channels(q, 1, 12, target) for q in range(1, 31))


def test_enumerate_errors():
    with pytest.raises(DomainError):
        enumerate_channels(0, 1)
    with pytest.raises(DomainError):
        enumerate_channels(3, 1, max_abs=0)
    with pytest.raises(ValidationError):
        enumerate_channels(3, 2)
    with pytest.raises(ValidationError):
        enumerate_channels(3, 1, target="3omega")


def test_classical_allowed_table():
    table = dict(classical_allowed(9))
    assert table[2] == +1 and table[4] == -1 and 6 not in table and 3 not in table
    with pytest.raises(DomainError):
        classical_allowed(1)


def test_dominant_channel_2omega_squeezing():
    c = dominant_channel(3, 1, "2omega")
    assert (c.n1, c.n2p, c.n2m, c.sigma) == (-1, 1, 1, +1)


def test_dominant_channel_omega_squeezing():
    c = dominant_channel(3, 1, "omega")
    assert c.sigma == -1 and abs(c.weak) == 1


@pytest.mark.parametrize("target", ["2omega", "omega"])
@pytest.mark.parametrize("q", [3, 6, 9, 12])
def test_tie_break_prefers_absorption(q, target):
    chans = enumerate_channels(q, 1, 12, target)
    best = chans[0]
    tied = [c for c in chans if abs(c.weak) == abs(best.weak) and c.strong_total == best.strong_total]
    assert best.absorbed == max(c.absorbed for c in tied)
    assert all(abs(c.weak) >= abs(best.weak) for c in chans)


def test_dominant_channel_errors():
    with pytest.raises(ValidationError):
        dominant_channel(3, 0)
    with pytest.raises(ValidationError):
        dominant_channel(3, 1, regime="strong")
    with pytest.raises(ChannelNotFoundError):
        dominant_channel(40, 1, max_abs=1)


def test_channel_table_flags_cutoff():
    rows = channel_table(30, 1, cutoff_order=22.5)
    assert all(r["allowed"] for r in rows)
    assert rows[2]["predicted_sigma"] == +1
    assert rows[24]["ranked"] is False and rows[24]["predicted_sigma"] is None
    assert rows[2]["channels"][0] == {"n1": -1, "n2p": 1, "n2m": 1, "sigma": 1, "rank": 1}
    classical = channel_table(6, 0)
    assert classical[5]["allowed"] is False and classical[5]["channels"] == []


def test_g2_powerlaw_values():
    assert abs(g2_powerlaw_squeezed(1) - 3) < 1e-12
    assert abs(g2_powerlaw_thermal(1) - 2) < 1e-12
    assert g2_powerlaw_squeezed(2) == pytest.approx(35 / 3, rel=1e-12)
    assert g2_powerlaw_thermal(2) == pytest.approx(19 / 3, rel=1e-12)
    vals = [g2_powerlaw_squeezed(n) for n in range(1, 12)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    for n in range(1, 8):
        assert g2_powerlaw_thermal(n) == pytest.approx(0.5 * (1 + g2_powerlaw_squeezed(n)), rel=1e-15)


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_g2_powerlaw_domain(bad):
    with pytest.raises(DomainError):
        g2_powerlaw_squeezed(bad)


def test_fit_exact_power_law():
    e = np.logspace(-5, -3, 7)
    a, n, rms = fit_yield_exponent(zip(e, 2 * e))
    assert abs(n - 1) < 1e-12 and a == pytest.approx(2, rel=1e-10) and rms < 1e-12


def test_fit_noisy_cubic():
    rng = np.random.default_rng(0)
    e = np.logspace(-4, -2, 9)
    y = 5 * e**3 * (1 + 1e-6 * rng.standard_normal(e.size))
    _, n, _ = fit_yield_exponent(zip(e, y))
    assert abs(n - 3) < 1e-3


def test_fit_rejects_bad_data():
    with pytest.raises(DomainError):
        fit_yield_exponent([(1, 1), (2, 2)])
    with pytest.raises(DomainError):
        fit_yield_exponent([(1, 1), (2, 0), (3, 3)])


def test_mean_field_group_order_three():
    g = residual_symmetry_group(fluct_period=None)
    assert g.order == 3 and not g.is_trivial
    pairs = g.allowed_orders(12)
    assert pairs == [(q, s) for q, s in classical_allowed(12)]


def test_fluctuations_leave_identity_only():
    g = residual_symmetry_group(fluct_period=Fraction(1, 4))
    assert g.is_trivial and g.order == 1
    assert len(g.allowed_orders(10)) == 20


def test_symmetry_group_rejects_bad_period():
    with pytest.raises(DomainError):
        residual_symmetry_group(fluct_period=Fraction(0))
    assert SymmetryGroup(frozenset({(Fraction(0), Fraction(0))})).is_trivial
