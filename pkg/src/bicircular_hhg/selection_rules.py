"""Photon-exchange channels, selection rules and power-law statistics.

A channel lists the net number of photons exchanged with each driving mode
(positive for absorption, negative for emission):

* ``n1``  : omega photons of the strong left-circular mode,
* ``n2p`` : 2omega photons of the strong right-circular mode,
* ``n2m`` : 2omega photons of the weak left-circular mode created by
  squeezing the 2omega field,
* ``n1p`` : omega photons of the weak right-circular mode created by
  squeezing the omega field.

Energy conservation gives ``q = n1 + n1p + 2 (n2p + n2m)`` and spin
conservation ``sigma = n2p - n2m - n1 + n1p`` with sigma = +1 for an
R-circular and -1 for an L-circular harmonic photon.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import gammaln

from .errors import ChannelNotFoundError, DomainError, ValidationError

DEFAULT_MAX_ABS = 12


@dataclass(frozen=True)
class Channel:
    n1: int
    n2p: int
    n2m: int
    sigma: int
    target: str = "2omega"
    n1p: int = 0

    @property
    def q(self) -> int:
        return self.n1 + self.n1p + 2 * (self.n2p + self.n2m)

    @property
    def weak(self) -> int:
        """Photons exchanged with the fluctuating mode."""
        return self.n1p if self.target == "omega" else self.n2m

    @property
    def strong_total(self) -> int:
        return abs(self.n1) + abs(self.n2p)

    @property
    def absorbed(self) -> int:
        return sum(n for n in (self.n1, self.n1p, self.n2p, self.n2m) if n > 0)

    @property
    def order(self) -> tuple:
        """Ranking key, smaller is more probable.

        Fewest weak-mode photons first (each costs a power of the small
        fluctuation field), then the lowest overall order in the strong
        fields, then the channel that absorbs more photons.
        """
        return (abs(self.weak), self.strong_total, -self.absorbed,
                (self.n1, self.n1p, self.n2p, self.n2m))

    def to_json(self, rank: int | None = None) -> dict:
        out = {"n1": self.n1, "n2p": self.n2p, "n2m": self.n2m, "sigma": self.sigma}
        if self.target == "omega":
            out["n1p"] = self.n1p
        if rank is not None:
            out["rank"] = rank
        return out


def _check_target(target: str) -> None:
    if target not in ("omega", "2omega"):
        raise ValidationError(f"squeeze target must be 'omega' or '2omega', got {target!r}")


def enumerate_channels(q: int, s: int, max_abs: int = DEFAULT_MAX_ABS,
                       target: str = "2omega") -> list[Channel]:
    """All channels with |n_i| <= max_abs producing harmonic ``q``, best first.

    ``s=0`` switches the weak mode off (its photon number is fixed to zero).
    """
    if q < 1:
        raise DomainError("harmonic order must be >= 1")
    if max_abs < 1:
        raise DomainError("max_abs must be >= 1")
    if s not in (0, 1):
        raise ValidationError("squeezing flag s must be 0 or 1")
    _check_target(target)
    rng = range(-max_abs, max_abs + 1)
    weak_values = rng if s else (0,)
    found = []
    for n1, n2p, weak in itertools.product(rng, rng, weak_values):
        n2m, n1p = (weak, 0) if target == "2omega" else (0, weak)
        if n1 + n1p + 2 * (n2p + n2m) != q:
            continue
        sigma = n2p - n2m - n1 + n1p
        if sigma in (-1, 1):
            found.append(Channel(n1, n2p, n2m, sigma, target, n1p))
    found.sort(key=lambda c: c.order)
    return found


def classical_allowed(q_max: int) -> list[tuple[int, int]]:
    """Allowed (q, sigma) of the coherent bicircular drive for 1 <= q <= q_max."""
    if q_max < 2:
        raise DomainError("q_max must be >= 2")
    table = []
    for q in range(1, q_max + 1):
        if q % 3 == 2:
            table.append((q, +1))
        elif q % 3 == 1:
            table.append((q, -1))
    return table


def dominant_channel(q: int, s: int = 1, squeeze_target: str = "2omega", regime: str = "weak",
                     max_abs: int = DEFAULT_MAX_ABS) -> Channel:
    """Most probable channel for harmonic ``q`` under weak fluctuations."""
    if s != 1:
        raise ValidationError("channel ranking is defined for the fluctuating field (s=1)")
    if regime != "weak":
        raise ValidationError("only the weak-perturbation ranking is available")
    channels = enumerate_channels(q, s, max_abs, squeeze_target)
    if not channels:
        raise ChannelNotFoundError(f"no channel for q={q} within |n| <= {max_abs}")
    return channels[0]


def channel_table(q_max: int, s: int, squeeze_target: str = "2omega",
                  max_abs: int = DEFAULT_MAX_ABS, cutoff_order: float | None = None,
                  keep: int = 6) -> list[dict]:
    """JSON-ready predictions per harmonic order.

    Orders above ``cutoff_order`` are marked unranked: the perturbative
    ordering says nothing about the helicity there.
    """
    rows = []
    for q in range(1, q_max + 1):
        chans = enumerate_channels(q, s, max_abs, squeeze_target)
        ranked = cutoff_order is None or q <= cutoff_order
        row = {
            "q": q,
            "s": s,
            "allowed": bool(chans),
            "ranked": ranked,
            "channels": [c.to_json(rank=i + 1) for i, c in enumerate(chans[:keep])],
        }
        if chans and ranked:
            row["predicted_sigma"] = chans[0].sigma
        else:
            row["predicted_sigma"] = None
        rows.append(row)
    return rows


def g2_powerlaw_squeezed(n: int) -> float:
    """g2 of a response chi ~ x**n driven by a 1D Gaussian quadrature x."""
    if n < 1 or int(n) != n:
        raise DomainError("power-law exponent n must be a positive integer")
    n = int(n)
    return float(np.exp(0.5 * np.log(np.pi) + gammaln(0.5 + 2 * n) - 2 * gammaln(0.5 + n)))


def g2_powerlaw_thermal(n: int) -> float:
    return 0.5 * (1.0 + g2_powerlaw_squeezed(n))


def fit_yield_exponent(pairs) -> tuple[float, float, float]:
    """Least-squares fit of log Y = log A + n log E.

    Returns ``(A, n, rms_log_residual)``.
    """
    data = np.asarray(list(pairs), dtype=float)
    if data.ndim != 2 or data.shape[1] != 2 or len(data) < 3:
        raise DomainError("need at least three (E, Y) pairs")
    if np.any(data <= 0) or not np.all(np.isfinite(data)):
        raise DomainError("yield fit needs positive, finite E and Y")
    x, y = np.log(data[:, 0]), np.log(data[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(np.exp(intercept)), float(slope), float(np.sqrt(np.mean(resid**2)))


@dataclass(frozen=True)
class SymmetryGroup:
    """Finite set of (rotation, time shift) pairs, both as fractions of a full turn/period."""

    elements: frozenset

    @property
    def order(self) -> int:
        return len(self.elements)

    @property
    def is_trivial(self) -> bool:
        return self.elements == frozenset({(Fraction(0), Fraction(0))})

    def allowed_orders(self, q_max: int) -> list[tuple[int, int]]:
        """(q, sigma) pairs compatible with every element.

        A symmetry d(t + bT) = R(2 pi a) d(t) multiplies the amplitude of an
        order-q, helicity-sigma harmonic by exp(-2 pi i (sigma a + q b)); the
        harmonic survives only if that phase is one.
        """
        out = []
        for q in range(1, q_max + 1):
            for sigma in (+1, -1):
                if all((sigma * a + q * b) % 1 == 0 for a, b in self.elements):
                    out.append((q, sigma))
        return out


def _cyclic(generator: tuple[Fraction, Fraction]) -> set:
    rot, shift = Fraction(generator[0]) % 1, Fraction(generator[1]) % 1
    out, cur = set(), (Fraction(0), Fraction(0))
    while cur not in out:
        out.add(cur)
        cur = ((cur[0] + rot) % 1, (cur[1] + shift) % 1)
    return out


def residual_symmetry_group(mean_symmetry=(Fraction(1, 3), Fraction(1, 3)),
                            fluct_period: Fraction | None = Fraction(1, 4)) -> SymmetryGroup:
    """Dynamical symmetries shared by the mean field and its fluctuations.

    ``mean_symmetry`` is the generator (rotation / 2pi, time shift / T) of the
    mean bicircular field.  The fluctuation variance is rotation invariant and
    periodic in time with period ``fluct_period`` (in units of T); ``None``
    means no fluctuations, leaving the mean-field group intact.
    """
    group = _cyclic(mean_symmetry)
    if fluct_period is not None:
        p = Fraction(fluct_period)
        if p <= 0:
            raise DomainError("fluctuation period must be positive")
        group = {(a, b) for a, b in group if (b / p).denominator == 1}
    return SymmetryGroup(frozenset(group))
