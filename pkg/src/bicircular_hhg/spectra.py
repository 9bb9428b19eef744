"""Harmonic amplitudes of dipole traces and their circular components.

Amplitudes use the transform ``chi_q = int d(t) exp(-i q w t) dt`` over a
rectangular window spanning a whole number of fundamental cycles, evaluated
as a rectangle sum on the grid.  With that convention a component rotating
clockwise in the (par, perp) plane shows up in ``chi_R``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import GridError, ValidationError
from .field import FieldSample
from .grid import EnvelopeSpec, TimeGrid
from .sfa import DEFAULT_TAU_MAX_CYCLES, AtomSpec, DipoleTrace, sfa_dipole_trace

DEFAULT_Q_MAX = 36


@dataclass(frozen=True)
class WindowSpec:
    """Rectangular window of ``n_cycles`` fundamental cycles.

    ``start_cycle=None`` places the window on the last cycles of the flat top,
    where the dipole memory only sees constant-amplitude field.
    """

    n_cycles: int = 3
    start_cycle: int | None = None

    def __post_init__(self):
        if self.n_cycles < 1:
            raise ValidationError("window must span at least one cycle")

    def bounds(self, omega: float, envelope: EnvelopeSpec | None, grid: TimeGrid | None = None):
        period = 2 * np.pi / omega
        if envelope is None or envelope.kind == "flat":
            if grid is None:
                raise ValidationError("a flat envelope needs the grid to place the window")
            lo, hi = grid.t0, grid.t1
        else:
            lo, hi = envelope.flat_top(omega)
        if self.start_cycle is None:
            start = hi - self.n_cycles * period
        else:
            start = self.start_cycle * period
        end = start + self.n_cycles * period
        slack = 1e-9 * period
        if start < lo - slack or end > hi + slack:
            raise ValidationError(
                f"window [{start:.6g}, {end:.6g}] a.u. leaves the flat top [{lo:.6g}, {hi:.6g}]")
        return start, end


@dataclass(frozen=True)
class HarmonicAmplitude:
    q: float
    chi_par: complex
    chi_perp: complex

    @property
    def chi_R(self) -> complex:
        return to_circular_basis(self.chi_par, self.chi_perp)[0]

    @property
    def chi_L(self) -> complex:
        return to_circular_basis(self.chi_par, self.chi_perp)[1]

    @property
    def intensity_R(self) -> float:
        return abs(self.chi_R) ** 2

    @property
    def intensity_L(self) -> float:
        return abs(self.chi_L) ** 2


def to_circular_basis(chi_par, chi_perp):
    """(chi_R, chi_L) = ((par - i perp)/sqrt2, (par + i perp)/sqrt2)."""
    chi_par = np.asarray(chi_par, complex)
    chi_perp = np.asarray(chi_perp, complex)
    r = (chi_par - 1j * chi_perp) / np.sqrt(2)
    l = (chi_par + 1j * chi_perp) / np.sqrt(2)
    if r.ndim == 0:
        return complex(r), complex(l)
    return r, l


def _window_slice(trace: DipoleTrace, start: float, end: float) -> tuple[slice, int]:
    grid = trace.grid
    period = 2 * np.pi / trace.omega
    ppc = period / grid.dt
    if abs(ppc - round(ppc)) > 1e-6 * ppc:
        raise GridError(f"grid has {ppc:.6f} points per cycle; harmonics would not fall on bins")
    n_cycles = (end - start) / period
    if abs(n_cycles - round(n_cycles)) > 1e-9 * max(1.0, n_cycles):
        raise GridError("window is not a whole number of fundamental periods")
    try:
        i0 = grid.index_of(start)
    except ValidationError as exc:
        raise ValidationError(f"window start outside the dipole trace: {exc}") from None
    n = int(round(n_cycles)) * int(round(ppc))
    if i0 + n > grid.n_points:
        raise ValidationError("window runs past the end of the dipole trace")
    return slice(i0, i0 + n), int(round(n_cycles))


def _resolve_window(trace: DipoleTrace, window, envelope):
    if isinstance(window, tuple):
        return window
    return window.bounds(trace.omega, envelope, trace.grid)


def harmonic_arrays(trace: DipoleTrace, window=None, q_max: int = DEFAULT_Q_MAX,
                    envelope: EnvelopeSpec | None = None):
    """Integer-order amplitudes as arrays ``(q, chi_par, chi_perp)`` for q = 1..q_max.

    ``window`` is a WindowSpec or an explicit ``(start, end)`` pair of grid
    times; by default the whole trace is used.
    """
    if window is None:
        start, end = trace.grid.t0, trace.grid.t1
    else:
        start, end = _resolve_window(trace, window, envelope)
    sl, n_cycles = _window_slice(trace, start, end)
    dt = trace.grid.dt
    n = sl.stop - sl.start
    q = np.arange(1, q_max + 1)
    bins = q * n_cycles
    if bins[-1] > n // 2:
        raise GridError(f"q_max={q_max} exceeds the Nyquist order of the grid")
    # absolute-time phase reference so amplitudes do not depend on where the window starts
    phase = np.exp(-1j * q * trace.omega * start)
    chi_par = dt * np.fft.rfft(trace.d_par[sl])[bins] * phase
    chi_perp = dt * np.fft.rfft(trace.d_perp[sl])[bins] * phase
    return q, chi_par, chi_perp


def harmonic_amplitudes(trace: DipoleTrace, window=None, q_max: int = DEFAULT_Q_MAX,
                        envelope: EnvelopeSpec | None = None) -> list[HarmonicAmplitude]:
    q, cp, cq = harmonic_arrays(trace, window, q_max, envelope)
    return [HarmonicAmplitude(float(a), complex(b), complex(c)) for a, b, c in zip(q, cp, cq)]


def dense_spectrum(trace: DipoleTrace, window=None, onesided: bool = True,
                   envelope: EnvelopeSpec | None = None):
    """All DFT bins of the window: (q, chi_par, chi_perp) with q in units of omega.

    With ``onesided=False`` the full two-sided transform is returned, for
    which ``sum |chi|^2 = n dt^2 sum |d|^2`` holds exactly.
    """
    if window is None:
        start, end = trace.grid.t0, trace.grid.t1
    else:
        start, end = _resolve_window(trace, window, envelope)
    sl, n_cycles = _window_slice(trace, start, end)
    dt = trace.grid.dt
    n = sl.stop - sl.start
    if onesided:
        k = np.arange(n // 2 + 1)
        cp = dt * np.fft.rfft(trace.d_par[sl])
        cq = dt * np.fft.rfft(trace.d_perp[sl])
    else:
        k = np.fft.fftfreq(n, 1.0 / n)
        cp = dt * np.fft.fft(trace.d_par[sl])
        cq = dt * np.fft.fft(trace.d_perp[sl])
    return k / n_cycles, cp, cq


def three_segment_decomposition(trace: DipoleTrace, window=None, q_max: int = DEFAULT_Q_MAX,
                                envelope: EnvelopeSpec | None = None):
    """Split every cycle of the window into thirds.

    Returns ``(q, segments, recombined)`` where ``segments[j]`` holds, per
    component, the sum over cycles c of ``int_0^{T/3} d(t_c + jT/3 + s) e^{-iqws} ds``
    and
    ``recombined = sum_j exp(-i q 2 pi j / 3) segments[j]`` which reproduces
    the full-window amplitude.
    """
    if window is None:
        start, end = trace.grid.t0, trace.grid.t1
    else:
        start, end = _resolve_window(trace, window, envelope)
    sl, n_cycles = _window_slice(trace, start, end)
    dt = trace.grid.dt
    ppc = (sl.stop - sl.start) // n_cycles
    if ppc % 3:
        raise GridError("points per cycle must be divisible by 3 for the segment split")
    third = ppc // 3
    q = np.arange(1, q_max + 1)
    t_local = np.arange(third) * dt
    kernel = np.exp(-1j * np.outer(q, trace.omega * t_local))
    phase0 = np.exp(-1j * q * trace.omega * start)
    segments = np.zeros((3, 2, q_max), complex)
    for comp, series in enumerate((trace.d_par[sl], trace.d_perp[sl])):
        cycles = series.reshape(n_cycles, 3, third)
        for j in range(3):
            # each cycle starts at a whole period, so its phase is 1
            segments[j, comp] = dt * kernel @ cycles[:, j, :].sum(axis=0) * phase0
    rot = np.exp(-1j * 2 * np.pi * np.outer(np.arange(3), q) / 3)
    recombined = np.einsum("jq,jcq->cq", rot, segments)
    return q, segments, recombined


def single_sample_spectrum(atom: AtomSpec, sample: FieldSample, window: WindowSpec = WindowSpec(),
                           q_max: int = DEFAULT_Q_MAX,
                           tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES) -> list[HarmonicAmplitude]:
    """SFA dipole restricted to the window followed by harmonic extraction."""
    start, end = window.bounds(sample.omega, sample.envelope, sample.grid)
    grid = sample.grid
    span = (grid.t0 + grid.index_of(start) * grid.dt, grid.t0 + grid.index_of(end) * grid.dt)
    trace = sfa_dipole_trace(atom, sample, tau_max_cycles=tau_max_cycles, span=span)
    return harmonic_amplitudes(trace, (start, end), q_max)


def write_spectrum_csv(path, q, chi_r, chi_l, intensity_r=None, intensity_l=None) -> None:
    """Columns q, I_R, I_L, re/im chi_R, re/im chi_L.

    Intensities default to ``|chi|^2``; ensemble outputs pass the averaged
    intensities alongside the mean amplitudes.
    """
    chi_r = np.asarray(chi_r, complex)
    chi_l = np.asarray(chi_l, complex)
    i_r = np.abs(chi_r) ** 2 if intensity_r is None else np.asarray(intensity_r, float)
    i_l = np.abs(chi_l) ** 2 if intensity_l is None else np.asarray(intensity_l, float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["q", "I_R", "I_L", "re_chi_R", "im_chi_R", "re_chi_L", "im_chi_L"])
        for row in zip(q, i_r, i_l, chi_r.real, chi_r.imag, chi_l.real, chi_l.imag):
            w.writerow([int(row[0])] + [repr(float(x)) for x in row[1:]])
