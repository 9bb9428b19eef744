"""Strong-field approximation dipole for a single classical field sample.

The dipole is evaluated by direct double-time quadrature of the Lewenstein
integral on the field's own time grid.  For every outer time ``t`` the inner
integral runs over excursion times ``tau = k dt`` with ``1 <= k <= M`` where
``M = round(tau_max / dt)``; the stationary momentum and the action are built
from cumulative integrals of the vector potential so each inner step is a
handful of array operations over all outer points at once.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass

import numpy as np

from .errors import GridError, NumericalError, ValidationError
from .field import DriveConfig, FieldSample, central_flat_cycle, sample_classical_field
from .grid import TimeGrid

log = logging.getLogger(__name__)

DEFAULT_IP = 0.5
DEFAULT_TAU_MAX_CYCLES = 2.0
DEFAULT_EPSILON = 0.05
MIN_POINTS_PER_CUTOFF_PERIOD = 16


@dataclass(frozen=True)
class AtomSpec:
    ip: float = DEFAULT_IP
    dme_model: str = "hydrogenic_1s"

    def __post_init__(self):
        if not self.ip > 0:
            raise ValidationError(f"ionization potential must be positive, got {self.ip}")
        if self.dme_model != "hydrogenic_1s":
            raise ValidationError(f"unknown dipole matrix element model {self.dme_model!r}")

    @property
    def dme_constant(self) -> float:
        """Normalization C of d(p) = C p / (p^2 + 2 Ip)^3."""
        return 2**3.5 * (2 * self.ip) ** 1.25 / np.pi


@dataclass
class DipoleTrace:
    grid: TimeGrid
    d_par: np.ndarray
    d_perp: np.ndarray
    omega: float

    def __post_init__(self):
        if len(self.d_par) != self.grid.n_points or len(self.d_perp) != self.grid.n_points:
            raise ValidationError("dipole series length does not match its grid")

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def circular(self) -> tuple[np.ndarray, np.ndarray]:
        """(d_R, d_L) with d_R = (d_par - i d_perp)/sqrt2."""
        return ((self.d_par - 1j * self.d_perp) / np.sqrt(2),
                (self.d_par + 1j * self.d_perp) / np.sqrt(2))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_au", "d_par", "d_perp"])
            for row in zip(self.times, self.d_par, self.d_perp):
                w.writerow([repr(float(x)) for x in row])


def _cumtrapz(y: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1])) * dt
    return out


def vector_potential(sample: FieldSample) -> tuple[np.ndarray, np.ndarray]:
    """A(t) = -int_{t0}^t E dt' by cumulative trapezoid, A(t0) = 0."""
    dt = sample.grid.dt
    return -_cumtrapz(np.asarray(sample.e_par, float), dt), -_cumtrapz(np.asarray(sample.e_perp, float), dt)


def rough_cutoff_order(atom: AtomSpec, sample: FieldSample) -> float:
    """Cheap upper estimate (Ip + 3.17 max|A|^2/4) / omega used for grid checks."""
    a_par, a_perp = vector_potential(sample)
    a_max = np.max(np.hypot(a_par - a_par.mean(), a_perp - a_perp.mean()))
    return (atom.ip + 3.17 * a_max**2 / 4) / sample.omega


def _span_indices(grid: TimeGrid, span) -> tuple[int, int]:
    if span is None:
        return 0, grid.n_points
    i0 = grid.index_of(span[0])
    i1 = grid.index_of(span[1]) + 1
    if i1 - i0 < 2:
        raise ValidationError("dipole span must contain at least two grid points")
    return i0, i1


def sfa_dipole_trace(atom: AtomSpec, sample: FieldSample,
                     tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES,
                     epsilon: float = DEFAULT_EPSILON, span=None) -> DipoleTrace:
    """Dipole d(t) of the hydrogenic atom driven by ``sample``.

    Parameters
    ----------
    tau_max_cycles : float
        Longest excursion time kept in the inner integral, in fundamental cycles.
    epsilon : float
        Regularization of the wave-packet spreading prefactor.
    span : (t_start, t_end), optional
        Grid times bounding the outer points to evaluate.  The inner integral
        still sees the whole field history.  Defaults to the full grid.
    """
    grid = sample.grid
    dt = grid.dt
    period = 2 * np.pi / sample.omega
    q_cut = rough_cutoff_order(atom, sample)
    ppcut = period / q_cut / dt
    if ppcut < MIN_POINTS_PER_CUTOFF_PERIOD:
        raise GridError(
            f"grid resolves the cutoff harmonic q~{q_cut:.1f} with {ppcut:.1f} points per period; "
            f"need >= {MIN_POINTS_PER_CUTOFF_PERIOD} (increase points_per_cycle)")
    if not tau_max_cycles > 0:
        raise ValidationError("tau_max_cycles must be positive")

    ep = np.asarray(sample.e_par, float)
    eq = np.asarray(sample.e_perp, float)
    ax, ay = vector_potential(sample)
    ix, iy = _cumtrapz(ax, dt), _cumtrapz(ay, dt)
    i2 = _cumtrapz(ax * ax + ay * ay, dt)
    ip = atom.ip

    i0, i1 = _span_indices(grid, span)
    n_out = i1 - i0
    m_inner = int(round(tau_max_cycles * period / dt))
    acc_x = np.zeros(n_out, complex)
    acc_y = np.zeros(n_out, complex)
    ax_t, ay_t = ax[i0:i1], ay[i0:i1]
    ix_t, iy_t, i2_t = ix[i0:i1], iy[i0:i1], i2[i0:i1]

    for k in range(1, m_inner + 1):
        lo = max(i0, k)  # first outer index whose ionization time is on the grid
        if lo >= i1:
            break
        o = lo - i0
        src = slice(lo - k, i1 - k)
        tau = k * dt
        dix = ix_t[o:] - ix[src]
        diy = iy_t[o:] - iy[src]
        px = -dix / tau
        py = -diy / tau
        action = ip * tau + 0.5 * (i2_t[o:] - i2[src] - (dix * dix + diy * diy) / tau)
        vrx = px + ax_t[o:]
        vry = py + ay_t[o:]
        vix = px + ax[src]
        viy = py + ay[src]
        recomb = 1.0 / (vrx * vrx + vry * vry + 2 * ip) ** 3
        ion = (ep[src] * vix + eq[src] * viy) / (vix * vix + viy * viy + 2 * ip) ** 3
        pref = (np.pi / (epsilon + 0.5j * tau)) ** 1.5
        if k == m_inner:
            pref *= 0.5
        z = pref * recomb * ion * np.exp(-1j * action)
        acc_x[o:] += z * vrx
        acc_y[o:] += z * vry

    scale = 2 * dt * atom.dme_constant**2
    d_par = scale * acc_x.imag
    d_perp = scale * acc_y.imag
    bad = ~(np.isfinite(d_par) & np.isfinite(d_perp))
    if bad.any():
        j = int(np.argmax(bad)) + i0
        t = grid.t0 + j * dt
        raise NumericalError(f"non-finite dipole integrand at t={t:.6g} a.u. "
                             f"(t' in [{t - m_inner * dt:.6g}, {t:.6g}])")
    sub = TimeGrid(grid.t0 + i0 * dt, grid.t0 + (i1 - 1) * dt, n_out)
    return DipoleTrace(sub, d_par, d_perp, sample.omega)


def estimate_cutoff_order(atom: AtomSpec, sample: FieldSample, ip_factor: float = 1.32,
                          tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES, span=None,
                          birth_tolerance: float = 0.5, chunk: int = 96) -> float:
    """Harmonic order of the highest classical return energy.

    For each return time, electron trajectories are parameterized by the
    excursion time; births are the local minima of the initial kinetic energy
    that stay below ``birth_tolerance * Ip`` (exactly zero for linear drives,
    necessarily nonzero for the bicircular trefoil).  The cutoff is
    ``(ip_factor * Ip + max KE_return) / omega``; ``ip_factor = 1.32`` is the
    quantum correction that shifts the linear law to Ip*1.32 + 3.17 Up.
    """
    grid = sample.grid
    dt = grid.dt
    period = 2 * np.pi / sample.omega
    ax, ay = vector_potential(sample)
    ix, iy = _cumtrapz(ax, dt), _cumtrapz(ay, dt)
    i0, i1 = _span_indices(grid, span)
    k = np.arange(max(2, int(0.1 * period / dt)), int(round(tau_max_cycles * period / dt)) + 1)
    best = 0.0
    for start in range(max(i0, int(k[-1])), i1, chunk):
        n = np.arange(start, min(start + chunk, i1))[:, None]
        m = n - k[None, :]
        tau = k[None, :] * dt
        px = -(ix[n] - ix[m]) / tau
        py = -(iy[n] - iy[m]) / tau
        ke_i = 0.5 * ((px + ax[m]) ** 2 + (py + ay[m]) ** 2)
        ke_r = 0.5 * ((px + ax[n]) ** 2 + (py + ay[n]) ** 2)
        mid = ke_i[:, 1:-1]
        born = (mid <= ke_i[:, :-2]) & (mid <= ke_i[:, 2:]) & (mid <= birth_tolerance * atom.ip)
        if born.any():
            best = max(best, float(ke_r[:, 1:-1][born].max()))
    if best == 0.0:
        raise ValidationError("no classical return found in the requested span")
    return (ip_factor * atom.ip + best) / sample.omega


def dipole_rotation_check(atom: AtomSpec, cfg: DriveConfig, alpha: complex = 0j,
                          tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES) -> float:
    """Three-fold helicity-phase residual of the dipole over a flat-top cycle.

    Returns max over the central flat-top cycle of
    ``|d_s(t + T/3) - exp(-+ i 2pi/3) d_s(t)| / max|d_s|`` for s = R, L; with
    the exp(-i q w t) transform convention the R component picks up
    exp(-i 2pi/3) and the L component exp(+i 2pi/3).
    """
    if cfg.fluctuation.kind != "none" and alpha == 0:
        log.debug("rotation check ignores fluctuation spec; alpha=0 sample")
    sample = sample_classical_field(cfg, alpha)
    c0, c1 = central_flat_cycle(cfg)
    third = cfg.period / 3
    grid = sample.grid
    span = (grid.t0 + grid.index_of(c0) * grid.dt, grid.t0 + grid.index_of(c1 + third) * grid.dt)
    trace = sfa_dipole_trace(atom, sample, tau_max_cycles=tau_max_cycles, span=span)
    shift = cfg.points_per_cycle // 3
    n_cyc = cfg.points_per_cycle
    d_r, d_l = trace.circular()
    worst = 0.0
    for d, phase in ((d_r, np.exp(-2j * np.pi / 3)), (d_l, np.exp(2j * np.pi / 3))):
        peak = np.max(np.abs(d))
        if peak == 0:
            continue
        res = np.abs(d[shift:shift + n_cyc] - phase * d[:n_cyc])
        worst = max(worst, float(res.max() / peak))
    return worst
