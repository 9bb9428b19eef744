"""Bicircular driving field, its Husimi fluctuation model and field samples.

Field amplitudes are in atomic units.  Fluctuations are parameterized
directly in field units: the fluctuation ``intensity`` is the time-averaged
excess field variance of the sampled perturbation, so ``intensity=1e-8``
means an rms perturbation of 1e-4 a.u.  The vacuum width ``vacuum_variance``
only fixes the squeezing parameter through ``sinh(r)**2 = I / vacuum``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DomainError, ValidationError
from .grid import MIN_GRID_POINTS, EnvelopeSpec, TimeGrid

DEFAULT_OMEGA = 0.057
DEFAULT_E0 = 0.037

# Field variance of one vacuum quadrature (a.u.^2), i.e. a single-photon
# field of ~1e-7 a.u. for a macroscopic quantization volume.
VACUUM_FIELD_VARIANCE = 1e-14

HELICITY_MAP = (("omega", "L"), ("2omega", "R"))

_KINDS = ("none", "squeezed", "thermal")
_TARGETS = ("omega", "2omega")
_AXES = ("parallel", "perpendicular")
_QUADRATURES = ("amplitude", "phase")


@dataclass(frozen=True)
class FluctuationSpec:
    kind: str = "none"
    target_mode: str = "2omega"
    axis: str = "parallel"
    quadrature: str = "phase"
    intensity: float = 0.0
    vacuum_variance: float = VACUUM_FIELD_VARIANCE

    def __post_init__(self):
        for name, value, allowed in (
            ("kind", self.kind, _KINDS),
            ("target_mode", self.target_mode, _TARGETS),
            ("axis", self.axis, _AXES),
            ("quadrature", self.quadrature, _QUADRATURES),
        ):
            if value not in allowed:
                raise ValidationError(f"{name}={value!r}; expected one of {allowed}")
        if not self.intensity >= 0:
            raise ValidationError(f"fluctuation intensity must be >= 0, got {self.intensity}")
        if self.kind == "none" and self.intensity != 0:
            raise ValidationError("kind='none' requires intensity = 0")
        if not self.vacuum_variance > 0:
            raise ValidationError("vacuum_variance must be positive")

    @property
    def harmonic(self) -> int:
        """Frequency multiple of the fluctuating mode."""
        return 1 if self.target_mode == "omega" else 2

    @property
    def axis_vector(self) -> np.ndarray:
        return np.array([1.0, 0.0]) if self.axis == "parallel" else np.array([0.0, 1.0])


@dataclass(frozen=True)
class DriveConfig:
    """Everything needed to tabulate the driving field on a grid."""

    omega: float = DEFAULT_OMEGA
    amplitude_e0: float = DEFAULT_E0
    fluctuation: FluctuationSpec = field(default_factory=FluctuationSpec)
    envelope: EnvelopeSpec = field(default_factory=EnvelopeSpec)
    points_per_cycle: int = 768
    helicity_map: tuple = HELICITY_MAP

    def __post_init__(self):
        if not self.omega > 0:
            raise ValidationError(f"omega must be positive, got {self.omega}")
        if not self.amplitude_e0 >= 0:
            raise ValidationError(f"amplitude E0 must be >= 0, got {self.amplitude_e0}")
        if self.helicity_map != HELICITY_MAP:
            raise ValidationError("only the omega->L, 2omega->R assignment is supported")
        if self.points_per_cycle % 3:
            # T/3 must be a whole number of samples for the three-fold checks
            raise ValidationError("points_per_cycle must be a multiple of 3")
        n = self.envelope.total_cycles * self.points_per_cycle + 1
        if n < MIN_GRID_POINTS:
            raise ValidationError(f"time grid has {n} points, need >= {MIN_GRID_POINTS}")

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega

    @property
    def time_grid(self) -> TimeGrid:
        return TimeGrid.for_cycles(self.omega, self.envelope.total_cycles, self.points_per_cycle)

    def with_fluctuation(self, **changes) -> "DriveConfig":
        from dataclasses import replace

        return replace(self, fluctuation=replace(self.fluctuation, **changes))


@dataclass(frozen=True)
class HusimiGaussian:
    """Gaussian Husimi function over the complex fluctuation amplitude.

    ``orientation`` is the angle of the squeezed (minor) axis relative to the
    coherent amplitude of the fluctuating mode, whose phase in the complex
    plane is ``reference_phase``.
    """

    center: complex
    sigma_major: float
    sigma_minor: float
    orientation: float
    reference_phase: float = 0.0
    kind: str = "squeezed"

    def __post_init__(self):
        if not self.sigma_minor > 0:
            raise ValidationError("sigma_minor must be positive")
        if self.sigma_major < self.sigma_minor:
            raise ValidationError("sigma_major must be >= sigma_minor")
        if self.kind == "thermal" and self.sigma_major != self.sigma_minor:
            raise ValidationError("a thermal Husimi function is isotropic")

    @property
    def minor_axis_angle(self) -> float:
        return self.reference_phase + self.orientation

    @property
    def major_axis_angle(self) -> float:
        return self.minor_axis_angle + np.pi / 2

    def pdf(self, alpha):
        """Density with respect to d(Re a) d(Im a)."""
        z = (np.asarray(alpha) - self.center) * np.exp(-1j * self.major_axis_angle)
        x, y = z.real, z.imag
        norm = 2 * np.pi * np.sqrt(self.sigma_major * self.sigma_minor)
        return np.exp(-x**2 / (2 * self.sigma_major) - y**2 / (2 * self.sigma_minor)) / norm


@dataclass(frozen=True)
class FieldSample:
    alpha: complex
    e_par: np.ndarray
    e_perp: np.ndarray
    grid: TimeGrid
    omega: float
    envelope: EnvelopeSpec | None = None

    @property
    def times(self) -> np.ndarray:
        return self.grid.times


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def mean_bicircular_field(cfg: DriveConfig, t):
    """Envelope-modulated counter-rotating omega/2omega field at times ``t``."""
    if not cfg.time_grid.contains(t):
        raise DomainError("time lies outside the grid span")
    t = np.asarray(t, dtype=float)
    w, e0 = cfg.omega, cfg.amplitude_e0
    env = cfg.envelope(t, w)
    e_par = -e0 * (np.sin(w * t) + np.sin(2 * w * t)) * env
    e_perp = e0 * (np.cos(w * t) - np.cos(2 * w * t)) * env
    return e_par, e_perp


def coherent_phase(target_mode: str, axis: str) -> float:
    """Phase phi of the mean-field component written as E0 cos(k w t + phi)."""
    return {
        ("omega", "parallel"): np.pi / 2,
        ("omega", "perpendicular"): 0.0,
        ("2omega", "parallel"): np.pi / 2,
        ("2omega", "perpendicular"): np.pi,
    }[(target_mode, axis)]


def squeezing_parameter(intensity: float, vacuum_variance: float = VACUUM_FIELD_VARIANCE) -> float:
    """Squeezing r whose excess time-averaged variance equals ``intensity``."""
    if intensity < 0:
        raise ValidationError("intensity must be >= 0")
    return float(np.arcsinh(np.sqrt(intensity / vacuum_variance)))


def squeezed_husimi_widths(r: float, sigma0: float = 0.5) -> tuple[float, float]:
    """(major, minor) quadrature variances of the squeezed-vacuum Husimi function.

    Equal to ``sigma0 / (1 -+ tanh r)``; written with exponentials so large
    ``r`` does not cancel catastrophically.
    """
    if r < 0:
        raise DomainError("squeezing parameter must be >= 0")
    c = np.cosh(r)
    return float(sigma0 * c * np.exp(r)), float(sigma0 * c * np.exp(-r))


def husimi_of_state(spec: FluctuationSpec, e0: float = DEFAULT_E0) -> HusimiGaussian:
    """Husimi Gaussian, in field units, of the fluctuating mode described by ``spec``."""
    if spec.intensity < 0:
        raise ValidationError("negative fluctuation intensity")
    if spec.kind == "none" or spec.intensity == 0:
        raise ValidationError("no fluctuations: kind='none' or zero intensity has no Husimi ensemble")
    phase = coherent_phase(spec.target_mode, spec.axis) if e0 > 0 else 0.0
    s0 = spec.vacuum_variance
    if spec.kind == "thermal":
        sigma = s0 + spec.intensity
        return HusimiGaussian(0j, sigma, sigma, 0.0, phase, kind="thermal")
    r = squeezing_parameter(spec.intensity, s0)
    major, minor = squeezed_husimi_widths(r, s0)
    orientation = 0.0 if spec.quadrature == "amplitude" else np.pi / 2
    return HusimiGaussian(0j, major, minor, orientation, phase, kind="squeezed")


def fluctuation_field(cfg: DriveConfig, alpha: complex, t):
    """Linearly polarized perturbation |alpha| cos(k w t + arg alpha), envelope applied."""
    fl = cfg.fluctuation
    t = np.asarray(t, dtype=float)
    k = fl.harmonic * cfg.omega
    de = np.real(alpha * np.exp(1j * k * t)) * cfg.envelope(t, cfg.omega)
    return de[..., None] * fl.axis_vector


def sample_classical_field(cfg: DriveConfig, alpha: complex = 0j) -> FieldSample:
    grid = cfg.time_grid
    t = grid.times
    e_par, e_perp = mean_bicircular_field(cfg, t)
    if alpha != 0:
        de = fluctuation_field(cfg, alpha, t)
        e_par = e_par + de[:, 0]
        e_perp = e_perp + de[:, 1]
    return FieldSample(complex(alpha), e_par, e_perp, grid, cfg.omega, cfg.envelope)


def fluctuation_variance(cfg: DriveConfig, t) -> np.ndarray:
    """Instantaneous variance of the sampled perturbation over the Husimi ensemble."""
    t = np.asarray(t, dtype=float)
    if cfg.fluctuation.kind == "none" or cfg.fluctuation.intensity == 0:
        return np.zeros_like(t)
    h = husimi_of_state(cfg.fluctuation, cfg.amplitude_e0)
    phase = cfg.fluctuation.harmonic * cfg.omega * t
    var = (h.sigma_major * np.cos(phase + h.major_axis_angle) ** 2
           + h.sigma_minor * np.cos(phase + h.minor_axis_angle) ** 2)
    return var * cfg.envelope(t, cfg.omega) ** 2


def analytic_variance(r, t, tau, theta=0.0, omega=DEFAULT_OMEGA):
    """Field variance of the squeezed bicircular state, vacuum total = 4.

    The rotation angle ``theta`` drops out; it is accepted so callers can
    scan it.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("squeezing parameter must be >= 0")
    sh, ch = np.sinh(r), np.cosh(r)
    return 4.0 * (1.0 + sh * (sh - ch * np.cos(4 * omega * (np.asarray(t) + np.asarray(tau)))))


def central_flat_cycle(cfg: DriveConfig) -> tuple[float, float]:
    """Start and end of the fundamental cycle at the middle of the flat top."""
    if cfg.envelope.kind == "flat":
        lo, hi = cfg.time_grid.t0, cfg.time_grid.t1
    else:
        lo, hi = cfg.envelope.flat_top(cfg.omega)
    n_cycles = max(1, round((hi - lo) / cfg.period))
    start = lo + (n_cycles // 2) * cfg.period
    return start, start + cfg.period


def mean_field_symmetry_residual(cfg: DriveConfig, theta: float, tau: float) -> float:
    """max_t |R(theta) E(t) - E(t + tau)| over the central flat-top cycle."""
    c0, c1 = central_flat_cycle(cfg)
    t = np.linspace(c0, c1, cfg.points_per_cycle, endpoint=False)
    now = np.stack(mean_bicircular_field(cfg, t))
    later = np.stack(mean_bicircular_field(cfg, t + tau))
    diff = rotation(theta) @ now - later
    return float(np.max(np.hypot(diff[0], diff[1])))


@dataclass
class LissajousTable:
    t: np.ndarray
    e_par: np.ndarray
    e_perp: np.ndarray
    half_width: np.ndarray
    axis: np.ndarray

    @property
    def band_lo(self) -> np.ndarray:
        return np.stack([self.e_par, self.e_perp], axis=1) - self.half_width[:, None] * self.axis

    @property
    def band_hi(self) -> np.ndarray:
        return np.stack([self.e_par, self.e_perp], axis=1) + self.half_width[:, None] * self.axis

    def write_csv(self, path) -> None:
        lo, hi = self.band_lo, self.band_hi
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t_au", "E_par", "E_perp", "band_lo_par", "band_lo_perp",
                        "band_hi_par", "band_hi_perp"])
            for i in range(len(self.t)):
                w.writerow([repr(float(x)) for x in (self.t[i], self.e_par[i], self.e_perp[i],
                                                     lo[i, 0], lo[i, 1], hi[i, 0], hi[i, 1])])


def lissajous_band(cfg: DriveConfig, n_samples: int = 512) -> LissajousTable:
    """Mean trefoil over one flat-top cycle with the +-1 sigma fluctuation band.

    The vacuum width is excluded, so a coherent drive has zero band width.
    """
    if n_samples < 2:
        raise ValidationError("n_samples must be >= 2")
    c0, c1 = central_flat_cycle(cfg)
    t = np.linspace(c0, c1, n_samples)
    e_par, e_perp = mean_bicircular_field(cfg, t)
    half = np.sqrt(fluctuation_variance(cfg, t))
    return LissajousTable(t, e_par, e_perp, half, cfg.fluctuation.axis_vector)


def write_variance_csv(path, r: float, t, tau: float = 0.0, omega: float = DEFAULT_OMEGA,
                       vacuum_variance: float = VACUUM_FIELD_VARIANCE) -> None:
    """Tabulate the analytic variance and its excess in field units."""
    t = np.asarray(t, dtype=float)
    var = analytic_variance(r, t, tau, omega=omega)
    excess_field = vacuum_variance * (var - 4.0) / 4.0
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_au", "tau_au", "r", "variance_vacuum_units", "excess_field_variance_au"])
        for ti, v, ex in zip(t, var, excess_field):
            w.writerow([repr(float(ti)), repr(float(tau)), repr(float(r)), repr(float(v)), repr(float(ex))])
