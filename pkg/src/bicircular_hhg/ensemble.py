"""Husimi-ensemble averages of single-sample harmonic spectra.

Every quadrature node is one classical field sample and one SFA run.  Runs
may execute in a process pool, but moments are always reduced in node order
so repeated runs give bit-identical results.
"""

from __future__ import annotations

import functools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EnsembleError, UndefinedStatisticError, ValidationError
from .field import DriveConfig, HusimiGaussian, sample_classical_field
from .sfa import DEFAULT_TAU_MAX_CYCLES, AtomSpec
from .spectra import DEFAULT_Q_MAX, WindowSpec, single_sample_spectrum, to_circular_basis

log = logging.getLogger(__name__)

WORKERS_ENV = "BICIRCULAR_HHG_WORKERS"
SCHEMES = ("gauss_hermite_1d", "gauss_hermite_2d", "monte_carlo")


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    scheme: str

    def __post_init__(self):
        nodes = np.asarray(self.nodes, complex)
        weights = np.asarray(self.weights, float)
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown quadrature scheme {self.scheme!r}")
        if nodes.shape != weights.shape or nodes.ndim != 1 or len(nodes) == 0:
            raise ValidationError("nodes and weights must be matching non-empty 1D arrays")
        if not np.all(np.isfinite(nodes)):
            raise ValidationError("quadrature nodes must be finite")
        if np.any(weights <= 0):
            raise ValidationError("quadrature weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {weights.sum()!r}, expected 1")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return len(self.nodes)

    def integrate(self, f) -> complex:
        """Quadrature estimate of E_Q[f(alpha)]."""
        return np.sum(self.weights * f(self.nodes))


def _gauss_hermite(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for a standard normal variable."""
    x, w = np.polynomial.hermite.hermgauss(n)
    return np.sqrt(2.0) * x, w / np.sqrt(np.pi)


def build_quadrature(h: HusimiGaussian, scheme: str = "gauss_hermite_1d", n=21,
                     seed: int | None = None) -> QuadratureGrid:
    """Discretize the Husimi Gaussian ``h``.

    ``n`` is the node count for the 1D and Monte-Carlo schemes.  For the 2D
    scheme it is the count per axis, or a ``(n_major, n_minor)`` pair.
    ``n=1`` always yields the single centre node.
    """
    if scheme not in SCHEMES:
        raise ValidationError(f"unknown quadrature scheme {scheme!r}; expected one of {SCHEMES}")
    if n == 1 or n == (1, 1):
        return QuadratureGrid(np.array([h.center]), np.array([1.0]), scheme)
    u_major = np.exp(1j * h.major_axis_angle)
    u_minor = np.exp(1j * h.minor_axis_angle)

    if scheme == "gauss_hermite_1d":
        if h.kind == "thermal" or h.sigma_major == h.sigma_minor:
            raise ValidationError("the 1D marginal reduction needs a strongly squeezed Gaussian; "
                                  "use gauss_hermite_2d for isotropic (thermal) distributions")
        if n < 3:
            raise ValidationError("1D Gauss-Hermite needs n >= 3 nodes")
        x, w = _gauss_hermite(int(n))
        nodes = h.center + np.sqrt(h.sigma_major) * x * u_major
    elif scheme == "gauss_hermite_2d":
        n_major, n_minor = (n, n) if np.isscalar(n) else n
        if n_major < 3 or n_minor < 3:
            raise ValidationError("2D Gauss-Hermite needs at least 3 nodes per axis (9 total)")
        xa, wa = _gauss_hermite(int(n_major))
        xb, wb = _gauss_hermite(int(n_minor))
        nodes = (h.center + np.sqrt(h.sigma_major) * xa[:, None] * u_major
                 + np.sqrt(h.sigma_minor) * xb[None, :] * u_minor).ravel()
        w = (wa[:, None] * wb[None, :]).ravel()
    else:
        if n < 1:
            raise ValidationError("Monte-Carlo needs n >= 1 draws")
        rng = np.random.default_rng(seed)
        z = rng.standard_normal((int(n), 2))
        nodes = (h.center + np.sqrt(h.sigma_major) * z[:, 0] * u_major
                 + np.sqrt(h.sigma_minor) * z[:, 1] * u_minor)
        w = np.full(int(n), 1.0 / n)
    w = np.asarray(w, float)
    return QuadratureGrid(nodes, w / w.sum(), scheme)


def default_quadrature(h: HusimiGaussian) -> QuadratureGrid:
    if h.kind == "thermal":
        return build_quadrature(h, "gauss_hermite_2d", 15)
    return build_quadrature(h, "gauss_hermite_1d", 21)


@dataclass
class HarmonicSpectrumEnsemble:
    q: np.ndarray
    m2_R: np.ndarray
    m2_L: np.ndarray
    m4_R: np.ndarray
    m4_L: np.ndarray
    mean_chi_R: np.ndarray
    mean_chi_L: np.ndarray
    n_samples: int
    scheme: str
    nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def index(self, q: int) -> int:
        hits = np.nonzero(self.q == q)[0]
        if len(hits) == 0:
            raise ValidationError(f"harmonic order {q} not in the ensemble (1..{int(self.q[-1])})")
        return int(hits[0])

    def m2(self, q: int, pol: str) -> float:
        return float(self._moment(2, pol)[self.index(q)])

    def m4(self, q: int, pol: str) -> float:
        return float(self._moment(4, pol)[self.index(q)])

    def _moment(self, order: int, pol: str) -> np.ndarray:
        if pol not in ("R", "L"):
            raise ValidationError(f"polarization must be 'R' or 'L', got {pol!r}")
        return getattr(self, f"m{order}_{pol}")

    def to_json(self, config_hash: str = "") -> dict:
        per_q = []
        for i, q in enumerate(self.q):
            row = {"q": int(q), "m2_R": float(self.m2_R[i]), "m2_L": float(self.m2_L[i]),
                   "m4_R": float(self.m4_R[i]), "m4_L": float(self.m4_L[i])}
            for pol in ("R", "L"):
                try:
                    row[f"g2_{pol}"] = g2_zero(self, int(q), pol)
                except UndefinedStatisticError:
                    row[f"g2_{pol}"] = None
            try:
                row["helicity"] = helicity(self, int(q))
            except UndefinedStatisticError:
                row["helicity"] = None
            per_q.append(row)
        return {
            "config_hash": config_hash,
            "scheme": self.scheme,
            "nodes": [[float(a.real), float(a.imag), float(w)] for a, w in zip(self.nodes, self.weights)],
            "per_q": per_q,
        }


def g2_zero(ens: HarmonicSpectrumEnsemble, q: int, pol: str) -> float:
    """<|chi|^4> / <|chi|^2>^2 for harmonic ``q`` in polarization ``pol``."""
    m2 = ens.m2(q, pol)
    if m2 <= 0:
        raise UndefinedStatisticError(f"harmonic {q}{pol} is absent (m2 = 0); g2 undefined")
    return ens.m4(q, pol) / m2**2


def helicity(ens: HarmonicSpectrumEnsemble, q: int) -> float:
    """(m2_R - m2_L) / (m2_R + m2_L)."""
    r, l = ens.m2(q, "R"), ens.m2(q, "L")
    if r + l <= 0:
        raise UndefinedStatisticError(f"harmonic {q} is absent in both polarizations")
    return (r - l) / (r + l)


def classical_rules_hold(ens: HarmonicSpectrumEnsemble, q_max: int | None = None,
                         suppression: float = 1e4, dominance: float = 1e2) -> bool:
    """Check the q = 3n +- 1 comb and its helicities up to ``q_max``.

    Every 3n bin must sit ``suppression`` below the mean of its neighbours and
    every allowed bin must be ``dominance`` times stronger in its native
    polarization (R for 3n-1, L for 3n+1).
    """
    total = ens.m2_R + ens.m2_L
    top = int(ens.q[-1]) - 1 if q_max is None else min(q_max, int(ens.q[-1]) - 1)
    for q in range(2, top + 1):
        i = ens.index(q)
        if q % 3 == 0:
            neighbours = 0.5 * (total[i - 1] + total[i + 1])
            if not total[i] * suppression <= neighbours:
                return False
        else:
            native, other = (ens.m2_R[i], ens.m2_L[i]) if q % 3 == 2 else (ens.m2_L[i], ens.m2_R[i])
            if not other * dominance <= native:
                return False
    return True


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValidationError(f"{WORKERS_ENV}={raw!r} is not an integer") from None


@functools.lru_cache(maxsize=2048)
def _node_amplitudes(atom: AtomSpec, cfg: DriveConfig, alpha: complex, window: WindowSpec,
                     q_max: int, tau_max_cycles: float):
    sample = sample_classical_field(cfg, alpha)
    amps = single_sample_spectrum(atom, sample, window, q_max, tau_max_cycles)
    chi_par = np.array([a.chi_par for a in amps])
    chi_perp = np.array([a.chi_perp for a in amps])
    chi_r, chi_l = to_circular_basis(chi_par, chi_perp)
    chi_r.setflags(write=False)
    chi_l.setflags(write=False)
    return chi_r, chi_l


def _cache_key_cfg(cfg: DriveConfig) -> DriveConfig:
    """The sampled field depends on the fluctuation target and axis only."""
    from dataclasses import replace

    fl = cfg.fluctuation
    return replace(cfg, fluctuation=replace(fl, kind="none", intensity=0.0, quadrature="phase",
                                            vacuum_variance=1.0))


def _run_node(args):
    index, atom, cfg, alpha, window, q_max, tau_max_cycles = args
    try:
        return _node_amplitudes(atom, cfg, alpha, window, q_max, tau_max_cycles)
    except Exception as exc:
        raise EnsembleError(f"SFA run failed at node {index} (alpha={alpha!r}): {exc}",
                            node_index=index, alpha=alpha) from exc


def node_amplitudes(atom: AtomSpec, cfg: DriveConfig, grid: QuadratureGrid,
                    window: WindowSpec = WindowSpec(), q_max: int = DEFAULT_Q_MAX,
                    tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES, workers: int | None = None):
    """chi_R and chi_L for every node, shape (n_nodes, q_max), in node order."""
    key_cfg = _cache_key_cfg(cfg)
    jobs = [(i, atom, key_cfg, complex(a), window, int(q_max), float(tau_max_cycles))
            for i, a in enumerate(grid.nodes)]
    n_workers = min(worker_count(workers), len(jobs))
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_node, jobs))
    else:
        results = [_run_node(job) for job in jobs]
    chi_r = np.stack([r[0] for r in results])
    chi_l = np.stack([r[1] for r in results])
    return chi_r, chi_l


def reduce_moments(chi_r: np.ndarray, chi_l: np.ndarray, grid: QuadratureGrid,
                   q_max: int) -> HarmonicSpectrumEnsemble:
    w = grid.weights
    i_r = np.abs(chi_r) ** 2
    i_l = np.abs(chi_l) ** 2
    return HarmonicSpectrumEnsemble(
        q=np.arange(1, q_max + 1),
        m2_R=w @ i_r, m2_L=w @ i_l,
        m4_R=w @ i_r**2, m4_L=w @ i_l**2,
        mean_chi_R=w @ chi_r, mean_chi_L=w @ chi_l,
        n_samples=len(grid), scheme=grid.scheme,
        nodes=grid.nodes.copy(), weights=grid.weights.copy(),
    )


def ensemble_spectrum(atom: AtomSpec, cfg: DriveConfig, grid: QuadratureGrid,
                      window: WindowSpec = WindowSpec(), q_max: int = DEFAULT_Q_MAX,
                      tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES,
                      workers: int | None = None) -> HarmonicSpectrumEnsemble:
    """Second and fourth moments of |chi_q| over the quadrature nodes."""
    log.info("ensemble: %d nodes (%s)", len(grid), grid.scheme)
    chi_r, chi_l = node_amplitudes(atom, cfg, grid, window, q_max, tau_max_cycles, workers)
    return reduce_moments(chi_r, chi_l, grid, q_max)


def clear_cache() -> None:
    _node_amplitudes.cache_clear()


__all__ = [
    "QuadratureGrid", "HarmonicSpectrumEnsemble", "build_quadrature", "default_quadrature",
    "ensemble_spectrum", "g2_zero", "helicity", "classical_rules_hold", "node_amplitudes",
    "reduce_moments", "worker_count", "clear_cache",
]
