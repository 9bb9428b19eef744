"""Run configuration: INI-style files with explicit atomic-unit key suffixes.

Example::

    [atom]
    ip_au = 0.5

    [drive]
    omega_au = 0.057
    e0_au = 0.037

    [fluctuation]
    kind = squeezed
    target_mode = 2omega
    intensity_au = 1e-8

Unknown sections or keys are rejected with the nearest valid spelling.
"""

from __future__ import annotations

import configparser
import difflib
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .errors import ValidationError
from .field import DEFAULT_E0, DEFAULT_OMEGA, VACUUM_FIELD_VARIANCE, DriveConfig, FluctuationSpec
from .grid import EnvelopeSpec
from .sfa import DEFAULT_EPSILON, DEFAULT_TAU_MAX_CYCLES, AtomSpec
from .spectra import DEFAULT_Q_MAX, WindowSpec

SCHEME_CHOICES = ("auto", "gauss_hermite_1d", "gauss_hermite_2d", "monte_carlo")

# section -> key -> (type, default)
SCHEMA = {
    "atom": {"ip_au": (float, 0.5), "dme_model": (str, "hydrogenic_1s")},
    "drive": {
        "omega_au": (float, DEFAULT_OMEGA),
        "e0_au": (float, DEFAULT_E0),
        "points_per_cycle": (int, 768),
        "envelope": (str, "trapezoid"),
        "ramp_cycles": (int, 1),
        "flat_cycles": (int, 5),
    },
    "fluctuation": {
        "kind": (str, "none"),
        "target_mode": (str, "2omega"),
        "axis": (str, "parallel"),
        "quadrature": (str, "phase"),
        "intensity_au": (float, 0.0),
        "vacuum_variance_au": (float, VACUUM_FIELD_VARIANCE),
    },
    "sfa": {"tau_max_cycles": (float, DEFAULT_TAU_MAX_CYCLES), "epsilon_au": (float, DEFAULT_EPSILON)},
    "spectrum": {"window_cycles": (int, 3), "window_start_cycle": (int, None), "q_max": (int, DEFAULT_Q_MAX)},
    "ensemble": {"scheme": (str, "auto"), "nodes": (int, None), "nodes_minor": (int, None), "seed": (int, 0)},
    "sweep": {"intensities_au": (list, ())},
    "output": {
        "directory": (str, "results"),
        "dump_dipole": (bool, False),
        "dense_spectrum": (bool, False),
        "lissajous_samples": (int, 512),
    },
}


@dataclass(frozen=True)
class EnsembleSpec:
    scheme: str = "auto"
    nodes: int | None = None
    nodes_minor: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEME_CHOICES:
            raise ValidationError(f"ensemble.scheme={self.scheme!r}; expected one of {SCHEME_CHOICES}")
        if self.nodes is not None and self.nodes < 1:
            raise ValidationError("ensemble.nodes must be >= 1")


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "results"
    dump_dipole: bool = False
    dense_spectrum: bool = False
    lissajous_samples: int = 512


@dataclass(frozen=True)
class RunConfig:
    atom: AtomSpec = field(default_factory=AtomSpec)
    drive: DriveConfig = field(default_factory=DriveConfig)
    tau_max_cycles: float = DEFAULT_TAU_MAX_CYCLES
    epsilon: float = DEFAULT_EPSILON
    window: WindowSpec = field(default_factory=WindowSpec)
    q_max: int = DEFAULT_Q_MAX
    ensemble: EnsembleSpec = field(default_factory=EnsembleSpec)
    sweep: tuple = ()
    output: OutputSpec = field(default_factory=OutputSpec)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.sweep, self.sweep[1:])):
            raise ValidationError("sweep.intensities_au must be strictly increasing")
        if any(x < 0 for x in self.sweep):
            raise ValidationError("sweep.intensities_au must be >= 0")
        if self.sweep and self.drive.fluctuation.kind == "none":
            raise ValidationError("a sweep needs fluctuation.kind = squeezed or thermal")
        if self.q_max < 2:
            raise ValidationError("spectrum.q_max must be >= 2")

    def with_intensity(self, intensity: float) -> "RunConfig":
        fl = self.drive.fluctuation
        kind = fl.kind if intensity > 0 else "none"
        new_fl = replace(fl, kind=kind, intensity=float(intensity))
        return replace(self, drive=replace(self.drive, fluctuation=new_fl), sweep=())

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, ensemble=replace(self.ensemble, seed=int(seed)))

    def with_output(self, directory) -> "RunConfig":
        return replace(self, output=replace(self.output, directory=str(directory)))

    def canonical(self) -> dict:
        """Physics-relevant content; the output location is excluded."""
        d = asdict(self)
        d["output"].pop("directory")
        d["sweep"] = list(self.sweep)
        d["drive"]["helicity_map"] = [list(p) for p in self.drive.helicity_map]
        return d


def config_hash(cfg: RunConfig) -> str:
    text = json.dumps(cfg.canonical(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _locate(lines: list[str], section: str, key: str) -> tuple[int, int]:
    """1-based (line, column) of the value of ``key`` in ``section``."""
    current = None
    for i, raw in enumerate(lines, 1):
        s = raw.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip().lower()
            continue
        if current == section and "=" in raw:
            k, _, _ = raw.partition("=")
            if k.strip().lower() == key:
                col = len(k) + 2
                while col <= len(raw) and raw[col - 1] == " ":
                    col += 1
                return i, col
    return 0, 0


def _convert(kind, text: str):
    text = text.strip()
    if kind is bool:
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if kind is list:
        if not text:
            return ()
        return tuple(float(x) for x in text.replace(",", " ").split())
    return kind(text)


def _suggest(name: str, options) -> str:
    close = difflib.get_close_matches(name, list(options), n=1, cutoff=0.0)
    return f"; did you mean {close[0]!r}?" if close else ""


def parse_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:1: parse error: key outside any [section]") from None
    except configparser.DuplicateOptionError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:1: parse error: duplicate key {exc.option!r}") from None
    except configparser.DuplicateSectionError as exc:
        raise ValidationError(f"{source}:{exc.lineno}:1: parse error: duplicate section {exc.section!r}") from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ValidationError(f"{source}:{lineno}:1: parse error: cannot read {line.strip()!r}") from None

    lines = text.splitlines()
    values: dict[str, dict] = {s: {k: d for k, (_, d) in keys.items()} for s, keys in SCHEMA.items()}
    for section in parser.sections():
        sec = section.lower()
        if sec not in SCHEMA:
            raise ValidationError(f"{source}: unknown section [{section}]{_suggest(sec, SCHEMA)}")
        for key, raw in parser.items(section):
            if key not in SCHEMA[sec]:
                line, _ = _locate(lines, sec, key)
                raise ValidationError(
                    f"{source}:{line}: unknown key {sec}.{key}{_suggest(key, SCHEMA[sec])}")
            kind, _ = SCHEMA[sec][key]
            try:
                values[sec][key] = _convert(kind, raw)
            except ValueError as exc:
                line, col = _locate(lines, sec, key)
                raise ValidationError(f"{source}:{line}:{col}: parse error in {sec}.{key}: {exc}") from None

    try:
        return _build(values)
    except ValidationError as exc:
        raise ValidationError(f"{source}: {exc}") from None


def _build(v: dict) -> RunConfig:
    a, d, f, s, sp, e, o = (v[k] for k in ("atom", "drive", "fluctuation", "sfa", "spectrum",
                                           "ensemble", "output"))
    if not s["tau_max_cycles"] > 0:
        raise ValidationError("sfa.tau_max_cycles must be positive")
    if not s["epsilon_au"] > 0:
        raise ValidationError("sfa.epsilon_au must be positive")
    if not d["e0_au"] >= 0:
        raise ValidationError(f"drive.e0_au must be >= 0, got {d['e0_au']}")
    if not d["omega_au"] > 0:
        raise ValidationError(f"drive.omega_au must be positive, got {d['omega_au']}")
    drive = DriveConfig(
        omega=d["omega_au"],
        amplitude_e0=d["e0_au"],
        fluctuation=FluctuationSpec(kind=f["kind"], target_mode=f["target_mode"], axis=f["axis"],
                                    quadrature=f["quadrature"], intensity=f["intensity_au"],
                                    vacuum_variance=f["vacuum_variance_au"]),
        envelope=EnvelopeSpec(kind=d["envelope"], ramp_cycles=d["ramp_cycles"], flat_cycles=d["flat_cycles"]),
        points_per_cycle=d["points_per_cycle"],
    )
    return RunConfig(
        atom=AtomSpec(ip=a["ip_au"], dme_model=a["dme_model"]),
        drive=drive,
        tau_max_cycles=s["tau_max_cycles"],
        epsilon=s["epsilon_au"],
        window=WindowSpec(n_cycles=sp["window_cycles"], start_cycle=sp["window_start_cycle"]),
        q_max=sp["q_max"],
        ensemble=EnsembleSpec(scheme=e["scheme"], nodes=e["nodes"], nodes_minor=e["nodes_minor"], seed=e["seed"]),
        sweep=tuple(v["sweep"]["intensities_au"]),
        output=OutputSpec(**o),
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"configuration file {path} does not exist")
    return parse_config(path.read_text(), source=str(path))


def dump_config(cfg: RunConfig) -> str:
    """INI text that parses back to ``cfg``."""
    dr, fl = cfg.drive, cfg.drive.fluctuation
    sections = {
        "atom": {"ip_au": cfg.atom.ip, "dme_model": cfg.atom.dme_model},
        "drive": {"omega_au": dr.omega, "e0_au": dr.amplitude_e0, "points_per_cycle": dr.points_per_cycle,
                  "envelope": dr.envelope.kind, "ramp_cycles": dr.envelope.ramp_cycles,
                  "flat_cycles": dr.envelope.flat_cycles},
        "fluctuation": {"kind": fl.kind, "target_mode": fl.target_mode, "axis": fl.axis,
                        "quadrature": fl.quadrature, "intensity_au": fl.intensity,
                        "vacuum_variance_au": fl.vacuum_variance},
        "sfa": {"tau_max_cycles": cfg.tau_max_cycles, "epsilon_au": cfg.epsilon},
        "spectrum": {"window_cycles": cfg.window.n_cycles, "window_start_cycle": cfg.window.start_cycle,
                     "q_max": cfg.q_max},
        "ensemble": {"scheme": cfg.ensemble.scheme, "nodes": cfg.ensemble.nodes,
                     "nodes_minor": cfg.ensemble.nodes_minor, "seed": cfg.ensemble.seed},
        "sweep": {"intensities_au": ", ".join(repr(x) for x in cfg.sweep)},
        "output": asdict(cfg.output),
    }
    out = []
    for name, items in sections.items():
        out.append(f"[{name}]")
        for k, val in items.items():
            if val is None:
                continue
            out.append(f"{k} = {str(val).lower() if isinstance(val, bool) else val}")
        out.append("")
    return "\n".join(out)
