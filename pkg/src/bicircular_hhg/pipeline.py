"""End-to-end runs: ensemble spectra, statistics, channel predictions, manifests."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, config_hash
from .ensemble import (QuadratureGrid, build_quadrature, classical_rules_hold, default_quadrature,
                       ensemble_spectrum)
from .errors import ValidationError
from .field import central_flat_cycle, husimi_of_state, lissajous_band, sample_classical_field, squeezing_parameter
from .selection_rules import channel_table
from .sfa import estimate_cutoff_order, sfa_dipole_trace
from .spectra import dense_spectrum

log = logging.getLogger(__name__)

PRESENCE_THRESHOLD = 1e-10


@dataclass
class RunManifest:
    config_hash: str
    tool_version: str
    started: str
    finished: str
    outputs: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"config_hash": self.config_hash, "tool_version": self.tool_version,
                "timestamps": {"started": self.started, "finished": self.finished},
                "outputs": self.outputs}


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _write_atomic(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _csv_bytes(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([x if isinstance(x, (int, str)) else repr(float(x)) for x in row])
    return buf.getvalue().encode()


def quadrature_for(cfg: RunConfig) -> QuadratureGrid:
    """Quadrature grid for the configured fluctuations; a single node when there are none."""
    fl = cfg.drive.fluctuation
    if fl.kind == "none" or fl.intensity == 0:
        return QuadratureGrid(np.array([0j]), np.array([1.0]), "gauss_hermite_1d")
    h = husimi_of_state(fl, cfg.drive.amplitude_e0)
    ens = cfg.ensemble
    if ens.scheme == "auto" and ens.nodes is None:
        return default_quadrature(h)
    scheme = ens.scheme
    if scheme == "auto":
        scheme = "gauss_hermite_2d" if h.kind == "thermal" else "gauss_hermite_1d"
    if scheme == "gauss_hermite_2d":
        n_major = ens.nodes or 15
        n = (n_major, ens.nodes_minor or n_major)
    else:
        n = ens.nodes or (21 if scheme == "gauss_hermite_1d" else 256)
    return build_quadrature(h, scheme, n, seed=ens.seed)


def cutoff_for(cfg: RunConfig) -> float:
    sample = sample_classical_field(cfg.drive)
    return estimate_cutoff_order(cfg.atom, sample, tau_max_cycles=cfg.tau_max_cycles,
                                 span=central_flat_cycle(cfg.drive))


def predict(cfg: RunConfig, cutoff: float | None = None) -> dict:
    fl = cfg.drive.fluctuation
    s = 0 if fl.kind == "none" or fl.intensity == 0 else 1
    cutoff = cutoff_for(cfg) if cutoff is None else cutoff
    return {
        "config_hash": config_hash(cfg),
        "s": s,
        "squeeze_target": fl.target_mode,
        "cutoff_order": cutoff,
        "predictions": channel_table(cfg.q_max, s, fl.target_mode, cutoff_order=cutoff),
    }


def compute_outputs(cfg: RunConfig, workers: int | None = None) -> dict[str, bytes]:
    """Run the pipeline and serialize every output in memory."""
    digest = config_hash(cfg)
    grid = quadrature_for(cfg)
    ens = ensemble_spectrum(cfg.atom, cfg.drive, grid, cfg.window, cfg.q_max, cfg.tau_max_cycles, workers)
    cutoff = cutoff_for(cfg)
    plateau = int(np.floor(cutoff))
    fl = cfg.drive.fluctuation

    stats = ens.to_json(digest)
    stats["cutoff_order"] = cutoff
    stats["classical_rules_hold"] = bool(classical_rules_hold(ens, q_max=plateau))
    stats["fluctuation"] = {"kind": fl.kind, "target_mode": fl.target_mode, "axis": fl.axis,
                            "quadrature": fl.quadrature, "intensity_au": fl.intensity}
    outputs = {
        "spectrum.csv": _csv_bytes(
            ["q", "I_R", "I_L", "re_chi_R", "im_chi_R", "re_chi_L", "im_chi_L"],
            [(int(q), ens.m2_R[i], ens.m2_L[i], ens.mean_chi_R[i].real, ens.mean_chi_R[i].imag,
              ens.mean_chi_L[i].real, ens.mean_chi_L[i].imag) for i, q in enumerate(ens.q)]),
        "statistics.json": _json_bytes(stats),
        "channels.json": _json_bytes(predict(cfg, cutoff)),
    }

    table = lissajous_band(cfg.drive, cfg.output.lissajous_samples)
    lo, hi = table.band_lo, table.band_hi
    outputs["lissajous.csv"] = _csv_bytes(
        ["t_au", "E_par", "E_perp", "band_lo_par", "band_lo_perp", "band_hi_par", "band_hi_perp"],
        [(table.t[i], table.e_par[i], table.e_perp[i], lo[i, 0], lo[i, 1], hi[i, 0], hi[i, 1])
         for i in range(len(table.t))])

    if fl.kind == "squeezed" and fl.intensity > 0:
        from .field import analytic_variance

        r = squeezing_parameter(fl.intensity, fl.vacuum_variance)
        c0, c1 = central_flat_cycle(cfg.drive)
        t = np.linspace(c0, c1, cfg.output.lissajous_samples)
        var = analytic_variance(r, t, 0.0, omega=cfg.drive.omega)
        outputs["variance.csv"] = _csv_bytes(
            ["t_au", "tau_au", "r", "variance_vacuum_units", "excess_field_variance_au"],
            [(t[i], 0.0, r, var[i], fl.vacuum_variance * (var[i] - 4) / 4) for i in range(len(t))])

    if cfg.output.dump_dipole or cfg.output.dense_spectrum:
        sample = sample_classical_field(cfg.drive)
        start, end = cfg.window.bounds(cfg.drive.omega, cfg.drive.envelope, sample.grid)
        trace = sfa_dipole_trace(cfg.atom, sample, cfg.tau_max_cycles, cfg.epsilon, span=(start, end))
        if cfg.output.dump_dipole:
            outputs["dipole.csv"] = _csv_bytes(["t_au", "d_par", "d_perp"],
                                               zip(trace.times, trace.d_par, trace.d_perp))
        if cfg.output.dense_spectrum:
            qd, cp, cq = dense_spectrum(trace, (start, end))
            outputs["dense_spectrum.csv"] = _csv_bytes(
                ["q", "I_par", "I_perp"], zip(qd, np.abs(cp) ** 2, np.abs(cq) ** 2))
    return outputs


def write_outputs(out_dir: Path, outputs: dict[str, bytes], digest: str, started: str) -> RunManifest:
    out_dir.mkdir(parents=True, exist_ok=True)
    checksums = {}
    for name in sorted(outputs):
        _write_atomic(out_dir / name, outputs[name])
        checksums[name] = hashlib.sha256(outputs[name]).hexdigest()
    manifest = RunManifest(digest, __version__, started, _now(), checksums)
    _write_atomic(out_dir / "manifest.json", _json_bytes(manifest.to_json()))
    return manifest


def run_pipeline(cfg: RunConfig, out_dir=None, workers: int | None = None) -> RunManifest:
    """Compute all outputs first, then write them; nothing is written on failure."""
    started = _now()
    out = Path(cfg.output.directory if out_dir is None else out_dir)
    outputs = compute_outputs(cfg, workers)
    return write_outputs(out, outputs, config_hash(cfg), started)


def sweep_label(intensity: float) -> str:
    return f"I_{intensity:.3e}".replace("+", "")


def run_sweep(cfg: RunConfig, out_dir=None, workers: int | None = None) -> dict:
    """One output set per sweep intensity plus ``helicity_vs_intensity.csv``."""
    if not cfg.sweep:
        raise ValidationError("configuration has no sweep.intensities_au")
    started = _now()
    out = Path(cfg.output.directory if out_dir is None else out_dir)
    manifests = {}
    rows = []
    for intensity in cfg.sweep:
        sub = cfg.with_intensity(intensity)
        label = sweep_label(intensity)
        outputs = compute_outputs(sub, workers)
        manifests[label] = write_outputs(out / label, outputs, config_hash(sub), _now())
        stats = json.loads(outputs["statistics.json"])
        for row in stats["per_q"]:
            h = row["helicity"]
            rows.append((repr(float(intensity)), row["q"], row["m2_R"], row["m2_L"],
                         "nan" if h is None else repr(float(h))))
    table = _csv_bytes(["intensity_au", "q", "m2_R", "m2_L", "helicity"], rows)
    _write_atomic(out / "helicity_vs_intensity.csv", table)
    summary = {
        "config_hash": config_hash(cfg),
        "tool_version": __version__,
        "timestamps": {"started": started, "finished": _now()},
        "points": {k: m.to_json() for k, m in manifests.items()},
        "outputs": {"helicity_vs_intensity.csv": hashlib.sha256(table).hexdigest()},
    }
    _write_atomic(out / "manifest.json", _json_bytes(summary))
    return summary


def compare_prediction(run_dir, presence_threshold: float = PRESENCE_THRESHOLD) -> dict:
    """Check simulated presence and helicity against the channel predictions.

    A harmonic counts as present when its total intensity exceeds
    ``presence_threshold`` times the mean of its neighbours.
    """
    run_dir = Path(run_dir)
    try:
        stats = json.loads((run_dir / "statistics.json").read_text())
        chans = json.loads((run_dir / "channels.json").read_text())
    except FileNotFoundError as exc:
        raise ValidationError(f"missing run output: {exc.filename}") from None
    if stats["config_hash"] != chans["config_hash"]:
        raise ValidationError("statistics.json and channels.json come from different configurations "
                              f"({stats['config_hash'][:12]} vs {chans['config_hash'][:12]})")
    per_q = {row["q"]: row for row in stats["per_q"]}
    total = {q: row["m2_R"] + row["m2_L"] for q, row in per_q.items()}
    rows = []
    for pred in chans["predictions"]:
        q = pred["q"]
        if q not in per_q or q - 1 not in total or q + 1 not in total:
            continue
        neighbours = 0.5 * (total[q - 1] + total[q + 1])
        present = total[q] > presence_threshold * neighbours
        presence_ok = present == pred["allowed"]
        if not pred["ranked"]:
            hel_verdict = "unranked"
        elif not present or pred["predicted_sigma"] is None or per_q[q]["helicity"] is None:
            hel_verdict = "n/a"
        else:
            sign = 1 if per_q[q]["helicity"] > 0 else -1
            hel_verdict = "match" if sign == pred["predicted_sigma"] else "mismatch"
        rows.append({
            "q": q,
            "present": present,
            "predicted_present": pred["allowed"],
            "helicity": per_q[q]["helicity"],
            "predicted_sigma": pred["predicted_sigma"],
            "helicity_verdict": hel_verdict,
            "pass": bool(presence_ok and hel_verdict != "mismatch"),
        })
    return {"config_hash": stats["config_hash"], "rows": rows,
            "passed": all(r["pass"] for r in rows)}


def format_report(report: dict) -> str:
    lines = [f"{'q':>3}  {'present':>7}  {'predicted':>9}  {'helicity':>9}  {'sigma':>5}  {'verdict':>9}  result"]
    for r in report["rows"]:
        h = "-" if r["helicity"] is None else f"{r['helicity']:+.3f}"
        s = "-" if r["predicted_sigma"] is None else f"{r['predicted_sigma']:+d}"
        lines.append(f"{r['q']:>3}  {str(r['present']):>7}  {str(r['predicted_present']):>9}  {h:>9}  "
                     f"{s:>5}  {r['helicity_verdict']:>9}  {'PASS' if r['pass'] else 'FAIL'}")
    lines.append("overall: " + ("PASS" if report["passed"] else "FAIL"))
    return "\n".join(lines)
