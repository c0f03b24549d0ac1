"""Result serialization: CSV tables, JSON summaries, run manifests, datasets.

All floats in CSV cells use 17 significant digits and files end lines with
LF, so identical results serialize to identical bytes; JSON floats use
Python's shortest exact representation.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import io
import json
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .basis import TRIG, Basis, FunctionVec, analyze_grid
from .experiments import RateStudyResult

__all__ = [
    "RunManifest",
    "fmt_float",
    "write_study_outputs",
    "write_json_report",
    "write_manifest",
    "write_dataset_csv",
    "read_dataset_csv",
    "parse_site",
    "read_results_csv",
]

RESULT_COLUMNS = ["n", "J", "K", "median_sq_err", "mean_sq_err", "q10", "q90",
                  "mean_n_local", "smallball_hat", "arm"]
_INT_COLUMNS = {"n", "J", "K"}


@dataclass
class RunManifest:
    version: str
    config_digest: str
    seed: int
    timestamp: str
    outputs: list


def fmt_float(x: float) -> str:
    """17 significant digits: enough for an exact float64 round-trip."""
    return f"{float(x):.17g}"


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_manifest(out_dir: str, config_digest: str, seed: int,
                   outputs: list[str]) -> RunManifest:
    """Record what a run produced; written as manifest.json in out_dir."""
    manifest = RunManifest(
        version=__version__, config_digest=config_digest, seed=int(seed),
        timestamp=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        outputs=sorted(outputs),
    )
    _write_text(os.path.join(out_dir, "manifest.json"),
                _json_text(dataclasses.asdict(manifest)))
    return manifest


def write_json_report(obj: dict, out_dir: str, name: str) -> str:
    path = os.path.join(out_dir, name)
    _write_text(path, _json_text(obj))
    return path


def _results_csv_text(result: RateStudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for row in result.per_n:
        w.writerow([str(int(row[c])) if c in _INT_COLUMNS
                    else (row[c] if c == "arm" else fmt_float(row[c]))
                    for c in RESULT_COLUMNS])
    return buf.getvalue()


def _plotdata_csv_text(result: RateStudyResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arm", "log_n", "log_median_sq_err"])
    for row in result.per_n:
        if row["median_sq_err"] > 0:
            w.writerow([row["arm"], fmt_float(np.log(row["n"])),
                        fmt_float(np.log(row["median_sq_err"]))])
    return buf.getvalue()


def _summary_dict(result: RateStudyResult) -> dict:
    return {
        "kappa_hat": result.kappa_hat,
        "baseline_kappa_hat": result.baseline_kappa_hat,
        "conditions": dataclasses.asdict(result.conditions),
        "advisories": result.advisories,
        "seed": result.seed,
        "config_digest": result.config_digest,
    }


def write_study_outputs(result: RateStudyResult, out_dir: str,
                        render_figure: bool = True) -> RunManifest:
    """Write results.csv, summary.json, plotdata.csv, the rate figure and the manifest."""
    if not result.per_n:
        raise ValueError("refusing to write an empty study result")
    os.makedirs(out_dir, exist_ok=True)
    outputs = ["results.csv", "summary.json", "plotdata.csv"]
    _write_text(os.path.join(out_dir, "results.csv"), _results_csv_text(result))
    _write_text(os.path.join(out_dir, "summary.json"), _json_text(_summary_dict(result)))
    _write_text(os.path.join(out_dir, "plotdata.csv"), _plotdata_csv_text(result))
    if render_figure:
        from .figures import render_rate_study
        render_rate_study(result, os.path.join(out_dir, "rate_study.png"))
        outputs.append("rate_study.png")
    return write_manifest(out_dir, result.config_digest, result.seed, outputs)


def read_results_csv(path: str) -> list[dict]:
    """Parse results.csv back into typed row dicts (round-trip checks)."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            parsed = {}
            for k, v in row.items():
                if k in _INT_COLUMNS:
                    parsed[k] = int(v)
                elif k == "arm":
                    parsed[k] = v
                else:
                    parsed[k] = float(v)
            out.append(parsed)
    return out


def write_dataset_csv(path: str, y: np.ndarray, coeffs: np.ndarray):
    """Dataset rows as y,coeff_1,...,coeff_L."""
    y = np.asarray(y, dtype=float)
    coeffs = np.asarray(coeffs, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y"] + [f"coeff_{l}" for l in range(1, coeffs.shape[1] + 1)])
    for yi, row in zip(y, coeffs):
        w.writerow([fmt_float(yi)] + [fmt_float(v) for v in row])
    _write_text(path, buf.getvalue())


def read_dataset_csv(path: str, basis: Basis = TRIG,
                     L: int | None = None) -> tuple[list[FunctionVec], np.ndarray]:
    """Read a dataset CSV with a y column and either coeff_* or grid_* columns.

    Grid columns are uniform samples on [0,1] and are projected onto the
    basis; L defaults to a quarter of the grid size.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise ValueError(f"dataset {path} is empty")
    header = [h.strip() for h in rows[0]]
    if "y" not in header:
        raise ValueError(f"dataset {path} needs a 'y' column")
    y_idx = header.index("y")
    curve_idx = [i for i in range(len(header)) if i != y_idx]
    kinds = {header[i].split("_")[0] for i in curve_idx}
    if kinds == {"coeff"}:
        mode = "coeff"
    elif kinds == {"grid"}:
        mode = "grid"
    else:
        raise ValueError(f"dataset {path}: curve columns must be all coeff_* or all grid_*")

    ys = []
    xs = []
    for r, row in enumerate(rows[1:], start=2):
        vals = [float(row[i]) for i in curve_idx]
        ys.append(float(row[y_idx]))
        if mode == "coeff":
            xs.append(FunctionVec(np.array(vals)))
        else:
            n_grid = len(vals)
            xs.append(analyze_grid(np.array(vals), basis, L or max(1, n_grid // 4)))
    return xs, np.array(ys)


def parse_site(spec: str, basis: Basis = TRIG, L: int | None = None) -> FunctionVec:
    """Site given inline as comma-separated coefficients, or as a one-curve CSV.

    A CSV file holds a header of coeff_* or grid_* columns and a single row.
    """
    if os.path.exists(spec):
        with open(spec, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ValueError(f"site file {spec} needs a header plus one row")
        header = [h.strip() for h in rows[0]]
        vals = np.array([float(v) for v in rows[1]])
        kinds = {h.split("_")[0] for h in header}
        if kinds == {"coeff"}:
            return FunctionVec(vals)
        if kinds == {"grid"}:
            return analyze_grid(vals, basis, L or max(1, vals.size // 4))
        raise ValueError(f"site file {spec}: columns must be all coeff_* or all grid_*")
    try:
        vals = np.array([float(v) for v in spec.split(",")])
    except ValueError:
        raise ValueError(f"site {spec!r} is neither a file nor a comma-separated list")
    return FunctionVec(vals)
