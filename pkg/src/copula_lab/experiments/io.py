"""CSV and JSON emission for study results.

Result CSVs hold only seeded quantities, so identical configurations give
byte-identical files.  Wall time lives in the manifest alone.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .studies import StudyResult

__all__ = ["REFERENCE", "write_result", "summary_records", "format_float"]

# Published reference values used for the |estimate - reference| / SE summary.
REFERENCE = {
    "tau_retention": {
        ("n", 10): -0.6806, ("n", 100): -0.5049, ("n", 1000): -0.1611,
        ("n", 10000): -0.0214, ("n", 100000): -0.0022,
    },
    "mode_convergence": {(3, 100000): 0.563, (2, 100000): 0.673},
    "regression_coverage": {
        ("independence", 10): (0.9928, 0.9916, 0.9685, 0.8723, 0.9465, 0.0023),
        ("independence", 100): (0.9574, 0.9575, 0.9558, 0.9387, 0.9479, 0.5698),
        ("independence", 1000): (0.9510, 0.9550, 0.9515, 0.9509, 0.9504, 0.9181),
        ("independence", 10000): (0.9519, 0.9525, 0.9517, 0.9546, 0.9542, 0.9452),
        ("independence", 100000): (0.9546, 0.9501, 0.9507, 0.9523, 0.9473, 0.9508),
        ("t", 10): (0.9939, 0.9938, 0.9683, 0.7769, 0.9465, 0.0002),
        ("t", 100): (0.9583, 0.9603, 0.9570, 0.9234, 0.9503, 0.5148),
        ("t", 1000): (0.9509, 0.9558, 0.9532, 0.9481, 0.9507, 0.9162),
        ("t", 10000): (0.9515, 0.9532, 0.9524, 0.9512, 0.9553, 0.9451),
        ("t", 100000): (0.9539, 0.9503, 0.9518, 0.9516, 0.9479, 0.9524),
    },
}
NOMINAL_COVERAGE = 0.95


def format_float(x: float) -> str:
    """Round-trip repr, with ``nan`` spelled out for spreadsheets."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return repr(float(x)) if isinstance(x, float) else str(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_float(v) for v in row])


def _reference(result: StudyResult, cell) -> float | None:
    study, k = result.config.study, cell.key
    if study == "tau_retention":
        return REFERENCE[study].get(("n", k["n"]))
    if study in ("multinomial_coverage", "gamma_coverage"):
        return NOMINAL_COVERAGE
    if study == "mode_convergence":
        if k["case"] == 1:
            return 1.0
        return REFERENCE[study].get((k["case"], k["n"]))
    row = REFERENCE["regression_coverage"].get((k["prior"], k["n"]))
    return None if row is None else row[k["case"] - 1]


_ESTIMATE = {
    "tau_retention": ("median", "median_se"),
    "multinomial_coverage": ("coverage", "coverage_se"),
    "gamma_coverage": ("coverage", "coverage_se"),
    "mode_convergence": ("prob_d2_le_d1", "prob_se"),
    "regression_coverage": ("coverage", "coverage_se"),
}


def summary_records(result: StudyResult) -> list[dict]:
    """Per-cell estimate, reference and distance in standard-error units."""
    est_key, se_key = _ESTIMATE[result.config.study]
    out = []
    for cell in result.cells:
        ref = _reference(result, cell)
        est, se = cell.values[est_key], cell.values[se_key]
        z = None
        if ref is not None and se > 0 and math.isfinite(se) and math.isfinite(est):
            z = abs(est - ref) / se
        out.append({**cell.key, "estimate": est, "se": se, "reference": ref, "se_units": z,
                    "repetitions": cell.repetitions, "failures": cell.failures})
    return out


def _long_rows(result: StudyResult) -> tuple[list[str], list[list]]:
    study = result.config.study
    rows = []
    if study in ("multinomial_coverage", "gamma_coverage"):
        for c in result.cells:
            rows.append([f"n={c.key['n']}", c.key["rho"], c.values["coverage"], c.values["coverage_se"],
                         c.repetitions, c.failures])
    elif study == "mode_convergence":
        for metric, se in (("prob_d2_le_d1", "prob_se"), ("mean_abs_diff", "mean_abs_diff_se")):
            for c in result.cells:
                rows.append([f"case={c.key['case']};{metric}", c.key["n"], c.values[metric], c.values[se],
                             c.repetitions, c.failures])
    return ["series", "x", "y", "se", "repetitions", "failures"], rows


def write_result(result: StudyResult, outdir: str | Path) -> list[Path]:
    """Write the study CSV(s), ``manifest.json`` and ``summary.json`` into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    study = result.config.study
    written = []
    if study == "tau_retention":
        p = outdir / "tau_retention.csv"
        _write_csv(p, ["n", "min", "median", "max", "median_se", "repetitions", "failures"],
                   [[c.key["n"], c.values["min"], c.values["median"], c.values["max"], c.values["median_se"],
                     c.repetitions, c.failures] for c in result.cells])
        written.append(p)
    elif study == "regression_coverage":
        p = outdir / "regression_coverage.csv"
        _write_csv(p, ["case", "prior", "n", "coverage", "median_area", "coverage_se", "repetitions", "failures"],
                   [[c.key["case"], c.key["prior"], c.key["n"], c.values["coverage"], c.values["median_area"],
                     c.values["coverage_se"], c.repetitions, c.failures] for c in result.cells])
        written.append(p)
    else:
        header, rows = _long_rows(result)
        p = outdir / f"{study}.csv"
        _write_csv(p, header, rows)
        written.append(p)
        if study != "mode_convergence":
            p2 = outdir / f"{study}_cells.csv"
            _write_csv(p2, ["rho", "n", "coverage", "coverage_se", "median_area", "repetitions", "failures"],
                       [[c.key["rho"], c.key["n"], c.values["coverage"], c.values["coverage_se"],
                         c.values["median_area"], c.repetitions, c.failures] for c in result.cells])
            written.append(p2)
    if result.failure_log:
        p = outdir / "failures.csv"
        keys = sorted({k for f in result.failure_log for k in f})
        _write_csv(p, keys, [[f.get(k, "") for k in keys] for f in result.failure_log])
        written.append(p)
    for name, payload in (("manifest.json", result.manifest()),
                          ("summary.json", {"study": study, "cells": summary_records(result)})):
        p = outdir / name
        p.write_text(json.dumps(payload, sort_keys=True, indent=2, allow_nan=True) + "\n", encoding="utf-8")
        written.append(p)
    return written
