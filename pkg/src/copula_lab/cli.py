"""Command-line front end.

Each subcommand reads an optional TOML file, applies command-line overrides,
validates everything before running, and writes CSV and JSON files to an
output directory.  Exit status is 0 on success, 1 when a run fails and 2 for
configuration errors; failures also print a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np

from . import __version__
from .copulas import CopulaSpec, classify_stationary_points
from .diagnostics import SupportProbe, chronic_rejection_check, induced_tau
from .errors import ConfigError
from .experiments.config import StudyConfig, default_config, tau_design_prior
from .experiments.io import _write_csv, write_result
from .experiments.studies import run_study
from .marginals import CopulaPrior
from .models import model_from_dict
from .vines import DVine

__all__ = ["RunConfig", "parse_config", "dispatch", "main", "SUBCOMMANDS"]

logger = logging.getLogger("copula_lab")

SUBCOMMANDS = {
    "tau-retention": "tau_retention",
    "coverage": "multinomial_coverage",
    "gamma-coverage": "gamma_coverage",
    "mode-convergence": "mode_convergence",
    "regression-coverage": "regression_coverage",
    "diagnose": None,
    "copula-inspect": None,
}

THREADS_ENV = "COPULA_LAB_THREADS"

# Accepted keys per section; the value names the StudyConfig field.
_STUDY_KEYS = {
    "": {"seed": "seed", "repetitions": "repetitions", "threads": "threads", "output": "output"},
    "study": {"sample_sizes": "sample_sizes", "rhos": "rhos", "cases": "cases", "priors": "priors"},
    "sir": {"n_resample": "n_resample", "n_proposal": "n_proposal", "resampling": "resampling"},
    "hpd": {"level": "level", "grid": "grid", "qmc_points": "qmc_points", "qmc_replicates": "qmc_replicates"},
}
_DIAGNOSE_KEYS = {
    "": {"seed", "output", "tol_tau", "threads", "model", "prior", "probe"},
    "model": None,  # validated by the model constructor
    "prior": {"marginals", "copula", "vine"},
    "probe": {"kind", "count", "seed", "per_axis", "quantile", "points"},
}
_INSPECT_KEYS = {"": {"output", "seed", "threads", "c1", "c2", "grid", "max_iter", "tol"}}


@dataclass
class RunConfig:
    """Fully resolved invocation.

    Attributes
    ----------
    subcommand : str
    config_path : Path or None
    output : Path
    strict : bool
    study : StudyConfig or None
        Set for the five study subcommands.
    settings : dict
        Resolved settings for ``diagnose`` and ``copula-inspect``.
    """

    subcommand: str
    config_path: Path | None
    output: Path
    strict: bool = True
    study: StudyConfig | None = None
    settings: dict = field(default_factory=dict)

    def effective(self) -> dict:
        body = self.study.to_dict() if self.study is not None else _jsonable(self.settings.get("echo", {}))
        return {"subcommand": self.subcommand, "config_path": None if self.config_path is None
                else str(self.config_path), "strict": self.strict, "config": body}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# ---------------------------------------------------------------------------
# parsing


def _load_toml(path: Path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}", "config") from exc
    except tomllib.TOMLDecodeError as exc:
        # the decoder message carries the line and column
        raise ConfigError(f"cannot parse {path}: {exc}", "config") from exc


def _unknown(raw: dict, schema: dict, strict: bool) -> dict:
    """Drop (lenient) or reject (strict) keys missing from ``schema``."""
    out = {}
    for key, val in raw.items():
        section = key if isinstance(val, dict) and key in schema else ""
        allowed = schema[""]
        if section:
            out[key] = val if schema[key] is None else _unknown_section(val, key, schema[key], strict)
            continue
        if key not in allowed:
            if strict:
                raise ConfigError(f"unknown key {key!r}", key)
            logger.warning("ignoring unknown key %r", key)
            continue
        out[key] = val
    return out


def _unknown_section(val: dict, name: str, allowed, strict: bool) -> dict:
    out = {}
    for k, v in val.items():
        if k not in allowed:
            if strict:
                raise ConfigError(f"unknown key {name}.{k!r}", f"{name}.{k}")
            logger.warning("ignoring unknown key %s.%s", name, k)
            continue
        out[k] = v
    return out


def _check_type(value, kind, name):
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ConfigError(f"{name} must be an integer, got {value!r}", name)
    if kind is float and (isinstance(value, bool) or not isinstance(value, (int, float))):
        raise ConfigError(f"{name} must be a number, got {value!r}", name)
    if kind is str and not isinstance(value, str):
        raise ConfigError(f"{name} must be a string, got {value!r}", name)
    return value


_FIELD_TYPES = {
    "seed": int, "repetitions": int, "threads": int, "output": str, "n_resample": int, "n_proposal": int,
    "resampling": str, "level": float, "grid": int, "qmc_points": int, "qmc_replicates": int,
}
_LIST_TYPES = {"sample_sizes": int, "rhos": float, "cases": int, "priors": str}


def _study_kwargs(raw: dict) -> dict:
    kw = {}
    for section, keys in _STUDY_KEYS.items():
        src = raw if section == "" else raw.get(section, {})
        if section and not isinstance(src, dict):
            raise ConfigError(f"[{section}] must be a table", section)
        for key, fname in keys.items():
            if key not in src or isinstance(src[key], dict):
                continue
            name = key if section == "" else f"{section}.{key}"
            val = src[key]
            if fname in _LIST_TYPES:
                if not isinstance(val, list):
                    raise ConfigError(f"{name} must be a list", name)
                val = tuple(_check_type(v, _LIST_TYPES[fname], name) for v in val)
            else:
                _check_type(val, _FIELD_TYPES[fname], name)
            kw[fname] = val
    return kw


def _resolve_threads(cli_value: int | None, file_value: int | None) -> int:
    if cli_value is not None:
        return cli_value
    if file_value is not None:
        if _check_type(file_value, int, "threads") < 1:
            raise ConfigError("threads must be positive", "threads")
        return file_value
    env = os.environ.get(THREADS_ENV)
    if env is None or env == "":
        return 1
    try:
        val = int(env)
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}", THREADS_ENV) from exc
    if val < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}", THREADS_ENV)
    return val


def _prior_from_raw(raw: dict | None) -> CopulaPrior:
    if not raw:
        return tau_design_prior()
    try:
        if "marginals" not in raw:
            base = tau_design_prior()
            raw = {"marginals": [m.to_dict() for m in base.marginals], **raw}
        cop = raw.get("copula", {"family": "independence"})
        rho = cop.get("rho")
        if rho is not None and not (isinstance(rho, (int, float)) and -1.0 < rho < 1.0):
            raise ConfigError(f"prior.copula.rho = {rho} lies outside (-1, 1)", "prior.copula.rho")
        return CopulaPrior.from_dict({"marginals": raw["marginals"], "copula": cop})
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid prior: {exc}", "prior") from exc


def _prior_vine(prior: CopulaPrior, raw: dict | None) -> DVine:
    d = prior.dim
    if raw and "vine" in raw:
        try:
            return DVine.from_mapping(d, {str(k): float(v) for k, v in raw["vine"].items()})
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid prior.vine: {exc}", "prior.vine") from exc
    cop = prior.copula
    if cop.family in ("gaussian", "student_t"):
        return DVine(d, induced_tau(np.asarray(cop.corr), d).taus)
    if cop.family == "independence":
        return DVine(d, (0.0,) * (d * (d - 1) // 2))
    if d == 2:
        return DVine(2, (cop.kendall_tau(),))
    raise ConfigError("give prior.vine taus for Archimedean copulas in more than two dimensions", "prior.vine")


def _copula_from_raw(raw, name: str) -> CopulaSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be a table", name)
    try:
        return CopulaSpec.from_dict(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name}: {exc}", name) from exc


def parse_config(path: str | Path | None, overrides: dict | None = None, subcommand: str = "tau-retention",
                 strict: bool = True) -> RunConfig:
    """Read, override and validate a configuration.

    Parameters
    ----------
    path : path-like or None
        TOML file; ``None`` means all defaults.
    overrides : dict, optional
        Keys ``seed``, ``repetitions``, ``output`` and ``threads``; ``None``
        values are ignored.
    subcommand : str
        One of :data:`SUBCOMMANDS`.
    strict : bool
        Reject unknown keys instead of warning.

    Raises
    ------
    ConfigError
        With ``field`` naming the offending setting.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}", "subcommand")
    path = None if path is None else Path(path)
    raw = _load_toml(path) if path is not None else {}
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in ("seed", "repetitions", "threads"):
        if key in ov:
            _check_type(ov[key], int, f"--{key}")
    threads = _resolve_threads(ov.get("threads"), raw.get("threads"))
    study = SUBCOMMANDS[subcommand]

    if study is not None:
        if "study" in raw and isinstance(raw["study"], dict) and "name" in raw["study"]:
            raw["study"] = dict(raw["study"])
            name = raw["study"].pop("name")
            if name != study:
                raise ConfigError(f"config is for study {name!r}, not {study!r}", "study.name")
        raw = _unknown(raw, {k: set(v) for k, v in _STUDY_KEYS.items()}, strict)
        kw = _study_kwargs(raw)
        kw.update({k: ov[k] for k in ("seed", "repetitions") if k in ov})
        kw["threads"] = threads
        output = Path(ov.get("output", kw.get("output", f"copula_lab_output/{study}")))
        kw["output"] = str(output)
        return RunConfig(subcommand, path, output, strict, default_config(study, **kw))

    if subcommand == "diagnose":
        raw = _unknown(raw, _DIAGNOSE_KEYS, strict)
        prior_raw = raw.get("prior")
        prior = _prior_from_raw(prior_raw)
        vine = _prior_vine(prior, prior_raw)
        model_raw = raw.get("model", {"kind": "multinomial", "categories": prior.dim + 1})
        try:
            model = model_from_dict(model_raw)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid model: {exc}", "model") from exc
        probe_raw = dict(raw.get("probe", {}))
        seed = ov.get("seed", probe_raw.pop("seed", raw.get("seed", 0)))
        kind = probe_raw.pop("kind", "sample")
        try:
            if kind == "sample":
                probe = SupportProbe.sample(prior, int(probe_raw.pop("count", 512)), int(seed))
            elif kind == "grid":
                probe = SupportProbe.grid(prior, int(probe_raw.pop("per_axis", 25)),
                                          float(probe_raw.pop("quantile", 0.001)))
            elif kind == "points":
                probe = SupportProbe.explicit(probe_raw.pop("points"))
            else:
                raise ConfigError(f"probe.kind must be sample, grid or points, got {kind!r}", "probe.kind")
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid probe: {exc}", "probe") from exc
        tol = _check_type(raw.get("tol_tau", 0.01), float, "tol_tau")
        if not tol > 0:
            raise ConfigError("tol_tau must be positive", "tol_tau")
        output = Path(ov.get("output", raw.get("output", "copula_lab_output/diagnose")))
        settings = {"prior": prior, "vine": vine, "model": model, "probe": probe, "tol_tau": float(tol),
                    "echo": {"prior": prior.to_dict(), "vine_taus": {e.label: t for e, t in vine.items()}, "model": model.to_dict(),
                             "probe": {"kind": probe.kind, "count": probe.count, "seed": probe.seed,
                                       "per_axis": probe.per_axis, "quantile": probe.quantile},
                             "tol_tau": float(tol)}}
        return RunConfig(subcommand, path, output, strict, None, settings)

    raw = _unknown(raw, _INSPECT_KEYS, strict)
    c1 = _copula_from_raw(raw.get("c1", {"family": "independence"}), "c1")
    c2 = _copula_from_raw(raw.get("c2", {"family": "student_t", "rho": 0.0, "df": 4.0}), "c2")
    grid = _check_type(raw.get("grid", 101), int, "grid")
    if grid < 3:
        raise ConfigError("grid must be at least 3", "grid")
    max_iter = _check_type(raw.get("max_iter", 60), int, "max_iter")
    tol = _check_type(raw.get("tol", 1e-10), float, "tol")
    output = Path(ov.get("output", raw.get("output", "copula_lab_output/copula_inspect")))
    settings = {"c1": c1, "c2": c2, "grid": grid, "max_iter": max_iter, "tol": float(tol),
                "echo": {"c1": c1.to_dict(), "c2": c2.to_dict(), "grid": grid, "max_iter": max_iter,
                         "tol": float(tol)}}
    return RunConfig(subcommand, path, output, strict, None, settings)


# ---------------------------------------------------------------------------
# dispatch


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(_jsonable(payload), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _error_record(cfg: RunConfig | None, exc: BaseException) -> dict:
    rec = {"status": "FAILED", "error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError) and exc.field:
        rec["field"] = exc.field
    if cfg is not None:
        rec["subcommand"] = cfg.subcommand
    return rec


def _run_diagnose(cfg: RunConfig) -> dict:
    s = cfg.settings
    verdict = chronic_rejection_check(s["vine"], s["model"], s["probe"], s["tol_tau"])
    out = verdict.to_dict()
    _write_json(cfg.output / "verdict.json", out)
    return out


def _run_inspect(cfg: RunConfig) -> dict:
    s = cfg.settings
    res = classify_stationary_points(s["c1"], s["c2"], s["grid"], s["max_iter"], s["tol"])
    rows = [[p.u[0], p.u[1], p.kind, p.eigenvalues[0], p.eigenvalues[1]] for p in res.points]
    _write_csv(cfg.output / "stationary_points.csv", ["u1", "u2", "kind", "eigenvalue1", "eigenvalue2"], rows)
    out = {"degenerate": res.degenerate, "points": len(res.points),
           "kinds": {k: sum(p.kind == k for p in res.points) for k in ("max", "min", "saddle")}}
    _write_json(cfg.output / "stationary_points.json", out)
    return out


def dispatch(cfg: RunConfig) -> int:
    """Run a validated configuration; returns the process exit status."""
    cfg.output.mkdir(parents=True, exist_ok=True)
    marker = cfg.output / "FAILED"
    if marker.exists():
        marker.unlink()
    try:
        if cfg.study is not None:
            result = run_study(cfg.study)
            write_result(result, cfg.output)
            manifest = json.loads((cfg.output / "manifest.json").read_text(encoding="utf-8"))
            manifest.update({"invocation": cfg.effective(), "version": __version__})
            _write_json(cfg.output / "manifest.json", manifest)
            empty = [c.key for c in result.cells if c.repetitions == 0]
            if empty:
                raise RuntimeError(f"every repetition failed in cells {empty}")
            summary = {"status": "ok", "cells": len(result.cells),
                       "failures": sum(c.failures for c in result.cells), "output": str(cfg.output)}
        else:
            body = _run_diagnose(cfg) if cfg.subcommand == "diagnose" else _run_inspect(cfg)
            _write_json(cfg.output / "manifest.json", {**cfg.effective(), "version": __version__})
            summary = {"status": "ok", "output": str(cfg.output), **body}
    except Exception as exc:
        rec = _error_record(cfg, exc)
        _write_json(marker, rec)
        print(json.dumps(rec, sort_keys=True), file=sys.stderr)
        return 1
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# entry point


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from exc
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="copula-lab", description="Copula prior studies and diagnostics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "diagnose": "chronic-rejection check for a prior dependence structure",
        "copula-inspect": "stationary points of log c2 - log c1",
        "tau-retention": "posterior Kendall's tau across sample sizes",
        "coverage": "HPD coverage, multinomial model",
        "gamma-coverage": "HPD coverage, gamma model",
        "mode-convergence": "posterior mode distances under two priors",
        "regression-coverage": "HPD coverage and area, regression model",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="TOML configuration file")
        p.add_argument("--seed", type=_u64)
        p.add_argument("--repetitions", type=_positive)
        p.add_argument("--output", type=Path, help="output directory")
        p.add_argument("--threads", type=_positive, help=f"worker processes (fallback: ${THREADS_ENV})")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--strict", dest="strict", action="store_true", default=True,
                          help="reject unknown config keys (default)")
        mode.add_argument("--lenient", dest="strict", action="store_false", help="warn on unknown config keys")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"seed": args.seed, "repetitions": args.repetitions, "threads": args.threads,
                 "output": None if args.output is None else str(args.output)}
    try:
        cfg = parse_config(args.config, overrides, args.subcommand, args.strict)
    except ConfigError as exc:
        print(json.dumps(_error_record(None, exc), sort_keys=True), file=sys.stderr)
        return 2
    return dispatch(cfg)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
