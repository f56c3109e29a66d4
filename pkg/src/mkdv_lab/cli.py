"""Command line entry point: ``mkdv-lab <experiment>`` and ``mkdv-lab verify``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime
import json
import platform
import sys
import time
from pathlib import Path
from typing import Optional, get_type_hints

import numpy as np
import scipy

from . import __version__
from .criteria import SchemaError, check_report
from .evolve import BlowUpError
from .grid import DomainTooSmallError, MeanNotZeroError
from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, Outcome, _header, run_experiment
from .modulation import ModulationError
from .soliton import LeakageError
from .oscint import QuadratureBudgetError
from .painleve import PainleveError
from .scattering import EmptyRegionError

# stability reports keep the historical short name
REPORT_NAMES = {"soliton_stability": "stability_report.json"}
_SKIP_FIELDS = ("experiment",)
# failures after validation: partial artifacts, exit 3
RUN_ERRORS = (BlowUpError, ModulationError, LeakageError, PainleveError, FloatingPointError, DomainTooSmallError,
              MeanNotZeroError, QuadratureBudgetError, EmptyRegionError)


def _field_types() -> dict:
    hints = get_type_hints(ExperimentConfig)
    out = {}
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in _SKIP_FIELDS:
            continue
        t = hints[f.name]
        args = getattr(t, "__args__", None)
        if args:  # Optional[X]
            t = next(a for a in args if a is not type(None))
        out[f.name] = t
    return out


def _coerce(name: str, text: str, typ):
    text = text.strip()
    if text.lower() in ("none", ""):
        return None
    try:
        if typ is int:
            return int(text)
        if typ is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"{name}: expected {typ.__name__}, got {text!r}") from None
    return text


def read_config_file(path: str) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    types = _field_types()
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for no, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{no}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "experiment":
            out[key] = val
            continue
        if key not in types:
            raise ConfigError(f"{path}:{no}: unknown key {key!r}")
        out[key] = _coerce(key, val, types[key])
    return out


def build_config(experiment: str, file_values: dict, flag_values: dict) -> ExperimentConfig:
    fv = dict(file_values)
    if fv.pop("experiment", experiment) != experiment:
        raise ConfigError("config file names a different experiment")
    fv.update({k: v for k, v in flag_values.items() if v is not None})
    return ExperimentConfig.for_experiment(experiment, **fv)


def versions() -> dict:
    return {"mkdv_lab": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def _write_csv(path: Path, header, rows):
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_outputs(out_dir: Path, cfg: ExperimentConfig, outcome: Optional[Outcome], wall: float, error: Optional[str] = None) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    artifacts = []
    if outcome is not None:
        report = dict(outcome.report)
        report["complete"] = bool(outcome.complete and error is None)
        name = REPORT_NAMES.get(cfg.experiment, f"{cfg.experiment}_report.json")
        (out_dir / name).write_text(_dump(report))
        artifacts.append(name)
        for fname, (header, rows) in outcome.csvs.items():
            _write_csv(out_dir / fname, header, rows)
            artifacts.append(fname)
        for fname, svg in outcome.svgs.items():
            (out_dir / fname).write_text(svg)
            artifacts.append(fname)
    manifest = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "versions": versions(),
        "edge_mass": outcome.edge_mass if outcome is not None else None,
        "complete": bool(outcome is not None and outcome.complete and error is None),
        "error": error,
        "artifacts": artifacts,
        # excluded from the determinism contract
        "run_info": {"timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(), "wall_time_s": wall},
    }
    (out_dir / "manifest.json").write_text(_dump(manifest))
    return manifest


def _add_config_flags(p: argparse.ArgumentParser):
    for name, typ in _field_types().items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    p.add_argument("--config", help="flat key = value file; flags override its keys")


def cmd_run(args) -> int:
    types = _field_types()
    flags = {k: getattr(args, k) for k in types}
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(args.experiment, file_values, flags)
    except (ConfigError, TypeError) as exc:
        print(f"mkdv-lab: invalid configuration: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(cfg.output_dir)
    t0 = time.perf_counter()
    outcome, error = None, None
    try:
        outcome = run_experiment(cfg)
    except RUN_ERRORS as exc:
        error = f"{type(exc).__name__}: {exc}"
        # partial artifact: the resolved config and the reason, flagged incomplete
        outcome = Outcome(cfg.experiment, dict(_header(cfg), error=error), complete=False)
    manifest = write_outputs(out_dir, cfg, outcome, time.perf_counter() - t0, error)
    for a in manifest["artifacts"]:
        print(out_dir / a)
    if not manifest["complete"]:
        print(f"mkdv-lab: run incomplete{': ' + error if error else ''}", file=sys.stderr)
        return 3
    return 0


def cmd_verify(args) -> int:
    path = Path(args.report)
    try:
        report = json.loads(path.read_text())
    except FileNotFoundError:
        print(f"mkdv-lab: schema error: report {path} does not exist", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"mkdv-lab: schema error: cannot parse {path}: {exc}", file=sys.stderr)
        return 2
    try:
        results = check_report(report, args.profile)
    except SchemaError as exc:
        print(f"mkdv-lab: schema error: {exc}", file=sys.stderr)
        return 2
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mkdv-lab", description="mKdV pseudo-spectral simulator and verification harness")
    p.add_argument("--version", action="version", version=f"mkdv-lab {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for exp in EXPERIMENTS:
        sp = sub.add_parser(exp, help=f"run the {exp} experiment")
        _add_config_flags(sp)
        sp.set_defaults(func=cmd_run, experiment=exp)
    vp = sub.add_parser("verify", help="check a report against the acceptance criteria")
    vp.add_argument("report")
    vp.add_argument("--profile", default="default")
    vp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "run":  # `mkdv-lab run decay ...` is accepted as well
        argv = argv[1:]
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
