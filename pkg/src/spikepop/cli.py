"""Batch command line: ``spikepop {encode,tune,report,mi,classify}``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key = value`` lines, then command-line flags (highest precedence).
Every command writes its outputs into the ``--out`` directory.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .builder import (DEFAULT_GRID, BuilderConfig, TuneReport, Workspace, build_population,
                      exhaustive_search, random_baseline)
from .evaluation import (EvalConfig, evaluate_features, evaluate_pipeline, feature_matrix,
                         write_features_csv)
from .infotheory import DEFAULT_WINDOWS, mi_windowed
from .lif import DEFAULT_DECAY, LifParams, PopulationConfig, encode_flat, encode_population
from .patterns import DEFAULT_MAX_SHIFT, DEFAULT_STRIDE_CAP
from .signal import load_dataset, spike_records

log = logging.getLogger("spikepop")

OBJECTIVES = ("mi", "accuracy", "random-baseline")


@dataclass
class RunConfig:
    dataset: str = ""
    out: str = "."
    objective: str = "mi"
    max_neurons: int = 5
    density_grid: tuple = DEFAULT_GRID
    window_set: tuple = DEFAULT_WINDOWS
    k: int = 3
    max_shift: int = DEFAULT_MAX_SHIFT
    decay: float = DEFAULT_DECAY
    subset_size: int = 260
    stride: int = 1
    stride_cap: int = DEFAULT_STRIDE_CAP
    min_relative_gain: float = 0.0
    bins: int = 20
    overlap: float = 0.5
    neighbors: int = 5
    train_fraction: float = 0.8
    trials: int = 5
    seed: int = 0
    workers: int = 1
    normalize: bool = False
    eval: bool = True
    thresholds: tuple = ()
    shifts: tuple = ()
    report: str = ""

    def builder(self) -> BuilderConfig:
        return BuilderConfig(
            density_grid=self.density_grid, max_neurons=self.max_neurons,
            min_relative_gain=self.min_relative_gain, window_lengths=self.window_set,
            k=self.k, stride=self.stride, stride_cap=self.stride_cap or None,
            max_shift=self.max_shift, decay=self.decay,
            estimation_subset_size=self.subset_size or None, seed=self.seed,
            workers=self.workers)

    def evaluation(self) -> EvalConfig:
        return EvalConfig(self.bins, self.overlap, self.neighbors, self.train_fraction, self.seed)

    def to_dict(self) -> dict:
        return {f.name: (list(v) if isinstance(v := getattr(self, f.name), tuple) else v)
                for f in fields(self)}


def _float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 10) for i in range(n))
    return tuple(float(v) for v in text.split(",") if v.strip())


def _int_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    v = str(text).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONVERTERS = {
    "density_grid": _float_list, "window_set": _int_list, "thresholds": _float_list,
    "shifts": _int_list, "normalize": _bool, "eval": _bool,
}


def _convert(name, value):
    if name in CONVERTERS:
        return CONVERTERS[name](value)
    default = getattr(RunConfig, name)
    return type(default)(value)


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment, dashes equal underscores."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ValueError(f"{path}:{lineno}: unknown setting {key!r}")
        out[key] = _convert(key, value)
    return out


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = _convert(f.name, v)
    cfg = RunConfig(**values)
    if cfg.objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    return cfg


# --- output helpers -------------------------------------------------------

def _clean(obj):
    """NaN/inf -> None so reports stay strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def atomic_write(path, text: str) -> None:
    """Write via a temp file so a failed run never leaves a partial output."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".partial")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _load(cfg: RunConfig):
    if not cfg.dataset:
        raise ValueError("--dataset is required")
    ds = load_dataset(cfg.dataset)
    return ds.normalized() if cfg.normalize else ds


def _population(cfg: RunConfig) -> PopulationConfig:
    if cfg.report:
        rep = json.loads(Path(cfg.report).read_text(encoding="utf-8"))
        if not rep.get("final_config"):
            raise ValueError(f"{cfg.report}: report has no final_config")
        return PopulationConfig.from_dict(rep["final_config"])
    if not cfg.thresholds:
        raise ValueError("give --thresholds or --report to define the population")
    neurons = tuple(LifParams(t, cfg.decay) for t in cfg.thresholds)
    return PopulationConfig(neurons, cfg.shifts or None)


# --- commands -------------------------------------------------------------

def cmd_encode(cfg: RunConfig) -> Path:
    ds = _load(cfg)
    pop = _population(cfg)
    records = spike_records(ds, encode_population(ds, pop))
    text = "".join(json.dumps(r) + "\n" for r in records)
    path = Path(cfg.out) / "spikes.jsonl"
    atomic_write(path, text)
    log.info("wrote %d spike trains to %s", len(records), path)
    return path


def _accuracy_rows(ds, pop: PopulationConfig, ev: EvalConfig) -> list[float]:
    return [evaluate_pipeline(ds, pop.prefix(m), ev).accuracy for m in range(1, len(pop) + 1)]


def run_tune(cfg: RunConfig, dataset=None) -> TuneReport:
    ds = dataset if dataset is not None else _load(cfg)
    bc = cfg.builder()
    ev = cfg.evaluation()
    ws = Workspace(ds, bc)
    if cfg.objective == "mi":
        report = build_population(ds, bc, ws)
        accs = _accuracy_rows(ds, report.final_config, ev) if cfg.eval else []
        report.summary = [
            {"m": i + 1, "density": it.chosen_density, "mi": it.best_joint_mi,
             "accuracy": accs[i] if accs else None}
            for i, it in enumerate(report.iterations)]
    elif cfg.objective == "accuracy":
        results = [exhaustive_search(ds, bc, m, "accuracy", ev, workspace=ws)
                   for m in range(1, cfg.max_neurons + 1)]
        report = TuneReport([], results[-1].population, "exhaustive", "accuracy")
        report.exhaustive = [r.to_dict() for r in results]
        report.summary = [{"m": r_["m"], "density": r_["densities"][-1], "mi": r_["joint_mi"],
                           "accuracy": r_["accuracy"]} for r_ in report.exhaustive]
    else:
        trials = random_baseline(ds, bc, cfg.trials, ev, with_accuracy=cfg.eval, workspace=ws)
        report = TuneReport([], None, "random", "random-baseline")
        report.random_trials = trials
        summary = []
        for m in range(1, cfg.max_neurons + 1):
            rows = [t["per_m"][m - 1] for t in trials]
            mis = [r["joint_mi"] for r in rows]
            accs = [r["accuracy"] for r in rows if r["accuracy"] is not None]
            summary.append({"m": m, "density": None, "mi": float(np.nanmean(mis)),
                            "accuracy": float(np.mean(accs)) if accs else None})
        report.summary = summary
    report.config = cfg.to_dict()
    return report


def cmd_tune(cfg: RunConfig) -> Path:
    report = run_tune(cfg)
    path = Path(cfg.out) / "report.json"
    atomic_write(path, dumps(report.to_dict()))
    log.info("wrote tune report to %s", path)
    return path


def report_tables(report: dict) -> dict[str, str]:
    """CSV tables keyed by file name: one MI curve per iteration plus a summary."""
    tables = {}
    for it in report.get("iterations", []):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["grid_density", "achieved_density", "threshold", "shift", "joint_mi_bits"])
        for p in it["mi_curve"]:
            w.writerow([p["grid_density"], p["achieved_density"], p["threshold"], p["shift"],
                        "" if p["joint_mi"] is None else p["joint_mi"]])
        tables[f"curve_{it['neuron_index'] + 1}.csv"] = buf.getvalue()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m", "density", "mi_bits", "accuracy"])
    for row in report.get("summary", []):
        w.writerow([row["m"]] + ["" if row.get(k) is None else row[k]
                                 for k in ("density", "mi", "accuracy")])
    tables["summary.csv"] = buf.getvalue()
    if report.get("random_trials"):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "m", "mi_bits", "accuracy"])
        for t in report["random_trials"]:
            for r in t["per_m"]:
                w.writerow([t["trial"], r["m"]] + ["" if r[k] is None else r[k]
                                                   for k in ("joint_mi", "accuracy")])
        tables["random_trials.csv"] = buf.getvalue()
    return tables


def cmd_report(cfg: RunConfig) -> dict[str, str]:
    if not cfg.report:
        raise ValueError("--report is required")
    try:
        report = json.loads(Path(cfg.report).read_text(encoding="utf-8"))
        TuneReport.from_dict(report)
        tables = report_tables(report)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"{cfg.report}: malformed report ({exc})") from None
    for name, text in tables.items():
        atomic_write(Path(cfg.out) / name, text)
    sys.stdout.write(tables["summary.csv"])
    return tables


def cmd_mi(cfg: RunConfig) -> Path:
    ds = _load(cfg)
    pop = _population(cfg)
    x, offsets = ds.flat
    flat = [encode_flat(x, offsets, p) for p in pop.neurons]
    est = mi_windowed(ds, flat, cfg.window_set, pop.shifts, cfg.k, cfg.stride,
                      cfg.stride_cap or None)
    text = dumps(est.to_dict())
    path = Path(cfg.out) / "mi.json"
    atomic_write(path, text)
    sys.stdout.write(text)
    return path


def cmd_classify(cfg: RunConfig) -> Path:
    ds = _load(cfg)
    pop = _population(cfg)
    x, offsets = ds.flat
    flat = [encode_flat(x, offsets, p) for p in pop.neurons]
    feats = feature_matrix(ds, flat, cfg.bins, cfg.overlap)
    result = evaluate_features(ds, feats, cfg.evaluation())
    out = Path(cfg.out)
    buf = io.StringIO()
    write_features_csv(buf, feats, ds.labels)
    atomic_write(out / "features.csv", buf.getvalue())
    text = dumps(result.to_dict())
    atomic_write(out / "eval.json", text)
    sys.stdout.write(text)
    return out / "eval.json"


COMMANDS = {"encode": cmd_encode, "tune": cmd_tune, "report": cmd_report, "mi": cmd_mi,
            "classify": cmd_classify}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    a = common.add_argument
    a("--config", help="key = value settings file (flags override it)")
    a("--dataset", help="JSON-lines dataset")
    a("--out", help="output directory")
    a("--objective", choices=OBJECTIVES)
    a("--max-neurons", dest="max_neurons", type=int)
    a("--density-grid", dest="density_grid", help="comma list or start:stop:step")
    a("--window-set", dest="window_set", help="comma list of window lengths")
    a("--k", type=int, help="neighbour count of the MI estimator")
    a("--max-shift", dest="max_shift", type=int)
    a("--decay", type=float)
    a("--subset-size", dest="subset_size", type=int, help="stimuli used for MI (0 = all)")
    a("--stride", type=int)
    a("--stride-cap", dest="stride_cap", type=int, help="max pairs per estimate (0 = no cap)")
    a("--min-relative-gain", dest="min_relative_gain", type=float)
    a("--bins", type=int)
    a("--overlap", type=float)
    a("--neighbors", type=int)
    a("--train-fraction", dest="train_fraction", type=float)
    a("--trials", type=int)
    a("--seed", type=int)
    a("--workers", type=int)
    a("--normalize", action="store_const", const=True, default=None)
    a("--no-eval", dest="eval", action="store_const", const=False, default=None)
    a("--thresholds", help="comma list of LIF thresholds")
    a("--shifts", help="comma list of per-neuron shifts")
    a("--report", help="tune report JSON")
    a("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="spikepop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("encode", parents=[common], help="write spike trains for a population")
    sub.add_parser("tune", parents=[common], help="build a population and write report.json")
    sub.add_parser("report", parents=[common], help="CSV tables from a tune report")
    sub.add_parser("mi", parents=[common], help="one-shot extrapolated MI estimate")
    sub.add_parser("classify", parents=[common], help="one-shot classification run")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
