"""Greedy population builder: add one neuron at a time, maximising joint MI.

Each candidate neuron is set by a target spike density, calibrated to a
threshold on the estimation subset, given its own best latency shift and
scored by the extrapolated MI of the joint pattern of all fixed neurons plus
the candidate. Earlier neurons are never revisited.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .evaluation import EvalConfig, evaluate_pipeline
from .infotheory import (DEFAULT_K, DEFAULT_WINDOWS, EstimationError, MiEstimate,
                         mi_windowed, pid_two)
from .lif import (DEFAULT_DECAY, CalibrationWarning, LifParams, PopulationConfig,
                  calibrate_threshold, encode_flat)
from .patterns import DEFAULT_MAX_SHIFT, DEFAULT_STRIDE_CAP, best_shift
from .seeding import derived_rng
from .signal import Dataset

DEFAULT_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
EXHAUSTIVE_BUDGET = 10_000


class BudgetExceeded(ValueError):
    pass


@dataclass(frozen=True)
class BuilderConfig:
    density_grid: tuple[float, ...] = DEFAULT_GRID
    max_neurons: int = 5
    min_relative_gain: float = 0.0
    window_lengths: tuple[int, ...] = DEFAULT_WINDOWS
    k: int = DEFAULT_K
    stride: int = 1
    stride_cap: int | None = DEFAULT_STRIDE_CAP
    max_shift: int = DEFAULT_MAX_SHIFT
    decay: float = DEFAULT_DECAY
    estimation_subset_size: int | None = 260
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        grid = tuple(float(d) for d in self.density_grid)
        if not grid:
            raise ValueError("density grid is empty")
        if any(not 0 < d < 1 for d in grid):
            raise ValueError("grid densities must lie in (0, 1)")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("density grid must be strictly increasing")
        if self.max_neurons < 1:
            raise ValueError("max_neurons must be >= 1")
        object.__setattr__(self, "density_grid", grid)
        object.__setattr__(self, "window_lengths", tuple(int(t) for t in self.window_lengths))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CurvePoint:
    grid_density: float
    achieved_density: float
    threshold: float
    shift: int
    joint_mi: float
    solo_mi: float
    per_window_bits: tuple[float, ...] = ()
    reachable: bool = True


@dataclass(frozen=True)
class IterationRecord:
    neuron_index: int
    chosen_density: float
    chosen_threshold: float
    chosen_shift: int
    achieved_density: float
    best_joint_mi: float
    mi_curve: tuple[CurvePoint, ...]
    solo_mi: float
    pid: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "IterationRecord":
        curve = tuple(CurvePoint(**{**p, "per_window_bits": tuple(p.get("per_window_bits", ()))})
                      for p in d["mi_curve"])
        return cls(int(d["neuron_index"]), float(d["chosen_density"]),
                   float(d["chosen_threshold"]), int(d["chosen_shift"]),
                   float(d["achieved_density"]), float(d["best_joint_mi"]), curve,
                   float(d["solo_mi"]), d.get("pid"))


@dataclass
class TuneReport:
    iterations: list[IterationRecord]
    final_config: PopulationConfig
    stop_reason: str = "max_neurons"
    objective: str = "mi"
    config: dict = field(default_factory=dict)
    summary: list[dict] = field(default_factory=list)
    exhaustive: list[dict] = field(default_factory=list)
    random_trials: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "objective": self.objective,
            "config": self.config,
            "stop_reason": self.stop_reason,
            "iterations": [it.to_dict() for it in self.iterations],
            "final_config": self.final_config.to_dict() if self.final_config else None,
            "summary": self.summary,
            "exhaustive": self.exhaustive,
            "random_trials": self.random_trials,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TuneReport":
        fc = d.get("final_config")
        return cls([IterationRecord.from_dict(it) for it in d.get("iterations", [])],
                   PopulationConfig.from_dict(fc) if fc else None,
                   d.get("stop_reason", ""), d.get("objective", "mi"), d.get("config", {}),
                   list(d.get("summary", [])), list(d.get("exhaustive", [])),
                   list(d.get("random_trials", [])))


@dataclass(frozen=True)
class Candidate:
    """One calibrated, shifted neuron at a grid density (on the estimation subset)."""

    density: float
    params: LifParams
    achieved_density: float
    reachable: bool
    bits: np.ndarray = field(repr=False)
    shift: int
    solo: MiEstimate


class Workspace:
    """Estimation subset plus per-density candidate cache shared by all searches."""

    def __init__(self, dataset: Dataset, config: BuilderConfig):
        self.config = config
        self.full = dataset
        n = len(dataset)
        size = config.estimation_subset_size
        if size is None or size >= n:
            self.subset = dataset
        else:
            rng = derived_rng(config.seed, "subset")
            idx = np.sort(rng.choice(n, size=size, replace=False))
            self.subset = dataset.subset(idx)
        self._cache: dict[float, Candidate] = {}

    def _map(self, fn, items):
        items = list(items)
        if self.config.workers > 1 and len(items) > 1:
            with ThreadPoolExecutor(self.config.workers) as ex:
                return list(ex.map(fn, items))
        return [fn(i) for i in items]

    def candidate(self, density: float) -> Candidate:
        if density in self._cache:
            return self._cache[density]
        cfg = self.config
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CalibrationWarning)
            cal = calibrate_threshold(self.subset, density, cfg.decay)
        x, offsets = self.subset.flat
        bits = encode_flat(x, offsets, cal.params)
        try:
            shift, solo = best_shift(self.subset, [bits], cfg.window_lengths, cfg.max_shift,
                                     cfg.k, cfg.stride, cfg.stride_cap)
        except EstimationError:
            shift, solo = 0, None
        cand = Candidate(density, cal.params, cal.achieved_density, cal.reachable, bits, shift, solo)
        self._cache[density] = cand
        return cand

    def prepare(self, densities) -> list[Candidate]:
        todo = [d for d in dict.fromkeys(densities) if d not in self._cache]
        self._map(self.candidate, todo)
        return [self._cache[d] for d in densities]

    def joint(self, members: list[Candidate]) -> MiEstimate:
        if any(c.solo is None for c in members):
            raise EstimationError("candidate has no defined MI estimate")
        if len(members) == 1:
            return members[0].solo
        cfg = self.config
        return mi_windowed(self.subset, [c.bits for c in members], cfg.window_lengths,
                           tuple(c.shift for c in members), cfg.k, cfg.stride, cfg.stride_cap)

    def population(self, members: list[Candidate]) -> PopulationConfig:
        return PopulationConfig(tuple(c.params for c in members), tuple(c.shift for c in members))


def _argmax(values) -> int:
    # first index wins ties, i.e. the lowest grid density; NaN never wins
    best = None
    for i, v in enumerate(values):
        if v == v and (best is None or v > values[best]):
            best = i
    if best is None:
        raise EstimationError("no grid point has a defined MI estimate")
    return best


def _nan_estimate(cfg) -> MiEstimate:
    n = len(cfg.window_lengths)
    return MiEstimate(math.nan, cfg.window_lengths, (math.nan,) * n,
                      (math.nan,) * 3, 0, cfg.k)


def _safe_joint(ws, members) -> MiEstimate:
    try:
        return ws.joint(members)
    except EstimationError:
        return _nan_estimate(ws.config)


def _iterate(ws: Workspace, fixed: list[Candidate]) -> tuple[IterationRecord, Candidate]:
    grid = ws.config.density_grid
    cands = ws.prepare(grid)
    estimates = ws._map(lambda c: _safe_joint(ws, fixed + [c]), cands)
    curve = tuple(CurvePoint(c.density, c.achieved_density, c.params.threshold, c.shift,
                             e.bits, c.solo.bits if c.solo else math.nan, e.per_window_bits,
                             c.reachable)
                  for c, e in zip(cands, estimates))
    i = _argmax([p.joint_mi for p in curve])
    chosen = cands[i]
    pid = None
    if fixed:
        prev = ws.joint(fixed).bits
        pid = pid_two(prev, chosen.solo.bits, curve[i].joint_mi).to_dict()
    rec = IterationRecord(len(fixed), chosen.density, chosen.params.threshold, chosen.shift,
                          chosen.achieved_density, curve[i].joint_mi, curve, chosen.solo.bits, pid)
    return rec, chosen


def tune_first_neuron(dataset: Dataset, config: BuilderConfig,
                      workspace: Workspace | None = None) -> IterationRecord:
    """Grid search for the single neuron carrying the most information."""
    ws = workspace or Workspace(dataset, config)
    return _iterate(ws, [])[0]


def add_neuron(dataset: Dataset, fixed: PopulationConfig, prior_trains, config: BuilderConfig,
               workspace: Workspace | None = None) -> IterationRecord:
    """Grid search for the neuron that most increases the population's joint MI.

    ``prior_trains`` are the fixed neurons' flat spike arrays on the
    estimation subset (in neuron order), or None to encode them here;
    ``fixed`` supplies their thresholds and shifts, which are left untouched.
    """
    ws = workspace or Workspace(dataset, config)
    if prior_trains is None:
        x, offsets = ws.subset.flat
        prior_trains = [encode_flat(x, offsets, p) for p in fixed.neurons]
    members = [Candidate(float("nan"), p, float("nan"), True, np.asarray(b, dtype=np.uint8), s,
                         None)
               for p, s, b in zip(fixed.neurons, fixed.shifts, prior_trains)]
    if len(members) == 1:
        solo = mi_windowed(ws.subset, [members[0].bits], config.window_lengths,
                           (members[0].shift,), config.k, config.stride, config.stride_cap)
        members[0] = replace(members[0], solo=solo)
    return _iterate(ws, members)[0]


def build_population(dataset: Dataset, config: BuilderConfig,
                     workspace: Workspace | None = None) -> TuneReport:
    """Run the greedy recursion until ``max_neurons`` or the gain floor is hit."""
    ws = workspace or Workspace(dataset, config)
    iterations: list[IterationRecord] = []
    members: list[Candidate] = []
    reason = "max_neurons"
    while len(members) < config.max_neurons:
        rec, chosen = _iterate(ws, members)
        if iterations and config.min_relative_gain > 0:
            prev = iterations[-1].best_joint_mi
            gain = (rec.best_joint_mi - prev) / abs(prev) if prev else np.inf
            if gain < config.min_relative_gain:
                reason = "min_relative_gain"
                break
        iterations.append(rec)
        members.append(chosen)
    return TuneReport(iterations, ws.population(members), reason, "mi", config.to_dict())


@dataclass(frozen=True)
class SearchResult:
    densities: tuple[float, ...]
    population: PopulationConfig
    joint_mi: float | None
    accuracy: float | None
    evaluations: int

    def to_dict(self) -> dict:
        return {"m": len(self.densities), "densities": list(self.densities),
                "population": self.population.to_dict(), "joint_mi": self.joint_mi,
                "accuracy": self.accuracy, "evaluations": self.evaluations}


def exhaustive_search(dataset: Dataset, config: BuilderConfig, m: int, objective: str = "mi",
                      eval_config: EvalConfig | None = None, with_accuracy: bool = False,
                      workspace: Workspace | None = None) -> SearchResult:
    """Score every grid-density combination of ``m`` neurons and keep the best.

    ``objective`` is ``"mi"`` (joint MI on the estimation subset) or
    ``"accuracy"`` (pipeline accuracy on the whole dataset). The other
    metric is filled in for the winner only.
    """
    if objective not in ("mi", "accuracy"):
        raise ValueError(f"unknown objective {objective!r}")
    grid = config.density_grid
    n_comb = len(grid) ** m
    if n_comb > EXHAUSTIVE_BUDGET:
        raise BudgetExceeded(f"{n_comb} combinations exceed the budget of {EXHAUSTIVE_BUDGET}")
    ws = workspace or Workspace(dataset, config)
    eval_config = eval_config or EvalConfig(seed=config.seed)
    ws.prepare(grid)
    combos = list(itertools.product(grid, repeat=m))

    def score(combo):
        members = ws.prepare(combo)
        if objective == "mi":
            return _safe_joint(ws, members).bits
        return evaluate_pipeline(dataset, ws.population(members), eval_config).accuracy

    scores = ws._map(score, combos)
    i = _argmax(scores)
    members = ws.prepare(combos[i])
    pop = ws.population(members)
    if objective == "mi":
        mi = scores[i]
        acc = evaluate_pipeline(dataset, pop, eval_config).accuracy if with_accuracy else None
    else:
        mi, acc = _safe_joint(ws, members).bits, scores[i]
    return SearchResult(combos[i], pop, mi, acc, len(combos))


def random_baseline(dataset: Dataset, config: BuilderConfig, trials: int = 5,
                    eval_config: EvalConfig | None = None, with_accuracy: bool = True,
                    workspace: Workspace | None = None) -> list[dict]:
    """Populations with uniformly drawn grid densities, scored per prefix size.

    Each trial draws ``max_neurons`` densities; its first ``m`` neurons form
    the size-``m`` population.
    """
    ws = workspace or Workspace(dataset, config)
    eval_config = eval_config or EvalConfig(seed=config.seed)
    rng = derived_rng(config.seed, "random-baseline")
    grid = np.array(config.density_grid)
    out = []
    for t in range(trials):
        densities = tuple(float(d) for d in rng.choice(grid, size=config.max_neurons))
        members = ws.prepare(densities)
        rows = []
        for m in range(1, len(members) + 1):
            pop = ws.population(members[:m])
            rows.append({
                "m": m,
                "joint_mi": _safe_joint(ws, members[:m]).bits,
                "accuracy": (evaluate_pipeline(dataset, pop, eval_config).accuracy
                             if with_accuracy else None),
            })
        out.append({"trial": t, "densities": list(densities),
                    "population": ws.population(members).to_dict(), "per_m": rows})
    return out
