import json

import numpy as np
import pytest

from oracles import (lif_reference, mixed_mi_reference, quadratic_fit_reference,
                     window_pairs_reference)
from spikepop.builder import (BudgetExceeded, BuilderConfig, TuneReport, Workspace, add_neuron,
                              build_population, exhaustive_search, random_baseline,
                              tune_first_neuron)
from spikepop.lif import PopulationConfig
from spikepop.signal import Dataset, Stimulus
from spikepop.synthetic import staircase_dataset

GRID5 = (0.1, 0.3, 0.5, 0.7, 0.9)


def small_config(**kw):
    base = dict(density_grid=GRID5, max_neurons=3, max_shift=2, window_lengths=(2, 4, 8),
                estimation_subset_size=None)
    base.update(kw)
    return BuilderConfig(**base)


@pytest.fixture(scope="module")
def stairs():
    return staircase_dataset(n_per_class=6, length=64, seed=3)


@pytest.fixture(scope="module")
def levels():
    """Constant-level stimuli: one well-chosen neuron already captures nearly everything."""
    rng = np.random.default_rng(0)
    vals = [0.25, 0.5, 0.75, 1.0]
    return Dataset(tuple(Stimulus(str(i % 4), np.full(60, vals[i % 4]) + rng.normal(0, 1e-3, 60))
                         for i in range(40)))


def test_config_validation():
    for bad in (dict(density_grid=()), dict(density_grid=(0.5, 0.3)), dict(density_grid=(0.0,)),
                dict(density_grid=(1.0,)), dict(max_neurons=0)):
        with pytest.raises(ValueError):
            BuilderConfig(**bad)


def test_single_grid_entry(stairs):
    rec = tune_first_neuron(stairs, small_config(density_grid=(0.4,)))
    assert rec.chosen_density == 0.4
    assert len(rec.mi_curve) == 1
    assert rec.best_joint_mi == rec.mi_curve[0].joint_mi


def test_one_neuron_build_equals_first_tuning(stairs):
    cfg = small_config(max_neurons=1)
    report = build_population(stairs, cfg)
    assert len(report.iterations) == 1
    assert report.iterations[0] == tune_first_neuron(stairs, cfg)
    assert len(report.final_config) == 1


def test_best_is_max_of_curve_and_determinism(stairs):
    cfg = small_config()
    a = build_population(stairs, cfg)
    b = build_population(stairs, cfg)
    assert a.to_dict() == b.to_dict()
    for it in a.iterations:
        assert it.best_joint_mi == max(p.joint_mi for p in it.mi_curve)
        i = [p.grid_density for p in it.mi_curve].index(it.chosen_density)
        assert it.mi_curve[i].joint_mi == it.best_joint_mi
    assert len(a.iterations) <= cfg.max_neurons


def test_parallel_grid_matches_serial(stairs):
    serial = build_population(stairs, small_config(max_neurons=2))
    threaded = build_population(stairs, small_config(max_neurons=2, workers=4))
    assert serial.iterations == threaded.iterations


def test_frozen_prefix(stairs):
    short = build_population(stairs, small_config(max_neurons=2))
    long = build_population(stairs, small_config(max_neurons=3))
    assert long.final_config.prefix(2) == short.final_config
    assert long.iterations[:2] == short.iterations


def test_add_neuron_leaves_fixed_untouched(stairs):
    cfg = small_config()
    ws = Workspace(stairs, cfg)
    first = tune_first_neuron(stairs, cfg, ws)
    fixed = PopulationConfig((ws.candidate(first.chosen_density).params,), (first.chosen_shift,))
    before = fixed.to_dict()
    rec = add_neuron(stairs, fixed, None, cfg, ws)
    assert fixed.to_dict() == before
    assert rec.neuron_index == 1
    report = build_population(stairs, small_config(max_neurons=2))
    assert rec == report.iterations[1]
    assert rec.pid is not None
    assert rec.pid["joint"] == rec.best_joint_mi


def test_duplicate_candidate_reproduces_solo_windows(stairs):
    cfg = small_config()
    ws = Workspace(stairs, cfg)
    first = tune_first_neuron(stairs, cfg, ws)
    d = first.chosen_density
    solo = next(p for p in first.mi_curve if p.grid_density == d)
    dup_cfg = small_config(density_grid=(d,))
    ws2 = Workspace(stairs, dup_cfg)
    fixed = PopulationConfig((ws2.candidate(d).params,), (ws2.candidate(d).shift,))
    rec = add_neuron(stairs, fixed, [ws2.candidate(d).bits], dup_cfg, ws2)
    assert rec.mi_curve[0].per_window_bits == solo.per_window_bits
    assert rec.best_joint_mi == solo.joint_mi


def test_relative_gain_stop(levels):
    cfg = small_config(max_neurons=3, min_relative_gain=0.5)
    report = build_population(levels, cfg)
    assert len(report.iterations) == 1
    assert report.stop_reason == "min_relative_gain"
    free = build_population(levels, small_config(max_neurons=2))
    gain = (free.iterations[1].best_joint_mi - free.iterations[0].best_joint_mi)
    assert gain / free.iterations[0].best_joint_mi < 0.5


def test_exhaustive_single_neuron_matches_greedy(stairs):
    cfg = small_config()
    res = exhaustive_search(stairs, cfg, 1)
    first = tune_first_neuron(stairs, cfg)
    assert res.densities == (first.chosen_density,)
    assert res.joint_mi == first.best_joint_mi
    assert res.evaluations == len(GRID5)


def test_exhaustive_budget(stairs):
    with pytest.raises(BudgetExceeded):
        exhaustive_search(stairs, BuilderConfig(), 4)


def test_random_trials_never_beat_exhaustive(stairs):
    cfg = small_config(max_neurons=2)
    ws = Workspace(stairs, cfg)
    best = exhaustive_search(stairs, cfg, 2, workspace=ws)
    assert best.evaluations == 25
    trials = random_baseline(stairs, cfg, 5, with_accuracy=False, workspace=ws)
    again = random_baseline(stairs, cfg, 5, with_accuracy=False, workspace=Workspace(stairs, cfg))
    assert trials == again
    assert len(trials) == 5
    for t in trials:
        assert all(d in GRID5 for d in t["densities"])
        assert t["per_m"][1]["joint_mi"] <= best.joint_mi


def test_accuracy_objective(stairs):
    res = exhaustive_search(stairs, small_config(density_grid=(0.2, 0.6)), 1, objective="accuracy")
    assert 0.0 <= res.accuracy <= 1.0
    assert res.joint_mi is not None


def test_report_round_trip(stairs):
    report = build_population(stairs, small_config(max_neurons=2))
    text = json.dumps(report.to_dict())
    back = TuneReport.from_dict(json.loads(text))
    assert back.iterations == report.iterations
    assert back.final_config == report.final_config
    assert json.dumps(back.to_dict()) == text


# --- independent reimplementation of the first-neuron search -------------------

def oracle_curve(dataset, record, cfg):
    """Recompute every grid point from its recorded threshold with slow references."""
    signals = [s.samples.tolist() for s in dataset]
    out = []
    for point in record.mi_curve:
        trains = [lif_reference(x, point.threshold, cfg.decay)[0] for x in signals]
        density = sum(map(sum, trains)) / sum(map(len, trains))
        assert density == pytest.approx(point.achieved_density, abs=1e-12)
        per_shift = []
        for s in range(cfg.max_shift + 1):
            bits = []
            for t in cfg.window_lengths:
                pairs = window_pairs_reference(signals, [trains], t, (s,))
                bits.append(mixed_mi_reference([p[0] for p in pairs],
                                               [p[1] for p in pairs], cfg.k))
            a, _, _ = quadratic_fit_reference(cfg.window_lengths, bits)
            per_shift.append(a)
        best = max(range(len(per_shift)), key=lambda s: (per_shift[s], -s))
        out.append((best, per_shift[best]))
    return out


def test_first_neuron_matches_reference_search():
    ds = staircase_dataset(n_per_class=2, length=40, noise=0.02, seed=11)
    cfg = small_config(window_lengths=(1, 2, 3), max_shift=2)
    rec = tune_first_neuron(ds, cfg)
    ref = oracle_curve(ds, rec, cfg)
    for point, (shift, bits) in zip(rec.mi_curve, ref):
        assert point.shift == shift
        assert point.joint_mi == pytest.approx(bits, abs=1e-9)
    values = [b for _, b in ref]
    top = max(values)
    # lowest density among the (numerically) best points
    expected = next(p.grid_density for p, v in zip(rec.mi_curve, values) if v >= top - 1e-12)
    assert rec.chosen_density == expected
