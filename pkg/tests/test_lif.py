import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import lif_reference
from spikepop import _backend
from spikepop.lif import (CalibrationWarning, LifParams, PopulationConfig, calibrate_threshold,
                          default_bounds, encode_flat, encode_population, lif_encode)
from spikepop.signal import Dataset, Stimulus, mean_density, spike_density
from spikepop.synthetic import constant_dataset

backends = [pytest.param(_backend.fallback, id="python")]
if _backend.compiled is not None:
    backends.append(pytest.param(_backend.compiled, id="compiled"))


def encode(x, theta, decay=0.5):
    return lif_encode(Stimulus("s", x), LifParams(theta, decay)).bits


def test_params_validation():
    for bad in [(0.0, 0.5), (-1.0, 0.5), (1.0, 0.0), (1.0, 1.0), (1.0, 1.5)]:
        with pytest.raises(ValueError):
            LifParams(*bad)
    assert LifParams(1.0).decay == 0.5


def test_zero_input_never_fires():
    assert not encode(np.zeros(50), 1e-6).any()


def test_constant_input_fires_every_fifth_sample():
    bits = encode(np.ones(100), 1.9)
    assert np.flatnonzero(bits).tolist() == list(range(4, 100, 5))
    assert spike_density(lif_encode(Stimulus("s", np.ones(100)), LifParams(1.9))) == 0.2


def test_low_threshold_fires_every_sample():
    bits = encode(np.ones(30), 0.5)
    assert bits.all()


def test_equality_fires():
    # 1 + 0.5 = 1.5 exactly: the comparison is inclusive
    assert encode([1.0, 1.0], 1.5).tolist() == [0, 1]


@pytest.mark.parametrize("kern", backends)
def test_kernels_match_reference(kern):
    rng = np.random.default_rng(0)
    for _ in range(30):
        lengths = rng.integers(1, 60, size=rng.integers(1, 5))
        offsets = np.r_[0, np.cumsum(lengths)].astype(np.int64)
        x = rng.normal(0.3, 1.0, offsets[-1])
        theta = float(rng.uniform(0.05, 2.0))
        decay = float(rng.uniform(0.05, 0.95))
        got = kern.lif_encode_flat(x, offsets, theta, decay)
        expected = []
        for a, b in zip(offsets[:-1], offsets[1:]):
            expected += lif_reference(x[a:b], theta, decay)[0]
        assert np.asarray(got).tolist() == expected


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=80),
       st.floats(0.01, 3.0))
def test_spikes_only_where_potential_reaches_threshold(xs, theta):
    bits = encode(xs, theta)
    ref_bits, potential = lif_reference(xs, theta)
    assert bits.tolist() == ref_bits
    for n in np.flatnonzero(bits):
        assert potential[n] >= theta


def test_density_monotone_in_threshold_and_deterministic():
    rng = np.random.default_rng(7)
    for _ in range(100):
        x = rng.uniform(0, 1, rng.integers(20, 200))
        ladder = np.linspace(0.05, 2.5, 20)
        dens = []
        for theta in ladder:
            a = encode(x, theta)
            assert np.array_equal(a, encode(x, theta))
            dens.append(a.mean())
        assert all(d2 <= d1 for d1, d2 in zip(dens, dens[1:]))


def test_population_encoding():
    ds = Dataset((Stimulus("a", np.linspace(0, 1, 40)), Stimulus("b", np.ones(25))))
    single = PopulationConfig((LifParams(0.7),))
    out = encode_population(ds, single)
    assert [len(per) for per in out] == [1, 1]
    for stim, per in zip(ds, out):
        assert per[0] == lif_encode(stim, LifParams(0.7))
    twins = encode_population(ds, PopulationConfig((LifParams(0.7), LifParams(0.7))))
    assert all(per[0] == per[1] for per in twins)
    pair = encode_population(ds, PopulationConfig((LifParams(0.4), LifParams(1.3))))
    for per in pair:
        assert spike_density(per[0]) >= spike_density(per[1])


def test_population_config_round_trip():
    pc = PopulationConfig((LifParams(0.4), LifParams(1.3, 0.7)), (2, 0))
    assert PopulationConfig.from_dict(pc.to_dict()) == pc
    assert pc.prefix(1).shifts == (2,)
    assert len(pc.append(LifParams(2.0), 5)) == 3
    assert PopulationConfig((LifParams(1.0),)).shifts == (0,)
    with pytest.raises(ValueError):
        PopulationConfig(())
    with pytest.raises(ValueError):
        PopulationConfig((LifParams(1.0),), (0, 1))
    with pytest.raises(ValueError):
        PopulationConfig((LifParams(1.0),), (-1,))


def test_calibrate_constant_signal():
    ds = constant_dataset(1.0, length=100, n=3)
    cal = calibrate_threshold(ds, 0.2)
    assert cal.reachable
    assert cal.achieved_density == 0.2
    # every threshold in (1.875, 1.9375] fires on every fifth sample
    assert 1.875 < cal.params.threshold <= 1.9375


def test_calibrate_high_threshold_silences():
    ds = constant_dataset(1.0, length=100)
    cal = calibrate_threshold(ds, 0.01, search_bounds=(1e-6, 1e6))
    assert cal.achieved_density <= 0.01 + 0.005


def test_calibrate_unreachable_target_warns():
    x = np.r_[np.ones(30), np.zeros(70)]
    ds = Dataset((Stimulus("a", x), Stimulus("b", np.roll(x, 40))))
    with pytest.warns(CalibrationWarning):
        cal = calibrate_threshold(ds, 0.5)
    assert not cal.reachable
    assert cal.achieved_density == pytest.approx(0.3)


def test_calibrate_random_targets_hit_tolerance():
    rng = np.random.default_rng(3)
    ds = Dataset(tuple(Stimulus("a", rng.uniform(0, 1, 500)) for _ in range(4)))
    for target in (0.1, 0.3, 0.5, 0.7, 0.9):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            cal = calibrate_threshold(ds, target)
        trains = encode_population(ds, PopulationConfig((cal.params,)))
        achieved = mean_density([per[0] for per in trains])
        assert achieved == cal.achieved_density
        assert abs(achieved - target) <= 0.005


def test_calibrate_validation():
    ds = constant_dataset()
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            calibrate_threshold(ds, bad)
    with pytest.raises(ValueError):
        calibrate_threshold(ds, 0.3, search_bounds=(2.0, 1.0))


def test_default_bounds_bracket():
    ds = constant_dataset(2.0)
    lo, hi = default_bounds(ds, 0.5)
    x, off = ds.flat
    assert encode_flat(x, off, LifParams(lo)).all()
    assert hi == pytest.approx(4.0)
    # the geometric bound is approached but never exceeded
    assert encode_flat(x, off, LifParams(hi * (1 + 1e-12))).sum() == 0
