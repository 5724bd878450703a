import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import window_pairs_reference
from spikepop.infotheory import mi_windowed
from spikepop.patterns import (MAX_WINDOW, best_shift, effective_stride, extract_pairs,
                               pack_window, unpack_window, valid_count)
from spikepop.signal import Dataset, SpikeTrain, Stimulus


def single(x, bits, label="a"):
    return Dataset((Stimulus(label, x),)), [[SpikeTrain(bits)]]


def test_three_sample_example():
    ds, trains = single([0.1, 0.2, 0.3], [1, 0, 1])
    ps = extract_pairs(ds, trains, 2, (0,))
    assert ps.codes[:, 0].tolist() == [2, 1]
    np.testing.assert_array_equal(ps.amplitudes, [0.2, 0.3])


def test_single_bit_window_is_the_train():
    bits = [0, 1, 1, 0, 1, 0, 0, 1]
    ds, trains = single(np.arange(8.0), bits)
    ps = extract_pairs(ds, trains, 1, (0,))
    assert ps.codes[:, 0].tolist() == bits


def test_identical_trains_give_diagonal_joint_codes():
    rng = np.random.default_rng(0)
    bits = rng.integers(0, 2, 60)
    ds = Dataset((Stimulus("a", rng.normal(size=60)),))
    t = SpikeTrain(bits)
    ps = extract_pairs(ds, [[t, t]], 5, (0, 0))
    assert np.array_equal(ps.codes[:, 0], ps.codes[:, 1])


def test_shift_moves_the_window_later():
    # the window for x[n] with shift s ends at n + s
    bits = [0, 0, 0, 1, 0, 0]
    ds, trains = single(np.arange(6.0), bits)
    ps = extract_pairs(ds, trains, 1, (3,))
    np.testing.assert_array_equal(ps.amplitudes, [0, 1, 2])
    assert ps.codes[:, 0].tolist() == [1, 0, 0]


@given(st.lists(st.integers(0, 1), min_size=1, max_size=MAX_WINDOW))
def test_pack_round_trip(bits):
    code = pack_window(bits)
    assert unpack_window(code, len(bits)) == bits
    assert code < 2 ** len(bits)


def test_codes_match_packing_of_window_bits():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, 200)
    ds, trains = single(rng.normal(size=200), bits)
    ps = extract_pairs(ds, trains, MAX_WINDOW, (2,))
    for row, n in enumerate(range(MAX_WINDOW - 1, 200 - 2)):
        window = bits[n + 2 - MAX_WINDOW + 1:n + 3].tolist()
        assert unpack_window(int(ps.codes[row, 0]), MAX_WINDOW) == window


@settings(max_examples=80, deadline=None)
@given(st.data())
def test_pairs_match_brute_force(data):
    n_stim = data.draw(st.integers(1, 3))
    m = data.draw(st.integers(1, 3))
    T = data.draw(st.integers(1, 6))
    shifts = tuple(data.draw(st.lists(st.integers(0, 4), min_size=m, max_size=m)))
    stride = data.draw(st.integers(1, 4))
    lengths = [data.draw(st.integers(T + max(shifts), 30)) for _ in range(n_stim)]
    rng = np.random.default_rng(data.draw(st.integers(0, 1000)))
    signals = [rng.normal(size=n) for n in lengths]
    per_neuron = [[rng.integers(0, 2, n) for n in lengths] for _ in range(m)]
    ds = Dataset(tuple(Stimulus("a", x) for x in signals))
    trains = [[SpikeTrain(per_neuron[j][s]) for j in range(m)] for s in range(n_stim)]
    ps = extract_pairs(ds, trains, T, shifts, stride=stride, stride_cap=None)
    ref = window_pairs_reference(signals, per_neuron, T, shifts, stride)
    assert len(ps) == len(ref)
    assert len(ps) == sum((n - T - max(shifts)) // stride + 1 for n in lengths)
    assert len(ps) == sum(valid_count(n, T, max(shifts), stride) for n in lengths)
    assert ps.amplitudes.tolist() == [r[0] for r in ref]
    assert [tuple(int(c) for c in row) for row in ps.codes] == [r[1] for r in ref]


def test_marginal_of_joint_equals_solo_with_common_shift():
    rng = np.random.default_rng(4)
    bits = [rng.integers(0, 2, 80) for _ in range(3)]
    ds = Dataset((Stimulus("a", rng.normal(size=80)),))
    trains = [[SpikeTrain(b) for b in bits]]
    joint = extract_pairs(ds, trains, 4, (1, 1, 1))
    for j in range(3):
        solo = extract_pairs(ds, [[trains[0][j]]], 4, (1,))
        assert np.array_equal(joint.restrict([j]).codes, solo.codes)
        assert np.array_equal(joint.amplitudes, solo.amplitudes)


def test_labels_enumerate_joint_codes():
    ds, _ = single(np.arange(6.0), [0] * 6)
    a = SpikeTrain([1, 0, 1, 1, 0, 1])
    b = SpikeTrain([0, 0, 1, 1, 1, 1])
    ps = extract_pairs(ds, [[a, b]], 1, (0, 0))
    labels = ps.labels
    pairs = list(zip(a.bits, b.bits))
    for i in range(6):
        for j in range(6):
            assert (labels[i] == labels[j]) == (pairs[i] == pairs[j])


def test_errors():
    ds, trains = single(np.arange(5.0), [0, 1, 0, 1, 0])
    with pytest.raises(ValueError):
        extract_pairs(ds, trains, 0, (0,))
    with pytest.raises(ValueError):
        extract_pairs(ds, trains, 64, (0,))
    with pytest.raises(ValueError):
        extract_pairs(ds, trains, 4, (2,))
    with pytest.raises(ValueError):
        extract_pairs(ds, trains, 2, (-1,))
    with pytest.raises(ValueError):
        extract_pairs(ds, trains, 2, (0, 0))


def test_stride_cap_raises_stride():
    ds = Dataset(tuple(Stimulus("a", np.zeros(1000)) for _ in range(120)))
    s = effective_stride(ds, 8, 0, 1, 50_000)
    assert s == 3
    assert 120 * valid_count(1000, 8, 0, s) <= 50_000 < 120 * valid_count(1000, 8, 0, s - 1)
    trains = [np.zeros(120_000, dtype=np.uint8)]
    ps = extract_pairs(ds, trains, 8, (0,))
    assert len(ps) <= 50_000 and ps.stride == 3


def delayed_detector(n=6000, delay=3, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, n)
    bits = np.zeros(n, dtype=np.uint8)
    bits[delay:] = x[:-delay] >= 0.5
    return Dataset((Stimulus("a", x),)), [bits]


def test_best_shift_single_candidate():
    ds, trains = delayed_detector()
    shift, est = best_shift(ds, trains, (1, 2, 3), max_shift=0)
    assert shift == 0
    direct = mi_windowed(ds, trains, (1, 2, 3), (0,))
    assert est.bits == direct.bits


def test_best_shift_finds_detector_delay():
    ds, trains = delayed_detector()
    shift, est = best_shift(ds, trains, (1, 2, 3), max_shift=3)
    assert shift == 3
    assert est.bits == pytest.approx(1.0, abs=0.05)
    for s in range(3):
        assert mi_windowed(ds, trains, (1, 2, 3), (s,)).bits < 0.2


def test_best_shift_constant_amplitude():
    rng = np.random.default_rng(2)
    ds = Dataset((Stimulus("a", np.full(3000, 0.7)),))
    bits = [rng.integers(0, 2, 3000).astype(np.uint8)]
    shift, est = best_shift(ds, bits, (1, 2, 3), max_shift=4)
    assert shift == 0
    assert est.bits == 0.0
