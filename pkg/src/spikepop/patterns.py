"""Windowed spike patterns paired with signal amplitudes.

The amplitude ``x[n]`` is paired, for a neuron with latency shift ``s``,
with the ``T`` bits ``w[n+s-T+1] .. w[n+s]``: a causal window moved ``s``
samples later so that spikes emitted with encoder delay line up with the
amplitude that caused them. Bits are packed into an integer with the most
recent bit least significant. Joint patterns are rows of per-neuron codes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_WINDOW = 63
DEFAULT_STRIDE_CAP = 50_000
DEFAULT_MAX_SHIFT = 20


@dataclass(frozen=True, eq=False)
class PairSet:
    """Amplitude samples with their (joint) window codes.

    ``codes`` has shape ``(n_samples, n_neurons)``.
    """

    amplitudes: np.ndarray
    codes: np.ndarray
    window_length: int
    shifts: tuple[int, ...]
    stride: int = 1

    def __len__(self):
        return self.amplitudes.size

    @property
    def labels(self) -> np.ndarray:
        """Dense class index per sample, one class per distinct joint code."""
        if self.codes.shape[1] == 1:
            _, inv = np.unique(self.codes[:, 0], return_inverse=True)
        else:
            _, inv = np.unique(self.codes, axis=0, return_inverse=True)
        return inv.ravel().astype(np.int64)

    def restrict(self, neurons) -> "PairSet":
        neurons = list(neurons)
        return PairSet(self.amplitudes, self.codes[:, neurons], self.window_length,
                       tuple(self.shifts[j] for j in neurons), self.stride)


def pack_window(bits) -> int:
    """Code for a window given oldest-first bits."""
    code = 0
    for b in bits:
        code = (code << 1) | int(b)
    return code


def unpack_window(code: int, window_length: int) -> list[int]:
    """Oldest-first bits of a window code (inverse of :func:`pack_window`)."""
    return [(int(code) >> (window_length - 1 - t)) & 1 for t in range(window_length)]


def valid_count(length: int, window_length: int, max_shift: int, stride: int) -> int:
    span = length - window_length - max_shift
    return span // stride + 1 if span >= 0 else 0


def _as_flat(trains, dataset):
    """Accept per-stimulus lists of SpikeTrain or per-neuron flat arrays."""
    x, offsets = dataset.flat
    if isinstance(trains, np.ndarray) and trains.ndim == 2:
        return [np.asarray(t, dtype=np.uint8) for t in trains]
    trains = list(trains)
    if trains and isinstance(trains[0], np.ndarray):
        return [np.asarray(t, dtype=np.uint8) for t in trains]
    if len(trains) != len(dataset):
        raise ValueError("need one list of trains per stimulus")
    m = len(trains[0])
    flat = []
    for j in range(m):
        parts = []
        for s, per in enumerate(trains):
            if len(per) != m:
                raise ValueError("every stimulus needs the same neuron count")
            if len(per[j]) != offsets[s + 1] - offsets[s]:
                raise ValueError("spike train length differs from its stimulus")
            parts.append(per[j].bits)
        flat.append(np.concatenate(parts))
    return flat


def _time_indices(offsets, window_length, max_shift, stride):
    # amplitude indices n with T-1 <= n <= N-1-max_shift in every stimulus
    starts = offsets[:-1]
    lengths = np.diff(offsets)
    chunks = []
    for a, n in zip(starts, lengths):
        if window_length + max_shift > n:
            raise ValueError(
                f"stimulus of length {n} too short for window {window_length} and shift {max_shift}")
        chunks.append(np.arange(a + window_length - 1, a + n - max_shift, stride, dtype=np.int64))
    return np.concatenate(chunks)


def window_codes(bits: np.ndarray, idx: np.ndarray, window_length: int, shift: int) -> np.ndarray:
    """Codes of the windows ending at ``idx + shift`` in a flat spike array."""
    end = idx + shift
    code = np.zeros(idx.size, dtype=np.uint64)
    for t in range(window_length):
        code |= bits[end - t].astype(np.uint64) << np.uint64(t)
    return code


def effective_stride(dataset, window_length, max_shift, stride=1, cap=DEFAULT_STRIDE_CAP):
    """Smallest stride >= ``stride`` keeping the pair count within ``cap``."""
    lengths = np.diff(dataset.flat[1])
    stride = max(1, int(stride))
    if cap is None:
        return stride
    while sum(valid_count(n, window_length, max_shift, stride) for n in lengths) > cap:
        stride += 1
    return stride


def extract_pairs(dataset, trains, window_length: int, shifts, stride: int = 1,
                  stride_cap: int | None = DEFAULT_STRIDE_CAP) -> PairSet:
    """Pair each amplitude ``x[n]`` with the shifted spike windows of every neuron.

    Parameters
    ----------
    dataset : Dataset
    trains : list of list of SpikeTrain, or list of flat uint8 arrays
        Per stimulus per neuron trains, or one concatenated array per neuron
        aligned with ``dataset.flat``.
    window_length : int
        Window length ``T`` in samples, 1..63.
    shifts : sequence of int
        Per-neuron latency shift; the window of neuron ``j`` ends at
        ``n + shifts[j]``.
    stride : int
        Step between consecutive time indices; raised as needed so the
        total stays within ``stride_cap`` samples.
    """
    if not 1 <= window_length <= MAX_WINDOW:
        raise ValueError(f"window length must be in 1..{MAX_WINDOW}")
    flat = _as_flat(trains, dataset)
    shifts = tuple(int(s) for s in shifts)
    if len(shifts) != len(flat):
        raise ValueError("one shift per neuron required")
    if any(s < 0 for s in shifts):
        raise ValueError("shifts must be non-negative")
    max_shift = max(shifts)
    stride = effective_stride(dataset, window_length, max_shift, stride, stride_cap)
    x, offsets = dataset.flat
    idx = _time_indices(offsets, window_length, max_shift, stride)
    codes = np.empty((idx.size, len(flat)), dtype=np.uint64)
    for j, (bits, s) in enumerate(zip(flat, shifts)):
        codes[:, j] = window_codes(bits, idx, window_length, s)
    return PairSet(x[idx], codes, window_length, shifts, stride)


def best_shift(dataset, train_source, window_lengths, max_shift: int = DEFAULT_MAX_SHIFT,
               k: int = 3, stride: int = 1, stride_cap: int | None = DEFAULT_STRIDE_CAP):
    """Latency shift maximising the extrapolated MI of a single neuron.

    Every shift in ``0..max_shift`` is tried; ties go to the smaller shift
    and shifts where the estimate is undefined are skipped.
    Returns ``(shift, MiEstimate)``.
    """
    from .infotheory import EstimationError, mi_windowed

    if max_shift < 0:
        raise ValueError("max_shift must be >= 0")
    flat = _as_flat(train_source, dataset)
    if len(flat) != 1:
        raise ValueError("best_shift takes single-neuron trains")
    best = None
    error = None
    for s in range(max_shift + 1):
        try:
            est = mi_windowed(dataset, flat, window_lengths, (s,), k=k, stride=stride,
                              stride_cap=stride_cap)
        except EstimationError as exc:
            error = exc
            continue
        if best is None or est.bits > best[1].bits:
            best = (s, est)
    if best is None:
        raise error
    return best
