"""Mixed continuous/discrete mutual information, window extrapolation and PID atoms."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from typing import Callable

import numpy as np
from scipy.special import digamma

from ._backend import kernels
from .patterns import DEFAULT_STRIDE_CAP, _as_flat, extract_pairs

DEFAULT_K = 3
DEFAULT_WINDOWS = (2, 4, 8, 16, 32)

LN2 = math.log(2.0)


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class MiEstimate:
    """Extrapolated MI (bits) with the per-window values it was fitted from."""

    bits: float
    window_lengths: tuple[int, ...]
    per_window_bits: tuple[float, ...]
    fit_coefficients: tuple[float, float, float]
    sample_count: int
    k: int
    per_window_samples: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "MiEstimate":
        per_window = tuple(math.nan if v is None else float(v) for v in d["per_window_bits"])
        return cls(float(d["bits"]), tuple(d["window_lengths"]), per_window,
                   tuple(d["fit_coefficients"]), int(d["sample_count"]), int(d["k"]),
                   tuple(d.get("per_window_samples", ())))


def neighbour_terms(amplitudes, labels, k: int = DEFAULT_K):
    """Per-sample ``(k_i, m_i, N_w)`` after dropping singleton classes.

    ``k_i`` is the neighbour count used (``k`` clamped to class size - 1),
    ``m_i`` the number of samples strictly closer than the k-th same-class
    neighbour (the sample itself included) and ``N_w`` the class size.
    When the k-th neighbour sits at distance zero, ``k_i`` and ``m_i``
    become the counts of exactly equal amplitudes within the class and
    overall.
    """
    x = np.asarray(amplitudes, dtype=np.float64)
    lab = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(lab)
    keep = counts[lab] > 1
    x, lab = x[keep], lab[keep]
    if x.size == 0:
        return (np.empty(0, np.int64),) * 3
    order = np.lexsort((x, lab))
    xs = np.ascontiguousarray(x[order])
    ls = lab[order]
    class_first = np.r_[True, ls[1:] != ls[:-1]]
    block = np.cumsum(class_first) - 1
    block_start = np.flatnonzero(class_first)
    block_stop = np.r_[block_start[1:], xs.size]
    start = np.ascontiguousarray(block_start[block], dtype=np.int64)
    stop = np.ascontiguousarray(block_stop[block], dtype=np.int64)
    xg = np.sort(xs)
    k_i, m_i = kernels.neighbour_counts(xs, start, stop, xg, int(k))
    return np.asarray(k_i), np.asarray(m_i), (stop - start)


def mi_from_terms(k_i, m_i, n_w) -> float:
    n = k_i.size
    nats = (digamma(n) + np.mean(digamma(k_i)) - np.mean(digamma(n_w))
            - np.mean(digamma(m_i)))
    return float(nats / LN2)


def mi_mixed(pairs, k: int = DEFAULT_K, labels=None) -> float:
    """Nearest-neighbour MI in bits between amplitude and pattern class.

    Parameters
    ----------
    pairs : PairSet or array_like
        A :class:`PairSet`, or raw amplitudes when ``labels`` is given.
    k : int
        Neighbour count (3 is the customary choice).
    labels : array_like of int, optional
        Discrete symbol per sample, used with raw amplitudes.

    Returns
    -------
    float
        MI in bits. Not clipped; small negative values are estimator noise.
    """
    if labels is None:
        amplitudes, labels = pairs.amplitudes, pairs.labels
    else:
        amplitudes = pairs
        labels = np.unique(np.asarray(labels), return_inverse=True)[1].ravel()
    amplitudes = np.asarray(amplitudes, dtype=np.float64)
    if k < 1:
        raise EstimationError("k must be >= 1")
    if amplitudes.size < k + 1:
        raise EstimationError(f"need at least k+1={k + 1} samples, got {amplitudes.size}")
    labels = np.asarray(labels, dtype=np.int64)
    keep = np.bincount(labels)[labels] > 1
    if not keep.any():
        raise EstimationError("every sample sits in a singleton pattern class")
    x, lab = amplitudes[keep], labels[keep]
    if lab.min() == lab.max() or x.min() == x.max():
        return 0.0  # constant pattern or constant amplitude: nothing shared
    return mi_from_terms(*neighbour_terms(x, lab, k))


def extrapolate_mi(points):
    """Fit ``I(T) = a + b/T + c/T**2`` and return ``((a, b, c), a)``.

    Least squares over all points; exact interpolation with three.
    """
    pts = [(float(t), float(v)) for t, v in points]
    ts = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    if np.unique(ts).size < 3:
        raise EstimationError("insufficient points: need at least 3 distinct window lengths")
    if np.any(ts <= 0):
        raise EstimationError("window lengths must be positive")
    u = 1.0 / ts
    design = np.stack([np.ones_like(u), u, u * u], axis=1)
    # column scaling keeps the normal equations well conditioned for long windows
    scale = np.abs(design).max(axis=0)
    coef, _, rank, _ = np.linalg.lstsq(design / scale, ys, rcond=None)
    if rank < 3:
        raise EstimationError("singular design matrix")
    a, b, c = (coef / scale).tolist()
    return (a, b, c), a


def mi_windowed(dataset, trains, window_lengths=DEFAULT_WINDOWS, shifts=None,
                k: int = DEFAULT_K, stride: int = 1,
                stride_cap: int | None = DEFAULT_STRIDE_CAP) -> MiEstimate:
    """Extrapolated MI between amplitude and (joint) spike windows.

    A window length at which the estimator is undefined (every pattern
    unique) is recorded as NaN and left out of the fit; at least three
    defined window lengths are required.
    """
    window_lengths = tuple(int(t) for t in window_lengths)
    if len(set(window_lengths)) < 3:
        raise EstimationError("need at least 3 distinct window lengths")
    flat = _as_flat(trains, dataset)
    shifts = (0,) * len(flat) if shifts is None else tuple(shifts)
    per_bits, per_n = [], []
    for t in window_lengths:
        pairs = extract_pairs(dataset, flat, t, shifts, stride, stride_cap)
        try:
            per_bits.append(mi_mixed(pairs, k))
        except EstimationError:
            per_bits.append(math.nan)
        per_n.append(len(pairs))
    ok = [(t, v) for t, v in zip(window_lengths, per_bits) if math.isfinite(v)]
    coef, a = extrapolate_mi(ok)
    return MiEstimate(a, window_lengths, tuple(per_bits), coef, min(per_n), k, tuple(per_n))


# --- partial information decomposition ------------------------------------

@dataclass(frozen=True)
class PidAtoms:
    redundant: float
    unique_1: float
    unique_2: float
    synergy: float
    i1: float
    i2: float
    joint: float

    def to_dict(self) -> dict:
        return asdict(self)


REDUNDANCY_RULES: dict[str, Callable[[float, float, float], float]] = {
    "min": lambda i1, i2, joint: min(i1, i2),
    "zero": lambda i1, i2, joint: 0.0,
}


def pid_two(i1: float, i2: float, joint: float, redundancy_rule="min") -> PidAtoms:
    """Split two-source information into redundant, unique and synergistic parts.

    ``redundancy_rule`` is a name from :data:`REDUNDANCY_RULES` or a callable
    ``(i1, i2, joint) -> redundant``. The remaining atoms follow from the
    usual identities, so they always sum back to ``joint``.
    """
    rule = REDUNDANCY_RULES[redundancy_rule] if isinstance(redundancy_rule, str) else redundancy_rule
    i1, i2, joint = float(i1), float(i2), float(joint)
    red = float(rule(i1, i2, joint))
    u1 = i1 - red
    u2 = i2 - red
    syn = joint - u1 - u2 - red
    return PidAtoms(red, u1, u2, syn, i1, i2, joint)
