"""Discrete-time leaky integrate-and-fire encoding and threshold calibration.

The membrane update per sample is ``v <- v * decay + x[n]``; when ``v``
reaches the threshold a spike is written at ``n`` and ``v`` resets to 0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .signal import Dataset, SpikeTrain, Stimulus

DEFAULT_DECAY = 0.5

# bisection stop rule
DENSITY_TOL = 0.005
MAX_BISECTIONS = 50


class CalibrationWarning(UserWarning):
    """Requested spike density cannot be reached within the search bounds."""


@dataclass(frozen=True)
class LifParams:
    threshold: float
    decay: float = DEFAULT_DECAY

    def __post_init__(self):
        if not (self.threshold > 0 and np.isfinite(self.threshold)):
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if not 0 < self.decay < 1:
            raise ValueError(f"decay must lie in (0, 1), got {self.decay}")


@dataclass(frozen=True)
class PopulationConfig:
    """Ordered neurons plus their latency shifts (in samples)."""

    neurons: tuple[LifParams, ...]
    shifts: tuple[int, ...] = None

    def __post_init__(self):
        neurons = tuple(self.neurons)
        if not neurons:
            raise ValueError("population needs at least one neuron")
        shifts = (0,) * len(neurons) if self.shifts is None else tuple(int(s) for s in self.shifts)
        if len(shifts) != len(neurons):
            raise ValueError("one shift per neuron required")
        if any(s < 0 for s in shifts):
            raise ValueError("shifts must be non-negative")
        object.__setattr__(self, "neurons", neurons)
        object.__setattr__(self, "shifts", shifts)

    def __len__(self):
        return len(self.neurons)

    def append(self, params: LifParams, shift: int = 0) -> "PopulationConfig":
        return PopulationConfig(self.neurons + (params,), self.shifts + (int(shift),))

    def prefix(self, m: int) -> "PopulationConfig":
        return PopulationConfig(self.neurons[:m], self.shifts[:m])

    def to_dict(self) -> dict:
        return {
            "neurons": [{"threshold": p.threshold, "decay": p.decay} for p in self.neurons],
            "shifts": list(self.shifts),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PopulationConfig":
        neurons = tuple(LifParams(float(n["threshold"]), float(n.get("decay", DEFAULT_DECAY)))
                        for n in d["neurons"])
        return cls(neurons, tuple(d.get("shifts") or (0,) * len(neurons)))


def encode_flat(x, offsets, params: LifParams) -> np.ndarray:
    """Encode concatenated samples; returns a flat uint8 spike array."""
    return kernels.lif_encode_flat(np.ascontiguousarray(x, dtype=np.float64),
                                   np.ascontiguousarray(offsets, dtype=np.int64),
                                   float(params.threshold), float(params.decay))


def lif_encode(stimulus: Stimulus, params: LifParams) -> SpikeTrain:
    x = stimulus.samples
    bits = encode_flat(x, np.array([0, x.size]), params)
    return SpikeTrain(bits)


def encode_population(dataset: Dataset, config: PopulationConfig) -> list[list[SpikeTrain]]:
    """Per stimulus, one spike train per neuron in neuron order."""
    x, offsets = dataset.flat
    per_neuron = [encode_flat(x, offsets, p) for p in config.neurons]
    out = []
    for s in range(len(dataset)):
        a, b = offsets[s], offsets[s + 1]
        out.append([SpikeTrain(bits[a:b]) for bits in per_neuron])
    return out


@dataclass(frozen=True)
class Calibration:
    params: LifParams
    target_density: float
    achieved_density: float
    reachable: bool = True
    iterations: int = field(default=0, compare=False)


def default_bounds(dataset: Dataset, decay: float) -> tuple[float, float]:
    """Threshold interval covering every achievable density.

    The potential of a signal bounded by ``S`` never exceeds ``S / (1 - decay)``,
    so that upper bound silences the neuron.
    """
    x, _ = dataset.flat
    s_max = float(x.max())
    scale = max(abs(s_max), float(np.abs(x).max()), 1e-12)
    eps = 1e-9 * scale
    hi = s_max / (1.0 - decay) if s_max > 0 else scale / (1.0 - decay)
    return eps, max(hi, 2 * eps)


def calibrate_threshold(dataset: Dataset, target_density: float,
                        decay: float = DEFAULT_DECAY,
                        search_bounds: tuple[float, float] | None = None) -> Calibration:
    """Find the threshold whose mean spike density over ``dataset`` is closest to target.

    Bisection on the threshold (density is non-increasing in it), stopping
    once the density error is within ``DENSITY_TOL`` or after
    ``MAX_BISECTIONS`` steps. If the target lies outside the densities the
    bounds can produce, the nearest achievable setting is returned with
    ``reachable=False`` and a :class:`CalibrationWarning`.
    """
    if not 0 < target_density < 1:
        raise ValueError("target density must lie in (0, 1)")
    lo, hi = default_bounds(dataset, decay) if search_bounds is None else map(float, search_bounds)
    if not 0 < lo < hi:
        raise ValueError("search bounds must satisfy 0 < lo < hi")
    x, offsets = dataset.flat
    total = x.size

    def density(theta):
        return float(encode_flat(x, offsets, LifParams(theta, decay)).sum()) / total

    d_lo, d_hi = density(lo), density(hi)
    best = min(((abs(d_lo - target_density), lo, d_lo), (abs(d_hi - target_density), hi, d_hi)))
    if d_lo < target_density - DENSITY_TOL or d_hi > target_density + DENSITY_TOL:
        err, theta, d = best
        warnings.warn(f"target density {target_density:.3f} unreachable; nearest is {d:.3f}",
                      CalibrationWarning, stacklevel=2)
        return Calibration(LifParams(theta, decay), target_density, d, reachable=False)

    it = 0
    while best[0] > DENSITY_TOL and it < MAX_BISECTIONS:
        it += 1
        mid = 0.5 * (lo + hi)
        d_mid = density(mid)
        cand = (abs(d_mid - target_density), mid, d_mid)
        if cand < best:
            best = cand
        if d_mid > target_density:
            lo = mid
        else:
            hi = mid
    _, theta, d = best
    return Calibration(LifParams(theta, decay), target_density, d, True, it)
