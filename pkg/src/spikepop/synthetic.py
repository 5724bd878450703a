"""Small synthetic datasets for tests, benchmarks and demos."""

from __future__ import annotations

import numpy as np

from .seeding import derived_rng
from .signal import Dataset, Stimulus


def staircase_dataset(n_per_class: int = 100, n_classes: int = 4, length: int = 96,
                      steps: int = 4, noise: float = 0.05, level_range=(0.1, 1.0),
                      gain_jitter: float = 0.2, seed: int = 0) -> Dataset:
    """Labelled piecewise-constant signals, one random staircase template per class.

    Every stimulus is its class template with a random gain in
    ``1 +/- gain_jitter``,
    a random offset of up to two samples and additive Gaussian noise.
    Amplitudes stay non-negative.
    """
    rng = derived_rng(seed, "staircase")
    templates = rng.uniform(*level_range, size=(n_classes, steps))
    edges = np.linspace(0, length, steps + 1).astype(int)
    stimuli = []
    for i in range(n_per_class):
        for c in range(n_classes):
            base = np.empty(length)
            for s in range(steps):
                base[edges[s]:edges[s + 1]] = templates[c, s]
            base = np.roll(base, int(rng.integers(-2, 3)))
            x = base * rng.uniform(1 - gain_jitter, 1 + gain_jitter) + rng.normal(0.0, noise, length)
            stimuli.append(Stimulus(f"class{c}", np.clip(x, 0.0, None)))
    return Dataset(tuple(stimuli))


def constant_dataset(value: float = 1.0, length: int = 100, n: int = 1, label: str = "c") -> Dataset:
    return Dataset(tuple(Stimulus(label, np.full(length, float(value))) for _ in range(n)))


def desk_fixture(n_per_class: int = 100, seed: int = 0) -> Dataset:
    """Four-class staircase task where one neuron leaves accuracy headroom.

    Class templates differ by a few percent of amplitude, comparable to the
    per-stimulus gain spread, so a single rate code resolves them poorly.
    """
    return staircase_dataset(n_per_class=n_per_class, noise=0.1, steps=4,
                             level_range=(0.45, 0.55), gain_jitter=0.1, seed=seed)
