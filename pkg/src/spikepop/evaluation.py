"""Spike-count features, stratified splits and a k-nearest-neighbour baseline.

The classifier is pluggable: anything callable as
``clf(train_X, train_y, test_X) -> predicted labels`` can replace the
built-in :func:`knn_predict` (an RBF SVM adapter, for instance).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, asdict
from typing import Callable, Sequence

import numpy as np

from .lif import PopulationConfig, encode_flat
from .seeding import derived_rng
from .signal import Dataset, SpikeTrain

DEFAULT_BINS = 20
DEFAULT_OVERLAP = 0.5
DEFAULT_NEIGHBORS = 5
DEFAULT_TRAIN_FRACTION = 0.8


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray
    label: str | None = None

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class EvalResult:
    accuracy: float
    per_class_accuracy: dict
    train_size: int
    test_size: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EvalConfig:
    bins: int = DEFAULT_BINS
    overlap: float = DEFAULT_OVERLAP
    neighbors: int = DEFAULT_NEIGHBORS
    train_fraction: float = DEFAULT_TRAIN_FRACTION
    seed: int = 0
    classifier: Callable | None = field(default=None, compare=False)


def _half_up(v):
    return np.floor(np.asarray(v) + 0.5).astype(np.int64)


def bin_edges(length: int, bins: int = DEFAULT_BINS, overlap: float = DEFAULT_OVERLAP):
    """Start/stop sample indices of ``bins`` equally spaced overlapping bins.

    The bin width is chosen so the bins exactly span ``length`` samples;
    starts and widths are rounded half-up and stops clamped to ``length``.
    """
    if bins < 1:
        raise ValueError("bins must be >= 1")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must lie in [0, 1)")
    width = length / (1 + (bins - 1) * (1 - overlap))
    hop = width * (1 - overlap)
    w = int(_half_up(width))
    if length < bins or w < 1:
        raise ValueError(f"train of length {length} shorter than one of {bins} bins")
    start = _half_up(np.arange(bins) * hop)
    stop = np.minimum(start + w, length)
    return start, stop


def extract_features(trains: Sequence[SpikeTrain], bins: int = DEFAULT_BINS,
                     overlap: float = DEFAULT_OVERLAP, label=None) -> FeatureVector:
    """Mean spike count per bin, neuron blocks concatenated in order."""
    parts = []
    for t in trains:
        start, stop = bin_edges(len(t), bins, overlap)
        cs = np.r_[0, np.cumsum(t.bits, dtype=np.int64)]
        parts.append((cs[stop] - cs[start]) / (stop - start))
    return FeatureVector(np.concatenate(parts), label)


def feature_matrix(dataset: Dataset, flat_trains, bins=DEFAULT_BINS, overlap=DEFAULT_OVERLAP):
    """Feature rows for every stimulus from per-neuron flat spike arrays."""
    _, offsets = dataset.flat
    rows = np.empty((len(dataset), bins * len(flat_trains)))
    edges = {}
    for s in range(len(dataset)):
        a, b = int(offsets[s]), int(offsets[s + 1])
        n = b - a
        if n not in edges:
            edges[n] = bin_edges(n, bins, overlap)
        start, stop = edges[n]
        for j, bits in enumerate(flat_trains):
            cs = np.r_[0, np.cumsum(bits[a:b], dtype=np.int64)]
            rows[s, j * bins:(j + 1) * bins] = (cs[stop] - cs[start]) / (stop - start)
    return rows


def write_features_csv(target, features, labels) -> None:
    """CSV with header ``label,f0,f1,...``; ``target`` is a path or text stream."""
    features = np.asarray(features)
    if hasattr(target, "write"):
        _write_rows(target, features, labels)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, features, labels)


def _write_rows(fh, features, labels):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["label"] + [f"f{i}" for i in range(features.shape[1])])
    for lab, row in zip(labels, features):
        w.writerow([lab] + [repr(float(v)) for v in row])


def split_indices(labels: Sequence[str], train_fraction: float = DEFAULT_TRAIN_FRACTION,
                  seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Stratified random split of stimulus indices.

    Each class contributes ``round(fraction * size)`` stimuli to training
    (at least one); singleton classes go entirely to training.
    """
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    labels = list(labels)
    if len(labels) < 2:
        raise ValueError("need at least two stimuli to split")
    rng = derived_rng(seed, "split")
    train, test = [], []
    for lab in sorted(set(labels)):
        idx = np.array([i for i, l in enumerate(labels) if l == lab])
        idx = idx[rng.permutation(idx.size)]
        n_train = min(idx.size, max(1, int(np.floor(train_fraction * idx.size + 0.5))))
        train.extend(idx[:n_train])
        test.extend(idx[n_train:])
    return np.sort(np.array(train, dtype=np.int64)), np.sort(np.array(test, dtype=np.int64))


def split_dataset(dataset: Dataset, train_fraction: float = DEFAULT_TRAIN_FRACTION,
                  seed: int = 0) -> tuple[Dataset, Dataset | None]:
    tr, te = split_indices(dataset.labels, train_fraction, seed)
    return dataset.subset(tr), (dataset.subset(te) if te.size else None)


def knn_predict(train_X, train_y, test_X, neighbors: int = DEFAULT_NEIGHBORS) -> list:
    """Majority vote among the nearest training rows (Euclidean).

    Equal distances keep training order; a tied vote goes to the label with
    the smallest summed neighbour distance, then to the label met first.
    """
    train_X = np.asarray(train_X, dtype=np.float64)
    test_X = np.asarray(test_X, dtype=np.float64)
    train_y = list(train_y)
    if not 1 <= neighbors <= len(train_y):
        raise ValueError(f"neighbors must be in 1..{len(train_y)}")
    if train_X.ndim != 2 or test_X.ndim != 2 or train_X.shape[1] != test_X.shape[1]:
        raise ValueError("mismatched feature lengths")
    preds = []
    for chunk in range(0, test_X.shape[0], 256):
        q = test_X[chunk:chunk + 256]
        d2 = ((q[:, None, :] - train_X[None, :, :]) ** 2).sum(axis=2)
        order = np.argsort(d2, axis=1, kind="stable")[:, :neighbors]
        for row, nn in zip(d2, order):
            votes: dict = {}
            dist: dict = {}
            for i in nn:
                lab = train_y[i]
                votes[lab] = votes.get(lab, 0) + 1
                dist[lab] = dist.get(lab, 0.0) + float(np.sqrt(row[i]))
            top = max(votes.values())
            tied = [lab for lab in votes if votes[lab] == top]
            preds.append(min(tied, key=lambda lab: dist[lab]))
    return preds


def _score(pred, truth, train_size, seed) -> EvalResult:
    truth = list(truth)
    correct = [p == t for p, t in zip(pred, truth)]
    per_class = {}
    for lab in sorted(set(truth)):
        hits = [c for c, t in zip(correct, truth) if t == lab]
        per_class[lab] = sum(hits) / len(hits)
    return EvalResult(sum(correct) / len(truth), per_class, train_size, len(truth), seed)


def classify(train_features: Sequence[FeatureVector], test_features: Sequence[FeatureVector],
             neighbors: int = DEFAULT_NEIGHBORS, seed: int = 0, classifier=None) -> EvalResult:
    """Fit on labelled training vectors and score the labelled test vectors."""
    if not test_features:
        raise ValueError("empty test set")
    lengths = {len(f) for f in train_features} | {len(f) for f in test_features}
    if len(lengths) != 1:
        raise ValueError("mismatched feature lengths")
    tx = np.stack([f.values for f in train_features])
    ty = [f.label for f in train_features]
    qx = np.stack([f.values for f in test_features])
    if classifier is None:
        pred = knn_predict(tx, ty, qx, neighbors)
    else:
        pred = list(classifier(tx, ty, qx))
    return _score(pred, [f.label for f in test_features], len(ty), seed)


def evaluate_pipeline(dataset: Dataset, population: PopulationConfig,
                      eval_config: EvalConfig = EvalConfig()) -> EvalResult:
    """Encode every stimulus, bin the spikes, split, classify and score."""
    x, offsets = dataset.flat
    flat = [encode_flat(x, offsets, p) for p in population.neurons]
    return evaluate_features(dataset, feature_matrix(dataset, flat, eval_config.bins,
                                                     eval_config.overlap), eval_config)


def evaluate_features(dataset: Dataset, features, eval_config: EvalConfig) -> EvalResult:
    labels = dataset.labels
    tr, te = split_indices(labels, eval_config.train_fraction, eval_config.seed)
    if te.size == 0:
        raise ValueError("split left no test stimuli")
    train = [FeatureVector(features[i], labels[i]) for i in tr]
    test = [FeatureVector(features[i], labels[i]) for i in te]
    neighbors = min(eval_config.neighbors, len(train))
    return classify(train, test, neighbors, eval_config.seed, eval_config.classifier)
