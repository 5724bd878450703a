"""Stimulus and dataset containers, JSON-lines I/O and spike-train statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class DatasetFormatError(ValueError):
    """A dataset file could not be parsed."""


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Stimulus:
    """One labelled signal ``x[n]``.

    Parameters
    ----------
    label : str
        Class identifier.
    samples : array_like of float
        Signal amplitudes; must be non-empty and finite.
    sample_rate : float, optional
        Informational only.
    """

    label: str
    samples: np.ndarray
    sample_rate: float | None = None

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64).ravel()
        if x.size == 0:
            raise ValueError("stimulus has no samples")
        if not np.all(np.isfinite(x)):
            raise ValueError("non-finite amplitude")
        object.__setattr__(self, "samples", _frozen(x))
        object.__setattr__(self, "label", str(self.label))

    def __len__(self):
        return self.samples.size

    def __eq__(self, other):
        if not isinstance(other, Stimulus):
            return NotImplemented
        return (self.label == other.label
                and self.sample_rate == other.sample_rate
                and np.array_equal(self.samples, other.samples))

    def normalized(self) -> "Stimulus":
        """Min-max rescale to [0, 1]; a constant stimulus maps to zeros."""
        lo, hi = self.samples.min(), self.samples.max()
        if hi > lo:
            x = (self.samples - lo) / (hi - lo)
        else:
            x = np.zeros_like(self.samples)
        return Stimulus(self.label, x, self.sample_rate)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Ordered collection of stimuli."""

    stimuli: tuple[Stimulus, ...]

    def __post_init__(self):
        stimuli = tuple(self.stimuli)
        if not stimuli:
            raise ValueError("dataset needs at least one stimulus")
        object.__setattr__(self, "stimuli", stimuli)

    def __len__(self):
        return len(self.stimuli)

    def __iter__(self):
        return iter(self.stimuli)

    def __getitem__(self, i):
        return self.stimuli[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.stimuli == other.stimuli

    @property
    def class_set(self) -> frozenset[str]:
        return frozenset(s.label for s in self.stimuli)

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.stimuli]

    @cached_property
    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """All samples concatenated plus stimulus offsets (len + 1 entries)."""
        lengths = np.array([len(s) for s in self.stimuli], dtype=np.int64)
        offsets = np.zeros(lengths.size + 1, dtype=np.int64)
        np.cumsum(lengths, out=offsets[1:])
        x = np.concatenate([s.samples for s in self.stimuli])
        x.setflags(write=False)
        offsets.setflags(write=False)
        return x, offsets

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.stimuli[i] for i in indices))

    def normalized(self) -> "Dataset":
        return Dataset(tuple(s.normalized() for s in self.stimuli))


@dataclass(frozen=True, eq=False)
class SpikeTrain:
    """Binary spike train ``w[n]``, one entry per stimulus sample."""

    bits: np.ndarray = field(repr=False)

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1:
            raise ValueError("spike train must be one-dimensional")
        if b.size and not np.all((b == 0) | (b == 1)):
            raise ValueError("spike train entries must be 0 or 1")
        object.__setattr__(self, "bits", _frozen(b.astype(np.uint8)))

    def __len__(self):
        return self.bits.size

    def __eq__(self, other):
        if not isinstance(other, SpikeTrain):
            return NotImplemented
        return np.array_equal(self.bits, other.bits)

    @property
    def spike_indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    @classmethod
    def from_indices(cls, indices: Sequence[int], length: int) -> "SpikeTrain":
        bits = np.zeros(length, dtype=np.uint8)
        idx = np.asarray(indices, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= length):
            raise ValueError("spike index out of range")
        bits[idx] = 1
        return cls(bits)


def spike_density(train: SpikeTrain) -> float:
    """Fraction of samples carrying a spike."""
    if len(train) == 0:
        raise ValueError("empty spike train")
    return float(train.bits.sum()) / len(train)


def mean_density(trains: Iterable[SpikeTrain]) -> float:
    """Total spikes over total samples across ``trains``.

    Weighting by sample count keeps mixed-length collections unbiased and
    reduces to the plain per-train mean when all lengths agree.
    """
    spikes = 0
    samples = 0
    for t in trains:
        spikes += int(t.bits.sum())
        samples += len(t)
    if samples == 0:
        raise ValueError("empty collection of spike trains")
    return spikes / samples


# --- JSON-lines I/O -------------------------------------------------------

FORMATS = ("jsonl",)


def _parse_record(obj, lineno):
    if not isinstance(obj, dict):
        raise DatasetFormatError(f"line {lineno}: expected a JSON object")
    if "label" not in obj or "samples" not in obj:
        raise DatasetFormatError(f"line {lineno}: record needs 'label' and 'samples'")
    label = obj["label"]
    if not isinstance(label, str):
        raise DatasetFormatError(f"line {lineno}: 'label' must be a string")
    samples = obj["samples"]
    if not isinstance(samples, list) or not samples:
        raise DatasetFormatError(f"line {lineno}: 'samples' must be a non-empty array")
    values = []
    for v in samples:
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise DatasetFormatError(f"line {lineno}: non-numeric amplitude {v!r}")
        try:
            f = float(v)
        except ValueError:
            raise DatasetFormatError(f"line {lineno}: non-numeric amplitude {v!r}") from None
        if not math.isfinite(f):
            raise DatasetFormatError(f"line {lineno}: non-finite amplitude {v!r}")
        if isinstance(v, str):
            raise DatasetFormatError(f"line {lineno}: non-numeric amplitude {v!r}")
        values.append(f)
    rate = obj.get("sample_rate")
    if rate is not None and (isinstance(rate, bool) or not isinstance(rate, (int, float))):
        raise DatasetFormatError(f"line {lineno}: 'sample_rate' must be a number")
    return Stimulus(label, np.array(values), None if rate is None else float(rate))


def load_dataset(path, fmt: str = "jsonl") -> Dataset:
    """Read a dataset file.

    Only the JSON-lines format is supported: one object per line with
    ``label`` (str), ``samples`` (array of finite numbers) and an optional
    ``sample_rate``. Blank lines are skipped.

    Raises
    ------
    DatasetFormatError
        On a malformed record (the message carries the line number), a
        non-finite amplitude or an empty file.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown dataset format {fmt!r}")
    stimuli = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {lineno}: {exc.msg}") from None
            stimuli.append(_parse_record(obj, lineno))
    if not stimuli:
        raise DatasetFormatError(f"{path}: empty dataset file")
    return Dataset(tuple(stimuli))


def dataset_to_jsonl(dataset: Dataset) -> str:
    lines = []
    for s in dataset:
        rec = {"label": s.label, "samples": s.samples.tolist()}
        if s.sample_rate is not None:
            rec["sample_rate"] = s.sample_rate
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def save_dataset(dataset: Dataset, path) -> None:
    Path(path).write_text(dataset_to_jsonl(dataset), encoding="utf-8")


def spike_records(dataset: Dataset, trains) -> list[dict]:
    """Spike-train records in stimulus-major, neuron-minor order."""
    records = []
    for stim, per_neuron in zip(dataset, trains):
        for j, t in enumerate(per_neuron):
            records.append({
                "label": stim.label,
                "neuron_index": j,
                "spike_indices": t.spike_indices.tolist(),
                "length": len(t),
            })
    return records


def read_spike_trains(path) -> list[tuple[str, int, SpikeTrain]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                train = SpikeTrain.from_indices(rec["spike_indices"], int(rec["length"]))
                out.append((rec["label"], int(rec["neuron_index"]), train))
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetFormatError(f"line {lineno}: {exc}") from None
    return out
