"""Per-purpose random streams derived from one top-level seed."""

import zlib

import numpy as np


def derived_rng(seed: int, purpose: str) -> np.random.Generator:
    """Independent generator for ``purpose`` (e.g. ``"subset"``, ``"split"``)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), zlib.crc32(purpose.encode())]))
