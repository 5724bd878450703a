import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from spikepop.builder import BuilderConfig, Workspace, build_population  # noqa: E402
from spikepop.synthetic import desk_fixture  # noqa: E402


@pytest.fixture(scope="session")
def desk():
    return desk_fixture()


@pytest.fixture(scope="session")
def desk_build(desk):
    """Greedy three-neuron build on the desk fixture with the default grid (shared)."""
    import time

    cfg = BuilderConfig(max_neurons=3, seed=0)
    ws = Workspace(desk, cfg)
    t0 = time.perf_counter()
    report = build_population(desk, cfg, ws)
    return {"report": report, "workspace": ws, "config": cfg,
            "seconds": time.perf_counter() - t0}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
