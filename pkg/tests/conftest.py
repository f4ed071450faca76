import os

import numpy as np
import pytest

from dicke_quench.model import ModelParams

# Heavy spectral artifacts persist here across test runs; safe to delete,
# everything is recomputed on demand (the acceptance suite then takes hours).
ARTIFACT_CACHE = os.environ.get("DICKE_QUENCH_CACHE", os.path.expanduser("~/.cache/dicke_quench"))


@pytest.fixture(scope="session")
def artifact_cache():
    os.makedirs(ARTIFACT_CACHE, exist_ok=True)
    return ARTIFACT_CACHE


@pytest.fixture
def small_params():
    """Superradiant working point tiny enough for brute-force cross-checks."""
    return ModelParams(4, 1.0, 1.0, 1.0, 60)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_state(params: ModelParams, rng: np.random.Generator, complex_amplitudes: bool = True):
    from dicke_quench.states import StateVector

    v = rng.standard_normal(params.dimension)
    if complex_amplitudes:
        v = v + 1j * rng.standard_normal(params.dimension)
    return StateVector(params, v / np.linalg.norm(v))
