import numpy as np
import pytest

from qatm.dynamics import evolve
from qatm.model import ScenarioConfig


@pytest.fixture(scope="session")
def traj_cache():
    """Shared trajectory cache so expensive evolutions run once per session."""
    return {}


@pytest.fixture(scope="session")
def get_traj(traj_cache):
    def _get(config: ScenarioConfig, variant: str = "coherent_S"):
        key = (tuple(sorted(config.as_dict().items())), variant)
        if key not in traj_cache:
            traj_cache[key] = evolve(config, variant)
        return traj_cache[key]
    return _get


@pytest.fixture(scope="session")
def cycle_a_config():
    return ScenarioConfig()  # T_M1 = 0.1 is below the boundary 0.5


@pytest.fixture(scope="session")
def cycle_b_config():
    return ScenarioConfig(T_M1=0.8)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)


def random_density_matrix(rng, dim: int) -> np.ndarray:
    """Haar-ish random full-rank state for property checks."""
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    m = a @ a.conj().T
    return m / np.trace(m)


def random_pure_state(rng, dim: int) -> np.ndarray:
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())
