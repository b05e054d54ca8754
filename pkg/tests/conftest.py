from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fcpd import FunctionalSample, Grid

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def random_sample(rng: np.random.Generator, n: int, s: int, r: int = 1, scale: float = 1.0) -> FunctionalSample:
    return FunctionalSample(scale * rng.standard_normal((n, r, s)), Grid.unit(s))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
