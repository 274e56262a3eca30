import numpy as np
import pytest

from recordpot import load_reference_model
from recordpot.model import DisciplineParams, GlobalModel
from recordpot.simgen import SimConfig, simulate


@pytest.fixture(scope="session")
def paper():
    """(model, records) committed from the published estimates."""
    return load_reference_model()


@pytest.fixture(scope="session")
def paper_model(paper):
    return paper[0]


@pytest.fixture(scope="session")
def paper_records(paper):
    return paper[1]


@pytest.fixture(scope="session")
def toy_model():
    """Small two-discipline model used by synthetic-data tests."""
    return GlobalModel(
        xi=-0.2,
        disciplines={
            "A": DisciplineParams(mu0=-1000.0, sigma0=20.0, beta=2.0, gamma=5.0, delta=0.5),
            "B": DisciplineParams(mu0=-2000.0, sigma0=40.0, beta=-1.0, gamma=8.0, delta=1.0),
        },
        thresholds={"A": -1030.0, "B": -2075.0},
    )


@pytest.fixture(scope="session")
def toy_data(toy_model):
    return simulate(SimConfig(model=toy_model, horizon=(2001, 2019), seed=42))


def random_valid_model(rng) -> GlobalModel:
    """A random single-discipline model that is feasible over 2001-2030."""
    while True:
        xi = rng.uniform(-0.5, -0.05)
        p = DisciplineParams(
            mu0=rng.uniform(-9000, -1000),
            sigma0=rng.uniform(10, 120),
            beta=rng.uniform(-3, 12),
            gamma=rng.uniform(-5, 30),
            delta=rng.uniform(0, 4),
        )
        m = GlobalModel(xi=xi, disciplines={"D": p}, thresholds={"D": p.mu0 - 2 * p.sigma0})
        try:
            from recordpot.model import scale_at, threshold_scale_at

            if all(scale_at(m, "D", y) > 0 and threshold_scale_at(m, "D", y) > 0
                   for y in range(2001, 2031)):
                return m
        except Exception:
            continue
