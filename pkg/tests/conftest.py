import numpy as np
import pytest

from retirelab.experiment import EmployeeRecord, PopulationSpec, simulate_population


@pytest.fixture(scope="session")
def default_roster():
    """One fully simulated default roster, shared read-only across tests."""
    return simulate_population(PopulationSpec(), seed=20240901)


def make_record(i, **overrides):
    """Hand-built record with sensible defaults for targeted fixtures."""
    base = dict(
        id=f"T{i:04d}",
        age=30,
        gender="M",
        disadvantaged=False,
        tenure=4.0,
        pre_rate=9.0,
        post_rate=9.0,
        treatment="control",
        clicked=False,
        attrited=False,
    )
    base.update(overrides)
    return EmployeeRecord(**base)


@pytest.fixture
def tiny_rng():
    return np.random.default_rng(1234)
