import os

import hypothesis
import numpy as np
import pytest

from npiv import DgpSpec, sample_dataset

hypothesis.settings.register_profile(
    "suite", deadline=None, max_examples=25, derandomize=True
)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "suite"))


@pytest.fixture(scope="session")
def spec():
    return DgpSpec()


@pytest.fixture(scope="session")
def dataset_200(spec):
    return sample_dataset(spec, 200, 2024)


@pytest.fixture(scope="session")
def dataset_20(spec):
    return sample_dataset(spec, 20, 42)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
