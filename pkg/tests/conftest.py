import numpy as np
import pytest

from gifslab.gallery import (
    averaging_fde_system,
    doubling_system,
    mixed_sign_system,
)


@pytest.fixture(scope="session")
def doubling():
    return doubling_system()


@pytest.fixture(scope="session")
def mixed_sign():
    return mixed_sign_system()


@pytest.fixture(scope="session")
def averaging_fde():
    return averaging_fde_system()


@pytest.fixture(scope="session")
def all_examples(doubling, mixed_sign, averaging_fde):
    return {"doubling": doubling, "mixed_sign": mixed_sign, "averaging_fde": averaging_fde}


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
