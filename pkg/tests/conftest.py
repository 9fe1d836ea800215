import numpy as np
import pytest

from microreserve import fixtures


@pytest.fixture(scope="session")
def models():
    return fixtures.reference_models()


@pytest.fixture(scope="session")
def fin():
    return fixtures.reference_financials()


@pytest.fixture(scope="session")
def portfolio():
    return fixtures.reference_portfolio()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260823)
