import pytest

from privdyn import make_params, with_epochs


@pytest.fixture
def ref_params():
    """Reference setting used across the suite: n=50, b=2, eta=0.02,
    lambda=1, beta=4, S_g=4, sigma=2 (m=25, r=0.9604, eps1 = 0.005*alpha)."""
    return make_params(n=50, b=2, eta=0.02, epochs=40, sigma=2.0, lam=1.0, beta=4.0, s_g=4.0)


@pytest.fixture
def ref_params_convex(ref_params):
    """Same setting with lambda = 0 (convex class)."""
    return make_params(n=50, b=2, eta=0.02, epochs=40, sigma=2.0, lam=0.0, beta=4.0, s_g=4.0)


@pytest.fixture
def at_epochs():
    return with_epochs
