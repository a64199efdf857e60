import pytest

from jumpsde import ModelParams


@pytest.fixture
def set1() -> ModelParams:
    return ModelParams(
        alpha_m1=2.0, alpha0=1.0, alpha1=1.5, alpha2=5.0, alpha3=1.0,
        gamma=3.0, rho=1.5, lam=1.0, x0=1.0, T=1.0,
    )


@pytest.fixture
def set2() -> ModelParams:
    return ModelParams(
        alpha_m1=1.0, alpha0=2.0, alpha1=1.5, alpha2=3.0, alpha3=1.0,
        gamma=3.5, rho=1.5, lam=1.0, x0=1.0, T=1.0,
    )
