import numpy as np
import pytest

from jensenlab import (
    AdditiveCore,
    NormedSpace,
    Perturbation,
    TestFunction,
    scalar_offset_function,
)


@pytest.fixture
def scalar_model():
    """f(x) = x + 0.5 on C^1 (identity core, constant tabulated offset)."""
    return scalar_offset_function(0.5)


def make_additive(dim=2, seed=0, kind="complex_linear", norm_kind="l2"):
    space = NormedSpace(dim, norm_kind)
    return TestFunction(space, AdditiveCore.random(dim, seed, kind), Perturbation.none())


def make_power(dim=2, theta=0.1, r=0.5, direction="hashed", seed=0, norm_kind="l2"):
    space = NormedSpace(dim, norm_kind)
    return TestFunction(space, AdditiveCore.identity(dim),
                        Perturbation.power(theta, r, direction_seed=seed,
                                           direction=direction))
