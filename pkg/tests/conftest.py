import numpy as np
import pytest

from hmbtrain.array_model import ArrayConfig
from hmbtrain.polar_codebook import build_codebook


@pytest.fixture(scope="session")
def desk_array() -> ArrayConfig:
    return ArrayConfig.half_wavelength(4, 32, 28e9)


@pytest.fixture(scope="session")
def small_array() -> ArrayConfig:
    return ArrayConfig.half_wavelength(2, 8, 28e9)


@pytest.fixture(scope="session")
def desk_codebook(desk_array):
    return build_codebook(desk_array, delta=0.5)


@pytest.fixture(scope="session")
def ringed_codebook(desk_array):
    # r_min pushed below the default Fresnel limit so finite rings exist,
    # but well clear of the reactive zone where the quadratic model breaks
    return build_codebook(desk_array, delta=0.5, r_min=0.35, r_max=6.0)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
