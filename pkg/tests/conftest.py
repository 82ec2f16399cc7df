import numpy as np
import pytest

from scatterbayes import (ApertureConfig, NoiseConfig, PriorConfig,
                          ScatteringConfig, catalog_shape, make_observations,
                          radial_curve)


def unit_circle(center=(0.0, 0.0)):
    return radial_curve(lambda t: np.ones_like(t),
                        lambda t: np.zeros_like(t),
                        lambda t: np.zeros_like(t), center=center)


@pytest.fixture(scope="session")
def circle():
    return unit_circle()


@pytest.fixture(scope="session")
def kite():
    return catalog_shape("kite")


@pytest.fixture(scope="session")
def kite_observations():
    """Small noisy data set reused by sampler-level tests."""
    ap = ApertureConfig(obs_kind="gamma1_o", inc_kind="gamma2_i")
    return make_observations(catalog_shape("kite"), ScatteringConfig(1.0, 128),
                             ap, NoiseConfig(eta1=0.01, eta2=0.01, seed=7),
                             truth_meta={"shape": "kite",
                                         "true_center": (0.0, 0.0)})
