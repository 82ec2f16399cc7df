import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from scatterbayes import (PriorConfig, coeffs_to_logradius, eigenbasis,
                          gauss_to_laplace, laplace_to_gauss, prior_sample,
                          tv_couple, tv_decouple, tv_transform)

TWO_PI = 2 * np.pi


# ---------------------------------------------------------------------------
# Configuration validation
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    {"s": 0.5}, {"lam": 0.0}, {"alpha": 0.0}, {"alpha": 0.5},
    {"m": 0}, {"m": 26},
])
def test_invalid_prior_config(kwargs):
    with pytest.raises(ValueError):
        PriorConfig(**kwargs)


# ---------------------------------------------------------------------------
# Eigenbasis
# ---------------------------------------------------------------------------

def test_eigenbasis_ordering_and_eigenvalues():
    basis = eigenbasis(PriorConfig(m=27, s=2.2))
    assert basis.size == 27
    assert basis.frequencies[0] == 0 and basis.eigenvalues[0] == 1.0
    assert list(basis.frequencies[1:5]) == [1, 1, 2, 2]
    assert list(basis.kinds[1:5]) == [1, 2, 1, 2]
    assert basis.frequencies[-1] == 13
    assert basis.eigenvalues[1] == pytest.approx(1.0)          # 1^{4.4}
    assert basis.eigenvalues[-1] == pytest.approx(13.0 ** 4.4, rel=1e-14)


def test_eigenbasis_orthonormal_on_grid():
    basis = eigenbasis(PriorConfig())
    n = 4096
    th = TWO_PI * np.arange(n) / n
    psi = basis.design_matrix(th)
    gram = psi.T @ psi * (TWO_PI / n)
    assert np.max(np.abs(gram - np.eye(basis.size))) < 1e-10


def test_eigenbasis_function_list():
    basis = eigenbasis(PriorConfig(m=5))
    th = np.linspace(0, TWO_PI, 11)
    funcs = basis.functions
    assert len(funcs) == 5
    assert np.allclose(funcs[1](th), np.cos(th) / np.sqrt(np.pi))
    assert np.allclose(funcs[2](th), np.sin(th) / np.sqrt(np.pi))


# ---------------------------------------------------------------------------
# Gaussian-to-Laplace map
# ---------------------------------------------------------------------------

def test_g_at_zero():
    assert gauss_to_laplace(0.0, 0.2) == 0.0


def test_g_known_value():
    # G(b) = 0.75 gives |2G - 1| = 1/2, so g = -(1/lam) ln(1/2) = 5 ln 2
    b = stats.norm.ppf(0.75)
    assert gauss_to_laplace(b, 0.2) == pytest.approx(3.4657359027997265,
                                                     abs=1e-12)


@given(st.floats(-30, 30, allow_nan=False))
@settings(max_examples=200, deadline=None)
def test_g_odd(b):
    assert gauss_to_laplace(-b, 0.2) == pytest.approx(
        -gauss_to_laplace(b, 0.2), rel=1e-12, abs=1e-12)


def test_g_strictly_increasing():
    b = np.linspace(-30, 30, 20001)
    g = gauss_to_laplace(b, 0.2)
    assert np.all(np.diff(g) > 0)


def test_g_roundtrip():
    b = np.linspace(-30, 30, 4001)
    back = laplace_to_gauss(gauss_to_laplace(b, 0.2), 0.2)
    assert np.max(np.abs(back - b)) < 1e-10


def test_g_extreme_argument_saturates_finite():
    for b in (50.0, 300.0, 1e4):
        v = gauss_to_laplace(b, 0.2)
        assert np.isfinite(v) and v > 0


def test_g_pushforward_is_laplace():
    rng = np.random.default_rng(42)
    draws = gauss_to_laplace(rng.standard_normal(100_000), 0.2)
    res = stats.kstest(draws, stats.laplace(scale=5.0).cdf)
    assert res.pvalue > 0.01


# ---------------------------------------------------------------------------
# Cyclic-difference coupling
# ---------------------------------------------------------------------------

def test_tv_matrix_m4():
    tv = tv_transform(4, 0.1)
    expected = np.array([[1.1, 0.0, 0.0, 0.1],
                         [-0.1, 1.1, 0.0, 0.0],
                         [0.0, -0.1, 1.1, 0.0],
                         [0.0, 0.0, -0.1, 1.1]])
    assert np.allclose(tv.D, expected, atol=1e-15)


def test_tv_inverse_consistent():
    tv = tv_transform(27, 0.1)
    assert np.max(np.abs(tv.D @ tv.D_inv - np.eye(27))) < 1e-12


def test_tv_couple_zero():
    assert np.all(tv_couple(np.zeros(27), PriorConfig()) == 0.0)


def test_tv_couple_pushforward_laplace():
    # D Z = A must be i.i.d. Laplace(0, 5) when B is standard normal
    cfg = PriorConfig()
    rng = np.random.default_rng(11)
    B = rng.standard_normal((100_000 // cfg.m + 1, cfg.m))
    Z = tv_couple(B, cfg)
    A = Z @ tv_transform(cfg.m, cfg.alpha).D.T
    res = stats.kstest(A.ravel(), stats.laplace(scale=5.0).cdf)
    assert res.pvalue > 0.01


def test_tv_couple_bijective():
    cfg = PriorConfig()
    rng = np.random.default_rng(3)
    B = rng.standard_normal((200, cfg.m)) * 3
    back = tv_decouple(tv_couple(B, cfg), cfg)
    assert np.max(np.abs(back - B)) < 1e-10


def test_alpha_zero_limit_decouples():
    # as alpha -> 0 the coupling approaches the identity, so Z ~ g(B)
    cfg = PriorConfig(alpha=1e-12)
    rng = np.random.default_rng(8)
    B = rng.standard_normal((100, cfg.m))
    Z = tv_couple(B, cfg)
    assert np.max(np.abs(Z - gauss_to_laplace(B, cfg.lam))) < 1e-9


def test_tv_norm_equivalence():
    # (1 - 2 alpha) |Z|_1 <= |D Z|_1 <= (1 + 2 alpha) |Z|_1
    cfg = PriorConfig()
    tv = tv_transform(cfg.m, cfg.alpha)
    rng = np.random.default_rng(17)
    Z = rng.standard_normal((10_000, cfg.m)) * rng.gamma(1, 5, (10_000, 1))
    lhs = np.abs(Z @ tv.D.T).sum(axis=1)
    norm1 = np.abs(Z).sum(axis=1)
    ratio = lhs / norm1
    assert ratio.min() >= 1 - 2 * cfg.alpha - 1e-12
    assert ratio.max() <= 1 + 2 * cfg.alpha + 1e-12


# ---------------------------------------------------------------------------
# Log-radius expansion
# ---------------------------------------------------------------------------

def test_logradius_zero_gives_unit_circle():
    basis = eigenbasis(PriorConfig())
    logr = coeffs_to_logradius(np.zeros(27), basis)
    th = np.linspace(0, TWO_PI, 33)
    assert np.all(logr(th) == 0.0)


def test_logradius_single_mode():
    basis = eigenbasis(PriorConfig())
    Z = np.zeros(27)
    Z[1] = 1.0                      # cos(theta) mode with eigenvalue 1
    logr = coeffs_to_logradius(Z, basis)
    th = np.linspace(0, TWO_PI, 33)
    assert np.allclose(logr(th), np.cos(th) / np.sqrt(np.pi), atol=1e-15)


def test_logradius_eigenvalue_scaling():
    basis = eigenbasis(PriorConfig())
    Z = np.zeros(27)
    Z[5] = 2.0                      # cos(3 theta), eigenvalue 3^{4.4}
    divided = coeffs_to_logradius(Z, basis, eigenvalue_power=1.0)
    halfway = coeffs_to_logradius(Z, basis, eigenvalue_power=0.5)
    raw = coeffs_to_logradius(Z, basis, eigenvalue_power=0.0)
    th = np.array([0.1, 1.2])
    lam = 3.0 ** 4.4
    assert np.allclose(divided(th) * lam, raw(th), rtol=1e-12)
    assert np.allclose(halfway(th) * np.sqrt(lam), raw(th), rtol=1e-12)


def test_logradius_roundtrip_projection():
    # project a smooth q, rebuild, compare against quadrature projection
    basis = eigenbasis(PriorConfig())
    n = 4096
    th = TWO_PI * np.arange(n) / n
    q = 0.3 * np.cos(2 * th) - 0.1 * np.sin(5 * th) + 0.05
    w = basis.design_matrix(th).T @ q * (TWO_PI / n)
    Z = w * basis.eigenvalues
    logr = coeffs_to_logradius(Z, basis)
    assert np.max(np.abs(logr(th) - q)) < 1e-12   # q lies inside the span


def test_logradius_derivatives():
    basis = eigenbasis(PriorConfig())
    rng = np.random.default_rng(2)
    Z = rng.standard_normal(27)
    logr = coeffs_to_logradius(Z, basis)
    th = np.linspace(0.2, 6.0, 23)
    h = 1e-5
    fd1 = (logr(th + h) - logr(th - h)) / (2 * h)
    fd2 = (logr.deriv(th + h) - logr.deriv(th - h)) / (2 * h)
    assert np.max(np.abs(fd1 - logr.deriv(th))) < 1e-8
    assert np.max(np.abs(fd2 - logr.deriv2(th))) < 1e-8


# ---------------------------------------------------------------------------
# Prior sampling
# ---------------------------------------------------------------------------

def test_prior_sample_reproducible():
    cfg = PriorConfig()
    B1, Z1, logr1 = prior_sample(np.random.default_rng(123), cfg)
    B2, Z2, logr2 = prior_sample(np.random.default_rng(123), cfg)
    assert np.array_equal(B1, B2) and np.array_equal(Z1, Z2)
    th = np.linspace(0, TWO_PI, 9)
    assert np.array_equal(logr1(th), logr2(th))


def test_prior_sample_mean_and_variance():
    cfg = PriorConfig()
    rng = np.random.default_rng(99)
    n = 10_000
    B = np.stack([prior_sample(rng, cfg)[0] for _ in range(n)])
    assert np.max(np.abs(B.mean(axis=0))) < 3.5 / np.sqrt(n)
    big = np.random.default_rng(7).standard_normal((100_000, 1))
    assert 0.97 < big.var() < 1.03

    # pointwise mean of q over draws is zero within Monte Carlo error
    th = np.linspace(0, TWO_PI, 8)
    cfg_small = PriorConfig(m=5)
    rng = np.random.default_rng(4)
    qs = np.stack([prior_sample(rng, cfg_small)[2](th) for _ in range(10_000)])
    stderr = qs.std(axis=0) / np.sqrt(len(qs))
    assert np.all(np.abs(qs.mean(axis=0)) < 3.5 * stderr + 1e-12)
