import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scatterbayes import (CATALOG_NAMES, InvalidShapeError, PriorConfig,
                          boundary_discrepancy, catalog_entry, catalog_shape,
                          eigenbasis, hausdorff_points, star_curve)
from scatterbayes.geometry import DROP_OFFSET, TWO_PI

from conftest import unit_circle

RADIAL_NAMES = [n for n in CATALOG_NAMES if catalog_entry(n).radial]


# ---------------------------------------------------------------------------
# Catalog formulas
# ---------------------------------------------------------------------------

def test_kite_at_zero():
    p = catalog_shape("kite").position(np.array([0.0]))[0]
    assert p == pytest.approx((1.0, 0.0), abs=1e-15)


def test_pear_radius_at_half_pi():
    p = catalog_shape("pear").position(np.array([np.pi / 2]))[0]
    r = np.hypot(*p)
    assert r == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_star_radius():
    p = catalog_shape("star").position(np.array([np.pi / 10]))[0]
    assert np.hypot(*p) == pytest.approx(1.3, abs=1e-12)


def test_unknown_name_lists_identifiers():
    with pytest.raises(ValueError) as err:
        catalog_shape("blob")
    for name in CATALOG_NAMES:
        assert name in str(err.value)


def test_bean_peanut_share_formula():
    bean, peanut = catalog_entry("bean"), catalog_entry("peanut")
    assert bean.formula == peanut.formula
    assert "peanut" in bean.note and "bean" in peanut.note
    t = np.linspace(0, TWO_PI, 37)
    assert np.allclose(bean.curve.position(t), peanut.curve.position(t))


def test_catalog_radial_shapes_positive_radius():
    t = TWO_PI * np.arange(4096) / 4096
    for name in RADIAL_NAMES:
        r = np.hypot(*catalog_shape(name).position(t).T)
        assert r.min() > 0, name


def test_catalog_curves_closed():
    eps = 1e-9
    for name in CATALOG_NAMES:
        c = catalog_shape(name)
        a = c.position(np.array([0.0]))[0]
        b = c.position(np.array([TWO_PI - eps]))[0]
        assert np.hypot(*(a - b)) < 1e-7, name


def test_catalog_counterclockwise():
    # positive signed area via the shoelace formula on a fine polygon
    for name in CATALOG_NAMES:
        p = catalog_shape(name).points(2048)
        x, y = p[:, 0], p[:, 1]
        area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
        assert area > 0, name


def _fd_check(curve, values, exclude=None, h=1e-4, tol=1e-6):
    t = np.linspace(0.1, TWO_PI - 0.1, 57)
    if exclude is not None:
        t = t[np.abs(np.angle(np.exp(1j * (t - exclude)))) > 0.05]
    fd = (values(t + h) - values(t - h)) / (2 * h)
    return np.max(np.abs(fd - curve(t)))


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_tangent_matches_finite_differences(name):
    c = catalog_shape(name)
    # the drop has a corner at the wrapped parameter seam; step around it
    exclude = TWO_PI - DROP_OFFSET if name == "drop" else None
    assert _fd_check(c.tangent, c.position, exclude) < 1e-6


@pytest.mark.parametrize("name", CATALOG_NAMES)
def test_second_derivative_matches_finite_differences(name):
    c = catalog_shape(name)
    exclude = TWO_PI - DROP_OFFSET if name == "drop" else None
    assert _fd_check(c.second, c.tangent, exclude) < 1e-6


def test_drop_grid_never_hits_corner():
    # corner sits at parameter 2*pi - DROP_OFFSET; a grid node t_j = 2*pi*j/n
    # could only hit it if pi were rational
    for n in (16, 64, 128, 256, 4096):
        t = TWO_PI * np.arange(n) / n
        gap = np.min(np.abs(t - (TWO_PI - DROP_OFFSET)))
        assert gap > 1e-9, n
    for n in (16, 64, 128, 256):     # solver-relevant sizes keep a clear berth
        t = TWO_PI * np.arange(n) / n
        assert np.min(np.abs(t - (TWO_PI - DROP_OFFSET))) > 5e-3, n


# ---------------------------------------------------------------------------
# Star-shaped curves
# ---------------------------------------------------------------------------

def test_star_curve_zero_coefficients_is_unit_circle():
    basis = eigenbasis(PriorConfig())
    star = star_curve((0.0, 0.0), np.zeros(27), basis)
    t = np.linspace(0, TWO_PI, 64, endpoint=False)
    p = star.as_parametric().position(t)
    assert np.allclose(np.hypot(p[:, 0], p[:, 1]), 1.0, atol=1e-14)


def test_star_curve_center_shift():
    basis = eigenbasis(PriorConfig())
    star = star_curve((0.2, 0.0), np.zeros(27), basis)
    t = np.linspace(0, TWO_PI, 64, endpoint=False)
    p = star.as_parametric().position(t)
    assert np.allclose(np.hypot(p[:, 0] - 0.2, p[:, 1]), 1.0, atol=1e-14)


def test_star_curve_translation_equals_centered():
    basis = eigenbasis(PriorConfig())
    rng = np.random.default_rng(5)
    Z = rng.standard_normal(27) * basis.eigenvalues * 0.02
    center = (0.3, -0.4)
    shifted = star_curve(center, Z, basis).as_parametric()
    centered = star_curve((0.0, 0.0), Z, basis).as_parametric()
    t = np.linspace(0, TWO_PI, 41)
    moved = shifted.translated((-center[0], -center[1]))
    assert np.allclose(moved.position(t), centered.position(t), atol=1e-15)


def test_star_curve_kl_fit_of_pear():
    # project q = log((5 + sin 3 theta)/6) onto the basis by quadrature and
    # check the rebuilt curve sits within truncation error of the pear
    cfg = PriorConfig()
    basis = eigenbasis(cfg)
    n = 4096
    th = TWO_PI * np.arange(n) / n
    q = np.log((5 + np.sin(3 * th)) / 6)
    weights = basis.design_matrix(th).T @ q * (TWO_PI / n)
    Z = weights * basis.eigenvalues           # undo the expansion division
    star = star_curve((0.0, 0.0), Z, basis).as_parametric()
    pear = catalog_shape("pear")
    tt = np.linspace(0, TWO_PI, 257)
    err = np.max(np.hypot(*(star.position(tt) - pear.position(tt)).T))
    assert err < 1e-3


def test_star_curve_invalid_radius_raises():
    basis = eigenbasis(PriorConfig())
    Z = np.zeros(27)
    Z[0] = 4.0 * np.sqrt(TWO_PI)      # q = 4 -> r = e^4 > 10
    star = star_curve((0.0, 0.0), Z, basis)
    with pytest.raises(InvalidShapeError):
        star.as_parametric().position(np.array([0.0]))


def test_star_curve_nonfinite_raises():
    basis = eigenbasis(PriorConfig())
    Z = np.zeros(27)
    Z[3] = np.nan
    star = star_curve((0.0, 0.0), Z, basis)
    with pytest.raises(InvalidShapeError):
        star.as_parametric().position(np.array([0.0]))


# ---------------------------------------------------------------------------
# Boundary discrepancy
# ---------------------------------------------------------------------------

def test_discrepancy_identical_curves_zero(circle):
    assert boundary_discrepancy(circle, circle, 64) == 0.0


def test_discrepancy_offset_circles(circle):
    shifted = unit_circle(center=(0.2, 0.0))
    d = boundary_discrepancy(circle, shifted, 512)
    assert d == pytest.approx(0.2, abs=1e-3)


def test_discrepancy_matches_brute_force(circle, kite):
    d = boundary_discrepancy(kite, circle, 128)
    pa, pb = kite.points(128), circle.points(128)
    # independent double-loop oracle
    def directed(p, q):
        worst = 0.0
        for a in p:
            best = min(float(np.hypot(a[0] - b[0], a[1] - b[1])) for b in q)
            worst = max(worst, best)
        return worst
    oracle = max(directed(pa, pb), directed(pb, pa))
    assert d == pytest.approx(oracle, abs=1e-12)
    assert d > 0


def test_discrepancy_rejects_small_n(circle):
    with pytest.raises(ValueError):
        boundary_discrepancy(circle, circle, 8)


@st.composite
def point_sets(draw):
    n = draw(st.integers(min_value=1, max_value=8))
    pts = draw(st.lists(
        st.tuples(st.floats(-10, 10, allow_nan=False),
                  st.floats(-10, 10, allow_nan=False)),
        min_size=n, max_size=n))
    return np.asarray(pts)


@given(point_sets(), point_sets())
@settings(max_examples=50, deadline=None)
def test_hausdorff_symmetric(pa, pb):
    assert hausdorff_points(pa, pb) == pytest.approx(
        hausdorff_points(pb, pa), rel=1e-12)


@given(point_sets(), point_sets(), point_sets())
@settings(max_examples=50, deadline=None)
def test_hausdorff_triangle_inequality(pa, pb, pc):
    dab = hausdorff_points(pa, pb)
    dbc = hausdorff_points(pb, pc)
    dac = hausdorff_points(pa, pc)
    assert dac <= dab + dbc + 1e-9
