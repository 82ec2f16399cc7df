"""Boundary curves: the star-shaped unknown, the benchmark shape catalog,
and point-set shape metrics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .prior import Eigenbasis, coeffs_to_logradius

TWO_PI = 2.0 * np.pi

# Parameter offset for the drop shape. Its boundary has a corner where the
# table formula closes up; offsetting the parameter by 1 rad (an irrational
# fraction of pi) guarantees no equispaced quadrature grid of any size lands
# exactly on the corner.
DROP_OFFSET = 1.0


class InvalidShapeError(ValueError):
    """Star-shaped radius left (0, r_max) or the log-radius is not finite."""


@dataclass(frozen=True)
class ParametricCurve:
    """Closed counterclockwise plane curve.

    position/tangent/second map an array of parameter values to (n, 2)
    arrays; derivatives are analytic (the boundary solver uses the second
    derivative in its diagonal quadrature terms).
    """

    position: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray], np.ndarray]
    second: Callable[[np.ndarray], np.ndarray]

    def points(self, n: int) -> np.ndarray:
        """n boundary points at equispaced parameter values in [0, 2 pi)."""
        t = TWO_PI * np.arange(n) / n
        return self.position(t)

    def translated(self, v) -> "ParametricCurve":
        """The same curve shifted by the vector v."""
        v = np.asarray(v, dtype=float)
        pos = self.position
        return ParametricCurve(
            position=lambda t: pos(t) + v,
            tangent=self.tangent,
            second=self.second,
        )


def radial_curve(r, dr, ddr, center=(0.0, 0.0)) -> ParametricCurve:
    """Curve theta -> center + r(theta) (cos theta, sin theta).

    r, dr, ddr are vectorized callables for the radius and its first two
    derivatives; r must stay positive.
    """
    cx, cy = float(center[0]), float(center[1])

    def position(t):
        t = np.asarray(t, dtype=float)
        rad = r(t)
        return np.stack([cx + rad * np.cos(t), cy + rad * np.sin(t)], axis=-1)

    def tangent(t):
        t = np.asarray(t, dtype=float)
        rad, drad = r(t), dr(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack([drad * c - rad * s, drad * s + rad * c], axis=-1)

    def second(t):
        t = np.asarray(t, dtype=float)
        rad, drad, ddrad = r(t), dr(t), ddr(t)
        c, s = np.cos(t), np.sin(t)
        return np.stack(
            [(ddrad - rad) * c - 2.0 * drad * s,
             (ddrad - rad) * s + 2.0 * drad * c],
            axis=-1,
        )

    return ParametricCurve(position=position, tangent=tangent, second=second)


@dataclass(frozen=True)
class StarShapedCurve:
    """Star-shaped boundary center + exp(q(theta)) (cos theta, sin theta).

    log_radius is a truncated expansion object providing __call__, deriv
    and deriv2 (see prior.LogRadiusExpansion). Radius validity is checked
    at evaluation time: any q that is not finite or gives r >= r_max raises
    InvalidShapeError, which the sampler treats as a zero-likelihood
    proposal rather than a crash.
    """

    center: tuple
    log_radius: object
    r_max: float = 10.0

    def radius(self, theta):
        q = np.asarray(self.log_radius(theta), dtype=float)
        if not np.all(np.isfinite(q)):
            raise InvalidShapeError("log-radius is not finite")
        if np.any(q >= np.log(self.r_max)):
            raise InvalidShapeError(
                f"radius exceeds r_max={self.r_max} (max q = {q.max():.3g})"
            )
        return np.exp(q)

    def as_parametric(self) -> ParametricCurve:
        cx, cy = float(self.center[0]), float(self.center[1])
        logr = self.log_radius

        def position(t):
            t = np.asarray(t, dtype=float)
            rad = self.radius(t)
            return np.stack([cx + rad * np.cos(t), cy + rad * np.sin(t)], axis=-1)

        def tangent(t):
            t = np.asarray(t, dtype=float)
            rad = self.radius(t)
            drad = logr.deriv(t) * rad
            c, s = np.cos(t), np.sin(t)
            return np.stack([drad * c - rad * s, drad * s + rad * c], axis=-1)

        def second(t):
            t = np.asarray(t, dtype=float)
            rad = self.radius(t)
            dq, ddq = logr.deriv(t), logr.deriv2(t)
            drad = dq * rad
            ddrad = (ddq + dq ** 2) * rad
            c, s = np.cos(t), np.sin(t)
            return np.stack(
                [(ddrad - rad) * c - 2.0 * drad * s,
                 (ddrad - rad) * s + 2.0 * drad * c],
                axis=-1,
            )

        return ParametricCurve(position=position, tangent=tangent, second=second)


def star_curve(center, coefficients, basis: Eigenbasis, r_max: float = 10.0,
               eigenvalue_power: float = 1.0) -> StarShapedCurve:
    """Star-shaped curve whose log-radius is the basis expansion of the
    given coefficient vector."""
    logr = coeffs_to_logradius(np.asarray(coefficients, dtype=float), basis,
                               eigenvalue_power)
    return StarShapedCurve(center=(float(center[0]), float(center[1])),
                           log_radius=logr, r_max=r_max)


# ---------------------------------------------------------------------------
# Benchmark shape catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShapeCatalogEntry:
    name: str
    curve: ParametricCurve
    formula: str
    radial: bool
    note: str = ""


def _kite() -> ParametricCurve:
    def position(t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            [np.cos(t) + 0.65 * np.cos(2 * t) - 0.65, 1.5 * np.sin(t)], axis=-1)

    def tangent(t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            [-np.sin(t) - 1.3 * np.sin(2 * t), 1.5 * np.cos(t)], axis=-1)

    def second(t):
        t = np.asarray(t, dtype=float)
        return np.stack(
            [-np.cos(t) - 2.6 * np.cos(2 * t), -1.5 * np.sin(t)], axis=-1)

    return ParametricCurve(position=position, tangent=tangent, second=second)


GRADING_ORDER = 6


def _grading(p: int = GRADING_ORDER):
    """Polynomial grading w: [0, 2 pi] -> [0, 2 pi] with derivatives through
    order p-1 vanishing at both ends. Composing a corner curve with w
    clusters equispaced nodes at the corner and restores the quadrature
    accuracy lost to the kink. Returns (w, w', w'')."""

    def parts(s):
        s = np.asarray(s, dtype=float)
        q = (np.pi - s) / np.pi
        v = (1.0 / p - 0.5) * q ** 3 + (s - np.pi) / (p * np.pi) + 0.5
        dv = -3.0 * (1.0 / p - 0.5) * q ** 2 / np.pi + 1.0 / (p * np.pi)
        ddv = 6.0 * (1.0 / p - 0.5) * q / np.pi ** 2
        return np.clip(v, 0.0, 1.0), dv, ddv

    def w(s):
        v, _, _ = parts(s)
        return TWO_PI * v ** p / (v ** p + (1 - v) ** p)

    def dw(s):
        v, dv, _ = parts(s)
        den = v ** p + (1 - v) ** p
        return TWO_PI * p * v ** (p - 1) * (1 - v) ** (p - 1) * dv / den ** 2

    def ddw(s):
        v, dv, ddv = parts(s)
        a, b = v ** (p - 1), (1 - v) ** (p - 1)
        den = v ** p + (1 - v) ** p
        dden = p * (a - b)
        core = a * b / den ** 2
        # d/dv of v^{p-1}(1-v)^{p-1}/den^2
        dcore = ((p - 1) * (v ** (p - 2) * b - a * (1 - v) ** (p - 2)) / den ** 2
                 - 2.0 * a * b * dden / den ** 3)
        return TWO_PI * p * (dcore * dv ** 2 + core * ddv)

    return w, dw, ddw


def _drop() -> ParametricCurve:
    # The boundary has a corner where the parameterization closes up. The
    # parameter is graded so that equispaced solver nodes cluster at the
    # corner, and offset by 1 rad (an irrational fraction of pi) so no grid
    # of any size lands exactly on it.
    w, dw, ddw = _grading()

    def table(a):
        return np.stack([-1.0 + 2.0 * np.sin(a / 2), -np.sin(a)], axis=-1)

    def table_d1(a):
        return np.stack([np.cos(a / 2), -np.cos(a)], axis=-1)

    def table_d2(a):
        return np.stack([-0.5 * np.sin(a / 2), np.sin(a)], axis=-1)

    def wrap(s):
        return np.mod(np.asarray(s, dtype=float) + DROP_OFFSET, TWO_PI)

    def position(s):
        return table(w(wrap(s)))

    def tangent(s):
        sigma = wrap(s)
        return table_d1(w(sigma)) * dw(sigma)[..., None]

    def second(s):
        sigma = wrap(s)
        return (table_d2(w(sigma)) * dw(sigma)[..., None] ** 2
                + table_d1(w(sigma)) * ddw(sigma)[..., None])

    return ParametricCurve(position=position, tangent=tangent, second=second)


def _roundrect() -> ParametricCurve:
    c4 = (2.0 / 3.0) ** 4

    def u(t):
        return np.cos(t) ** 4 + c4 * np.sin(t) ** 4

    def du(t):
        return -4 * np.cos(t) ** 3 * np.sin(t) + 4 * c4 * np.sin(t) ** 3 * np.cos(t)

    def ddu(t):
        c, s = np.cos(t), np.sin(t)
        return (12 * c ** 2 * s ** 2 - 4 * c ** 4
                + c4 * (12 * s ** 2 * c ** 2 - 4 * s ** 4))

    r = lambda t: u(t) ** (-0.25)
    dr = lambda t: -0.25 * u(t) ** (-1.25) * du(t)
    ddr = lambda t: (0.3125 * u(t) ** (-2.25) * du(t) ** 2
                     - 0.25 * u(t) ** (-1.25) * ddu(t))
    return radial_curve(r, dr, ddr)


def _acorn() -> ParametricCurve:
    v = lambda t: 4.25 + 2.0 * np.cos(3 * t)
    dv = lambda t: -6.0 * np.sin(3 * t)
    ddv = lambda t: -18.0 * np.cos(3 * t)
    r = lambda t: 0.6 * np.sqrt(v(t))
    dr = lambda t: 0.3 * dv(t) / np.sqrt(v(t))
    ddr = lambda t: 0.3 * ddv(t) / np.sqrt(v(t)) - 0.15 * dv(t) ** 2 * v(t) ** (-1.5)
    return radial_curve(r, dr, ddr)


def _bean() -> ParametricCurve:
    w = lambda t: 4.0 * np.cos(t) ** 2 + np.sin(t) ** 2
    dw = lambda t: -3.0 * np.sin(2 * t)
    ddw = lambda t: -6.0 * np.cos(2 * t)
    r = lambda t: 0.4 * np.sqrt(w(t))
    dr = lambda t: 0.2 * dw(t) / np.sqrt(w(t))
    ddr = lambda t: 0.2 * ddw(t) / np.sqrt(w(t)) - 0.1 * dw(t) ** 2 * w(t) ** (-1.5)
    return radial_curve(r, dr, ddr)


def _threelobes() -> ParametricCurve:
    r = lambda t: 0.5 + 0.25 * np.exp(-np.sin(3 * t)) - 0.1 * np.sin(t)
    dr = lambda t: (-0.75 * np.cos(3 * t) * np.exp(-np.sin(3 * t))
                    - 0.1 * np.cos(t))
    ddr = lambda t: (2.25 * np.exp(-np.sin(3 * t))
                     * (np.sin(3 * t) + np.cos(3 * t) ** 2) + 0.1 * np.sin(t))
    return radial_curve(r, dr, ddr)


def _pear() -> ParametricCurve:
    return radial_curve(
        lambda t: (5.0 + np.sin(3 * t)) / 6.0,
        lambda t: 0.5 * np.cos(3 * t),
        lambda t: -1.5 * np.sin(3 * t),
    )


def _star() -> ParametricCurve:
    return radial_curve(
        lambda t: 1.0 + 0.3 * np.sin(5 * t),
        lambda t: 1.5 * np.cos(5 * t),
        lambda t: -7.5 * np.sin(5 * t),
    )


def _cloverleaf() -> ParametricCurve:
    return radial_curve(
        lambda t: 1.0 + 0.3 * np.cos(4 * t),
        lambda t: -1.2 * np.sin(4 * t),
        lambda t: -4.8 * np.cos(4 * t),
    )


_BEAN_FORMULA = "r(t) = 0.4 sqrt(4 cos^2 t + sin^2 t)"


def _build_catalog() -> dict:
    entries = [
        ShapeCatalogEntry(
            "kite", _kite(),
            "(x1, x2) = (cos t + 0.65 cos 2t - 0.65, 1.5 sin t)", radial=False),
        ShapeCatalogEntry(
            "roundrect", _roundrect(),
            "r(t) = (cos^4 t + (2/3 sin t)^4)^(-1/4)", radial=True),
        ShapeCatalogEntry(
            "acorn", _acorn(),
            "r(t) = 3/5 sqrt(17/4 + 2 cos 3t)", radial=True),
        ShapeCatalogEntry(
            "pear", _pear(),
            "r(t) = (5 + sin 3t)/6", radial=True),
        ShapeCatalogEntry(
            "bean", _bean(), _BEAN_FORMULA, radial=True,
            note="identical formula to 'peanut'"),
        ShapeCatalogEntry(
            "threelobes", _threelobes(),
            "r(t) = 0.5 + 0.25 exp(-sin 3t) - 0.1 sin t", radial=True),
        ShapeCatalogEntry(
            "star", _star(),
            "r(t) = 1 + 0.3 sin 5t", radial=True),
        ShapeCatalogEntry(
            "cloverleaf", _cloverleaf(),
            "r(t) = 1 + 0.3 cos 4t", radial=True),
        ShapeCatalogEntry(
            "peanut", _bean(), _BEAN_FORMULA, radial=True,
            note="identical formula to 'bean'"),
        ShapeCatalogEntry(
            "drop", _drop(),
            "(x1, x2) = (-1 + 2 sin(t/2), -sin t)", radial=False,
            note="corner at the parameter seam; solver accuracy reduced"),
    ]
    return {e.name: e for e in entries}


_CATALOG = _build_catalog()

CATALOG_NAMES = tuple(_CATALOG.keys())


def catalog_entry(name: str) -> ShapeCatalogEntry:
    """Catalog entry by name; unknown names list the valid identifiers."""
    try:
        return _CATALOG[name]
    except KeyError:
        raise ValueError(
            f"unknown shape {name!r}; valid names: {', '.join(CATALOG_NAMES)}"
        ) from None


def catalog_shape(name: str) -> ParametricCurve:
    """Benchmark boundary by name (kite, roundrect, acorn, pear, bean,
    threelobes, star, cloverleaf, peanut, drop)."""
    return catalog_entry(name).curve


def catalog_entries() -> tuple:
    return tuple(_CATALOG.values())


# ---------------------------------------------------------------------------
# Shape metrics
# ---------------------------------------------------------------------------

def hausdorff_points(pa: np.ndarray, pb: np.ndarray) -> float:
    """Symmetric Hausdorff distance between two finite point sets (k, 2)."""
    pa = np.asarray(pa, dtype=float)
    pb = np.asarray(pb, dtype=float)
    d2 = ((pa[:, None, :] - pb[None, :, :]) ** 2).sum(axis=-1)
    forward = np.sqrt(d2.min(axis=1)).max()
    backward = np.sqrt(d2.min(axis=0)).max()
    return float(max(forward, backward))


def boundary_discrepancy(a: ParametricCurve, b: ParametricCurve, n: int) -> float:
    """Symmetric Hausdorff distance between n-point samplings of two curves."""
    if n < 16:
        raise ValueError(f"need at least 16 sample points, got {n}")
    return hausdorff_points(a.points(n), b.points(n))
