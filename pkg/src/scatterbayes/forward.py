"""Shape-to-measurement operator: exterior sound-soft Helmholtz scattering
solved by a Nystrom boundary-integral method, far-field evaluation, and the
analytic circle oracle.

The scattered field is represented as a combined double/single layer
potential with density phi, which satisfies the second-kind equation

    phi(t) + int_0^{2pi} A(t, tau) phi(tau) dtau = -2 u_inc(x(t)),

    A(t, tau) = (i k / 2) H1(k r) [(x(t) - x(tau)) . n(tau)] / r
              + (eta / 2) H0(k r) |x'(tau)|,

with r = |x(t) - x(tau)|, n = (x2', -x1') the unnormalized outward normal,
H0/H1 first-kind Hankel functions, and eta the coupling constant. The
logarithmic singularity of the Hankel kernels is split off as
A = A1 * ln(4 sin^2((t - tau)/2)) + A2 with analytic A1, A2 and integrated
with the trigonometric product-quadrature weights

    R_j(t) = -(2 pi / n) sum_{m=1}^{n-1} cos(m (t - t_j)) / m
             - (pi / n^2) cos(n (t - t_j)),

which are exact for trigonometric polynomials against the log factor. The
smooth part uses the trapezoid rule. Both are spectrally accurate on
analytic curves.

Far fields follow the normalization
u_s = (e^{i pi/4} / sqrt(8 k pi)) (e^{i k r} / sqrt(r)) (u_inf + O(1/r)).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sp_special

from .geometry import ParametricCurve

EULER_GAMMA = 0.5772156649015328606

TWO_PI = 2.0 * np.pi


class SolverError(RuntimeError):
    """Boundary-integral linear system could not be solved reliably."""

    def __init__(self, message: str, condition: float | None = None):
        if condition is not None:
            message = f"{message} (condition estimate {condition:.3e})"
        super().__init__(message)
        self.condition = condition


class OracleError(RuntimeError):
    """The circle series oracle failed to converge."""


@dataclass(frozen=True)
class ScatteringConfig:
    """Wavenumber, quadrature size and coupling constant of the solver.

    coupling defaults to kappa, the standard choice that keeps the combined
    potential uniquely solvable at every wavenumber.
    """

    kappa: float
    n_quad: int = 64
    coupling: float | None = None

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.n_quad < 16 or self.n_quad % 2 != 0:
            raise ValueError(
                f"n_quad must be an even count >= 16, got {self.n_quad}")
        if self.coupling is not None and self.coupling <= 0:
            raise ValueError(f"coupling must be positive, got {self.coupling}")

    @property
    def eta(self) -> float:
        return self.kappa if self.coupling is None else self.coupling


@dataclass(frozen=True)
class BoundaryDensity:
    """Layer density at the equispaced parameter nodes of one solve."""

    values: np.ndarray
    nodes: np.ndarray
    kappa: float

    def __post_init__(self):
        if len(self.values) != len(self.nodes):
            raise ValueError("density and node grids differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("density contains non-finite entries")


@dataclass(frozen=True)
class FarFieldPattern:
    """Complex far-field matrix over observation x incident directions."""

    values: np.ndarray      # (n_obs, n_inc)
    obs_angles: np.ndarray
    inc_angles: np.ndarray

    def __post_init__(self):
        if self.values.shape != (len(self.obs_angles), len(self.inc_angles)):
            raise ValueError(
                f"far-field shape {self.values.shape} does not match angle "
                f"lists ({len(self.obs_angles)}, {len(self.inc_angles)})")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("far field contains non-finite entries")


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def bessel(kind: str, order: int, x):
    """Bessel function J_n or Y_n; Y requires x > 0."""
    x = np.asarray(x, dtype=float)
    if kind == "J":
        out = sp_special.jv(order, x)
    elif kind == "Y":
        if np.any(x <= 0):
            raise ValueError("Y_n requires a positive argument")
        out = sp_special.yv(order, x)
    else:
        raise ValueError(f"kind must be 'J' or 'Y', got {kind!r}")
    return out if out.ndim else float(out)


def hankel1(order: int, x):
    """First-kind Hankel function H_n^(1)(x) = J_n(x) + i Y_n(x), x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("H_n^(1) requires a positive argument")
    out = sp_special.hankel1(order, x)
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# Quadrature machinery
# ---------------------------------------------------------------------------

@lru_cache(maxsize=16)
def _nodes(n_quad: int) -> np.ndarray:
    t = TWO_PI * np.arange(n_quad) / n_quad
    t.setflags(write=False)
    return t


@lru_cache(maxsize=16)
def _log_weight_matrix(n_quad: int) -> np.ndarray:
    """R_{|i-j|} for the log-singular factor on the 2n-point grid."""
    n = n_quad // 2
    m = np.arange(1, n)
    ang = np.pi * np.arange(n_quad) / n
    prof = (-(TWO_PI / n) * (np.cos(np.outer(ang, m)) / m).sum(axis=1)
            - (np.pi / n ** 2) * np.cos(n * ang))
    idx = (np.arange(n_quad)[:, None] - np.arange(n_quad)[None, :]) % n_quad
    R = prof[idx]
    R.setflags(write=False)
    return R


@lru_cache(maxsize=16)
def _log_sin_matrix(n_quad: int) -> np.ndarray:
    """ln(4 sin^2((t_i - t_j)/2)) with a placeholder 0 on the diagonal."""
    t = _nodes(n_quad)
    s = 4.0 * np.sin((t[:, None] - t[None, :]) / 2.0) ** 2
    np.fill_diagonal(s, 1.0)
    out = np.log(s)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=16)
def _combined_weight_matrix(n_quad: int) -> np.ndarray:
    """R_{|i-j|} - (pi/n) ln(4 sin^2(..)), so the system assembles as
    I + W1 * A1 + (pi/n) * A off the diagonal without forming A2."""
    n_half = n_quad // 2
    W = _log_weight_matrix(n_quad) - (np.pi / n_half) * _log_sin_matrix(n_quad)
    W.setflags(write=False)
    return W


def _curve_arrays(curve: ParametricCurve, n_quad: int):
    """Position, tangent and second derivative sampled on the solver grid."""
    t = _nodes(n_quad)
    x = np.asarray(curve.position(t), dtype=float)
    dx = np.asarray(curve.tangent(t), dtype=float)
    ddx = np.asarray(curve.second(t), dtype=float)
    for name, arr in (("position", x), ("tangent", dx), ("second", ddx)):
        if arr.shape != (n_quad, 2):
            raise ValueError(f"curve {name} returned shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"curve {name} is not finite on the grid")
    speed = np.hypot(dx[:, 0], dx[:, 1])
    if speed.min() < 1e-12:
        raise ValueError("curve is not regular: |x'| vanishes on the grid")
    return t, x, dx, ddx, speed


def _assemble_arrays(x, dx, ddx, speed, cfg: ScatteringConfig):
    """Nystrom system matrix I + R * A1 + (pi/n) * A2 from grid arrays.

    Returns (system, normal) with normal the unnormalized outward normal
    (x2', -x1') carrying the parametrization Jacobian.
    """
    kappa, eta, N = cfg.kappa, cfg.eta, cfg.n_quad
    normal = np.empty_like(dx)
    normal[:, 0] = dx[:, 1]
    normal[:, 1] = -dx[:, 0]

    diffx = x[:, None, 0] - x[None, :, 0]
    diffy = x[:, None, 1] - x[None, :, 1]
    diffx *= normal[None, :, 0]
    diffy *= normal[None, :, 1]
    dot = diffx
    dot += diffy                                   # (x_i - x_j) . n_j
    r = np.hypot(x[:, None, 0] - x[None, :, 0], x[:, None, 1] - x[None, :, 1])
    np.fill_diagonal(r, 1.0)     # diagonal entries replaced analytically below
    dotr = dot
    dotr /= r

    kr = r
    kr *= kappa
    J0sp = sp_special.j0(kr)
    J1dr = sp_special.j1(kr)
    Y0sp = sp_special.y0(kr)
    Y1dr = sp_special.y1(kr)
    J0sp *= speed[None, :]
    Y0sp *= speed[None, :]
    J1dr *= dotr
    Y1dr *= dotr

    # Full kernel A and its log-factor part A1 (off-diagonal entries),
    # assembled through real/imaginary parts to avoid complex temporaries:
    # system = I + R*A1 + (pi/n)*(A - A1*ln(4 sin^2)) with the log factor
    # folded into the cached weight matrix; diagonals written explicitly.
    n_half = N // 2
    W = _combined_weight_matrix(N)
    pin = np.pi / n_half
    system = np.empty((N, N), dtype=complex)
    re = system.real
    im = system.imag
    np.multiply(W, J1dr, out=re)
    re *= -kappa / TWO_PI
    np.multiply(W, J0sp, out=im)
    im *= eta / TWO_PI
    re += (-0.5 * pin * kappa) * Y1dr
    re += (0.5 * pin * eta) * J0sp
    im += (0.5 * pin * kappa) * J1dr
    im += (0.5 * pin * eta) * Y0sp

    curvature = ddx[:, 0] * dx[:, 1] - ddx[:, 1] * dx[:, 0]
    A1_diag = (1j * eta / TWO_PI) * speed
    A2_diag = (curvature / (TWO_PI * speed ** 2)
               + (0.5 * eta) * speed
               * (1.0 + (2j / np.pi) * (np.log(0.5 * kappa * speed)
                                        + EULER_GAMMA)))
    R0 = _log_weight_matrix(N)[0, 0]
    diag_idx = np.arange(N)
    system[diag_idx, diag_idx] = (1.0 + R0 * A1_diag
                                  + (np.pi / n_half) * A2_diag)
    return system, normal


def _assemble(curve: ParametricCurve, cfg: ScatteringConfig):
    """Assemble for a generic curve; returns (system, t, x, normal, speed)."""
    t, x, dx, ddx, speed = _curve_arrays(curve, cfg.n_quad)
    system, normal = _assemble_arrays(x, dx, ddx, speed, cfg)
    return system, t, x, normal, speed


def _solve_system(system: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        sol = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular boundary system: {exc}",
                          condition=float(np.linalg.cond(system))) from exc
    if not np.all(np.isfinite(sol)):
        raise SolverError("boundary system produced non-finite density",
                          condition=float(np.linalg.cond(system)))
    return sol


def _direction(d) -> np.ndarray:
    d = np.asarray(d, dtype=float)
    if d.shape != (2,) or abs(np.hypot(d[0], d[1]) - 1.0) > 1e-9:
        raise ValueError(f"incident direction must be a unit 2-vector, got {d}")
    return d


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def incident_trace(curve: ParametricCurve, d, kappa: float, n: int) -> np.ndarray:
    """Plane wave e^{i kappa x . d} at the n equispaced boundary nodes."""
    d = _direction(d)
    x = np.asarray(curve.position(_nodes(n)), dtype=float)
    return np.exp(1j * kappa * (x @ d))


def solve_density(curve: ParametricCurve, d, cfg: ScatteringConfig) -> BoundaryDensity:
    """Solve the combined-potential boundary equation for one incident wave."""
    d = _direction(d)
    system, t, x, _, _ = _assemble(curve, cfg)
    rhs = -2.0 * np.exp(1j * cfg.kappa * (x @ d))
    phi = _solve_system(system, rhs)
    return BoundaryDensity(values=phi, nodes=np.asarray(t), kappa=cfg.kappa)


def _far_field_from_density(phi_cols: np.ndarray, x, normal, speed,
                            cfg: ScatteringConfig, obs_angles) -> np.ndarray:
    """Far field of the combined potential; phi_cols is (N,) or (N, k)."""
    obs_angles = np.asarray(obs_angles, dtype=float)
    xhat = np.stack([np.cos(obs_angles), np.sin(obs_angles)], axis=1)
    arg = xhat @ x.T
    arg *= -cfg.kappa
    amp = cfg.kappa * (xhat @ normal.T) + cfg.eta * speed[None, :]
    # e^{i arg} * amp assembled through real trig (faster than complex exp)
    kernel = np.empty(arg.shape, dtype=complex)
    kernel.real = np.cos(arg)
    kernel.imag = np.sin(arg)
    kernel *= amp
    n_half = cfg.n_quad // 2
    return (-1j * np.pi / n_half) * (kernel @ phi_cols)


def far_field(density: BoundaryDensity, curve: ParametricCurve, d,
              cfg: ScatteringConfig, obs_angles) -> np.ndarray:
    """Far-field pattern of a previously solved density at the given
    observation angles."""
    _direction(d)
    if len(density.values) != cfg.n_quad:
        raise ValueError("density grid does not match cfg.n_quad")
    _, x, dx, _, speed = _curve_arrays(curve, cfg.n_quad)
    normal = np.stack([dx[:, 1], -dx[:, 0]], axis=1)
    return _far_field_from_density(density.values, x, normal, speed, cfg,
                                   obs_angles)


def far_field_matrix_arrays(x, dx, ddx, cfg: ScatteringConfig,
                            obs_angles, inc_angles) -> np.ndarray:
    """Far-field matrix from boundary grid arrays (position, first and
    second parameter derivatives at the solver nodes)."""
    speed = np.hypot(dx[:, 0], dx[:, 1])
    system, normal = _assemble_arrays(x, dx, ddx, speed, cfg)
    inc_angles = np.asarray(inc_angles, dtype=float)
    dirs = np.stack([np.cos(inc_angles), np.sin(inc_angles)], axis=1)
    rhs = -2.0 * np.exp(1j * cfg.kappa * (x @ dirs.T))   # (N, n_inc)
    phi = _solve_system(system, rhs)
    return _far_field_from_density(phi, x, normal, speed, cfg, obs_angles)


def far_field_matrix(curve: ParametricCurve, cfg: ScatteringConfig,
                     obs_angles, inc_angles) -> np.ndarray:
    """Far-field matrix (n_obs, n_inc): one boundary solve per incident
    direction, sharing a single system assembly."""
    _, x, dx, ddx, _ = _curve_arrays(curve, cfg.n_quad)
    return far_field_matrix_arrays(x, dx, ddx, cfg,
                                   np.asarray(obs_angles, dtype=float),
                                   inc_angles)


def forward_map(curve: ParametricCurve, cfg: ScatteringConfig,
                apertures) -> FarFieldPattern:
    """Far-field pattern over the aperture's observation x incident grid.

    apertures is any object with an angles() method returning the pair of
    angle arrays (see data.ApertureConfig).
    """
    obs_angles, inc_angles = apertures.angles()
    values = far_field_matrix(curve, cfg, obs_angles, inc_angles)
    return FarFieldPattern(values=values, obs_angles=np.asarray(obs_angles),
                           inc_angles=np.asarray(inc_angles))


# ---------------------------------------------------------------------------
# Circle oracle
# ---------------------------------------------------------------------------

SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 200


def circle_far_field(a: float, kappa: float, d, obs_angles) -> np.ndarray:
    """Separation-of-variables far field of a sound-soft circle of radius a.

    u_inf(xhat, d) = 4i sum_m [J_m(k a) / H_m(k a)] e^{i m (theta_x - theta_d)},
    truncated once consecutive coefficient magnitudes fall below SERIES_TOL.
    """
    if a <= 0:
        raise ValueError(f"radius must be positive, got {a}")
    d = _direction(d)
    theta_d = float(np.arctan2(d[1], d[0]))
    psi = np.asarray(obs_angles, dtype=float) - theta_d

    ka = kappa * a
    total = np.full(psi.shape, sp_special.jv(0, ka) / sp_special.hankel1(0, ka),
                    dtype=complex)
    for m in range(1, SERIES_MAX_TERMS + 1):
        # c_{-m} = c_m, so the +/-m pair contributes 2 c_m cos(m psi).
        c = sp_special.jv(m, ka) / sp_special.hankel1(m, ka)
        total += 2.0 * c * np.cos(m * psi)
        if abs(c) < SERIES_TOL and m > ka:
            return 4j * total
    raise OracleError(
        f"circle series did not converge within {SERIES_MAX_TERMS} terms "
        f"(kappa*a = {ka:.3g})")
