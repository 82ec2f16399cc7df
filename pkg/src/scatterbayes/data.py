"""Measurement apertures, synthetic observation generation with relative
Gaussian noise, and a self-describing text format for observation sets."""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .forward import ScatteringConfig, far_field_matrix
from .geometry import ParametricCurve

TWO_PI = 2.0 * np.pi

DEFAULT_OBS_SPACING = TWO_PI / 64

OBS_INTERVALS = {
    "gamma1_o": (0.0, TWO_PI),
    "gamma2_o": (0.0, np.pi),
    "gamma3_o": (0.0, np.pi / 2),
}

INC_ANGLE_SETS = {
    "gamma1_i": (0.0,),
    "gamma2_i": (np.pi / 2, 3 * np.pi / 2),
}

FILE_SIGNATURE = "scatterbayes-observations"
FILE_VERSION = 1


class ObservationFormatError(ValueError):
    """Observation file could not be parsed."""


@dataclass(frozen=True)
class ApertureConfig:
    """Observation and incident direction grids.

    obs_kind is one of gamma1_o ([0, 2 pi]), gamma2_o ([0, pi]),
    gamma3_o ([0, pi/2]) or 'custom' with an explicit obs_interval.
    Observation angles are laid out at fixed spacing, so smaller apertures
    genuinely carry fewer measurements; the closing endpoint of the full
    circle is dropped to avoid a duplicate direction. inc_kind is gamma1_i
    (single wave from angle 0), gamma2_i (two waves from pi/2 and 3 pi/2)
    or 'custom' with explicit inc_angles.
    """

    obs_kind: str = "gamma1_o"
    obs_spacing: float = DEFAULT_OBS_SPACING
    obs_interval: Optional[tuple] = None
    inc_kind: str = "gamma1_i"
    inc_angles: Optional[tuple] = None

    def __post_init__(self):
        if self.obs_kind not in OBS_INTERVALS and self.obs_kind != "custom":
            raise ValueError(
                f"obs_kind must be one of {sorted(OBS_INTERVALS)} or 'custom', "
                f"got {self.obs_kind!r}")
        if self.obs_kind == "custom":
            if self.obs_interval is None:
                raise ValueError("custom observation aperture needs obs_interval")
            lo, hi = self.obs_interval
            if not hi > lo:
                raise ValueError(f"empty observation interval {self.obs_interval}")
        if not self.obs_spacing > 0:
            raise ValueError(f"obs_spacing must be positive, got {self.obs_spacing}")
        if self.inc_kind not in INC_ANGLE_SETS and self.inc_kind != "custom":
            raise ValueError(
                f"inc_kind must be one of {sorted(INC_ANGLE_SETS)} or 'custom', "
                f"got {self.inc_kind!r}")
        if self.inc_kind == "custom" and not self.inc_angles:
            raise ValueError("custom incident aperture needs inc_angles")

    def interval(self) -> tuple:
        if self.obs_kind == "custom":
            return (float(self.obs_interval[0]), float(self.obs_interval[1]))
        return OBS_INTERVALS[self.obs_kind]

    def angles(self):
        """(observation angles, incident angles) as float arrays."""
        lo, hi = self.interval()
        span = hi - lo
        if span >= TWO_PI - 1e-12:
            count = int(round(TWO_PI / self.obs_spacing))
            obs = lo + self.obs_spacing * np.arange(count)
        else:
            count = int(np.floor(span / self.obs_spacing + 1e-9))
            obs = lo + self.obs_spacing * np.arange(count + 1)
        if len(obs) == 0:
            raise ValueError("observation aperture produced no angles")
        if self.inc_kind == "custom":
            inc = np.asarray(self.inc_angles, dtype=float)
        else:
            inc = np.asarray(INC_ANGLE_SETS[self.inc_kind], dtype=float)
        return obs, inc


def observation_angles(apertures: ApertureConfig):
    """Angle grids induced by an aperture configuration."""
    return apertures.angles()


@dataclass(frozen=True)
class NoiseConfig:
    """Relative noise levels for the real and imaginary parts plus rng seed."""

    eta1: float = 0.01
    eta2: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.eta1 < 0 or self.eta2 < 0:
            raise ValueError("noise levels must be nonnegative")


@dataclass(frozen=True)
class ObservationSet:
    """Noisy far-field data plus the metadata needed to invert it.

    sigma is the per-component noise scale entering the misfit; it is None
    for noiseless synthetic data, in which case the likelihood falls back
    to a relative floor.
    """

    y: np.ndarray                 # (n_obs, n_inc) complex
    obs_angles: np.ndarray
    inc_angles: np.ndarray
    apertures: ApertureConfig
    kappa: float
    sigma: Optional[float] = None
    noise: Optional[NoiseConfig] = None
    truth_meta: Optional[dict] = None

    def __post_init__(self):
        if self.y.shape != (len(self.obs_angles), len(self.inc_angles)):
            raise ValueError(
                f"data shape {self.y.shape} does not match angle grids")
        if not np.all(np.isfinite(self.y)):
            raise ValueError("observations contain non-finite entries")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive when present, got {self.sigma}")


def make_observations(truth: ParametricCurve, cfg: ScatteringConfig,
                      apertures: ApertureConfig, noise: NoiseConfig,
                      truth_meta: Optional[dict] = None) -> ObservationSet:
    """Synthesize noisy far-field data for a known boundary.

    Each entry receives (eta1 * z1 + i eta2 * z2) * max|u_inf| with z1, z2
    independent standard normal draws (z1 for all real parts first, then z2);
    the recorded sigma is max(eta1, eta2) * max|u_inf|. Generate data at a
    finer quadrature than the inversion uses to avoid the inverse crime.
    """
    obs, inc = apertures.angles()
    clean = far_field_matrix(truth, cfg, obs, inc)
    scale = float(np.max(np.abs(clean)))
    rng = np.random.default_rng(noise.seed)
    z1 = rng.standard_normal(clean.shape)
    z2 = rng.standard_normal(clean.shape)
    y = clean + (noise.eta1 * z1 + 1j * noise.eta2 * z2) * scale
    level = max(noise.eta1, noise.eta2)
    sigma = level * scale if level > 0 else None
    return ObservationSet(y=y, obs_angles=obs, inc_angles=inc,
                          apertures=apertures, kappa=cfg.kappa, sigma=sigma,
                          noise=noise, truth_meta=truth_meta)


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def atomic_write_text(path: str, text: str) -> None:
    """Write a text file via a temp file + rename in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_observations(obs_set: ObservationSet, path: str) -> None:
    """Write an observation set as self-describing text (lossless floats)."""
    ap = obs_set.apertures
    lines = [f"{FILE_SIGNATURE} v{FILE_VERSION}"]
    lines.append(f"kappa {obs_set.kappa!r}")
    lines.append(f"obs_kind {ap.obs_kind}")
    lines.append(f"obs_spacing {ap.obs_spacing!r}")
    if ap.obs_kind == "custom":
        lo, hi = ap.obs_interval
        lines.append(f"obs_interval {lo!r} {hi!r}")
    lines.append(f"inc_kind {ap.inc_kind}")
    if ap.inc_kind == "custom":
        lines.append("inc_angles " + " ".join(repr(float(a)) for a in ap.inc_angles))
    if obs_set.noise is not None:
        lines.append(f"eta1 {obs_set.noise.eta1!r}")
        lines.append(f"eta2 {obs_set.noise.eta2!r}")
        lines.append(f"noise_seed {obs_set.noise.seed}")
    lines.append("sigma " + ("none" if obs_set.sigma is None else repr(obs_set.sigma)))
    if obs_set.truth_meta:
        if "shape" in obs_set.truth_meta:
            lines.append(f"truth_shape {obs_set.truth_meta['shape']}")
        if "true_center" in obs_set.truth_meta:
            cx, cy = obs_set.truth_meta["true_center"]
            lines.append(f"true_center {float(cx)!r} {float(cy)!r}")
    lines.append(f"n_obs {len(obs_set.obs_angles)}")
    lines.append(f"n_inc {len(obs_set.inc_angles)}")
    lines.append("data")
    for i, oa in enumerate(obs_set.obs_angles):
        for j, ia in enumerate(obs_set.inc_angles):
            v = obs_set.y[i, j]
            lines.append(f"{float(oa)!r} {float(ia)!r} "
                         f"{float(v.real)!r} {float(v.imag)!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")


def _parse_float(token: str, lineno: int, field_name: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ObservationFormatError(
            f"line {lineno}: cannot parse {field_name} from {token!r}") from None


def load_observations(path: str) -> ObservationSet:
    """Read an observation set written by save_observations."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ObservationFormatError("empty observation file")
    expected_sig = f"{FILE_SIGNATURE} v{FILE_VERSION}"
    if raw[0].strip() != expected_sig:
        raise ObservationFormatError(
            f"line 1: incompatible file signature {raw[0].strip()!r}; "
            f"expected {expected_sig!r}")

    header: dict = {}
    data_start = None
    for lineno, line in enumerate(raw[1:], start=2):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped == "data":
            data_start = lineno
            break
        parts = stripped.split()
        header[parts[0]] = (parts[1:], lineno)
    if data_start is None:
        raise ObservationFormatError("missing 'data' section")

    def need(key: str):
        if key not in header:
            raise ObservationFormatError(f"missing header field {key!r}")
        return header[key]

    kappa_tokens, ln = need("kappa")
    kappa = _parse_float(kappa_tokens[0], ln, "kappa")
    obs_kind = need("obs_kind")[0][0]
    spacing_tokens, ln = need("obs_spacing")
    obs_spacing = _parse_float(spacing_tokens[0], ln, "obs_spacing")
    obs_interval = None
    if obs_kind == "custom":
        tok, ln = need("obs_interval")
        obs_interval = (_parse_float(tok[0], ln, "obs_interval"),
                        _parse_float(tok[1], ln, "obs_interval"))
    inc_kind = need("inc_kind")[0][0]
    inc_angles = None
    if inc_kind == "custom":
        tok, ln = need("inc_angles")
        inc_angles = tuple(_parse_float(v, ln, "inc_angles") for v in tok)
    try:
        apertures = ApertureConfig(obs_kind=obs_kind, obs_spacing=obs_spacing,
                                   obs_interval=obs_interval,
                                   inc_kind=inc_kind, inc_angles=inc_angles)
    except ValueError as exc:
        raise ObservationFormatError(f"invalid aperture header: {exc}") from exc

    noise = None
    if "eta1" in header:
        tok1, ln1 = header["eta1"]
        tok2, ln2 = need("eta2")
        seed_tok, _ = need("noise_seed")
        noise = NoiseConfig(eta1=_parse_float(tok1[0], ln1, "eta1"),
                            eta2=_parse_float(tok2[0], ln2, "eta2"),
                            seed=int(seed_tok[0]))
    sigma_tok, ln = need("sigma")
    sigma = None if sigma_tok[0] == "none" else _parse_float(sigma_tok[0], ln, "sigma")

    truth_meta = None
    if "truth_shape" in header or "true_center" in header:
        truth_meta = {}
        if "truth_shape" in header:
            truth_meta["shape"] = header["truth_shape"][0][0]
        if "true_center" in header:
            tok, ln = header["true_center"]
            truth_meta["true_center"] = (_parse_float(tok[0], ln, "true_center"),
                                         _parse_float(tok[1], ln, "true_center"))

    n_obs = int(need("n_obs")[0][0])
    n_inc = int(need("n_inc")[0][0])

    rows = [line.strip() for line in raw[data_start:] if line.strip()]
    expected_rows = n_obs * n_inc
    if len(rows) < expected_rows:
        raise ObservationFormatError(
            f"data section incomplete: expected {expected_rows} rows, "
            f"found {len(rows)}")
    if len(rows) > expected_rows:
        raise ObservationFormatError(
            f"data section has {len(rows) - expected_rows} extra rows")

    obs, inc = apertures.angles()
    if len(obs) != n_obs or len(inc) != n_inc:
        raise ObservationFormatError(
            f"header counts ({n_obs}, {n_inc}) do not match the aperture "
            f"grids ({len(obs)}, {len(inc)})")

    y = np.empty((n_obs, n_inc), dtype=complex)
    for k, row in enumerate(rows):
        lineno = data_start + 1 + k
        parts = row.split()
        if len(parts) != 4:
            raise ObservationFormatError(
                f"line {lineno}: expected 4 columns, got {len(parts)}")
        oa = _parse_float(parts[0], lineno, "obs_angle")
        ia = _parse_float(parts[1], lineno, "inc_angle")
        i, j = divmod(k, n_inc)
        if abs(oa - obs[i]) > 1e-12 or abs(ia - inc[j]) > 1e-12:
            raise ObservationFormatError(
                f"line {lineno}: angle pair ({oa}, {ia}) does not match the "
                f"aperture grid entry ({obs[i]}, {inc[j]})")
        y[i, j] = complex(_parse_float(parts[2], lineno, "re"),
                          _parse_float(parts[3], lineno, "im"))

    return ObservationSet(y=y, obs_angles=obs, inc_angles=inc,
                          apertures=apertures, kappa=kappa, sigma=sigma,
                          noise=noise, truth_meta=truth_meta)
