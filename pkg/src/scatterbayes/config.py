"""Experiment configuration: strict JSON schema with unknown-key rejection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .data import ApertureConfig, NoiseConfig
from .forward import ScatteringConfig
from .geometry import CATALOG_NAMES
from .prior import PriorConfig
from .sampler import ChainConfig


class ConfigError(ValueError):
    """Experiment configuration is malformed."""


@dataclass(frozen=True)
class ForwardSettings:
    """Quadrature sizes for the two solver roles. Data generation runs on a
    finer grid than the inversion likelihood so synthetic data is never
    inverted with its own discretization."""

    n_quad_data: int = 128
    n_quad_inverse: int = 64
    coupling: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    shape: str = "kite"
    kappa: float = 1.0
    true_center: tuple = (0.0, 0.0)
    assumed_center: tuple = (0.0, 0.0)
    apertures: ApertureConfig = field(default_factory=ApertureConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    prior: PriorConfig = field(default_factory=PriorConfig)
    chain: ChainConfig = field(default_factory=ChainConfig)
    forward: ForwardSettings = field(default_factory=ForwardSettings)
    output_dir: str = "runs/out"

    def scattering_for_data(self) -> ScatteringConfig:
        return ScatteringConfig(kappa=self.kappa,
                                n_quad=self.forward.n_quad_data,
                                coupling=self.forward.coupling)

    def scattering_for_inversion(self) -> ScatteringConfig:
        return ScatteringConfig(kappa=self.kappa,
                                n_quad=self.forward.n_quad_inverse,
                                coupling=self.forward.coupling)


_TOP_KEYS = {"shape", "kappa", "true_center", "assumed_center", "apertures",
             "noise", "prior", "chain", "forward", "output_dir"}
_APERTURE_KEYS = {"obs_kind", "obs_spacing", "obs_interval", "inc_kind",
                  "inc_angles"}
_NOISE_KEYS = {"eta1", "eta2", "seed"}
_PRIOR_KEYS = {"s", "lambda", "alpha", "m", "divide_by_eigenvalue",
               "eigenvalue_power"}
_CHAIN_KEYS = {"beta", "n_total", "burn_in", "seed", "thin", "init"}
_FORWARD_KEYS = {"n_quad_data", "n_quad_inverse", "coupling"}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ConfigError(
            f"unknown key(s) in {where}: {', '.join(sorted(unknown))}; "
            f"allowed: {', '.join(sorted(allowed))}")


def _pair(value, where: str) -> tuple:
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or not all(isinstance(v, (int, float)) for v in value)):
        raise ConfigError(f"{where} must be a pair of numbers, got {value!r}")
    return (float(value[0]), float(value[1]))


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from parsed JSON, rejecting unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError(f"top-level config must be an object, got {type(raw).__name__}")
    _check_keys(raw, _TOP_KEYS, "config")

    shape = raw.get("shape", "kite")
    if shape not in CATALOG_NAMES:
        raise ConfigError(
            f"unknown shape {shape!r}; valid names: {', '.join(CATALOG_NAMES)}")

    try:
        ap_raw = dict(raw.get("apertures", {}))
        _check_keys(ap_raw, _APERTURE_KEYS, "apertures")
        if "obs_interval" in ap_raw and ap_raw["obs_interval"] is not None:
            ap_raw["obs_interval"] = _pair(ap_raw["obs_interval"],
                                           "apertures.obs_interval")
        if "inc_angles" in ap_raw and ap_raw["inc_angles"] is not None:
            ap_raw["inc_angles"] = tuple(float(a) for a in ap_raw["inc_angles"])
        apertures = ApertureConfig(**ap_raw)

        noise_raw = dict(raw.get("noise", {}))
        _check_keys(noise_raw, _NOISE_KEYS, "noise")
        noise = NoiseConfig(**noise_raw)

        prior_raw = dict(raw.get("prior", {}))
        _check_keys(prior_raw, _PRIOR_KEYS, "prior")
        if "lambda" in prior_raw:
            prior_raw["lam"] = prior_raw.pop("lambda")
        # boolean alias for the two extreme expansion scalings
        if "divide_by_eigenvalue" in prior_raw:
            flag = prior_raw.pop("divide_by_eigenvalue")
            if "eigenvalue_power" in prior_raw:
                raise ConfigError(
                    "prior: give either divide_by_eigenvalue or "
                    "eigenvalue_power, not both")
            prior_raw["eigenvalue_power"] = 1.0 if flag else 0.0
        prior = PriorConfig(**prior_raw)

        chain_raw = dict(raw.get("chain", {}))
        _check_keys(chain_raw, _CHAIN_KEYS, "chain")
        chain = ChainConfig(**chain_raw)

        fwd_raw = dict(raw.get("forward", {}))
        _check_keys(fwd_raw, _FORWARD_KEYS, "forward")
        forward = ForwardSettings(**fwd_raw)

        return ExperimentConfig(
            shape=shape,
            kappa=float(raw.get("kappa", 1.0)),
            true_center=_pair(raw.get("true_center", (0.0, 0.0)), "true_center"),
            assumed_center=_pair(raw.get("assumed_center", (0.0, 0.0)),
                                 "assumed_center"),
            apertures=apertures,
            noise=noise,
            prior=prior,
            chain=chain,
            forward=forward,
            output_dir=str(raw.get("output_dir", "runs/out")),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def config_to_dict(cfg: ExperimentConfig) -> dict:
    """Round-trippable plain-dict form of a config (JSON-serializable)."""
    ap: dict = {"obs_kind": cfg.apertures.obs_kind,
                "obs_spacing": cfg.apertures.obs_spacing,
                "inc_kind": cfg.apertures.inc_kind}
    if cfg.apertures.obs_interval is not None:
        ap["obs_interval"] = list(cfg.apertures.obs_interval)
    if cfg.apertures.inc_angles is not None:
        ap["inc_angles"] = list(cfg.apertures.inc_angles)
    return {
        "shape": cfg.shape,
        "kappa": cfg.kappa,
        "true_center": list(cfg.true_center),
        "assumed_center": list(cfg.assumed_center),
        "apertures": ap,
        "noise": {"eta1": cfg.noise.eta1, "eta2": cfg.noise.eta2,
                  "seed": cfg.noise.seed},
        "prior": {"s": cfg.prior.s, "lambda": cfg.prior.lam,
                  "alpha": cfg.prior.alpha, "m": cfg.prior.m,
                  "eigenvalue_power": cfg.prior.eigenvalue_power},
        "chain": {"beta": cfg.chain.beta, "n_total": cfg.chain.n_total,
                  "burn_in": cfg.chain.burn_in, "seed": cfg.chain.seed,
                  "thin": cfg.chain.thin, "init": cfg.chain.init},
        "forward": {"n_quad_data": cfg.forward.n_quad_data,
                    "n_quad_inverse": cfg.forward.n_quad_inverse,
                    "coupling": cfg.forward.coupling},
        "output_dir": cfg.output_dir,
    }


def load_config(path: str) -> ExperimentConfig:
    """Parse an experiment config file (JSON)."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON ({path}): {exc}") from exc
    return config_from_dict(raw)


def save_config(cfg: ExperimentConfig, path: str) -> None:
    from .data import atomic_write_text
    atomic_write_text(path, json.dumps(config_to_dict(cfg), indent=2,
                                       sort_keys=True) + "\n")
