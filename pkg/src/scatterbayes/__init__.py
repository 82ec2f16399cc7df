"""Bayesian shape reconstruction of 2D sound-soft obstacles from
(limited-aperture) far-field acoustic data.

The pieces: a Nystrom boundary-integral solver for the exterior Helmholtz
problem (forward), star-shaped boundary representations and a benchmark
shape catalog (geometry), an l1-type coefficient prior built from a
Gaussian reference through a Laplace marginal map and a cyclic-difference
coupling (prior), preconditioned Crank-Nicolson sampling (sampler),
synthetic observation generation (data), and a CLI experiment runner (cli).
"""

from .config import ConfigError, ExperimentConfig, ForwardSettings, \
    config_from_dict, config_to_dict, load_config, save_config
from .data import ApertureConfig, NoiseConfig, ObservationFormatError, \
    ObservationSet, load_observations, make_observations, observation_angles, \
    save_observations
from .forward import BoundaryDensity, FarFieldPattern, OracleError, \
    ScatteringConfig, SolverError, bessel, circle_far_field, far_field, \
    far_field_matrix, forward_map, hankel1, incident_trace, solve_density
from .geometry import CATALOG_NAMES, InvalidShapeError, ParametricCurve, \
    ShapeCatalogEntry, StarShapedCurve, boundary_discrepancy, catalog_entries, \
    catalog_entry, catalog_shape, hausdorff_points, radial_curve, star_curve
from .prior import Eigenbasis, LogRadiusExpansion, PriorConfig, TVTransform, \
    coeffs_to_logradius, eigenbasis, gauss_to_laplace, laplace_to_gauss, \
    prior_sample, tv_couple, tv_decouple, tv_transform
from .sampler import ChainAbortError, ChainConfig, ChainRandom, \
    CoefficientChainState, Posterior, PosteriorSummary, SampleStore, \
    initial_state, pcn_step, posterior_mean_curve, potential, run_chain, \
    summarize

__version__ = "0.1.0"
