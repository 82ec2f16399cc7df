"""Command-line experiment runner: simulate observations, reconstruct
boundaries by pCN sampling, evaluate against catalog truths, and plot.

Subcommands: simulate, reconstruct, evaluate, plot, catalog.
Exit codes: 0 success, 2 configuration/input error, 3 forward-solver error,
4 chain abort. SCATTER_BAYES_THREADS caps parallel chain workers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .config import ConfigError, ExperimentConfig, config_to_dict, \
    config_from_dict, load_config
from .data import ObservationFormatError, atomic_write_text, \
    load_observations, make_observations
from .forward import SolverError
from .geometry import ParametricCurve, boundary_discrepancy, catalog_entries, \
    catalog_entry, hausdorff_points
from .sampler import ChainAbortError, ChainConfig, Posterior, SampleStore, \
    posterior_mean_curve, run_chain, summarize
from . import plotting

BOUNDARY_SIGNATURE = "# scatterbayes-boundary v1"
CHAIN_SIGNATURE = "# scatterbayes-chain v1"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_ABORT = 4

DISCREPANCY_POINTS = 512
TRUTH_POLYLINE = 4096


def _worker_cap() -> int:
    env = os.environ.get("SCATTER_BAYES_THREADS")
    if env:
        try:
            cap = int(env)
        except ValueError:
            raise ConfigError(
                f"SCATTER_BAYES_THREADS must be an integer, got {env!r}")
        if cap < 1:
            raise ConfigError("SCATTER_BAYES_THREADS must be >= 1")
        return cap
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Truth geometry helpers
# ---------------------------------------------------------------------------

def _truth_curve(shape: str, true_center) -> ParametricCurve:
    curve = catalog_entry(shape).curve
    if tuple(true_center) != (0.0, 0.0):
        curve = curve.translated(true_center)
    return curve


def ray_radii(curve: ParametricCurve, center, angles) -> np.ndarray:
    """Distance from center to the boundary along each ray angle.

    Intersects each ray with a dense polyline sampling of the curve and
    keeps the nearest positive crossing; rays that miss give nan.
    """
    pts = curve.points(TRUTH_POLYLINE)
    seg_a = pts
    seg_b = np.roll(pts, -1, axis=0)
    B = seg_b - seg_a                       # (S, 2)
    angles = np.asarray(angles, dtype=float)
    e = np.stack([np.cos(angles), np.sin(angles)], axis=1)   # (R, 2)
    A = seg_a[None, :, :] - np.asarray(center, dtype=float)  # (1, S, 2)

    # Solve s*e - u*B = A per (ray, segment) by Cramer's rule.
    det = B[None, :, 0] * e[:, None, 1] - B[None, :, 1] * e[:, None, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (A[..., 1] * B[None, :, 0] - A[..., 0] * B[None, :, 1]) / det
        u = (A[..., 1] * e[:, None, 0] - A[..., 0] * e[:, None, 1]) / det
    hit = (np.abs(det) > 1e-14) & (u >= 0.0) & (u < 1.0) & (s > 0.0)
    s = np.where(hit, s, np.inf)
    out = s.min(axis=1)
    return np.where(np.isfinite(out), out, np.nan)


# ---------------------------------------------------------------------------
# Output files
# ---------------------------------------------------------------------------

def write_boundary_csv(path, theta, r_mean, r_low, r_high, center,
                       r_true=None, shape=None, true_center=None) -> None:
    lines = [BOUNDARY_SIGNATURE,
             f"# center {float(center[0])!r} {float(center[1])!r}"]
    if shape:
        lines.append(f"# shape {shape}")
    if true_center is not None:
        lines.append(
            f"# true_center {float(true_center[0])!r} {float(true_center[1])!r}")
    cols = ["theta", "r_mean", "r_low", "r_high"]
    if r_true is not None:
        cols.insert(1, "r_true")
    lines.append(",".join(cols))
    for i in range(len(theta)):
        row = [repr(float(theta[i]))]
        if r_true is not None:
            row.append(repr(float(r_true[i])))
        row += [repr(float(r_mean[i])), repr(float(r_low[i])),
                repr(float(r_high[i]))]
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_boundary_csv(path):
    """Parse a boundary CSV into (columns dict, meta dict)."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != BOUNDARY_SIGNATURE:
        raise ConfigError(f"{path}: not a boundary CSV (missing signature)")
    meta: dict = {}
    i = 1
    while i < len(raw) and raw[i].startswith("#"):
        parts = raw[i][1:].split()
        if parts and parts[0] == "center":
            meta["center"] = (float(parts[1]), float(parts[2]))
        elif parts and parts[0] == "shape":
            meta["shape"] = parts[1]
        elif parts and parts[0] == "true_center":
            meta["true_center"] = (float(parts[1]), float(parts[2]))
        i += 1
    if i >= len(raw):
        raise ConfigError(f"{path}: missing column header")
    names = raw[i].split(",")
    required = {"theta", "r_mean", "r_low", "r_high"}
    if not required <= set(names):
        raise ConfigError(
            f"{path}: missing columns {sorted(required - set(names))}")
    rows = [line.split(",") for line in raw[i + 1:] if line.strip()]
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    try:
        table = np.asarray([[float(v) for v in row] for row in rows])
    except ValueError as exc:
        raise ConfigError(f"{path}: malformed row ({exc})") from exc
    if table.shape[1] != len(names):
        raise ConfigError(f"{path}: row width does not match header")
    cols = {name: table[:, j] for j, name in enumerate(names)}
    theta = cols["theta"]
    dtheta = np.diff(theta)
    if np.any(dtheta <= 0) or np.ptp(dtheta) > 1e-9:
        raise ConfigError(f"{path}: theta grid is not uniformly increasing")
    return cols, meta


def write_chain_csv(path, store: SampleStore) -> None:
    m = store.B.shape[1] if store.n_samples else 0
    header = ["iteration"] + [f"B_{k}" for k in range(m)] + ["phi"]
    lines = [CHAIN_SIGNATURE, ",".join(header)]
    for i in range(store.n_samples):
        row = [str(int(store.iterations[i]))]
        row += [repr(float(v)) for v in store.B[i]]
        row.append(repr(float(store.phi[i])))
        lines.append(",".join(row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_chain_csv(path):
    """(iterations, phi) of a stored chain; tolerates an empty chain."""
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != CHAIN_SIGNATURE:
        raise ConfigError(f"{path}: not a chain CSV (missing signature)")
    if len(raw) < 2:
        raise ConfigError(f"{path}: missing column header")
    names = raw[1].split(",")
    if "iteration" not in names or "phi" not in names:
        raise ConfigError(f"{path}: missing iteration/phi columns")
    it_col = names.index("iteration")
    phi_col = names.index("phi")
    iters, phis = [], []
    for line in raw[2:]:
        if not line.strip():
            continue
        parts = line.split(",")
        iters.append(int(parts[it_col]))
        phis.append(float(parts[phi_col]))
    return np.asarray(iters), np.asarray(phis)


# ---------------------------------------------------------------------------
# Chain execution (worker is module-level so process pools can pickle it)
# ---------------------------------------------------------------------------

def _run_one_chain(cfg_dict: dict, obs_path: str, seed: int, prior_only: bool):
    cfg = config_from_dict(cfg_dict)
    data = load_observations(obs_path)
    post = Posterior(data=None if prior_only else data,
                     scattering=cfg.scattering_for_inversion(),
                     prior=cfg.prior, center=cfg.assumed_center)
    chain_cfg = ChainConfig(beta=cfg.chain.beta, n_total=cfg.chain.n_total,
                            burn_in=cfg.chain.burn_in, seed=seed,
                            thin=cfg.chain.thin, init=cfg.chain.init)
    store, _ = run_chain(post, chain_cfg)
    return store.iterations, store.B, store.phi, store.acceptance_rate, \
        store.n_steps


def _run_chains(cfg: ExperimentConfig, obs_path: str, base_seed: int,
                n_chains: int, prior_only: bool):
    cfg_dict = config_to_dict(cfg)
    seeds = [base_seed + k for k in range(n_chains)]
    workers = min(n_chains, _worker_cap())
    if n_chains > 1 and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(
                _run_one_chain, [cfg_dict] * n_chains, [obs_path] * n_chains,
                seeds, [prior_only] * n_chains))
    else:
        results = [_run_one_chain(cfg_dict, obs_path, s, prior_only)
                   for s in seeds]
    stores = [SampleStore(iterations=it, B=B, phi=phi, acceptance_rate=acc,
                          n_steps=n)
              for it, B, phi, acc, n in results]
    merged = SampleStore(
        iterations=np.concatenate([s.iterations for s in stores]),
        B=np.vstack([s.B for s in stores]),
        phi=np.concatenate([s.phi for s in stores]),
        acceptance_rate=float(np.mean([s.acceptance_rate for s in stores])),
        n_steps=sum(s.n_steps for s in stores))
    return stores, merged, seeds


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        from .data import NoiseConfig
        cfg_noise = NoiseConfig(eta1=cfg.noise.eta1, eta2=cfg.noise.eta2,
                                seed=args.seed)
    else:
        cfg_noise = cfg.noise
    outdir = args.output or cfg.output_dir
    truth = _truth_curve(cfg.shape, cfg.true_center)
    obs = make_observations(
        truth, cfg.scattering_for_data(), cfg.apertures, cfg_noise,
        truth_meta={"shape": cfg.shape, "true_center": cfg.true_center})
    path = os.path.join(outdir, "observations.txt")
    from .data import save_observations
    save_observations(obs, path)
    print(path)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = load_config(args.config)
    outdir = args.output or cfg.output_dir
    os.makedirs(outdir, exist_ok=True)
    data = load_observations(args.observations)
    base_seed = args.seed if args.seed is not None else cfg.chain.seed

    log_lines = [f"config: {args.config}", f"observations: {args.observations}",
                 f"chains: {args.chains}", f"base_seed: {base_seed}",
                 f"prior_only: {bool(args.prior_only)}"]
    try:
        stores, merged, seeds = _run_chains(cfg, args.observations, base_seed,
                                            args.chains, args.prior_only)
    except ChainAbortError as exc:
        log_lines.append(f"abort: {exc}")
        atomic_write_text(os.path.join(outdir, "run.log"),
                          "\n".join(log_lines) + "\n")
        raise

    post = Posterior(data=None if args.prior_only else data,
                     scattering=cfg.scattering_for_inversion(),
                     prior=cfg.prior, center=cfg.assumed_center)
    summary = summarize(merged, post)

    for k, store in enumerate(stores):
        write_chain_csv(os.path.join(outdir, f"chain_{k:02d}.csv"), store)

    # Truth overlay and discrepancy when the data records what it came from.
    shape = None
    true_center = None
    r_true = None
    discrepancy = None
    if data.truth_meta and "shape" in data.truth_meta:
        shape = data.truth_meta["shape"]
        true_center = tuple(data.truth_meta.get("true_center", (0.0, 0.0)))
        truth = _truth_curve(shape, true_center)
        r_true = ray_radii(truth, cfg.assumed_center, summary.theta)
        mean_curve = posterior_mean_curve(summary)
        discrepancy = boundary_discrepancy(mean_curve, truth,
                                           DISCREPANCY_POINTS)

    write_boundary_csv(os.path.join(outdir, "boundary.csv"), summary.theta,
                       summary.r_mean, summary.r_low, summary.r_high,
                       cfg.assumed_center, r_true=r_true, shape=shape,
                       true_center=true_center)

    phi = merged.phi
    summary_doc = {
        "acceptance_rate": summary.acceptance_rate,
        "per_chain_acceptance": [s.acceptance_rate for s in stores],
        "n_samples": summary.n_samples,
        "n_steps_total": merged.n_steps,
        "seeds": seeds,
        "prior_only": bool(args.prior_only),
        "center": list(cfg.assumed_center),
        "band_quantiles": list(summary.band_quantiles),
        "mean_coefficients": [float(v) for v in summary.mean_coefficients],
        "phi_stats": {
            "min": float(np.min(phi)), "max": float(np.max(phi)),
            "mean": float(np.mean(phi)), "final": float(phi[-1]),
        },
        "truth_shape": shape,
        "discrepancy_vs_truth": discrepancy,
    }
    atomic_write_text(os.path.join(outdir, "summary.json"),
                      json.dumps(summary_doc, indent=2, sort_keys=True) + "\n")

    log_lines.append(f"acceptance_rate: {summary.acceptance_rate!r}")
    if discrepancy is not None:
        log_lines.append(f"discrepancy_vs_truth: {discrepancy!r}")
    atomic_write_text(os.path.join(outdir, "run.log"),
                      "\n".join(log_lines) + "\n")

    msg = (f"reconstruct: {summary.n_samples} samples, acceptance "
           f"{summary.acceptance_rate:.3f}")
    if discrepancy is not None:
        msg += f", discrepancy vs {shape} {discrepancy:.4f}"
    print(msg)
    print(outdir)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cols, meta = read_boundary_csv(args.boundary)
    shape = args.truth or meta.get("shape")
    if not shape:
        raise ConfigError(
            "truth shape unknown: pass --truth or use a boundary CSV that "
            "records it")
    center = meta.get("center", (0.0, 0.0))
    true_center = (tuple(args.true_center) if args.true_center
                   else meta.get("true_center", (0.0, 0.0)))
    truth = _truth_curve(shape, true_center)

    theta = cols["theta"]
    r_mean = cols["r_mean"]
    mean_pts = np.stack([center[0] + r_mean * np.cos(theta),
                         center[1] + r_mean * np.sin(theta)], axis=1)
    # sample the truth at the CSV's own resolution so a boundary copied
    # from the truth scores exactly zero
    hausdorff = hausdorff_points(mean_pts, truth.points(len(theta)))

    r_true = cols.get("r_true")
    if r_true is None:
        r_true = ray_radii(truth, center, theta)
    valid = np.isfinite(r_true)
    radial = np.abs(r_mean[valid] - r_true[valid])
    report = {
        "shape": shape,
        "hausdorff": float(hausdorff),
        "radial_mean": float(radial.mean()) if radial.size else None,
        "radial_max": float(radial.max()) if radial.size else None,
        "n_theta": int(len(theta)),
    }
    if args.json:
        print(json.dumps(report, sort_keys=True))
    else:
        rm = "nan" if report["radial_mean"] is None else f"{report['radial_mean']:.6g}"
        rx = "nan" if report["radial_max"] is None else f"{report['radial_max']:.6g}"
        print(f"status=ok shape={shape} hausdorff={hausdorff:.6g} "
              f"radial_mean={rm} radial_max={rx} n_theta={len(theta)}")
    return EXIT_OK


def cmd_plot(args) -> int:
    cols, meta = read_boundary_csv(args.boundary)
    outdir = args.output or os.path.dirname(os.path.abspath(args.boundary))
    os.makedirs(outdir, exist_ok=True)
    center = meta.get("center", (0.0, 0.0))
    shape = meta.get("shape")

    truth_points = None
    if shape:
        truth = _truth_curve(shape, meta.get("true_center", (0.0, 0.0)))
        truth_points = truth.points(DISCREPANCY_POINTS)
    boundary_path = os.path.join(outdir, "boundary.svg")
    plotting.plot_boundary(boundary_path, cols["theta"], cols["r_mean"],
                           cols["r_low"], cols["r_high"], center=center,
                           truth_points=truth_points, title=shape)
    print(boundary_path)

    if args.chain:
        iters, phis = read_chain_csv(args.chain)
        if len(iters) == 0:
            print("warning: empty chain, trace plot skipped", file=sys.stderr)
        else:
            trace_path = os.path.join(outdir, "trace.svg")
            plotting.plot_trace(trace_path, iters, phis, title=shape)
            print(trace_path)
    return EXIT_OK


def cmd_catalog(args) -> int:
    entries = catalog_entries()
    if args.json:
        doc = [{"name": e.name, "formula": e.formula, "radial": e.radial,
                "note": e.note} for e in entries]
        print(json.dumps(doc, indent=2))
    else:
        width = max(len(e.name) for e in entries)
        for e in entries:
            line = f"{e.name:<{width}}  {e.formula}"
            if e.note:
                line += f"   [{e.note}]"
            print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scatter-bayes",
        description="Bayesian shape reconstruction of 2D sound-soft "
                    "obstacles from far-field data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate noisy far-field data for a "
                                        "catalog shape")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("--seed", type=int, help="override the noise seed")
    p.add_argument("--output", help="override the config output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="run pCN chains against an "
                                           "observation file")
    p.add_argument("--config", required=True, help="experiment config (JSON)")
    p.add_argument("observations", help="observation file from 'simulate'")
    p.add_argument("--seed", type=int, help="override the chain seed")
    p.add_argument("--chains", type=int, default=1,
                   help="number of independent chains (seeds seed..seed+N-1)")
    p.add_argument("--prior-only", action="store_true",
                   help="sample the prior (potential identically zero)")
    p.add_argument("--output", help="override the config output directory")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score a boundary CSV against a "
                                        "catalog truth")
    p.add_argument("boundary", help="boundary CSV from 'reconstruct'")
    p.add_argument("--truth", help="catalog shape name (default: from CSV)")
    p.add_argument("--true-center", nargs=2, type=float, metavar=("X", "Y"),
                   help="truth center (default: from CSV, else origin)")
    p.add_argument("--json", action="store_true",
                   help="machine-readable JSON report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="render boundary overlay and misfit trace")
    p.add_argument("boundary", help="boundary CSV from 'reconstruct'")
    p.add_argument("--chain", help="chain CSV for the misfit trace")
    p.add_argument("--output", help="output directory (default: CSV directory)")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("catalog", help="list the benchmark shapes")
    p.add_argument("--json", action="store_true",
                   help="machine-readable JSON listing")
    p.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ObservationFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ChainAbortError as exc:
        print(f"chain aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
