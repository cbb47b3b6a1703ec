"""Command-line harness: one verification experiment per invocation.

Every subcommand reads an experiment configuration (from --config, from a
named --preset, or from the subcommand's default preset), runs it, writes
``<experiment>.csv`` plus ``<experiment>-summary.txt`` into the output
directory, and prints the summary.  Flags override file keys.

Exit codes: 0 the configured check passed, 1 a bound was violated,
2 statistics too weak to decide, 3 configuration problem, 4 numerical
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace

import numpy as np

from .bounds import (
    corner_exit_bound,
    dirichlet_bound,
    green_bound,
    green_bound_1d,
    survival_bound,
)
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .errors import ConfigError, NumericalError, RegimeError, ValidationError
from .estimate import (
    CsvRow,
    fit_eigenvalue,
    mc_exit_time,
    mc_green_profile,
    mc_heat_kernel_profile,
    mc_survival,
    ratio_report,
    write_csv,
)
from .geometry import (
    c11_chars,
    check_D_gamma,
    inward_normal,
    nearest_boundary_point,
    sample_interior,
)
from .oracle import generator_pv, product_density
from .presets import describe_presets, get_preset
from .scalefn import validate_ws
from .simulate import set_worker_count

PASS, VIOLATION, WEAK, BADCONFIG, NUMERIC = 0, 1, 2, 3, 4

_CODE_OF_VERDICT = {"pass": PASS, "fail": VIOLATION, "inconclusive": WEAK}

_DEFAULT_PRESET = {
    "validate-scalefn": "powerlog-validate",
    "check-dgamma": "halfspace-dgamma",
    "verify-free-kernel": "stable-free-d2",
    "verify-dhke": "stable-ball-d2",
    "verify-survival": "stable-halfspace-d1",
    "verify-exit": "stable-ball-d1-exit",
    "verify-green": "stable-ball-d1-green",
    "fit-eigenvalue": "powerlog-ball-d2",
    "generator-identity": "stable-generator",
}

GENERATOR_TOL = 1e-4


@dataclass
class RunArtifacts:
    code: int
    summary: list
    rows: list
    series: list | None = None  # (x, y) pairs for --plot-data


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _anchor(cfg: ExperimentConfig) -> np.ndarray:
    """Reference interior point: the first grid entry, else a shape default."""
    if cfg.x_grid:
        return np.asarray(cfg.x_grid[0], dtype=float)
    D = cfg.domain
    if D.shape in ("ball", "axis_box_rounded"):
        return np.asarray(D.center, dtype=float)
    if D.shape == "half_space":
        x = np.zeros(D.dim)
        x[D.axis] = D.offset + 1.0
        return x
    if D.shape == "annulus":
        x = np.array(D.center, dtype=float)
        x[0] += 0.5 * (D.inner_radius + D.outer_radius)
        return x
    raise ConfigError("this experiment needs a start point; set x_grid")


def _approach_points(D, anchor, depths):
    """Points at prescribed boundary distances along one inward normal."""
    Q = nearest_boundary_point(D, anchor)
    nrm = inward_normal(D, Q)
    return [Q + dp * nrm for dp in depths]


def _report_lines(rep) -> list:
    spread = rep.max / rep.min if rep.ratios and rep.min > 0 else float("nan")
    return [
        f"verdict: {rep.verdict}",
        f"ratio window: min={rep.min!r} median={rep.median!r} "
        f"max={rep.max!r} spread={spread!r}",
        f"cells used: {len(rep.ratios)}, excluded: {rep.n_excluded}",
    ]


def _log_slope(xs, ys) -> float:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = (xs > 0) & (ys > 0)
    if keep.sum() < 2 or np.ptp(np.log(xs[keep])) == 0:
        return float("nan")
    return float(np.polyfit(np.log(xs[keep]), np.log(ys[keep]), 1)[0])


# -- runners --------------------------------------------------------------

def _run_validate_scalefn(cfg: ExperimentConfig) -> RunArtifacts:
    d = cfg.domain.dim
    zero = [0.0] * d
    try:
        cert = validate_ws(cfg.phi)
    except ValidationError as e:
        return RunArtifacts(VIOLATION, ["verdict: fail",
                                        f"weak scaling rejected: {e}"], [])
    rs = np.geomspace(max(1e-3, cfg.phi.r_min), min(1e3, cfg.phi.r_max), 25)
    r0, phi0 = float(rs[0]), float(cfg.phi.phi(rs[0]))
    rows, series = [], []
    for r in map(float, rs):
        v = float(cfg.phi.phi(r))
        lo = phi0 * (r / r0) ** cert.alpha_low
        hi = phi0 * (r / r0) ** cert.alpha_high
        x = zero.copy()
        x[0] = r
        rows.append(CsvRow("validate-scalefn", 0.0, x, zero, v, 0.0,
                           lo, hi, v / hi))
        series.append((r, v))
    summary = [
        "verdict: pass",
        f"scaling exponents: low={cert.alpha_low!r} high={cert.alpha_high!r}",
        f"certified on {len(cert.grid)} radii in "
        f"[{cert.grid[0]!r}, {cert.grid[-1]!r}]",
    ]
    return RunArtifacts(PASS, summary, rows, series)


def _run_check_dgamma(cfg: ExperimentConfig) -> RunArtifacts:
    D = cfg.domain
    _need(D.shape != "full_space", "check-dgamma needs a domain with boundary")
    rng = np.random.default_rng((cfg.seed, 0))
    xs = sample_interior(D, cfg.n_paths, rng)
    ys = sample_interior(D, cfg.n_paths, rng)
    rows = []
    n_failed = 0
    witness = None
    for x, y in zip(xs, ys):
        rep = check_D_gamma(D, cfg.gamma, [(x, y)])
        ok = 1.0 if rep.passed else 0.0
        if not rep.passed:
            n_failed += 1
            witness = witness or (tuple(map(float, x)), tuple(map(float, y)))
        rows.append(CsvRow("check-dgamma", 0.0, x, y, ok, 0.0,
                           cfg.gamma, 1.0, ok))
    summary = [
        f"verdict: {'pass' if n_failed == 0 else 'fail'}",
        f"gamma={cfg.gamma!r} pairs={cfg.n_paths} failed={n_failed}",
    ]
    if witness is not None:
        summary.append(f"first failing pair: {witness!r}")
    return RunArtifacts(PASS if n_failed == 0 else VIOLATION, summary, rows)


def _run_free_kernel(cfg: ExperimentConfig) -> RunArtifacts:
    _need(cfg.domain.shape == "full_space",
          "verify-free-kernel compares against the whole-space oracle; "
          "use domain full_space")
    _need(bool(cfg.t_grid), "verify-free-kernel needs t_grid")
    _need(bool(cfg.y_grid), "verify-free-kernel needs y_grid")
    x = _anchor(cfg)
    h = (np.full(cfg.domain.dim, cfg.box_halfwidth)
         if cfg.box_halfwidth is not None else None)
    ests, refs, rows, series = [], [], [], []
    for k, t in enumerate(cfg.t_grid):
        ys = [np.asarray(y, dtype=float) for y in cfg.y_grid]
        cell_ests = mc_heat_kernel_profile(
            cfg.domain, cfg.kappa, cfg.phi, t, x, [(y, h) for y in ys],
            cfg.n_paths, (cfg.seed, k), eps=cfg.eps)
        for y, est in zip(ys, cell_ests):
            ref = product_density(cfg.phi, t, x, y)
            ests.append(est)
            refs.append(ref)
            rows.append(CsvRow("verify-free-kernel", t, x, y, est.value,
                               est.std_error, ref, ref, est.value / ref))
            series.append((ref, est.value))
    rep = ratio_report(ests, refs, cfg.ratio_ceiling)
    summary = [*_report_lines(rep),
               f"targets: {len(refs)} cells against the Fourier oracle"]
    return RunArtifacts(_CODE_OF_VERDICT[rep.verdict], summary, rows, series)


def _run_dhke(cfg: ExperimentConfig) -> RunArtifacts:
    D, f = cfg.domain, cfg.phi
    _need(D.shape != "full_space", "verify-dhke needs a domain with boundary")
    _need(bool(cfg.t_grid), "verify-dhke needs t_grid")
    _need(bool(cfg.depths), "verify-dhke needs depths")
    x = _anchor(cfg)
    ests, bnds, rows, series = [], [], [], []
    slope_pts = []
    ys = _approach_points(D, x, cfg.depths)
    for k, t in enumerate(cfg.t_grid):
        # boxes shrink with the wall distance so they stay inside D
        targets = [(y, min(0.1 * f.phi_inverse(t), 0.45 * dp))
                   for dp, y in zip(cfg.depths, ys)]
        cell_ests = mc_heat_kernel_profile(D, cfg.kappa, f, t, x, targets,
                                           cfg.n_paths, (cfg.seed, k),
                                           eps=cfg.eps)
        for dp, y, est in zip(cfg.depths, ys, cell_ests):
            bnd = dirichlet_bound(f, t, x, y, D)
            ests.append(est)
            bnds.append(bnd)
            rows.append(CsvRow("verify-dhke", t, x, y, est.value,
                               est.std_error, 0.0, bnd,
                               est.value / bnd))
            free = product_density(f, t, x, y)
            sfac = survival_bound(f, t, y, D)
            series.append((dp, est.value / free))
            usable = (est.value > 0 and est.std_error <= 0.5 * est.value
                      and sfac < 0.999)
            if usable:
                slope_pts.append((sfac, est.value / free))
    rep = ratio_report(ests, bnds, cfg.ratio_ceiling)
    summary = _report_lines(rep)
    slope = _log_slope(*zip(*slope_pts)) if len(slope_pts) >= 2 else float("nan")
    summary.append(f"boundary-factor exponent (expect 1): {slope!r}")
    return RunArtifacts(_CODE_OF_VERDICT[rep.verdict], summary, rows, series)


def _run_survival(cfg: ExperimentConfig) -> RunArtifacts:
    D, f = cfg.domain, cfg.phi
    _need(D.shape != "full_space",
          "verify-survival needs a domain with boundary")
    _need(bool(cfg.t_grid), "verify-survival needs t_grid")
    if cfg.depths:
        xs = _approach_points(D, _anchor(cfg), cfg.depths)
    else:
        _need(bool(cfg.x_grid), "verify-survival needs depths or x_grid")
        xs = [np.asarray(p, dtype=float) for p in cfg.x_grid]
    ests, bnds, rows, series = [], [], [], []
    slope_pts = []
    k = 0
    for t in cfg.t_grid:
        for x in xs:
            est = mc_survival(D, cfg.kappa, f, x, t, cfg.n_paths,
                              (cfg.seed, k), eps=cfg.eps)
            k += 1
            bnd = survival_bound(f, t, x, D)
            ests.append(est)
            bnds.append(bnd)
            rows.append(CsvRow("verify-survival", t, x, x, est.value,
                               est.std_error, 0.0, bnd, est.value / bnd))
            series.append((float(D.depth(x)), est.value))
            if t == cfg.t_grid[0]:
                slope_pts.append((float(D.depth(x)), est.value))
    rep = ratio_report(ests, bnds, cfg.ratio_ceiling)
    summary = _report_lines(rep)
    slope = (_log_slope(*zip(*slope_pts)) if len(slope_pts) >= 2
             else float("nan"))
    summary.append(
        "log-survival vs log-depth slope (expect half the local "
        f"exponent): {slope!r}")
    return RunArtifacts(_CODE_OF_VERDICT[rep.verdict], summary, rows, series)


def _run_exit(cfg: ExperimentConfig) -> RunArtifacts:
    D, f = cfg.domain, cfg.phi
    _need(bool(cfg.x_grid), "verify-exit needs x_grid")
    half_diam = 0.5 * c11_chars(D).diam
    _need(np.isfinite(half_diam), "verify-exit needs a bounded domain")
    ests, bnds, rows, series = [], [], [], []
    truncated = False
    for i, pt in enumerate(cfg.x_grid):
        x = np.asarray(pt, dtype=float)
        delta = float(D.depth(x))
        _need(delta > 0, f"x_grid[{i}] lies outside the domain")
        est = mc_exit_time(D, cfg.kappa, f, x, cfg.n_paths, (cfg.seed, i),
                           eps=cfg.eps, horizon=cfg.horizon)
        truncated = truncated or est.truncated
        bnd = corner_exit_bound(f, half_diam, delta)
        ests.append(est)
        bnds.append(bnd)
        rows.append(CsvRow("verify-exit", 0.0, x, x, est.value,
                           est.std_error, 0.0, bnd, est.value / bnd))
        series.append((delta, est.value))
    rep = ratio_report(ests, bnds, cfg.ratio_ceiling)
    code = _CODE_OF_VERDICT[rep.verdict]
    summary = _report_lines(rep)
    if truncated:
        code = max(code, WEAK)
        summary.append("warning: horizon truncated some paths; "
                       "means are biased low")
    return RunArtifacts(code, summary, rows, series)


def _run_green(cfg: ExperimentConfig) -> RunArtifacts:
    D, f = cfg.domain, cfg.phi
    _need(bool(cfg.y_grid), "verify-green needs y_grid")
    _need(np.isfinite(c11_chars(D).diam), "verify-green needs a bounded domain")
    x = _anchor(cfg)
    targets, deltas = [], []
    for i, pt in enumerate(cfg.y_grid):
        y = np.asarray(pt, dtype=float)
        delta = float(D.depth(y))
        _need(delta > 0, f"y_grid[{i}] lies outside the domain")
        h = cfg.box_halfwidth if cfg.box_halfwidth is not None else delta / 4.0
        targets.append((y, np.full(D.dim, h)))
        deltas.append(delta)
    ests = mc_green_profile(D, cfg.kappa, f, x, targets, cfg.n_paths,
                            (cfg.seed, 0), eps=cfg.eps, horizon=cfg.horizon)
    rows, uppers, series = [], [], []
    for (y, _), delta, est in zip(targets, deltas, ests):
        if D.dim == 1:
            lo = hi = green_bound_1d(f, float(x[0]), float(y[0]), D)
        else:
            lo = green_bound(f, x, y, D, "lower")
            hi = green_bound(f, x, y, D, "upper")
        uppers.append(hi)
        rows.append(CsvRow("verify-green", 0.0, x, y, est.value,
                           est.std_error, lo, hi, est.value / hi))
        series.append((delta, est.value))
    rep = ratio_report(ests, uppers, cfg.ratio_ceiling)
    code = _CODE_OF_VERDICT[rep.verdict]
    summary = _report_lines(rep)
    slope = _log_slope(deltas, [e.value for e in ests])
    summary.append("log-occupation vs log-depth slope (expect half the "
                   f"local exponent on top of interior variation): {slope!r}")
    if any(e.truncated for e in ests):
        code = max(code, WEAK)
        summary.append("warning: horizon truncated some paths; "
                       "occupation is biased low")
    return RunArtifacts(code, summary, rows, series)


def _run_fit_eigenvalue(cfg: ExperimentConfig) -> RunArtifacts:
    _need(bool(cfg.x_grid), "fit-eigenvalue needs x_grid")
    _need(len(cfg.t_grid) >= 2, "fit-eigenvalue needs at least two times")
    fit = fit_eigenvalue(cfg.domain, cfg.kappa, cfg.phi,
                         [list(p) for p in cfg.x_grid],
                         np.asarray(cfg.t_grid), cfg.n_paths,
                         (cfg.seed, 0), eps=cfg.eps)
    rows = []
    for j, pt in enumerate(cfg.x_grid):
        for i, t in enumerate(cfg.t_grid):
            model = fit.g[j] * np.exp(-fit.lambda_hat * t)
            s = fit.survival[j, i]
            rows.append(CsvRow("fit-eigenvalue", t, pt, pt, s,
                               fit.survival_se[j, i], model, model,
                               s / model if model > 0 else float("nan")))
    spread = float(fit.slopes_by_x.max() / fit.slopes_by_x.min())
    summary = [
        "verdict: pass",
        f"lambda_hat={fit.lambda_hat!r} r_squared={fit.r_squared!r}",
        f"per-start decay rates: "
        f"{[round(float(s), 6) for s in fit.slopes_by_x]!r} "
        f"(spread {spread!r})",
        f"survival profile g: {[round(float(v), 6) for v in fit.g]!r}",
    ]
    series = [(t, fit.survival[0, i]) for i, t in enumerate(cfg.t_grid)]
    return RunArtifacts(PASS, summary, rows, series)


def _run_generator_identity(cfg: ExperimentConfig) -> RunArtifacts:
    f = cfg.phi
    _need(f.kind == "power",
          "the half-space power profile is harmonic only for a pure power "
          "exponent; generator-identity needs phi.kind = power")
    _need(bool(cfg.x_grid), "generator-identity needs x_grid")
    half = f.alpha / 2.0

    def w(v):
        return v ** half if v > 0 else 0.0

    d = cfg.domain.dim
    rows, series = [], []
    worst = 0.0
    for pt in cfg.x_grid:
        x = np.asarray(pt, dtype=float)
        _need(x[-1] > 0, "profile points need a positive last coordinate")
        pv = generator_pv(f, w, x, axis=d)
        worst = max(worst, abs(pv))
        rows.append(CsvRow("generator-identity", 0.0, x, x, pv, 0.0,
                           -GENERATOR_TOL, GENERATOR_TOL,
                           abs(pv) / GENERATOR_TOL))
        series.append((float(x[-1]), pv))
    code = PASS if worst <= GENERATOR_TOL else VIOLATION
    summary = [
        f"verdict: {'pass' if code == PASS else 'fail'}",
        f"largest |generator| on the harmonic profile: {worst!r} "
        f"(tolerance {GENERATOR_TOL!r})",
    ]
    return RunArtifacts(code, summary, rows, series)


_RUNNERS = {
    "validate-scalefn": _run_validate_scalefn,
    "check-dgamma": _run_check_dgamma,
    "verify-free-kernel": _run_free_kernel,
    "verify-dhke": _run_dhke,
    "verify-survival": _run_survival,
    "verify-exit": _run_exit,
    "verify-green": _run_green,
    "fit-eigenvalue": _run_fit_eigenvalue,
    "generator-identity": _run_generator_identity,
}


# -- plumbing -------------------------------------------------------------

def run(config: ExperimentConfig, plot_data: bool = False) -> int:
    """Run one experiment, write its artifacts, print the summary."""
    art = _RUNNERS[config.experiment](config)
    outdir = config.out or "."
    os.makedirs(outdir, exist_ok=True)
    base = os.path.join(outdir, config.experiment)
    write_csv(base + ".csv", art.rows, config.domain.dim)
    text = "\n".join([f"experiment: {config.experiment}", *art.summary]) + "\n"
    with open(base + "-summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    if plot_data and art.series:
        with open(base + "-series.csv", "w", encoding="utf-8",
                  newline="\n") as fh:
            fh.write("x,y\n")
            for a, b in art.series:
                fh.write(f"{float(a)!r},{float(b)!r}\n")
    return art.code


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage; 2 means "inconclusive" here, so route
    # usage problems through the config-error path instead
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group()
    src.add_argument("--config", metavar="PATH",
                     help="experiment file (TOML)")
    src.add_argument("--preset", metavar="NAME",
                     help="named built-in configuration")
    common.add_argument("--seed", type=int, metavar="U64")
    common.add_argument("--threads", metavar="N|auto",
                        help="worker threads for block generation; results "
                        "do not depend on it")
    common.add_argument("--deterministic", action="store_true",
                        help="fixed-order block reduction (always on; "
                        "accepted for script compatibility)")
    common.add_argument("--out", metavar="DIR",
                        help="output directory (default from config)")
    common.add_argument("--ratio-ceiling", type=float, metavar="C",
                        help="largest allowed max/min estimate-to-bound ratio")
    common.add_argument("--plot-data", action="store_true",
                        help="also write an <experiment>-series.csv of "
                        "(x, y) pairs")

    parser = _Parser(prog="anijump",
                     description="Verification experiments for "
                     "coordinate-wise jump processes.")
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="COMMAND")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common],
                       help=f"run the {name} experiment")
    sub.add_parser("list-presets", help="show the built-in configurations")
    return parser


def _apply_threads(value) -> None:
    if value is None:
        return
    if value == "auto":
        set_worker_count(os.cpu_count() or 1)
        return
    try:
        n = int(value)
    except ValueError:
        raise ConfigError(f"--threads expects an integer or 'auto', "
                          f"got {value!r}") from None
    if n < 1:
        raise ConfigError("--threads must be at least 1")
    set_worker_count(n)


def _build_config(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = get_preset(args.preset)
    else:
        cfg = get_preset(_DEFAULT_PRESET[args.command])
    over = {"experiment": args.command}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["out"] = args.out
    if args.ratio_ceiling is not None:
        over["ratio_ceiling"] = args.ratio_ceiling
    return replace(cfg, **over)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return BADCONFIG
    if args.command == "list-presets":
        for name, experiment, doc in describe_presets():
            print(f"{name:22s} {experiment:20s} {doc}")
        return PASS
    try:
        _apply_threads(args.threads)
        cfg = _build_config(args)
        return run(cfg, plot_data=args.plot_data)
    except (ConfigError, ValidationError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return BADCONFIG
    except RegimeError as e:
        print(f"inconclusive: {e}", file=sys.stderr)
        return WEAK
    except NumericalError as e:
        print(f"numerical error: {e}", file=sys.stderr)
        return NUMERIC


if __name__ == "__main__":
    sys.exit(main())
