"""Monte Carlo estimators with uncertainty, and ratio reports against the
closed-form bounds.

Every estimator reduces path blocks to sufficient statistics (counts,
sums, sums of squares), so memory stays proportional to the output grid
rather than the path count, and the fixed block order makes reruns
bit-identical.  ``rng`` arguments take a seed int or a (seed, stream)
pair; generator objects are rejected because block seeding needs plain
integers.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import SandwichWindow
from .errors import RegimeError, ValidationError
from .geometry import Domain, c11_chars
from .scalefn import ScaleFunction
from .simulate import (
    KappaSpec,
    SimConfig,
    iter_killed_blocks,
    sample_general_increment,
    sample_stable_increment,
)

__all__ = [
    "MCEstimate",
    "BoundReport",
    "EigenvalueFit",
    "CsvRow",
    "mc_survival",
    "mc_heat_kernel",
    "mc_green",
    "mc_green_profile",
    "mc_exit_time",
    "fit_eigenvalue",
    "ratio_report",
    "write_csv",
]

BLOCK = 65536


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    n_paths: int
    n_effective: int        # paths contributing a nonzero observation
    truncated: bool = False  # horizon cut off a non-negligible tail

    def __post_init__(self):
        # numpy scalars sneak in from reductions; pin plain floats so
        # reprs (and therefore CSV bytes) never depend on the numpy version
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "std_error", float(self.std_error))
        if self.std_error < 0:
            raise ValidationError("std_error must be nonnegative")
        if self.n_effective > self.n_paths:
            raise ValidationError("n_effective cannot exceed n_paths")


@dataclass(frozen=True)
class BoundReport:
    ratios: list
    min: float
    median: float
    max: float
    window: object          # SandwichWindow of the fitted constants
    verdict: str            # pass | fail | inconclusive
    n_excluded: int


@dataclass(frozen=True)
class EigenvalueFit:
    lambda_hat: float
    g: np.ndarray           # survival profile at t_ref, rescaled by e^{lam t}
    r_squared: float
    slopes_by_x: np.ndarray  # independent per-start fits
    survival: np.ndarray | None = None     # raw S, one row per start
    survival_se: np.ndarray | None = None  # matching binomial errors


def _seed_pair(rng) -> tuple[int, int]:
    if isinstance(rng, (int, np.integer)):
        return int(rng), 0
    if isinstance(rng, (tuple, list)) and len(rng) == 2:
        return int(rng[0]), int(rng[1])
    raise ValidationError("rng must be a seed int or a (seed, stream) pair")


def _default_eps(f: ScaleFunction, scale: float) -> float:
    eps = 0.05 * scale
    return min(max(eps, 2.0 * f.r_min), 0.5 * f.r_max)


def _domain_radius(D: Domain) -> float:
    ch = c11_chars(D)
    if not math.isfinite(ch.diam):
        raise ValidationError("bounded domain required")
    return ch.diam / 2.0


def _box_in_domain(D: Domain, lo: np.ndarray, hi: np.ndarray) -> bool:
    """Containment of an axis-aligned box in the closed domain, exact for
    every supported shape (touching the boundary is allowed)."""
    if D.shape == "full_space":
        return True
    tol = 1e-9 * (1.0 + float(np.max(np.abs(np.stack([lo, hi])))))
    corners = np.stack(np.meshgrid(*zip(lo, hi), indexing="ij"), axis=-1)
    corners = corners.reshape(-1, D.dim)
    if D.shape == "annulus":
        c = np.asarray(D.center)
        if np.any(np.linalg.norm(corners - c, axis=1) > D.outer_radius + tol):
            return False
        nearest = np.clip(c, lo, hi)   # closest box point to the center
        return float(np.linalg.norm(nearest - c)) >= D.inner_radius - tol
    # the remaining shapes are convex, so the corners decide
    return bool(np.all(D.depth(corners) > -tol))


def _check_box(D: Domain, y: np.ndarray, h: np.ndarray) -> None:
    if np.any(h <= 0):
        raise ValidationError("box halfwidths must be positive")
    if not _box_in_domain(D, y - h, y + h):
        raise ValidationError("box must lie inside the domain")


# -- survival and exit time -------------------------------------------------

def mc_survival(D: Domain, kappa: KappaSpec, f: ScaleFunction, x, t: float,
                n: int, rng, *, eps: float | None = None,
                dt_check: float | None = None) -> MCEstimate:
    """Frequency of paths still in D at time t, with binomial error."""
    x = np.asarray(x, dtype=float)
    if t < 0:
        raise ValidationError("t must be nonnegative")
    if n < 1:
        raise ValidationError("n must be at least 1")
    if t == 0 or D.shape == "full_space":
        return MCEstimate(1.0, 0.0, n, n)
    depth = D.depth(x)
    if depth <= 0:
        raise ValidationError("x must lie inside the domain")
    seed, stream = _seed_pair(rng)
    eps = eps or _default_eps(f, min(f.phi_inverse(t), depth))
    cfg = SimConfig(eps, t, dt_check, seed, stream)
    alive = 0
    for part in iter_killed_blocks(D, f, x, cfg, n, kappa=kappa,
                                   block_size=BLOCK):
        alive += int((~part.exited).sum())
    p = alive / n
    return MCEstimate(p, math.sqrt(p * (1.0 - p) / n), n, n)


def mc_exit_time(D: Domain, kappa: KappaSpec, f: ScaleFunction, x, n: int,
                 rng, *, eps: float | None = None,
                 horizon: float | None = None,
                 dt_check: float | None = None) -> MCEstimate:
    """Sample mean of the exit time; flags truncation when more than 0.1%
    of the paths were still alive at the horizon."""
    x = np.asarray(x, dtype=float)
    if n < 1:
        raise ValidationError("n must be at least 1")
    if D.depth(x) <= 0:
        return MCEstimate(0.0, 0.0, n, 0)
    if horizon is None:
        horizon = 100.0 * f.phi(min(_domain_radius(D), f.r_max))
    seed, stream = _seed_pair(rng)
    eps = eps or _default_eps(f, _reference_scale(D, f))
    cfg = SimConfig(eps, horizon, dt_check, seed, stream)
    s = s2 = 0.0
    alive = 0
    for part in iter_killed_blocks(D, f, x, cfg, n, kappa=kappa,
                                   block_size=BLOCK):
        s += float(part.exit_time.sum())
        s2 += float((part.exit_time**2).sum())
        alive += int((~part.exited).sum())
    mean = s / n
    var = max(s2 / n - mean**2, 0.0)
    return MCEstimate(mean, math.sqrt(var / n), n, n - alive,
                      truncated=alive > 1e-3 * n)


def _reference_scale(D: Domain, f: ScaleFunction) -> float:
    try:
        return min(_domain_radius(D), f.r_max)
    except ValidationError:
        return min(1.0, f.r_max)


# -- heat kernel -------------------------------------------------------------

def mc_heat_kernel(D: Domain, kappa: KappaSpec, f: ScaleFunction, t: float,
                   x, y, halfwidths=None, n: int = 100_000, rng=0, *,
                   eps: float | None = None,
                   dt_check: float | None = None) -> MCEstimate:
    """Box-averaged transition density: the frequency of paths found in
    box(y, h) at time t (alive, when killed), divided by the box volume.

    In free space with unit weight the increments are drawn directly, and
    exactly when phi is a pure power.
    """
    return mc_heat_kernel_profile(D, kappa, f, t, x, [(y, halfwidths)], n,
                                  rng, eps=eps, dt_check=dt_check)[0]


def mc_heat_kernel_profile(D: Domain, kappa: KappaSpec, f: ScaleFunction,
                           t: float, x, targets: Sequence,
                           n: int = 100_000, rng=0, *,
                           eps: float | None = None,
                           dt_check: float | None = None) -> list[MCEstimate]:
    """Density estimates for several (y, halfwidths) boxes from one shared
    ensemble; halfwidths None means a tenth of the spatial scale of t."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        raise ValidationError("t must be positive")
    if n < 1:
        raise ValidationError("n must be at least 1")
    if x.shape != (D.dim,):
        raise ValidationError(f"points must have dimension {D.dim}")
    scale = f.phi_inverse(t)
    killed = D.shape != "full_space"
    if killed and D.depth(x) <= 0:
        raise ValidationError("x must lie inside the domain")
    ys, hs = [], []
    for y, halfwidths in targets:
        y = np.asarray(y, dtype=float)
        if y.shape != (D.dim,):
            raise ValidationError(f"points must have dimension {D.dim}")
        h = np.full(D.dim, 0.1 * scale) if halfwidths is None \
            else np.broadcast_to(np.asarray(halfwidths, dtype=float), (D.dim,))
        if killed:
            _check_box(D, y, h)
        ys.append(y)
        hs.append(h)
    seed, stream = _seed_pair(rng)

    hits = np.zeros(len(ys), dtype=np.int64)
    if not killed and kappa.kind == "constant_one":
        exact = f.kind == "power" and eps is None
        eps_eff = None if exact else (eps or _default_eps(f, scale))
        d = D.dim
        for block, start in enumerate(range(0, n, BLOCK)):
            m = min(BLOCK, n - start)
            gen = np.random.default_rng((seed, stream, block))
            pos = np.empty((m, d))
            for i in range(d):
                if exact:
                    pos[:, i] = x[i] + sample_stable_increment(f.alpha, t,
                                                               gen, size=m)
                else:
                    pos[:, i] = x[i] + sample_general_increment(f, t, eps_eff,
                                                                gen, size=m)
            for k, (y, h) in enumerate(zip(ys, hs)):
                hits[k] += int(np.all(np.abs(pos - y) <= h, axis=1).sum())
    else:
        eps = eps or _default_eps(f, scale)
        cfg = SimConfig(eps, t, dt_check, seed, stream)
        for part in iter_killed_blocks(D, f, x, cfg, n, kappa=kappa,
                                       block_size=BLOCK):
            pos = part.horizon_position[~part.exited]
            for k, (y, h) in enumerate(zip(ys, hs)):
                hits[k] += int(np.all(np.abs(pos - y) <= h, axis=1).sum())

    out = []
    for k, h in enumerate(hs):
        vol = float(np.prod(2.0 * h))
        p = hits[k] / n
        if hits[k] == 0:
            # one-sided 95% bar from the rule of three
            out.append(MCEstimate(0.0, 3.0 / (n * vol), n, 0))
        else:
            out.append(MCEstimate(p / vol, math.sqrt(p * (1.0 - p) / n) / vol,
                                  n, int(hits[k])))
    return out


# -- Green function ----------------------------------------------------------

def mc_green(D: Domain, kappa: KappaSpec, f: ScaleFunction, x, y, halfwidths,
             n: int, rng, *, eps: float | None = None,
             horizon: float | None = None,
             dt_check: float | None = None) -> MCEstimate:
    """Box-averaged Green function: mean occupation time of box(y, h)
    before the exit, divided by the box volume."""
    return mc_green_profile(D, kappa, f, x, [(y, halfwidths)], n, rng,
                            eps=eps, horizon=horizon, dt_check=dt_check)[0]


def mc_green_profile(D: Domain, kappa: KappaSpec, f: ScaleFunction, x,
                     targets: Sequence, n: int, rng, *,
                     eps: float | None = None,
                     horizon: float | None = None,
                     dt_check: float | None = None) -> list[MCEstimate]:
    """Green estimates for several (y, halfwidths) boxes from one shared
    ensemble; one path sweep prices the whole profile."""
    x = np.asarray(x, dtype=float)
    if n < 1:
        raise ValidationError("n must be at least 1")
    radius = _domain_radius(D)     # rejects unbounded domains
    if D.depth(x) <= 0:
        raise ValidationError("x must lie inside the domain")
    boxes = []
    vols = []
    hmin = math.inf
    for y, h in targets:
        y = np.asarray(y, dtype=float)
        h = np.broadcast_to(np.asarray(h, dtype=float), (D.dim,))
        _check_box(D, y, h)
        boxes.append((y - h, y + h))
        vols.append(float(np.prod(2.0 * h)))
        hmin = min(hmin, float(h.min()))
    if horizon is None:
        # decay-rate prior 1/phi(radius) bounds the truncation tail
        horizon = 20.0 * f.phi(min(radius, f.r_max))
    if eps is None:
        eps = min(_default_eps(f, _reference_scale(D, f)), 0.25 * hmin)
        eps = max(eps, 2.0 * f.r_min)
    seed, stream = _seed_pair(rng)
    cfg = SimConfig(eps, horizon, dt_check, seed, stream)
    nb = len(boxes)
    s = np.zeros(nb)
    s2 = np.zeros(nb)
    n_pos = np.zeros(nb, dtype=int)
    alive = 0
    for part in iter_killed_blocks(D, f, x, cfg, n, boxes=boxes,
                                   kappa=kappa, block_size=BLOCK):
        occ = part.box_occupation
        s += occ.sum(axis=0)
        s2 += (occ**2).sum(axis=0)
        n_pos += (occ > 0).sum(axis=0)
        alive += int((~part.exited).sum())
    truncated = alive > 1e-3 * n
    out = []
    for b in range(nb):
        mean = s[b] / n
        var = max(s2[b] / n - mean**2, 0.0)
        out.append(MCEstimate(mean / vols[b], math.sqrt(var / n) / vols[b],
                              n, int(n_pos[b]), truncated=truncated))
    return out


# -- eigenvalue fit ----------------------------------------------------------

def fit_eigenvalue(D: Domain, kappa: KappaSpec, f: ScaleFunction,
                   x_list: Sequence, t_grid, n: int, rng, *,
                   eps: float | None = None,
                   dt_check: float | None = None) -> EigenvalueFit:
    """Decay rate of survival: pooled weighted least squares of
    log S(x, t) = c_x - lambda t over the grid, one shared slope.

    Weights are the inverse binomial variances of log S.  A pooled R^2
    below 0.95, survival above 0.5 at the grid start, or a start with
    fewer than two usable grid points all abort with a regime error.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size < 2 or np.any(np.diff(t_grid) <= 0):
        raise ValidationError("t_grid must be increasing with >= 2 points")
    if n < 1:
        raise ValidationError("n must be at least 1")
    seed, stream = _seed_pair(rng)
    radius = _domain_radius(D)
    eps = eps or _default_eps(f, _reference_scale(D, f))
    horizon = float(t_grid[-1])

    rows = []       # (x index, t, log S, weight)
    surv = np.zeros((len(x_list), t_grid.size))
    for j, x in enumerate(x_list):
        x = np.asarray(x, dtype=float)
        if D.depth(x) <= 0:
            raise ValidationError("every start must lie inside the domain")
        cfg = SimConfig(eps, horizon, dt_check, seed, stream + j)
        counts = np.zeros(t_grid.size, dtype=int)
        for part in iter_killed_blocks(D, f, x, cfg, n, kappa=kappa,
                                       block_size=BLOCK):
            tau = np.where(part.exited, part.exit_time, np.inf)
            counts += (tau[:, None] > t_grid[None, :]).sum(axis=0)
        S = counts / n
        surv[j] = S
        if S[0] >= 0.5:
            raise RegimeError(
                f"survival {S[0]:.2f} at the grid start exceeds 0.5; shift "
                "t_grid into the decay regime")
        usable = counts > 0
        if usable.sum() < 2:
            raise RegimeError("fewer than two usable grid points; decay too "
                              "fast for this grid")
        w = n * S[usable] / np.maximum(1.0 - S[usable], 1e-12)
        rows.append((j, t_grid[usable], np.log(S[usable]), w))

    lam, intercepts, r2 = _pooled_slope(rows, len(rows))
    if r2 < 0.95:
        raise RegimeError(f"log-survival not linear (R^2 = {r2:.3f})")
    slopes = np.array([-_wls_slope(t, ls, w) for _, t, ls, w in rows])
    # the fitted S(x, t) e^{lam t} is e^{c_x}: the survival profile
    g = np.exp(intercepts)
    se = np.sqrt(surv * (1.0 - surv) / n)
    return EigenvalueFit(float(lam), g, float(r2), slopes,
                         survival=surv, survival_se=se)


def _pooled_slope(rows, k):
    n_obs = sum(len(r[1]) for r in rows)
    A = np.zeros((n_obs, k + 1))
    b = np.zeros(n_obs)
    w = np.zeros(n_obs)
    xidx = np.zeros(n_obs, dtype=int)
    at = 0
    for j, t, ls, wt in rows:
        m = len(t)
        A[at:at + m, j] = 1.0
        A[at:at + m, k] = -t
        b[at:at + m] = ls
        w[at:at + m] = wt
        xidx[at:at + m] = j
        at += m
    sw = np.sqrt(w)
    sol, *_ = np.linalg.lstsq(A * sw[:, None], b * sw, rcond=None)
    ss_res = float(np.sum(w * (b - A @ sol) ** 2))
    group_means = np.array([np.average(b[xidx == j], weights=w[xidx == j])
                            for j in range(k)])
    ss_tot = float(np.sum(w * (b - group_means[xidx]) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return float(sol[k]), sol[:k], r2


def _wls_slope(t, ls, w):
    tm = np.average(t, weights=w)
    lm = np.average(ls, weights=w)
    return float(np.sum(w * (t - tm) * (ls - lm)) / np.sum(w * (t - tm) ** 2))


# -- ratio reporting ---------------------------------------------------------

def ratio_report(estimates: Sequence[MCEstimate], bounds: Sequence[float],
                 ceiling: float, *, max_rel_se: float = 0.30) -> BoundReport:
    """Estimate-to-bound ratios over a grid, with a pass/fail verdict.

    Cells with no effective paths or relative standard error above the
    threshold are excluded and counted; an empty remainder is
    inconclusive rather than a pass.
    """
    if ceiling <= 1.0:
        raise ValidationError("ceiling must exceed 1")
    if len(estimates) != len(bounds):
        raise ValidationError("estimate and bound grids must align")
    ratios = []
    excluded = 0
    for est, bound in zip(estimates, bounds):
        if est.n_effective == 0 or est.value <= 0:
            excluded += 1
            continue
        if est.std_error / est.value > max_rel_se:
            excluded += 1
            continue
        ratios.append(float(est.value / bound))
    if not ratios:
        return BoundReport([], math.nan, math.nan, math.nan, None,
                           "inconclusive", excluded)
    lo, hi = min(ratios), max(ratios)
    ok = all(math.isfinite(r) and r > 0 for r in ratios) and hi / lo <= ceiling
    window = SandwichWindow(lo, hi) if lo > 0 and math.isfinite(hi) else None
    return BoundReport(ratios, lo, float(np.median(ratios)), hi, window,
                       "pass" if ok else "fail", excluded)


# -- CSV ---------------------------------------------------------------------

@dataclass(frozen=True)
class CsvRow:
    experiment: str
    t: float
    x: Sequence[float]
    y: Sequence[float]
    estimate: float
    std_error: float
    bound_lower: float
    bound_upper: float
    ratio: float


def write_csv(path, rows: Sequence[CsvRow], dim: int) -> None:
    """Fixed-schema result table; coordinate columns are x1..xd, y1..yd."""
    head = (["experiment", "t"]
            + [f"x{i+1}" for i in range(dim)]
            + [f"y{i+1}" for i in range(dim)]
            + ["estimate", "std_error", "bound_lower", "bound_upper", "ratio"])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(head)
        for r in rows:
            x = list(np.broadcast_to(np.asarray(r.x, dtype=float), (dim,)))
            y = list(np.broadcast_to(np.asarray(r.y, dtype=float), (dim,)))
            writer.writerow([r.experiment, _fmt(r.t)]
                            + [_fmt(v) for v in x] + [_fmt(v) for v in y]
                            + [_fmt(r.estimate), _fmt(r.std_error),
                               _fmt(r.bound_lower), _fmt(r.bound_upper),
                               _fmt(r.ratio)])


def _fmt(v: float) -> str:
    return repr(float(v))
