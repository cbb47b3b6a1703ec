"""Path sampling for the coordinate-jump process, with killing on a domain.

Each event perturbs one axis by a jump drawn from the tail of nu1 above a
cutoff eps; jumps below the cutoff are folded into a Brownian component
with the matching variance rate.  Killing is checked after every event,
and the exponential clock is chopped so no unchecked Gaussian stretch
moves the path by more than about eps (memorylessness makes the extra
check events free in law).  Between checks the position is treated as
frozen, which is exact for the jump part.

Two drivers share the jump machinery: a per-path loop that handles
general bounded kernel weights by thinning, and a vectorized ensemble
driver for unit weight that advances every live path one event per
iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .errors import NumericalError, ValidationError
from .geometry import Domain
from .scalefn import ScaleFunction

__all__ = [
    "KappaSpec",
    "SimConfig",
    "KilledPathResult",
    "EnsembleResult",
    "RegionTally",
    "sample_stable_increment",
    "sample_general_increment",
    "simulate_killed_path",
    "simulate_killed_ensemble",
    "iter_killed_blocks",
    "exit_decomposition",
    "jump_rate",
    "small_jump_variance_rate",
    "set_worker_count",
]

TAIL_NODES = 4096         # inversion table size for the jump tail
TAIL_DECADES = 17.0       # quantile depth covered by the table, in decades
_QUAD = {"epsabs": 1e-13, "epsrel": 1e-11, "limit": 200}

_worker_count = 1


def set_worker_count(n: int) -> None:
    """Number of threads generating ensemble blocks (default 1).

    Blocks are seeded independently and reduced in index order, so this
    never changes a result, only how long it takes.
    """
    if int(n) < 1:
        raise ValidationError("worker count must be at least 1")
    global _worker_count
    _worker_count = int(n)


@dataclass(frozen=True)
class KappaSpec:
    """Jump-kernel weight.  Unit weight simulates the base process; a
    bounded symmetric callable is handled by thinning against the
    majorant kappa0 * nu1."""
    kind: str
    evaluator: Callable | None = None
    kappa0: float = 1.0
    kappa1: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("constant_one", "bounded_callable"):
            raise ValidationError(f"unknown kappa kind {self.kind!r}")
        if self.kind == "bounded_callable":
            if self.evaluator is None or not callable(self.evaluator):
                raise ValidationError("bounded kappa needs a callable evaluator")
            if self.kappa0 < 1.0:
                raise ValidationError("kappa0 must be >= 1")
            if self.kappa1 < 0.0:
                raise ValidationError("kappa1 must be >= 0")
            if not 0.0 < self.eta <= 1.0:
                raise ValidationError("eta must lie in (0, 1]")

    @classmethod
    def constant_one(cls) -> "KappaSpec":
        return cls(kind="constant_one")

    @classmethod
    def bounded(cls, evaluator: Callable, kappa0: float,
                kappa1: float = 0.0, eta: float = 1.0) -> "KappaSpec":
        return cls(kind="bounded_callable", evaluator=evaluator,
                   kappa0=float(kappa0), kappa1=float(kappa1), eta=float(eta))


@dataclass(frozen=True)
class SimConfig:
    eps_small_jump: float
    horizon: float
    dt_check: float | None = None   # None: derived so an unchecked Gaussian
                                    # stretch has standard deviation <= eps
    seed: int = 0
    stream: int = 0
    record_occupation: bool = False

    def __post_init__(self):
        if not self.eps_small_jump > 0:
            raise ValidationError("eps_small_jump must be positive")
        if not self.horizon > 0:
            raise ValidationError("horizon must be positive")
        if self.dt_check is not None and not self.dt_check > 0:
            raise ValidationError("dt_check must be positive")


@dataclass
class KilledPathResult:
    exit_time: float                      # min(tau, horizon)
    exited: bool
    exit_position: np.ndarray | None      # set iff exited
    position_at_horizon: np.ndarray | None  # set iff alive at the horizon
    exit_kind: str                        # start | jump | gaussian | horizon
    n_jumps: int
    n_proposals: int
    occupation: list = field(default_factory=list)  # (time weight, position)
    pre_exit_position: np.ndarray | None = None  # state before the exit move


@dataclass
class EnsembleResult:
    exit_time: np.ndarray        # (n,)
    exited: np.ndarray           # (n,) bool
    exit_position: np.ndarray    # (n, d), nan rows where alive
    horizon_position: np.ndarray  # (n, d), nan rows where exited
    box_occupation: np.ndarray | None  # (n, n_boxes) time in each box
    n_events: int


# -- jump machinery --------------------------------------------------------

@lru_cache(maxsize=32)
def small_jump_variance_rate(f: ScaleFunction, eps: float) -> float:
    """Variance per unit time of the sub-eps compensation: 2 int_0^eps r^2 nu1."""
    _check_eps(f, eps)
    a_lo, a_hi = f._exponent_range()
    hi = math.log(eps)
    lo = hi - 80.0 / (2.0 - a_hi)
    val, _ = integrate.quad(
        lambda u: math.exp(2.0 * u - float(f._log_phi(u))), lo, hi, **_QUAD)
    return 2.0 * val


@lru_cache(maxsize=32)
def _jump_tail(f: ScaleFunction, eps: float):
    """Tail mass above eps and the quantile map for jump sizes.

    The tail function T(r) = int_r^inf nu1 is accumulated on a dense log
    grid, closed beyond the last node with the local-power remainder, and
    inverted through monotone cubic interpolation of log T.
    """
    _check_eps(f, eps)
    a_lo, _ = f._exponent_range()
    dense = 8 * TAIL_NODES
    u_lo = math.log(eps)
    u_hi = u_lo + TAIL_DECADES * math.log(10.0) / a_lo
    u = np.linspace(u_lo, u_hi, dense)
    du = (u_hi - u_lo) / (dense - 1)
    g = np.exp(-f._log_phi(u))           # r nu1(r) in log radius
    h = 1e-4
    a_term = float(f._log_phi(u_hi + h) - f._log_phi(u_hi - h)) / (2.0 * h)
    if a_term <= 0:
        raise NumericalError("nu1 tail does not decay; inversion table failed")
    # accumulate from the far end so tiny increments are never rounded
    # away against the bulk of the mass
    rev = integrate.cumulative_trapezoid(g[::-1], dx=du, initial=0.0)
    tail = rev[::-1] + g[-1] / a_term
    idx = np.unique(np.round(np.linspace(0, dense - 1, TAIL_NODES)).astype(int))
    log_tail = np.log(tail[idx])
    if not np.all(np.diff(log_tail) < 0):
        raise NumericalError("jump tail is not strictly decreasing; "
                             "inversion table failed")
    inverse = PchipInterpolator(log_tail[::-1], u[idx][::-1])
    return float(tail[0]), inverse, float(log_tail[0]), float(log_tail[-1])


def jump_rate(f: ScaleFunction, eps: float) -> float:
    """Total jump intensity 2 int_eps^inf nu1 for one coordinate."""
    half, _, _, _ = _jump_tail(f, eps)
    return 2.0 * half


def _draw_jump_sizes(f: ScaleFunction, eps: float, rng, n: int) -> np.ndarray:
    _, inverse, log_top, log_bot = _jump_tail(f, eps)
    target = log_top + np.log1p(-rng.random(n))
    return np.exp(inverse(np.clip(target, log_bot, log_top)))


def _check_eps(f: ScaleFunction, eps: float) -> None:
    if not f.r_min <= eps <= f.r_max:
        raise ValidationError(
            f"eps={eps:.3g} outside the validity range "
            f"[{f.r_min:.3g}, {f.r_max:.3g}]")


def _dt_check(cfg: SimConfig, sigma2: float) -> float:
    if cfg.dt_check is not None:
        return cfg.dt_check
    if sigma2 <= 0:
        return math.inf
    return cfg.eps_small_jump**2 / sigma2


# -- free-space increments -------------------------------------------------

def sample_stable_increment(alpha: float, time_step: float, rng, size=None):
    """Exact one-coordinate displacement for phi(r) = r^alpha.

    Polar transform of a uniform angle and an exponential, scaled so the
    characteristic exponent is c_alpha |xi|^alpha with
    c_alpha = -2 Gamma(-alpha) cos(pi alpha / 2).
    """
    if not 0.0 < alpha < 2.0:
        raise ValidationError("alpha must lie in (0, 2)")
    if time_step < 0:
        raise ValidationError("time_step must be nonnegative")
    n = 1 if size is None else int(size)
    if time_step == 0.0:
        out = np.zeros(n)
        return 0.0 if size is None else out
    if alpha == 1.0:
        c = math.pi
    else:
        c = -2.0 * math.gamma(-alpha) * math.cos(math.pi * alpha / 2.0)
    scale = (c * time_step) ** (1.0 / alpha)
    u = rng.uniform(-math.pi / 2.0, math.pi / 2.0, n)
    if alpha == 1.0:
        out = scale * np.tan(u)
    else:
        e = rng.exponential(1.0, n)
        out = scale * (np.sin(alpha * u) / np.cos(u) ** (1.0 / alpha)
                       * (np.cos((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha))
    return float(out[0]) if size is None else out


def sample_general_increment(f: ScaleFunction, time_step: float, eps: float,
                             rng, size=None):
    """One-coordinate displacement for general phi: compound-Poisson jumps
    above eps plus a centered Gaussian carrying the sub-eps variance."""
    if time_step < 0:
        raise ValidationError("time_step must be nonnegative")
    n = 1 if size is None else int(size)
    if time_step == 0.0:
        return 0.0 if size is None else np.zeros(n)
    rate = jump_rate(f, eps)
    sigma2 = small_jump_variance_rate(f, eps)
    counts = rng.poisson(rate * time_step, n)
    total = int(counts.sum())
    out = np.zeros(n)
    if total:
        sizes = _draw_jump_sizes(f, eps, rng, total)
        signs = 2.0 * rng.integers(0, 2, total) - 1.0
        idx = np.repeat(np.arange(n), counts)
        out = np.bincount(idx, weights=signs * sizes, minlength=n)
    out = out + rng.normal(0.0, math.sqrt(sigma2 * time_step), n)
    return float(out[0]) if size is None else out


# -- killed paths ----------------------------------------------------------

def simulate_killed_path(D: Domain, kappa: KappaSpec, f: ScaleFunction,
                         x0, cfg: SimConfig) -> KilledPathResult:
    """One path of the process killed outside D, by thinning against the
    majorant kappa0 * nu1 per axis.

    The event clock runs at d * kappa0 * (jump rate); each event proposes
    an axis-aligned jump and keeps it with probability kappa/kappa0.
    Killing is tested after every Gaussian stretch and every kept jump.
    """
    _check_kappa_vs_scaling(kappa, f)
    rng = np.random.default_rng((cfg.seed, cfg.stream))
    return _killed_path_core(D, kappa, f, x0, cfg, rng)


def _check_kappa_vs_scaling(kappa: KappaSpec, f: ScaleFunction) -> None:
    if kappa.kind == "bounded_callable":
        _, a_hi = f._exponent_range()
        if kappa.eta <= a_hi / 2.0:
            raise ValidationError(
                f"eta={kappa.eta:.3g} must exceed half the upper scaling "
                f"exponent ({a_hi / 2.0:.3g})")


def _killed_path_core(D: Domain, kappa: KappaSpec, f: ScaleFunction,
                      x0, cfg: SimConfig, rng) -> KilledPathResult:
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (D.dim,):
        raise ValidationError(f"x0 must have dimension {D.dim}")
    if not D.contains(x):
        return KilledPathResult(0.0, True, x, None, "start", 0, 0, [])

    d = D.dim
    rate = jump_rate(f, cfg.eps_small_jump)
    sigma2 = small_jump_variance_rate(f, cfg.eps_small_jump)
    total_rate = d * kappa.kappa0 * rate
    dt_chk = _dt_check(cfg, sigma2)
    sig = math.sqrt(sigma2)

    t = 0.0
    n_jumps = n_proposals = 0
    occupation: list = []
    while True:
        gap = rng.exponential(1.0 / total_rate)
        step = min(gap, dt_chk, cfg.horizon - t)
        if cfg.record_occupation and step > 0:
            occupation.append((step, x.copy()))
        before = x
        if sigma2 > 0:
            x = x + rng.normal(0.0, sig * math.sqrt(step), d)
        t += step
        if not D.contains(x):
            return KilledPathResult(t, True, x, None, "gaussian",
                                    n_jumps, n_proposals, occupation, before)
        if t >= cfg.horizon:
            return KilledPathResult(cfg.horizon, False, None, x, "horizon",
                                    n_jumps, n_proposals, occupation)
        if gap > dt_chk:
            continue  # chopped stretch; the exponential clock is memoryless
        axis = int(rng.integers(d))
        size = float(_draw_jump_sizes(f, cfg.eps_small_jump, rng, 1)[0])
        sign = 1.0 if rng.random() < 0.5 else -1.0
        n_proposals += 1
        y = x.copy()
        y[axis] += sign * size
        if kappa.kind == "bounded_callable":
            k = float(kappa.evaluator(x, y))
            if not (1.0 / kappa.kappa0) * (1 - 1e-9) <= k <= kappa.kappa0 * (1 + 1e-9):
                raise ValidationError(
                    f"kappa evaluated to {k:.4g}, outside "
                    f"[1/kappa0, kappa0] = [{1 / kappa.kappa0:.4g}, {kappa.kappa0:.4g}]")
            if rng.random() >= k / kappa.kappa0:
                continue
        before = x
        x = y
        n_jumps += 1
        if not D.contains(x):
            return KilledPathResult(t, True, x, None, "jump",
                                    n_jumps, n_proposals, occupation, before)


def iter_killed_blocks(D: Domain, f: ScaleFunction, x0, cfg: SimConfig,
                       n_paths: int, boxes: Sequence | None = None,
                       block_size: int = 65536,
                       kappa: KappaSpec | None = None):
    """Yield EnsembleResult blocks so aggregation stays O(block), the
    backbone of every streaming estimator.

    Unit weight runs the vectorized driver; a bounded kernel weight falls
    back to the sequential per-path loop inside each block.  Blocks are
    seeded from (seed, stream, block index) and paths in the fallback from
    (seed, stream, block index, slot), so results do not depend on
    n_paths beyond truncation and blocks can run in parallel.
    """
    if n_paths <= 0:
        raise ValidationError("n_paths must be positive")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (D.dim,):
        raise ValidationError(f"x0 must have dimension {D.dim}")
    kappa = kappa or KappaSpec.constant_one()
    _check_kappa_vs_scaling(kappa, f)

    def one_block(block: int, m: int):
        if kappa.kind == "constant_one":
            rng = np.random.default_rng((cfg.seed, cfg.stream, block))
            return _ensemble_block(D, f, x0, cfg, m, rng, boxes)
        return _thinned_block(D, kappa, f, x0, cfg, m, block, boxes)

    sizes = [min(block_size, n_paths - start)
             for start in range(0, n_paths, block_size)]
    workers = min(_worker_count, len(sizes))
    if workers <= 1:
        for block, m in enumerate(sizes):
            yield EnsembleResult(*one_block(block, m))
        return
    # each block is a pure function of its index, so mapping over a pool
    # and yielding in submission order changes nothing but wall time
    from concurrent.futures import ThreadPoolExecutor
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(one_block, range(len(sizes)), sizes):
            yield EnsembleResult(*part)


def simulate_killed_ensemble(D: Domain, f: ScaleFunction, x0, cfg: SimConfig,
                             n_paths: int, boxes: Sequence | None = None,
                             block_size: int = 65536,
                             kappa: KappaSpec | None = None) -> EnsembleResult:
    """Killed-path ensemble, concatenated from iter_killed_blocks.

    ``boxes`` is an optional list of (lo, hi) corner pairs; occupation time
    in each axis-aligned box is tallied per path for Green estimates.
    """
    parts = list(iter_killed_blocks(D, f, x0, cfg, n_paths, boxes,
                                    block_size, kappa))
    exit_time = np.concatenate([p.exit_time for p in parts])
    exited = np.concatenate([p.exited for p in parts])
    exit_pos = np.vstack([p.exit_position for p in parts])
    hor_pos = np.vstack([p.horizon_position for p in parts])
    occ = None if boxes is None else np.vstack([p.box_occupation for p in parts])
    n_events = sum(p.n_events for p in parts)
    return EnsembleResult(exit_time, exited, exit_pos, hor_pos, occ, n_events)


def _thinned_block(D: Domain, kappa: KappaSpec, f: ScaleFunction, x0,
                   cfg: SimConfig, m: int, block: int, boxes):
    d = D.dim
    nb = 0 if boxes is None else len(boxes)
    exit_time = np.full(m, cfg.horizon)
    exited = np.zeros(m, dtype=bool)
    exit_pos = np.full((m, d), np.nan)
    hor_pos = np.full((m, d), np.nan)
    occ = np.zeros((m, nb)) if nb else None
    n_events = 0
    want_occ = nb > 0
    run_cfg = SimConfig(cfg.eps_small_jump, cfg.horizon, cfg.dt_check,
                        cfg.seed, cfg.stream, record_occupation=want_occ)
    for i in range(m):
        rng = np.random.default_rng((cfg.seed, cfg.stream, block, i))
        r = _killed_path_core(D, kappa, f, x0, run_cfg, rng)
        exit_time[i] = r.exit_time
        exited[i] = r.exited
        if r.exited:
            exit_pos[i] = r.exit_position
        else:
            hor_pos[i] = r.position_at_horizon
        n_events += r.n_jumps
        if want_occ:
            for b, (lo, hi) in enumerate(boxes):
                occ[i, b] = sum(w for w, p in r.occupation
                                if np.all(p >= lo) and np.all(p <= hi))
    return exit_time, exited, exit_pos, hor_pos, occ, n_events


def _ensemble_block(D: Domain, f: ScaleFunction, x0, cfg: SimConfig,
                    m: int, rng, boxes):
    d = D.dim
    rate = jump_rate(f, cfg.eps_small_jump)
    sigma2 = small_jump_variance_rate(f, cfg.eps_small_jump)
    total_rate = d * rate
    dt_chk = _dt_check(cfg, sigma2)
    sig = math.sqrt(sigma2)
    nb = 0 if boxes is None else len(boxes)

    exit_time = np.full(m, cfg.horizon)
    exited = np.zeros(m, dtype=bool)
    exit_pos = np.full((m, d), np.nan)
    hor_pos = np.full((m, d), np.nan)
    occ = np.zeros((m, nb)) if nb else None
    n_events = 0

    if D.depth(x0) <= 0:
        exited[:] = True
        exit_time[:] = 0.0
        exit_pos[:] = x0
        return exit_time, exited, exit_pos, hor_pos, occ, n_events

    idx = np.arange(m)                  # global indices of live paths
    x = np.tile(x0, (m, 1))
    t = np.zeros(m)
    while idx.size:
        k = idx.size
        gap = rng.exponential(1.0 / total_rate, k)
        step = np.minimum(np.minimum(gap, dt_chk), cfg.horizon - t)
        if nb:
            for b, (lo, hi) in enumerate(boxes):
                inb = np.all((x >= lo) & (x <= hi), axis=1)
                if inb.any():
                    occ[idx[inb], b] += step[inb]
        if sigma2 > 0:
            x = x + rng.normal(0.0, 1.0, (k, d)) * (sig * np.sqrt(step))[:, None]
        t = t + step
        dead = D.depth(x) <= 0
        if dead.any():
            g = idx[dead]
            exited[g] = True
            exit_time[g] = t[dead]
            exit_pos[g] = x[dead]
        done = t >= cfg.horizon * (1 - 1e-15)
        at_horizon = done & ~dead
        if at_horizon.any():
            hor_pos[idx[at_horizon]] = x[at_horizon]
        live = ~(dead | done)
        jump = live & (gap <= dt_chk)
        if jump.any():
            rows = np.nonzero(jump)[0]
            nj = rows.size
            n_events += nj
            axes = rng.integers(0, d, nj)
            sizes = _draw_jump_sizes(f, cfg.eps_small_jump, rng, nj)
            signs = np.where(rng.random(nj) < 0.5, 1.0, -1.0)
            x[rows, axes] += signs * sizes
            jdead = D.depth(x[rows]) <= 0
            if jdead.any():
                g = idx[rows[jdead]]
                exited[g] = True
                exit_time[g] = t[rows[jdead]]
                exit_pos[g] = x[rows[jdead]]
                live[rows[jdead]] = False
        keep = live
        idx, x, t = idx[keep], x[keep], t[keep]
    return exit_time, exited, exit_pos, hor_pos, occ, n_events


# -- exit statistics -------------------------------------------------------

@dataclass(frozen=True)
class RegionTally:
    count: int
    frequency: float
    std_error: float


def exit_decomposition(results, regions: Sequence[Callable]) -> list[RegionTally]:
    """Landing frequencies of the exited paths over disjoint regions.

    ``results`` is a list of KilledPathResult or an EnsembleResult; each
    region is a predicate on the exit position.  A position matching two
    regions voids the disjointness premise and is rejected.
    """
    if isinstance(results, EnsembleResult):
        positions = results.exit_position[results.exited]
    else:
        positions = np.array([r.exit_position for r in results if r.exited])
    n = len(positions)
    counts = np.zeros(len(regions), dtype=int)
    for p in positions:
        hits = [i for i, reg in enumerate(regions) if reg(p)]
        if len(hits) > 1:
            raise ValidationError(
                f"regions {hits} overlap at exit position {np.round(p, 6)}")
        if hits:
            counts[hits[0]] += 1
    out = []
    for c in counts:
        freq = c / n if n else 0.0
        se = math.sqrt(freq * (1.0 - freq) / n) if n else 0.0
        out.append(RegionTally(int(c), freq, se))
    return out
