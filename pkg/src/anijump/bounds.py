"""Closed-form comparability bounds for the anisotropic jump process.

Every function here evaluates the *shape* of an estimate: the unknown
multiplicative constants are deliberately left out, to be fit per
experiment through :class:`SandwichWindow`.  All scale-function
evaluations go through the log-space core so wide grids never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import NumericalError, ValidationError
from .geometry import Domain, dist_to_boundary
from .scalefn import ScaleFunction

__all__ = [
    "SandwichWindow",
    "hke_bound",
    "psi_decay",
    "dirichlet_bound",
    "survival_bound",
    "mean_exit_ball_window",
    "corner_exit_bound",
    "exit_prob_bound",
    "green_bound",
    "green_refined_upper",
    "green_bound_1d",
    "large_time_bound",
]


@dataclass(frozen=True)
class SandwichWindow:
    """Empirical comparability constants bracketing a dimensionless ratio."""

    c_lower: float
    c_upper: float

    def __post_init__(self) -> None:
        if not 0 < self.c_lower <= self.c_upper:
            raise ValidationError(
                f"need 0 < c_lower <= c_upper, got ({self.c_lower}, {self.c_upper})")


_UNIT_WINDOW = SandwichWindow(1.0, 1.0)


def _points(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("x and y must be points of equal dimension")
    return x, y


def _inside_depth(D: Domain, x) -> float:
    delta, inside = dist_to_boundary(D, x)
    if not inside:
        raise ValidationError("point lies outside the domain")
    return float(delta)


def _log_phi_safe(f: ScaleFunction, r: float) -> float:
    # +inf depth (no boundary) pushes every 1-wedge factor to its cap
    if math.isinf(r):
        return math.inf
    return float(f._log_phi(math.log(r)))


def _wedge_sqrt(log_num: float, log_den: float) -> float:
    """1 wedge sqrt(exp(log_num - log_den)), stable for extreme arguments."""
    if math.isinf(log_num):
        return 1.0
    return math.exp(min(0.0, 0.5 * (log_num - log_den)))


def hke_bound(f: ScaleFunction, t: float, x, y) -> float:
    """Whole-space kernel comparability shape at time t between x and y.

    Value is [phi^{-1}(t)]^{-d} prod_i (1 wedge t phi^{-1}(t) / (u_i phi(u_i)))
    over the coordinate gaps u_i = |x^i - y^i|; a zero gap contributes 1.
    """
    if t <= 0:
        raise ValidationError("time must be positive")
    x, y = _points(x, y)
    s = f.phi_inverse(t)
    log_ts = math.log(t) + math.log(s)
    log_out = -x.size * math.log(s)
    for u in np.abs(x - y):
        if u > 0:
            lu = math.log(u)
            log_out += min(0.0, log_ts - lu - float(f._log_phi(lu)))
    return math.exp(log_out)


def psi_decay(f: ScaleFunction, t: float, x, D: Domain) -> float:
    """Boundary decay factor 1 wedge sqrt(phi(delta_D(x)) / t)."""
    if t <= 0:
        raise ValidationError("time must be positive")
    delta = _inside_depth(D, x)
    return _wedge_sqrt(_log_phi_safe(f, delta), math.log(t))


def dirichlet_bound(f: ScaleFunction, t: float, x, y, D: Domain) -> float:
    """Killed-kernel shape: both boundary factors times the free bound."""
    return psi_decay(f, t, x, D) * psi_decay(f, t, y, D) * hke_bound(f, t, x, y)


def survival_bound(f: ScaleFunction, t: float, x, D: Domain) -> float:
    """Shape of P(exit time >= t): 1 wedge V(delta_D(x))/sqrt(t).

    With V = sqrt(phi) this coincides with the boundary decay factor.
    """
    return psi_decay(f, t, x, D)


def mean_exit_ball_window(
    f: ScaleFunction, r: float, window: SandwichWindow = _UNIT_WINDOW,
) -> tuple[float, float]:
    """Two-sided window (both ends proportional to phi(r)) for the mean
    exit time of a ball of radius r centred at the start point."""
    v = f.phi(r)
    return window.c_lower * v, window.c_upper * v


def corner_exit_bound(f: ScaleFunction, s: float, delta: float) -> float:
    """Mean-exit shape V(s) V(delta) for a boundary box of side scale s,
    started at distance delta from the flat face.  Needs 0 < delta <= s."""
    if not 0 < delta <= s:
        raise ValidationError(f"need 0 < delta <= s, got delta={delta}, s={s}")
    return f.renewal_V(s) * f.renewal_V(delta)


def exit_prob_bound(f: ScaleFunction, r: float, mean_exit: float) -> float:
    """Chebyshev-type cap: P(displacement >= r by a stopping time S) is
    controlled by E[S]/phi(r), truncated at 1."""
    if mean_exit < 0:
        raise ValidationError("mean exit time cannot be negative")
    return min(1.0, mean_exit / f.phi(r))


def _green_gaps(x, y):
    x, y = _points(x, y)
    gaps = np.abs(x - y)
    if np.any(gaps == 0.0):
        raise ValidationError(
            "Green bounds require all coordinates to differ; "
            "an equal coordinate pair is outside the supported configuration")
    return x, y, gaps


def green_bound(f: ScaleFunction, x, y, D: Domain, side: str) -> float:
    """Green function comparability shape in dimension d >= 2.

    The lower shape evaluates at the smallest coordinate gap, the upper at
    the largest; both read

        (1 ^ sqrt(phi(dx)/phi(r))) (1 ^ sqrt(phi(dy)/phi(r))) phi(r)^{d+1}
            * prod_i 1/(u_i phi(u_i))

    with dx, dy the boundary distances of x and y.
    """
    x, y, gaps = _green_gaps(x, y)
    d = x.size
    if d < 2:
        raise ValidationError("one-dimensional Green bounds use green_bound_1d")
    if side == "lower":
        r = float(np.min(gaps))
    elif side == "upper":
        r = float(np.max(gaps))
    else:
        raise ValidationError(f"side must be 'lower' or 'upper', got {side!r}")
    log_dx = _log_phi_safe(f, _inside_depth(D, x))
    log_dy = _log_phi_safe(f, _inside_depth(D, y))
    log_phi_r = float(f._log_phi(math.log(r)))
    log_out = (d + 1) * log_phi_r
    for u in gaps:
        lu = math.log(u)
        log_out -= lu + float(f._log_phi(lu))
    return _wedge_sqrt(log_dx, log_phi_r) * _wedge_sqrt(log_dy, log_phi_r) * math.exp(log_out)


def green_refined_upper(f: ScaleFunction, x, y, D: Domain) -> float:
    """Sharper upper shape: the per-coordinate terms are summed instead of
    evaluated at the single worst gap."""
    x, y, gaps = _green_gaps(x, y)
    d = x.size
    if d < 2:
        raise ValidationError("one-dimensional Green bounds use green_bound_1d")
    log_dx = _log_phi_safe(f, _inside_depth(D, x))
    log_dy = _log_phi_safe(f, _inside_depth(D, y))
    log_u = np.log(gaps)
    log_phi_u = np.array([float(f._log_phi(lu)) for lu in log_u])
    log_prod = -float(np.sum(log_u + log_phi_u))
    total = 0.0
    for lpu in log_phi_u:
        total += (_wedge_sqrt(log_dx, lpu) * _wedge_sqrt(log_dy, lpu)
                  * math.exp((d + 1) * lpu + log_prod))
    return total


def green_bound_1d(f: ScaleFunction, x: float, y: float, D: Domain) -> float:
    """Green comparability shape on an interval (d = 1).

    With a = sqrt(phi(dx) phi(dy)) the shape is

        (a/|x-y|) ^ ( a/phi^{-1}(a) + [ int_{|x-y|}^{phi^{-1}(a)} phi(s)/s^2 ds ]_+ )

    where the integral is dropped when phi^{-1}(a) < |x-y|.
    """
    x = float(np.atleast_1d(np.asarray(x, dtype=float))[0]) if np.ndim(x) else float(x)
    y = float(np.atleast_1d(np.asarray(y, dtype=float))[0]) if np.ndim(y) else float(y)
    gap = abs(x - y)
    if gap == 0.0:
        raise ValidationError("Green bounds require x != y")
    dx = _inside_depth(D, [x])
    dy = _inside_depth(D, [y])
    log_a = 0.5 * (_log_phi_safe(f, dx) + _log_phi_safe(f, dy))
    a = math.exp(log_a)
    ra = f.phi_inverse(a)
    tail = 0.0
    if ra > gap:
        val, err = integrate.quad(
            lambda s: math.exp(float(f._log_phi(math.log(s))) - 2.0 * math.log(s)),
            gap, ra, epsabs=1e-13, epsrel=1e-10, limit=200)
        if err > 1e-7 * max(1.0, abs(val)):
            raise NumericalError(f"Green integral did not converge (err={err:.2e})")
        tail = max(0.0, val)
    return min(a / gap, a / ra + tail)


def large_time_bound(f: ScaleFunction, t: float, x, y, D: Domain,
                     lambda_hat: float) -> float:
    """Spectral-regime shape exp(-t lambda_hat) sqrt(phi(dx) phi(dy))."""
    dx = _inside_depth(D, x)
    dy = _inside_depth(D, y)
    log_prod = 0.5 * (_log_phi_safe(f, dx) + _log_phi_safe(f, dy))
    return math.exp(-t * lambda_hat + log_prod)
