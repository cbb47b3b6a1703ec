"""Domains with exact boundary distance, local charts, and corner paths.

Shapes are limited to ones whose signed distance and boundary charts are
analytic (half-space, ball, annulus, axis-aligned rounded box), so boundary
quantities carry no mesh error.  Charts follow the convention that the d-th
chart axis is the inward normal at the base point Q and the boundary is the
graph of a height function over the tangent plane.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoBoundaryError

# Chart radius is half the worst osculating radius; the hemisphere chart then
# has gradient bound 1/sqrt(3) and Hessian bound (4/3)^{3/2}/roc < 1.6/roc.
CHART_HALVING = 0.5
LAMBDA_FLOOR = 2.01  # the comparability lemmas assume Lambda > 2
CURVATURE_LAMBDA = 1.6


@dataclass(frozen=True)
class Domain:
    shape: str
    dim: int
    center: tuple[float, ...] = ()
    radius: float = 0.0
    inner_radius: float = 0.0
    outer_radius: float = 0.0
    half_widths: tuple[float, ...] = ()
    corner_radius: float = 0.0
    axis: int = 0
    offset: float = 0.0

    @classmethod
    def full_space(cls, dim: int) -> "Domain":
        return cls(shape="full_space", dim=int(dim))

    @classmethod
    def half_space(cls, dim: int, axis: int | None = None, offset: float = 0.0) -> "Domain":
        """Open set {x : x[axis] > offset}; axis defaults to the last coordinate."""
        axis = dim - 1 if axis is None else int(axis)
        if not 0 <= axis < dim:
            raise ValueError(f"half_space axis {axis} out of range for dim {dim}")
        return cls(shape="half_space", dim=int(dim), axis=axis, offset=float(offset))

    @classmethod
    def ball(cls, center, radius: float) -> "Domain":
        center = tuple(map(float, np.atleast_1d(center)))
        if radius <= 0:
            raise ValueError("ball needs radius > 0")
        return cls(shape="ball", dim=len(center), center=center, radius=float(radius))

    @classmethod
    def annulus(cls, center, inner_radius: float, outer_radius: float) -> "Domain":
        center = tuple(map(float, np.atleast_1d(center)))
        if not 0 < inner_radius < outer_radius:
            raise ValueError("annulus needs 0 < inner_radius < outer_radius")
        return cls(shape="annulus", dim=len(center), center=center,
                   inner_radius=float(inner_radius), outer_radius=float(outer_radius))

    @classmethod
    def axis_box_rounded(cls, center, half_widths, corner_radius: float) -> "Domain":
        center = tuple(map(float, np.atleast_1d(center)))
        half_widths = tuple(map(float, np.atleast_1d(half_widths)))
        if len(half_widths) != len(center):
            raise ValueError("half_widths and center must have equal length")
        if min(half_widths) <= 0:
            raise ValueError("half_widths must be positive")
        if not 0 < corner_radius <= min(half_widths):
            raise ValueError("corner_radius must lie in (0, min(half_widths)]")
        return cls(shape="axis_box_rounded", dim=len(center), center=center,
                   half_widths=half_widths, corner_radius=float(corner_radius))

    # -- membership and distance ----------------------------------------

    def depth(self, x):
        """Distance to the boundary, positive inside, negative outside.

        Accepts a point (d,) or a batch (n, d); exact for every shape.
        """
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        pts = x[None, :] if single else x
        if pts.shape[-1] != self.dim:
            raise ValueError(f"point dimension {pts.shape[-1]} != domain dim {self.dim}")
        if self.shape == "full_space":
            out = np.full(pts.shape[0], np.inf)
        elif self.shape == "half_space":
            out = pts[:, self.axis] - self.offset
        elif self.shape == "ball":
            out = self.radius - np.linalg.norm(pts - np.asarray(self.center), axis=1)
        elif self.shape == "annulus":
            rho = np.linalg.norm(pts - np.asarray(self.center), axis=1)
            out = np.minimum(rho - self.inner_radius, self.outer_radius - rho)
        elif self.shape == "axis_box_rounded":
            q = np.abs(pts - np.asarray(self.center)) - (
                np.asarray(self.half_widths) - self.corner_radius)
            outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
            inside = np.minimum(q.max(axis=1), 0.0)
            out = -(outside + inside - self.corner_radius)
        else:
            raise ValueError(f"unknown shape {self.shape!r}")
        return float(out[0]) if single else out

    def contains(self, x):
        return self.depth(x) > 0


def dist_to_boundary(D: Domain, x) -> tuple[float, bool]:
    """(distance to boundary, inside flag); outside points report 0."""
    d = D.depth(np.asarray(x, dtype=float))
    if np.ndim(d):
        return np.maximum(d, 0.0), d > 0
    return max(float(d), 0.0), d > 0


@dataclass(frozen=True)
class C11Chars:
    R: float
    Lam: float
    diam: float
    r_chart: float = 0.0  # chart localization radius before the min
    r_ball: float = 0.0   # interior/exterior ball radius before the min


def c11_chars(D: Domain) -> C11Chars:
    """Characteristics (R, Lambda, diam) of the boundary regularity."""
    if D.shape == "full_space":
        raise NoBoundaryError("full space has no boundary characteristics")
    if D.shape == "half_space":
        r_chart = r_ball = math.inf
        lam = LAMBDA_FLOOR
        diam = math.inf
    elif D.shape == "ball":
        roc = D.radius
        r_chart, r_ball = CHART_HALVING * roc, roc
        lam = max(LAMBDA_FLOOR, CURVATURE_LAMBDA / roc)
        diam = 2 * D.radius
    elif D.shape == "annulus":
        roc = D.inner_radius
        gap = D.outer_radius - D.inner_radius
        r_chart = CHART_HALVING * roc
        r_ball = min(D.inner_radius, gap / 2)
        lam = max(LAMBDA_FLOOR, CURVATURE_LAMBDA / roc)
        diam = 2 * D.outer_radius
    elif D.shape == "axis_box_rounded":
        roc = D.corner_radius
        r_chart, r_ball = CHART_HALVING * roc, roc
        lam = max(LAMBDA_FLOOR, CURVATURE_LAMBDA / roc)
        hw = np.asarray(D.half_widths)
        diam = 2 * (np.linalg.norm(hw - D.corner_radius) + D.corner_radius)
    else:
        raise ValueError(f"unknown shape {D.shape!r}")
    return C11Chars(R=min(r_chart, r_ball, 0.99), Lam=lam, diam=diam,
                    r_chart=r_chart, r_ball=r_ball)


# -- corner paths and condition (D_gamma) ------------------------------


@dataclass(frozen=True)
class CornerPath:
    points: tuple[tuple[float, ...], ...]
    permutation: tuple[int, ...]


def corner_path(x, y, perm) -> CornerPath:
    """Axis-aligned staircase from x to y changing coordinate perm[k-1] at step k.

    ``perm`` is 1-based: perm=(1,2) moves the first coordinate first.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be points of equal dimension")
    d = x.size
    perm = tuple(int(p) for p in perm)
    if sorted(perm) != list(range(1, d + 1)):
        raise ValueError(f"perm must be a permutation of 1..{d}, got {perm}")
    pts = [x.copy()]
    cur = x.copy()
    for p in perm:
        cur = cur.copy()
        cur[p - 1] = y[p - 1]
        pts.append(cur)
    return CornerPath(points=tuple(tuple(p) for p in pts), permutation=perm)


MAX_DGAMMA_DIM = 6


@dataclass(frozen=True)
class DGammaReport:
    passed: bool
    gamma: float
    n_pairs: int
    n_failed: int
    witness: tuple | None = None  # first failing (x, y) pair


def check_D_gamma(D: Domain, gamma: float, pairs, r_rule: str = "min_delta") -> DGammaReport:
    """Empirically test the corner-path condition at level gamma.

    For each pair the radius is r = min(delta(x), delta(y)); a pair passes
    when some permutation's corners all keep distance >= gamma*r from the
    boundary (so the ball of radius gamma*r fits inside D).  All d!
    permutations are tried, which is why dimension is capped at 6.
    """
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    if r_rule != "min_delta":
        raise ValueError(f"unknown r_rule {r_rule!r}")
    if D.dim > MAX_DGAMMA_DIM:
        raise ValueError(
            f"dimension {D.dim} > {MAX_DGAMMA_DIM}: exhaustive permutation search "
            "is infeasible, sample permutations instead")
    perms = list(itertools.permutations(range(1, D.dim + 1)))
    n_failed = 0
    witness = None
    pairs = list(pairs)
    for x, y in pairs:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        dx, dy = D.depth(x), D.depth(y)
        if dx <= 0 or dy <= 0:
            raise ValueError("check_D_gamma pairs must lie inside D")
        r = min(dx, dy)
        ok = False
        for perm in perms:
            corners = np.asarray(corner_path(x, y, perm).points)
            if np.all(D.depth(corners) >= gamma * r - 1e-12):
                ok = True
                break
        if not ok:
            n_failed += 1
            if witness is None:
                witness = (tuple(x), tuple(y))
    return DGammaReport(passed=(n_failed == 0), gamma=gamma,
                        n_pairs=len(pairs), n_failed=n_failed, witness=witness)


# -- boundary charts ----------------------------------------------------


def nearest_boundary_point(D: Domain, x) -> np.ndarray:
    """Closest point of the boundary; ties broken along the first axis."""
    x = np.asarray(x, dtype=float)
    if D.shape == "full_space":
        raise NoBoundaryError("full space has no boundary")
    if D.shape == "half_space":
        q = x.copy()
        q[D.axis] = D.offset
        return q
    c = np.asarray(D.center)
    if D.shape == "ball":
        v = x - c
        nv = np.linalg.norm(v)
        if nv == 0.0:
            v = np.zeros(D.dim)
            v[0] = 1.0
            nv = 1.0
        return c + D.radius * v / nv
    if D.shape == "annulus":
        v = x - c
        rho = np.linalg.norm(v)
        if rho == 0.0:
            v = np.zeros(D.dim)
            v[0] = 1.0
            rho = 1e-300
        target = (D.inner_radius
                  if rho - D.inner_radius <= D.outer_radius - rho else D.outer_radius)
        return c + target * v / max(rho, 1e-300)
    # rounded box: depth falls at unit rate along the outward direction -g
    g = _depth_gradient(D, x)
    return x - D.depth(x) * g


def _depth_gradient(D: Domain, x, h: float = 1e-7) -> np.ndarray:
    """Central-difference gradient of depth(); unit inward normal direction."""
    x = np.asarray(x, dtype=float)
    g = np.empty(D.dim)
    for i in range(D.dim):
        e = np.zeros(D.dim)
        e[i] = h
        g[i] = (D.depth(x + e) - D.depth(x - e)) / (2 * h)
    n = np.linalg.norm(g)
    if n == 0.0:
        raise ValueError("degenerate gradient; point is a distance ridge")
    return g / n


def inward_normal(D: Domain, Q) -> np.ndarray:
    """Unit inward normal at boundary point Q."""
    Q = np.asarray(Q, dtype=float)
    if D.shape == "half_space":
        n = np.zeros(D.dim)
        n[D.axis] = 1.0
        return n
    c = np.asarray(D.center) if D.center else None
    if D.shape == "ball":
        return (c - Q) / D.radius
    if D.shape == "annulus":
        v = Q - c
        rho = np.linalg.norm(v)
        if abs(rho - D.inner_radius) < abs(rho - D.outer_radius):
            return v / rho  # inner sphere: domain lies outward
        return -v / rho
    if D.shape == "axis_box_rounded":
        return _depth_gradient(D, Q)
    raise NoBoundaryError(f"no boundary normal for shape {D.shape!r}")


def _chart_height(D: Domain, Q, n, y_tan) -> float:
    """Height of the boundary graph over tangential offset y_tan at chart (Q, n)."""
    s = float(np.linalg.norm(y_tan))
    if D.shape == "half_space":
        return 0.0
    if D.shape == "ball":
        return D.radius - math.sqrt(max(D.radius**2 - s**2, 0.0))
    if D.shape == "annulus":
        rho = np.linalg.norm(np.asarray(Q) - np.asarray(D.center))
        if abs(rho - D.inner_radius) < abs(rho - D.outer_radius):
            # domain is outside the inner sphere, which curves away from it
            return math.sqrt(max(D.inner_radius**2 - s**2, 0.0)) - D.inner_radius
        return D.outer_radius - math.sqrt(max(D.outer_radius**2 - s**2, 0.0))
    if D.shape == "axis_box_rounded":
        Q = np.asarray(Q, dtype=float)
        n = np.asarray(n, dtype=float)
        base = Q + np.asarray(y_tan, dtype=float)
        lim = CHART_HALVING * D.corner_radius

        def sdf_along(t):
            return -D.depth(base + t * n)

        lo, hi = -2.0 * lim, 2.0 * lim
        flo, fhi = sdf_along(lo), sdf_along(hi)
        if flo * fhi > 0:
            raise ValueError("chart bracket failed; point too far from the boundary patch")
        return brentq(sdf_along, lo, hi, xtol=1e-13)
    raise NoBoundaryError(f"no chart for shape {D.shape!r}")


def rho_Q(D: Domain, Q, y) -> float:
    """Chart-coordinate depth of y at boundary point Q.

    The chart frame puts the inward normal last; rho is the height of y above
    the boundary graph.  Exceeding the chart radius raises, because the graph
    representation is only valid locally.
    """
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    if abs(D.depth(Q)) > 1e-9 * max(1.0, np.linalg.norm(Q)):
        raise ValueError("Q must lie on the boundary")
    chars = c11_chars(D)
    n = inward_normal(D, Q)
    v = y - Q
    height = float(v @ n)
    y_tan = v - height * n
    # validity is governed by the chart radius; R additionally caps at the
    # ball-condition radius and the unit-scale convention
    if float(np.linalg.norm(y_tan)) >= chars.r_chart * (1 + 1e-12):
        raise ValueError("y outside the chart at Q (tangential offset too large)")
    if math.isfinite(chars.r_chart) and abs(height) > 4 * chars.r_chart:
        raise ValueError("y outside the chart at Q (height too large)")
    return height - _chart_height(D, Q, n, y_tan)


def in_boundary_box(D: Domain, Q, r1: float, r2: float, y) -> bool:
    """Membership in the boundary box D_Q(r1, r2): |y_tan| < r1, 0 < rho_Q < r2."""
    if r1 <= 0 or r2 <= 0:
        raise ValueError("boundary box needs r1, r2 > 0")
    chars = c11_chars(D)
    if r1 > chars.r_chart * (1 + 1e-12):
        raise ValueError(f"r1={r1:.4g} exceeds the chart radius {chars.r_chart:.4g}")
    Q = np.asarray(Q, dtype=float)
    y = np.asarray(y, dtype=float)
    n = inward_normal(D, Q)
    v = y - Q
    height = float(v @ n)
    y_tan = v - height * n
    if float(np.linalg.norm(y_tan)) >= r1:
        return False
    rho = height - _chart_height(D, Q, n, y_tan)
    return 0.0 < rho < r2


def sample_interior(D: Domain, n: int, rng, pad: float = 3.0) -> np.ndarray:
    """Uniform interior samples by rejection from an enclosing box.

    Half-spaces and the full space sample a slab/box of extent ``pad``
    around the origin shifted inside; only meant for tests and experiment
    setup, not for quantitative volume work.
    """
    if D.shape == "full_space":
        return rng.uniform(-pad, pad, size=(n, D.dim))
    if D.shape == "half_space":
        pts = rng.uniform(-pad, pad, size=(n, D.dim))
        pts[:, D.axis] = D.offset + rng.uniform(0.0, pad, size=n)
        return pts
    c = np.asarray(D.center)
    if D.shape == "ball":
        lo, hi = c - D.radius, c + D.radius
    elif D.shape == "annulus":
        lo, hi = c - D.outer_radius, c + D.outer_radius
    else:
        hw = np.asarray(D.half_widths)
        lo, hi = c - hw, c + hw
    out = np.empty((n, D.dim))
    k = 0
    while k < n:
        cand = rng.uniform(lo, hi, size=(max(2 * (n - k), 64), D.dim))
        good = cand[D.depth(cand) > 0]
        take = min(n - k, good.shape[0])
        out[k:k + take] = good[:take]
        k += take
    return out
