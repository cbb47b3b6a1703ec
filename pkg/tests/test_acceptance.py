"""End-to-end acceptance checks, one test per shipped guarantee.

Every check here drives the public surface only: oracle against closed
forms, samplers against exact laws, Monte Carlo estimates against the
bound functions, and the CLI against its reproducibility contract.
Run ``pytest -v tests/test_acceptance.py`` for the twelve-line checklist.
Seeds are frozen, so each number below is reproducible to the bit.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from anijump import (
    Domain,
    KappaSpec,
    ScaleFunction,
    cdf_1d,
    check_D_gamma,
    corner_path,
    density_1d,
    fit_eigenvalue,
    generator_pv,
    green_bound,
    green_bound_1d,
    hke_bound,
    mc_exit_time,
    mc_green_profile,
    mc_heat_kernel,
    mc_heat_kernel_profile,
    mc_survival,
    product_density,
    sample_general_increment,
    sample_stable_increment,
    survival_bound,
)
from anijump.cli import main

F1 = ScaleFunction.power(1.0)
K1 = KappaSpec.constant_one()
ALPHAS = (0.5, 1.0, 1.5)


def _box_prob(f, t, y, h):
    # free boxes factor through the coordinate cdf, so this is exact
    p = 1.0
    for c in np.atleast_1d(y):
        p *= cdf_1d(f, t, c + h) - cdf_1d(f, t, c - h)
    return p


def _loglog_slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def test_01_free_density_exact_value_and_semigroup():
    t0 = time.time()
    # alpha=1 coordinate law is Cauchy(pi t): density at the origin is 1/pi^2
    assert abs(density_1d(F1, 1.0, 0.0) - 1.0 / math.pi**2) < 1e-4

    # p(1, .) must equal p(1/2, .) convolved with itself
    for alpha in ALPHAS:
        f = ScaleFunction.power(alpha)
        L, N = 60.0, 2**15
        du = 2 * L / N
        u = -L + du * np.arange(N)
        p = density_1d(f, 0.5, u)
        conv = np.roll(np.fft.irfft(np.fft.rfft(p) ** 2, N) * du, N // 2)
        direct = density_1d(f, 1.0, u)
        mask = np.abs(u) <= 5.0
        assert np.max(np.abs(conv[mask] - direct[mask])) < 1e-3
    elapsed = time.time() - t0
    assert elapsed < 10.0
    print(f"\nPASS semigroup oracle exact, {elapsed:.1f}s")


def test_02_sampler_matches_exact_law():
    t0 = time.time()
    n = 100_000
    samp = sample_stable_increment(1.0, 1.0, np.random.default_rng(101), size=n)
    ks = stats.kstest(samp, lambda u: stats.cauchy.cdf(u, scale=math.pi)).statistic
    assert ks < 0.01

    # general-phi pipeline against the exact sampler, same law
    t = 0.25
    rng_g = np.random.default_rng(102)
    gen = np.concatenate([
        sample_general_increment(F1, t, 1e-3, rng_g, size=10_000)
        for _ in range(10)])
    stb = sample_stable_increment(1.0, t, np.random.default_rng(103), size=n)
    ks2 = stats.ks_2samp(gen, stb).statistic
    assert ks2 < 0.015
    elapsed = time.time() - t0
    assert elapsed < 60.0
    print(f"\nPASS sampler law: KS {ks:.4f}, general-vs-stable {ks2:.4f}, "
          f"{elapsed:.1f}s")


def test_03_whole_space_sandwich_and_monte_carlo():
    t0 = time.time()
    D = Domain.full_space(2)
    # constants depend on the scale function, so each alpha gets its own
    # window; pooling across alphas would compare different constants
    windows = {}
    for alpha in ALPHAS:
        f = ScaleFunction.power(alpha)
        ratios = []
        for t in (0.25, 1.0):
            s = f.phi_inverse(t)
            for m1 in (0.25, 0.5, 1.0, 1.5, 2.0):
                for m2 in (0.25, 0.5, 1.0, 1.5, 2.0):
                    y = np.array([m1 * s, m2 * s])
                    ratios.append(product_density(f, t, np.zeros(2), y)
                                  / hke_bound(f, t, np.zeros(2), y))
        windows[alpha] = max(ratios) / min(ratios)
        assert windows[alpha] <= 30.0

    # near-diagonal Monte Carlo against the exact box probability
    rels = []
    for alpha in ALPHAS:
        f = ScaleFunction.power(alpha)
        for t in (0.25, 1.0):
            s = f.phi_inverse(t)
            y = np.array([0.25 * s, 0.25 * s])
            h = 0.5 * s
            est = mc_heat_kernel(D, K1, f, t, np.zeros(2), y, h,
                                 n=1_000_000, rng=(31, 0))
            exact = _box_prob(f, t, y, h) / (2 * h) ** 2
            rels.append(abs(est.value - exact) / exact)
            assert rels[-1] < 0.10
    elapsed = time.time() - t0
    assert elapsed < 300.0
    print(f"\nPASS whole-space sandwich: windows "
          f"{ {a: round(w, 1) for a, w in windows.items()} }, "
          f"worst MC rel {max(rels):.3%}, {elapsed:.1f}s")


def test_04_exit_time_scales_like_phi():
    means = {}
    for r in (0.25, 0.5, 1.0):
        D = Domain.ball((0.0, 0.0), r)
        est = mc_exit_time(D, K1, F1, (0.0, 0.0), n=100_000, rng=(41, 0),
                           eps=5e-3, horizon=30.0 * r)
        assert not est.truncated
        means[r] = est.value
    for small, big in ((0.25, 0.5), (0.5, 1.0)):
        assert means[big] / means[small] == pytest.approx(2.0, rel=0.10)
    scaled = [means[r] / F1.phi(r) for r in means]
    window = max(scaled) / min(scaled)
    assert window <= 20.0
    print(f"\nPASS exit scaling: doubling ratios "
          f"{means[0.5]/means[0.25]:.3f}, {means[1.0]/means[0.5]:.3f}, "
          f"window {window:.3f}")


def test_05_survival_boundary_exponent():
    t0 = time.time()
    D = Domain.half_space(1)
    depths = (0.01, 0.04, 0.16, 0.64)
    surv = []
    for dp in depths:
        est = mc_survival(D, K1, F1, (dp,), 1.0, 100_000, (51, 0),
                          eps=min(dp / 10.0, 0.02))
        surv.append(est.value)
    slope = _loglog_slope(depths, surv)
    assert 0.4 <= slope <= 0.6
    elapsed = time.time() - t0
    assert elapsed < 180.0
    print(f"\nPASS survival exponent: slope {slope:.4f}, {elapsed:.1f}s")


def test_06_dirichlet_kernel_boundary_factorization():
    t0 = time.time()
    D = Domain.ball((0.0, 0.0), 1.0)
    t = 0.5
    depths = (0.32, 0.2263, 0.16, 0.1131, 0.08)
    # eight rotated copies of each depth cell share one ensemble from the
    # center; self-similar boxes keep the box-averaging factor out of the
    # slope, and pooling fixes the hit starvation of lone near-wall cells
    angles = [k * math.pi / 4 for k in range(8)]
    targets = []
    for dp in depths:
        h = 0.42 * dp
        targets.extend(
            (np.array([(1 - dp) * math.cos(a), (1 - dp) * math.sin(a)]), h)
            for a in angles)
    n = 1_000_000
    ests = mc_heat_kernel_profile(D, K1, F1, t, np.zeros(2), targets, n,
                                  (61, 0), eps=2e-3)

    log_ratio, log_psi, hits_by_depth = [], [], []
    for i, dp in enumerate(depths):
        cells = ests[8 * i: 8 * i + 8]
        boxes = targets[8 * i: 8 * i + 8]
        hits = sum(e.n_effective for e in cells)
        vol = sum((2 * h) ** 2 for _, h in boxes)
        killed = hits / n / vol
        se = math.sqrt(hits) / n / vol
        free = sum(_box_prob(F1, t, y, h) for y, h in boxes) / vol
        # killed kernel can never exceed the free one
        assert killed <= free * (1.0 + 2.0 * se / killed)
        log_ratio.append(math.log(killed / free))
        log_psi.append(math.log(survival_bound(F1, t, (1.0 - dp, 0.0), D)))
        hits_by_depth.append(hits)
    slope, _ = np.polyfit(log_psi, log_ratio, 1, w=np.sqrt(hits_by_depth))
    assert 0.8 <= slope <= 1.2
    elapsed = time.time() - t0
    assert elapsed < 600.0
    print(f"\nPASS boundary factorization: slope {slope:.4f}, "
          f"hits {hits_by_depth}, {elapsed:.1f}s")


def test_07_near_diagonal_kernel_mass():
    D = Domain.ball((0.0, 0.0), 1.0)
    margins = []
    for t in (0.1, 0.25):
        s = F1.phi_inverse(t)
        h = 0.15 * s
        offsets = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5), (1.0, 0.0)]
        targets = [(np.array(c) * s, h) for c in offsets]
        ests = mc_heat_kernel_profile(D, K1, F1, t, np.zeros(2), targets,
                                      200_000, (71, 0), eps=2e-3)
        for e in ests:
            # scale-free mass with a 3-sigma statistical margin
            margins.append((e.value - 3.0 * e.std_error) * s**2)
    assert min(margins) >= 1e-3
    print(f"\nPASS near-diagonal mass: worst 3-sigma margin "
          f"{min(margins):.4f} >= 1e-3")


def test_08_eigenvalue_regime():
    t0 = time.time()
    D = Domain.ball((0.0, 0.0), 1.0)
    grid = (0.2, 0.25, 0.3, 0.35, 0.4, 0.45)

    fit = fit_eigenvalue(D, K1, F1, [(0.0, 0.0), (0.3, 0.0), (0.0, -0.5)],
                         grid, 30_000, (82, 0), eps=5e-3)
    assert fit.r_squared >= 0.95
    spread = float(fit.slopes_by_x.max() / fit.slopes_by_x.min())
    assert spread <= 1.05

    # profile amplitude must decay like sqrt(phi(delta)) into the wall
    deltas = (0.08, 0.04, 0.02)
    starts = [(1.0 - d, 0.0) for d in deltas] + [(0.0, 0.0)]
    fitb = fit_eigenvalue(D, K1, F1, starts, grid, 150_000, (83, 0), eps=1e-3)
    g_slope = _loglog_slope(deltas, fitb.g[:3])
    assert 0.35 <= g_slope <= 0.65

    # lambda(r) phi(r) is scale-free across ball radii
    prods = []
    for k, r in enumerate((0.5, 1.0, 2.0)):
        fr = fit_eigenvalue(Domain.ball((0.0, 0.0), r), K1, F1, [(0.0, 0.0)],
                            tuple(g * r for g in grid), 20_000, (84, k),
                            eps=5e-3 * r)
        prods.append(fr.lambda_hat * F1.phi(r))
    window = max(prods) / min(prods)
    assert window <= 1.15
    elapsed = time.time() - t0
    assert elapsed < 900.0
    print(f"\nPASS eigenvalue regime: lam {fit.lambda_hat:.3f} "
          f"r2 {fit.r_squared:.4f} spread {spread:.4f} g-slope {g_slope:.3f} "
          f"lam*phi window {window:.4f}, {elapsed:.1f}s")


def test_09_green_function_sandwich():
    D = Domain.ball((0.0, 0.0), 1.0)

    # deep pairs with equal coordinate gaps, three separation scales
    ratios = []
    for s in (0.1, 0.2, 0.4):
        x = np.array([-s / 2, -s / 2])
        y = np.array([s / 2, s / 2])
        est = mc_green_profile(D, K1, F1, x, [(y, s / 8)], 100_000, (91, 0))[0]
        assert est.value <= green_bound(F1, x, y, D, side="upper")
        ratios.append(est.value / green_bound(F1, x, y, D, side="lower"))
    window = max(ratios) / min(ratios)
    assert window <= 50.0

    # wall approach: the occupation density picks up the boundary factor
    deps = (0.32, 0.16, 0.08, 0.04)
    targets = [(np.array([1.0 - dp, 0.0]), dp / 4) for dp in deps]
    ests = mc_green_profile(D, K1, F1, np.array([-0.5, 0.0]), targets,
                            400_000, (92, 0))
    wall_slope = _loglog_slope(deps, [e.value for e in ests])
    assert 0.35 <= wall_slope <= 0.65

    # one-dimensional window against the closed-form bound
    D1 = Domain.ball((0.0,), 1.0)
    ratios_1d = []
    for ys in (0.3, 0.6, 0.9):
        hw = min(0.05, (1 - abs(ys)) / 4)
        est = mc_green_profile(D1, K1, F1, (-0.2,), [((ys,), hw)],
                               100_000, (93, 0))[0]
        ratios_1d.append(est.value / green_bound_1d(F1, -0.2, ys, D1))
    window_1d = max(ratios_1d) / min(ratios_1d)
    assert window_1d <= 30.0
    print(f"\nPASS green sandwich: window {window:.3f}, wall slope "
          f"{wall_slope:.3f}, 1d window {window_1d:.3f}")


def test_10_generator_annihilates_harmonic_profile():
    t0 = time.time()
    worst = 0.0
    for alpha in ALPHAS:
        f = ScaleFunction.power(alpha)

        def w(u, a=alpha):
            return max(u, 0.0) ** (a / 2.0)

        for v in np.geomspace(0.1, 10.0, 7):
            worst = max(worst, abs(generator_pv(f, w, (float(v),), axis=1)))
    assert worst < 1e-4
    elapsed = time.time() - t0
    assert elapsed < 30.0
    print(f"\nPASS generator identity: worst |pv| {worst:.2e}, {elapsed:.1f}s")


def test_11_corner_path_condition():
    from anijump import sample_interior

    H = Domain.half_space(2)
    pts = sample_interior(H, 2000, np.random.default_rng(111))
    rep = check_D_gamma(H, 1.0, list(zip(pts[:1000], pts[1000:])))
    assert rep.passed and rep.n_pairs == 1000

    B = Domain.ball((0.0, 0.0), 1.0)
    pts = sample_interior(B, 2000, np.random.default_rng(112))
    rep_b = check_D_gamma(B, 0.5, list(zip(pts[:1000], pts[1000:])))
    assert rep_b.passed and rep_b.n_pairs == 1000

    # staircase rule: after step k the permuted coordinate reads from y,
    # before it from x; endpoints are x and y themselves
    rng = np.random.default_rng(113)
    for _ in range(10_000):
        d = int(rng.integers(1, 5))
        x, y = rng.normal(size=d), rng.normal(size=d)
        perm = tuple(int(p) for p in rng.permutation(d) + 1)
        pts_ = np.asarray(corner_path(x, y, perm).points)
        assert pts_.shape == (d + 1, d)
        assert np.array_equal(pts_[0], x) and np.array_equal(pts_[-1], y)
        for k, p in enumerate(perm, start=1):
            assert np.all(pts_[k:, p - 1] == y[p - 1])
            assert np.all(pts_[:k, p - 1] == x[p - 1])
    print("\nPASS corner-path condition: half-space at gamma 1, "
          "disc at gamma 0.5, staircase rule on 10000 cases")


def test_12_rerun_is_byte_identical(tmp_path):
    cfgfile = tmp_path / "exit.toml"
    cfgfile.write_text(
        'experiment = "verify-exit"\n'
        'phi = { kind = "power", alpha = 1.0 }\n'
        'domain = { shape = "ball", center = [0.0], radius = 1.0 }\n'
        'x_grid = [[0.0], [0.5]]\n'
        'n_paths = 2000\n'
        'eps = 0.005\n')
    outs = []
    for name in ("first", "second"):
        out = tmp_path / name
        rc = main(["verify-exit", "--config", str(cfgfile), "--seed", "9",
                   "--deterministic", "--out", str(out)])
        assert rc == 0
        outs.append((out / "verify-exit.csv").read_bytes())
    assert outs[0] == outs[1]
    print("\nPASS reproducibility: rerun produced byte-identical CSV")
