from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import stats

from anijump.errors import ValidationError
from anijump.geometry import Domain
from anijump.scalefn import ScaleFunction
from anijump.simulate import (
    KappaSpec,
    SimConfig,
    exit_decomposition,
    jump_rate,
    sample_general_increment,
    sample_stable_increment,
    simulate_killed_ensemble,
    simulate_killed_path,
    small_jump_variance_rate,
)

CAUCHY = ScaleFunction.power(1.0)
UNIT_KAPPA = KappaSpec.constant_one()


def test_stable_increment_is_cauchy():
    rng = np.random.default_rng(7)
    x = sample_stable_increment(1.0, 0.3, rng, size=100_000)
    ks = stats.kstest(x, stats.cauchy(scale=math.pi * 0.3).cdf)
    assert ks.statistic < 0.01


def test_stable_increment_matches_reference():
    rng = np.random.default_rng(8)
    c = -2.0 * math.gamma(-0.5) * math.cos(math.pi / 4.0)
    x = sample_stable_increment(0.5, 1.0, rng, size=50_000)
    ks = stats.kstest(x, stats.levy_stable(0.5, 0.0, scale=c**2).cdf)
    assert ks.statistic < 0.01


def test_stable_increment_self_similarity():
    rng = np.random.default_rng(9)
    q1 = np.quantile(np.abs(sample_stable_increment(1.5, 0.01, rng, size=1_000_000)), 0.9)
    q2 = np.quantile(np.abs(sample_stable_increment(1.5, 0.02, rng, size=1_000_000)), 0.9)
    assert q2 / q1 == pytest.approx(2.0 ** (2.0 / 3.0), rel=0.05)


def test_stable_increment_edge_cases():
    rng = np.random.default_rng(0)
    assert sample_stable_increment(1.3, 0.0, rng) == 0.0
    assert np.all(sample_stable_increment(1.3, 0.0, rng, size=5) == 0.0)
    with pytest.raises(ValidationError):
        sample_stable_increment(2.0, 1.0, rng)
    with pytest.raises(ValidationError):
        sample_stable_increment(0.0, 1.0, rng)
    with pytest.raises(ValidationError):
        sample_stable_increment(1.0, -0.1, rng)


def test_general_increment_matches_stable_law():
    rng = np.random.default_rng(11)
    x = sample_general_increment(CAUCHY, 0.01, 1e-3, rng, size=100_000)
    ks = stats.kstest(x, stats.cauchy(scale=math.pi * 0.01).cdf)
    assert ks.statistic < 0.015


def test_jump_rate_and_variance_closed_forms():
    eps = 1e-3
    for alpha in (0.5, 1.0, 1.5):
        f = ScaleFunction.power(alpha)
        assert jump_rate(f, eps) == pytest.approx(2.0 * eps**-alpha / alpha, rel=1e-6)
        assert small_jump_variance_rate(f, eps) == pytest.approx(
            2.0 * eps ** (2.0 - alpha) / (2.0 - alpha), rel=1e-9)


def test_small_jump_variance_grows_with_eps():
    grid = np.geomspace(1e-4, 1e-1, 7)
    vals = [small_jump_variance_rate(CAUCHY, float(e)) for e in grid]
    assert np.all(np.diff(vals) > 0)


def test_general_increment_edge_cases():
    rng = np.random.default_rng(1)
    assert sample_general_increment(CAUCHY, 0.0, 1e-3, rng) == 0.0
    with pytest.raises(ValidationError):
        sample_general_increment(CAUCHY, 1.0, 1e-9, rng)  # below r_min
    with pytest.raises(ValidationError):
        sample_general_increment(CAUCHY, -1.0, 1e-3, rng)


def test_kappa_spec_validation():
    with pytest.raises(ValidationError):
        KappaSpec.bounded(lambda x, y: 1.0, kappa0=0.5)
    with pytest.raises(ValidationError):
        KappaSpec.bounded(lambda x, y: 1.0, kappa0=2.0, eta=0.0)
    with pytest.raises(ValidationError):
        KappaSpec.bounded(lambda x, y: 1.0, kappa0=2.0, kappa1=-1.0)
    with pytest.raises(ValidationError):
        KappaSpec(kind="mystery")


def test_sim_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(eps_small_jump=0.0, horizon=1.0)
    with pytest.raises(ValidationError):
        SimConfig(eps_small_jump=0.1, horizon=0.0)
    with pytest.raises(ValidationError):
        SimConfig(eps_small_jump=0.1, horizon=1.0, dt_check=-0.1)


def test_path_starting_outside_domain():
    D = Domain.ball([0.0, 0.0], 1.0)
    res = simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [2.0, 0.0],
                               SimConfig(0.02, 1.0, seed=1))
    assert res.exited and res.exit_time == 0.0 and res.exit_kind == "start"
    assert np.array_equal(res.exit_position, [2.0, 0.0])


def test_full_space_path_never_exits():
    D = Domain.full_space(2)
    res = simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [0.0, 0.0],
                               SimConfig(0.05, 0.05, seed=2))
    assert not res.exited and res.exit_kind == "horizon"
    assert res.position_at_horizon is not None and res.exit_position is None
    assert res.exit_time == 0.05


def test_killed_path_determinism():
    D = Domain.ball([0.0, 0.0], 1.0)
    cfg = SimConfig(0.02, 20.0, seed=9, stream=4, record_occupation=True)
    a = simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [0.2, -0.1], cfg)
    b = simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [0.2, -0.1], cfg)
    assert a.exit_time == b.exit_time and a.exit_kind == b.exit_kind
    assert np.array_equal(a.exit_position, b.exit_position)
    assert len(a.occupation) == len(b.occupation)
    for (w1, p1), (w2, p2) in zip(a.occupation, b.occupation):
        assert w1 == w2 and np.array_equal(p1, p2)


def test_path_structure_on_ball():
    # jumps are axis-aligned: a jump exit changes exactly one coordinate
    # of the pre-exit state; holding weights add up to the exit time
    D = Domain.ball([0.0, 0.0], 1.0)
    results = [simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [0.2, -0.1],
                                    SimConfig(0.02, 20.0, seed=3, stream=i,
                                              record_occupation=True))
               for i in range(200)]
    jump_exits = [r for r in results if r.exit_kind == "jump"]
    assert len(jump_exits) > 150
    for r in jump_exits:
        assert np.sum(r.exit_position != r.pre_exit_position) == 1
    for r in results:
        if r.exited:
            assert not D.contains(r.exit_position)
            total = sum(w for w, _ in r.occupation)
            assert total == pytest.approx(r.exit_time, abs=1e-9)
        else:
            assert D.contains(r.position_at_horizon)


def test_mean_exit_time_scales_like_phi():
    cfg = SimConfig(eps_small_jump=5e-3, horizon=60.0, seed=11)
    means = {}
    for r in (0.5, 1.0):
        D = Domain.ball([0.0], r)
        res = simulate_killed_ensemble(D, CAUCHY, np.array([0.0]), cfg, 20_000)
        assert res.exited.all()
        assert np.all(np.abs(res.exit_position[:, 0]) >= r)
        means[r] = res.exit_time.mean()
    assert means[1.0] / means[0.5] == pytest.approx(2.0, rel=0.10)
    # same multiple of phi(r) at both radii puts the two-sided window
    # far below any generous constant
    for r, m in means.items():
        assert 0.05 * CAUCHY.phi(r) < m < 2.0 * CAUCHY.phi(r)


def test_ensemble_deterministic_and_matches_path_driver():
    D = Domain.ball([0.0], 1.0)
    cfg = SimConfig(eps_small_jump=5e-3, horizon=60.0, seed=11)
    e1 = simulate_killed_ensemble(D, CAUCHY, np.array([0.0]), cfg, 4000)
    e2 = simulate_killed_ensemble(D, CAUCHY, np.array([0.0]), cfg, 4000)
    assert np.array_equal(e1.exit_time, e2.exit_time)
    assert np.array_equal(e1.exit_position, e2.exit_position)
    # the sequential driver must produce the same law
    per_path = np.array([
        simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [0.0],
                             SimConfig(5e-3, 60.0, seed=13, stream=i)).exit_time
        for i in range(400)])
    ks = stats.ks_2samp(e1.exit_time, per_path).statistic
    assert ks < 0.08


def test_axis_exchangeability():
    # permuting the start coordinates permutes the law; exit times match
    D = Domain.ball([0.0, 0.0], 1.0)
    ta = simulate_killed_ensemble(D, CAUCHY, np.array([0.3, 0.1]),
                                  SimConfig(0.02, 40.0, seed=21), 8000).exit_time
    tb = simulate_killed_ensemble(D, CAUCHY, np.array([0.1, 0.3]),
                                  SimConfig(0.02, 40.0, seed=22), 8000).exit_time
    assert stats.ks_2samp(ta, tb).statistic < 0.03


def test_thinning_acceptance_rate():
    # constant kappa = 0.6 against majorant kappa0 = 2: keep 30% of
    # proposals, measured on a million of them
    kap = KappaSpec.bounded(lambda x, y: 0.6, kappa0=2.0, eta=0.9)
    rate = jump_rate(CAUCHY, 0.05)
    horizon = 1_000_000 / (2.0 * rate)
    res = simulate_killed_path(Domain.full_space(1), kap, CAUCHY, [0.0],
                               SimConfig(0.05, horizon, seed=5))
    assert res.n_proposals > 900_000
    assert res.n_jumps / res.n_proposals == pytest.approx(0.30, abs=0.006)


def test_kappa_out_of_bounds_detected():
    kap = KappaSpec.bounded(lambda x, y: 3.0, kappa0=2.0, eta=0.9)
    with pytest.raises(ValidationError):
        simulate_killed_path(Domain.full_space(1), kap, CAUCHY, [0.0],
                             SimConfig(0.05, 10.0, seed=6))


def test_kappa_eta_checked_against_scaling():
    kap = KappaSpec.bounded(lambda x, y: 1.0, kappa0=2.0, eta=0.7)
    f = ScaleFunction.power(1.5)  # upper exponent 1.5 needs eta > 0.75
    with pytest.raises(ValidationError):
        simulate_killed_path(Domain.full_space(1), kap, f, [0.0],
                             SimConfig(0.05, 1.0, seed=6))


def test_landing_depth_scaling():
    # start at depth delta in the interval (0, h); the chance of landing
    # deeper into the half-line, in [h, s], scales like sqrt(phi(delta))
    h, s = 0.5, 2.0
    D = Domain.ball([h / 2.0], h / 2.0)
    freq = {}
    for delta in (0.04, 0.01):
        cfg = SimConfig(eps_small_jump=1e-3, horizon=40.0 * h, seed=31)
        res = simulate_killed_ensemble(D, CAUCHY, np.array([delta]), cfg, 30_000)
        tallies = exit_decomposition(
            res, [lambda p: h <= p[0] <= s, lambda p: p[0] < 0.0])
        assert tallies[0].std_error < 0.01
        freq[delta] = tallies[0].frequency
    assert freq[0.01] / freq[0.04] == pytest.approx(0.5, rel=0.20)


def test_exit_decomposition_basics():
    D = Domain.ball([0.0], 1.0)
    cfg = SimConfig(eps_small_jump=5e-3, horizon=60.0, seed=41)
    res = simulate_killed_ensemble(D, CAUCHY, np.array([0.0]), cfg, 2000)
    outside = lambda p: not D.contains(p)
    never = lambda p: False
    tallies = exit_decomposition(res, [outside, never])
    assert tallies[0].frequency == 1.0 and tallies[0].count == int(res.exited.sum())
    assert tallies[1].frequency == 0.0 and tallies[1].std_error == 0.0
    with pytest.raises(ValidationError):
        exit_decomposition(res, [outside, lambda p: p[0] > 1.0])
    # list-of-results form
    paths = [simulate_killed_path(D, UNIT_KAPPA, CAUCHY, [0.0],
                                  SimConfig(5e-3, 60.0, seed=42, stream=i))
             for i in range(50)]
    t2 = exit_decomposition(paths, [outside])
    assert t2[0].count == sum(r.exited for r in paths)


def test_ensemble_box_occupation():
    # every in-domain position lies in the covering box, so its tally is
    # exactly the time alive
    D = Domain.ball([0.0], 1.0)
    cfg = SimConfig(eps_small_jump=5e-3, horizon=60.0, seed=51)
    res = simulate_killed_ensemble(
        D, CAUCHY, np.array([0.0]), cfg, 2000,
        boxes=[(np.array([-1.0]), np.array([1.0])),
               (np.array([-0.2]), np.array([0.2]))])
    assert np.allclose(res.box_occupation[:, 0], res.exit_time, atol=1e-9)
    assert np.all(res.box_occupation[:, 1] <= res.box_occupation[:, 0] + 1e-12)
    assert res.box_occupation[:, 1].mean() > 0.0


def test_ensemble_rejects_bad_input():
    D = Domain.ball([0.0], 1.0)
    cfg = SimConfig(eps_small_jump=5e-3, horizon=1.0)
    with pytest.raises(ValidationError):
        simulate_killed_ensemble(D, CAUCHY, np.array([0.0]), cfg, 0)
    with pytest.raises(ValidationError):
        simulate_killed_ensemble(D, CAUCHY, np.array([0.0, 0.0]), cfg, 10)
    res = simulate_killed_ensemble(D, CAUCHY, np.array([3.0]), cfg, 16)
    assert res.exited.all() and np.all(res.exit_time == 0.0)
