from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from anijump.errors import ValidationError
from anijump.scalefn import ScaleFunction, char_exponent, pruitt_h, validate_ws


def stable_psi_coefficient(alpha: float) -> float:
    """Independent closed form: 2*int_0^inf (1-cos u) u^{-1-alpha} du."""
    if alpha == 1.0:
        return math.pi
    return -2.0 * gamma(-alpha) * math.cos(math.pi * alpha / 2.0)


# -- phi evaluation ----------------------------------------------------


def test_power_values() -> None:
    assert math.isclose(ScaleFunction.power(1.5).phi(4.0), 8.0, rel_tol=1e-14)
    assert math.isclose(ScaleFunction.power(0.5).phi(9.0), 3.0, rel_tol=1e-14)


def test_tabulated_passes_through_nodes() -> None:
    f = ScaleFunction.tabulated([0.5, 2.0, 8.0], [1.0, 5.0, 11.0])
    assert math.isclose(f.phi(2.0), 5.0, rel_tol=1e-12)
    assert math.isclose(f.phi(0.5), 1.0, rel_tol=1e-12)


def test_phi_range_error() -> None:
    f = ScaleFunction.power(1.0, r_min=1e-3, r_max=1e3)
    with pytest.raises(ValueError):
        f.phi(1e-6)
    with pytest.raises(ValueError):
        f.phi(1e6)


def test_constructor_rejections() -> None:
    with pytest.raises(ValidationError):
        ScaleFunction.power(2.1)
    with pytest.raises(ValidationError):
        ScaleFunction.power_log(0.3, -0.5)  # local exponent hits -0.2 at r=1
    with pytest.raises(ValidationError):
        ScaleFunction.power_log(1.6, 0.5)  # local exponent reaches 2.1
    with pytest.raises(ValidationError):
        ScaleFunction.tabulated([1.0, 2.0, 3.0], [1.0, 3.0, 2.0])


@given(alpha=st.floats(0.1, 1.9), lam=st.floats(1.0, 50.0), r=st.floats(0.01, 10.0))
@settings(max_examples=50)
def test_power_exact_scaling(alpha: float, lam: float, r: float) -> None:
    f = ScaleFunction.power(alpha)
    assert math.isclose(f.phi(lam * r) / f.phi(r), lam**alpha, rel_tol=1e-12)


@given(st.floats(0.2, 1.4), st.floats(-0.1, 0.5))
@settings(max_examples=50)
def test_power_log_monotone(alpha: float, beta: float) -> None:
    try:
        f = ScaleFunction.power_log(alpha, beta)
    except ValidationError:
        return
    rs = np.geomspace(1e-6, 1e6, 200)
    vals = f.phi(rs)
    assert np.all(np.diff(vals) > 0)


# -- inverse -----------------------------------------------------------


def test_phi_inverse_power() -> None:
    assert math.isclose(ScaleFunction.power(1.5).phi_inverse(8.0), 4.0, rel_tol=1e-12)
    for alpha in (0.5, 1.0, 1.7):
        assert math.isclose(ScaleFunction.power(alpha).phi_inverse(1.0), 1.0, rel_tol=1e-12)


def test_phi_inverse_power_log_vs_dense_scan() -> None:
    f = ScaleFunction.power_log(1.0, 0.5)
    t = 0.3
    r = f.phi_inverse(t)
    assert abs(f.phi(r) - t) <= 3e-11
    # dense monotone scan oracle: bracket the crossing on a fine grid
    grid = np.geomspace(1e-4, 1e2, 400_001)
    vals = f.phi(grid)
    k = int(np.searchsorted(vals, t))
    assert grid[k - 1] <= r <= grid[k]


@given(st.sampled_from(["power", "power_log", "tabulated"]), st.floats(0.01, 100.0))
@settings(max_examples=50, deadline=None)
def test_phi_inverse_roundtrip(kind: str, r: float) -> None:
    if kind == "power":
        f = ScaleFunction.power(1.3)
    elif kind == "power_log":
        f = ScaleFunction.power_log(0.8, 0.4)
    else:
        rs = np.geomspace(1e-4, 1e4, 30)
        f = ScaleFunction.tabulated(rs, rs**1.1 * (1 + 0.2 * np.sin(np.log(rs)) / 1.1))
    t = f.phi(r)
    assert math.isclose(f.phi_inverse(t), r, rel_tol=1e-9)
    assert abs(f.phi(f.phi_inverse(t)) - t) <= 1e-10 * t


def test_phi_inverse_out_of_range() -> None:
    f = ScaleFunction.power(1.0, r_min=0.1, r_max=10.0)
    with pytest.raises(ValueError):
        f.phi_inverse(1e6)


# -- nu1 and V ---------------------------------------------------------


def test_nu1_values() -> None:
    f = ScaleFunction.power(1.0)
    assert math.isclose(f.nu1(2.0), 0.25, rel_tol=1e-14)
    assert math.isclose(f.nu1(1.0), 1.0, rel_tol=1e-14)
    assert math.isclose(ScaleFunction.power(0.5).nu1(4.0), 0.125, rel_tol=1e-14)
    with pytest.raises(ValueError):
        f.nu1(-1.0)
    with pytest.raises(ValueError):
        f.nu1(0.0)


def test_renewal_v() -> None:
    f = ScaleFunction.power(1.0)
    assert f.renewal_V(0.0) == 0.0
    assert math.isclose(f.renewal_V(4.0), 2.0, rel_tol=1e-14)
    assert math.isclose(ScaleFunction.power(1.5).renewal_V(4.0), math.sqrt(8.0), rel_tol=1e-14)
    with pytest.raises(ValueError):
        f.renewal_V(-0.5)


@given(st.floats(0.3, 1.9), st.floats(0.01, 50.0), st.floats(0.01, 50.0))
@settings(max_examples=50)
def test_renewal_v_subadditive_power(alpha: float, a: float, b: float) -> None:
    f = ScaleFunction.power(alpha)
    assert f.renewal_V(a + b) <= f.renewal_V(a) + f.renewal_V(b) + 1e-12


@given(st.floats(0.05, 80.0))
@settings(max_examples=50)
def test_renewal_v_squares_to_phi(r: float) -> None:
    f = ScaleFunction.power_log(1.1, 0.3)
    assert math.isclose(f.renewal_V(r) ** 2, f.phi(r), rel_tol=1e-12)


# -- characteristic exponent ------------------------------------------


def test_char_exponent_alpha_one() -> None:
    f = ScaleFunction.power(1.0)
    assert abs(char_exponent(f, 1.0) - math.pi) <= 1e-6
    assert abs(char_exponent(f, 2.0) - 2 * math.pi) <= 2e-6
    assert char_exponent(f, 0.0) == 0.0
    assert math.isclose(char_exponent(f, -3.0), char_exponent(f, 3.0), rel_tol=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_char_exponent_matches_gamma_form(alpha: float) -> None:
    f = ScaleFunction.power(alpha)
    c = stable_psi_coefficient(alpha)
    for xi in (0.3, 1.0, 7.0):
        assert math.isclose(char_exponent(f, xi), c * xi**alpha, rel_tol=1e-8)


def test_char_exponent_monotone_general() -> None:
    f = ScaleFunction.power_log(1.0, 0.5)
    xs = np.geomspace(0.01, 100.0, 25)
    vals = [char_exponent(f, x) for x in xs]
    assert all(v >= 0 for v in vals)
    assert all(b > a for a, b in zip(vals, vals[1:]))


def test_char_exponent_phi_comparability() -> None:
    # psi(1/r) * phi(r) stays in a narrow window across three decades
    f = ScaleFunction.power_log(1.0, 0.5)
    prods = [char_exponent(f, 1.0 / r) * f.phi(r) for r in np.geomspace(0.05, 50.0, 13)]
    assert max(prods) / min(prods) <= 10.0


# -- Pruitt function ---------------------------------------------------


def test_pruitt_alpha_one_closed_form() -> None:
    f = ScaleFunction.power(1.0)
    assert abs(pruitt_h(f, 1.0) - 4.0) <= 1e-6
    assert abs(pruitt_h(f, 2.0) - 2.0) <= 1e-6
    assert pruitt_h(f, 1e6) <= 1e-5


def test_pruitt_vs_direct_quad() -> None:
    f = ScaleFunction.power(1.5)
    r = 0.7
    direct = 2 * (
        quad(lambda z: z**2 * f.nu1(z) / r**2, 0, r)[0]
        + quad(lambda z: f.nu1(z), r, np.inf)[0]
    )
    assert math.isclose(pruitt_h(f, r), direct, rel_tol=1e-7)


def test_pruitt_phi_product_window() -> None:
    f = ScaleFunction.power_log(0.9, 0.4)
    prods = [pruitt_h(f, r) * f.phi(r) for r in np.geomspace(0.03, 30.0, 12)]
    assert max(prods) / min(prods) <= 10.0


def test_pruitt_decreasing() -> None:
    f = ScaleFunction.power(0.7)
    rs = np.geomspace(0.1, 10, 9)
    vals = [pruitt_h(f, r) for r in rs]
    assert all(b < a for a, b in zip(vals, vals[1:]))


# -- weak scaling certificates -----------------------------------------


def test_validate_ws_power() -> None:
    cert = validate_ws(ScaleFunction.power(1.2))
    assert math.isclose(cert.alpha_low, 1.2, rel_tol=1e-9)
    assert math.isclose(cert.alpha_high, 1.2, rel_tol=1e-9)
    assert cert.c_low == 1.0 and cert.c_high == 1.0


def test_validate_ws_power_log() -> None:
    # phi equals r^alpha exactly on r >= 1, so the scan's minimum ratio is
    # exactly 1.0; the log factor pushes the maximum strictly above 1
    f = ScaleFunction.power_log(1.0, 0.5)
    cert = validate_ws(f, np.geomspace(1e-3, 1e3, 41))
    assert cert.alpha_low <= 1.0 + 1e-9
    assert cert.alpha_low >= 1.0 - 1e-9
    assert 1.0 + 1e-6 < cert.alpha_high < 2.0


def test_validate_ws_certificate_pairs_hold() -> None:
    f = ScaleFunction.power_log(0.7, 0.6)
    grid = np.geomspace(0.01, 100.0, 25)
    cert = validate_ws(f, grid)
    for i, r in enumerate(grid):
        for R in grid[i + 1:]:
            ratio = f.phi(R) / f.phi(r)
            assert cert.c_low * (R / r) ** cert.alpha_low <= ratio * (1 + 1e-9)
            assert ratio <= cert.c_high * (R / r) ** cert.alpha_high * (1 + 1e-9)


def test_validate_ws_rejects_non_monotone() -> None:
    rs = [1.0, 2.0, 3.0]
    with pytest.raises(ValidationError):
        ScaleFunction.tabulated(rs, [1.0, 2.5, 2.0])
