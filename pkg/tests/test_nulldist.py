from __future__ import annotations

import csv
import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fcpd import ConfigError, DegenerateError, SpectralModel
from fcpd._rng import stream
from fcpd.nulldist import (
    CriticalValueTable,
    NullSimConfig,
    XiAlphaModel,
    breakdate_ci,
    bridges,
    drift_levels,
    export_table,
    order_statistic_index,
    p_value,
    simulate_delta_sup,
    simulate_delta_sups,
    simulate_xi_alpha,
    tables_for_alphas,
)


def _phi(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _argmax_cdf(x: float) -> float:
    """Closed-form CDF of argmax_u (W(u) - |u|/2) for a two-sided Wiener process W."""
    if x < 0:
        return 1.0 - _argmax_cdf(-x)
    r = math.sqrt(x)
    return (
        1.0
        + math.sqrt(x / (2 * math.pi)) * math.exp(-x / 8)
        - 0.5 * (x + 5) * _phi(-r / 2)
        + 1.5 * math.exp(x) * _phi(-3 * r / 2)
    )


def test_bridges_pin_and_variance():
    b = bridges(stream(1, "t", 0), (20000,), 10)
    assert np.all(b[:, 0] == 0.0) and np.all(b[:, -1] == 0.0)
    u = np.arange(11) / 10
    np.testing.assert_allclose(b.var(axis=0)[1:-1], (u * (1 - u))[1:-1], rtol=0.05)
    # covariance of a bridge: min(u, v) - u v
    c = np.mean(b[:, 3] * b[:, 7])
    assert c == pytest.approx(0.3 - 0.21, abs=0.01)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.5])
def test_degenerate_law_is_exact(alpha):
    # lambda = 0: Delta(u) = -u(1-u), so every replication gives max (u(1-u))^(1-alpha) = 0.25^(1-alpha)
    model = SpectralModel.from_eigenvalues([0.0], 1.0)
    table = simulate_delta_sup(model, NullSimConfig(n_grid=100, n_reps=100, alpha_weight=alpha))
    assert np.allclose(table.sup_samples, 0.25 ** (1 - alpha), rtol=1e-14)


def test_single_bridge_matches_kolmogorov():
    # sigma = 0, one unit eigenvalue: sup B^2 = (sup |B|)^2, whose 95% quantile is 1.3581^2 up to a
    # discrete-grid correction of 0.5826 / sqrt(n)
    model = SpectralModel.from_eigenvalues([1.0], 0.0)
    table = tables_for_alphas(model, 1000, 50000, [0.0], seed=1)[0]
    expected = (1.3581 - 0.5826 / math.sqrt(1000)) ** 2
    assert table.critical_value(0.05) == pytest.approx(expected, abs=0.03)


def test_scaling_in_eigenvalues():
    # scaling every lambda and sigma^2 by c scales each sup by c (same paths)
    a = SpectralModel.from_eigenvalues([2.0, 1.0], 1.5)
    b = SpectralModel.from_eigenvalues([6.0, 3.0], 4.5)
    sa = simulate_delta_sups(a, 50, 300, [0.0, 0.5], seed=9)
    sb = simulate_delta_sups(b, 50, 300, [0.0, 0.5], seed=9)
    np.testing.assert_allclose(sb, 3.0 * sa, rtol=1e-12)


def test_alpha_monotone_on_shared_paths():
    model = SpectralModel.from_eigenvalues([1.0, 0.5], 1.5)
    sups = simulate_delta_sups(model, 64, 400, [0.0, 0.3, 0.6], seed=4)
    assert np.all(sups[0] <= sups[1] + 1e-12) and np.all(sups[1] <= sups[2] + 1e-12)


def test_workers_and_determinism():
    model = SpectralModel.from_eigenvalues([1.0, 0.3, 0.1], 1.4)
    one = simulate_delta_sups(model, 900, 1000, [0.5], seed=11, workers=1)
    many = simulate_delta_sups(model, 900, 1000, [0.5], seed=11, workers=8)
    again = simulate_delta_sups(model, 900, 1000, [0.5], seed=11, workers=3)
    assert np.array_equal(one, many) and np.array_equal(one, again)
    other = simulate_delta_sups(model, 900, 1000, [0.5], seed=12)
    assert not np.array_equal(one, other)
    keyed = simulate_delta_sups(model, 900, 1000, [0.5], seed=11, key=(5,))
    assert not np.array_equal(one, keyed)


@pytest.mark.parametrize("level,n,idx", [(0.05, 100, 94), (0.05, 1000, 949), (0.1, 500, 449), (0.01, 101, 99)])
def test_order_statistic_index(level, n, idx):
    assert order_statistic_index(level, n) == idx


def test_critical_values_monotone_in_level():
    model = SpectralModel.from_eigenvalues([1.0], 1.0)
    table = tables_for_alphas(model, 100, 1000, [0.5], seed=2, levels=(0.01, 0.05, 0.1))[0]
    cv = table.critvals
    assert cv[0] >= cv[1] >= cv[2]
    assert set(table.to_dict()) == {"0.01", "0.05", "0.1"}
    with pytest.raises(ConfigError):
        table.critical_value(1.0)


def test_p_value_rule():
    table = CriticalValueTable(np.arange(1.0, 101.0))
    assert p_value(table, 0.0) == 1.0
    assert p_value(table, 100.5) == 1 / 101
    assert p_value(table, 100.0) == 2 / 101
    assert p_value(table, 95.5) == 6 / 101


@given(st.lists(st.floats(0, 100), min_size=1, max_size=60), st.floats(-10, 110), st.floats(-10, 110))
def test_p_value_properties(values, t1, t2):
    table = CriticalValueTable(np.sort(np.array(values)))
    p1, p2 = table.p_value(t1), table.p_value(t2)
    assert 1 / (len(values) + 1) <= p1 <= 1.0
    if t1 <= t2:
        assert p1 >= p2


def test_config_checks():
    with pytest.raises(ConfigError):
        NullSimConfig(n_grid=4)
    with pytest.raises(ConfigError):
        NullSimConfig(n_reps=10)
    with pytest.raises(ConfigError):
        NullSimConfig(alpha_weight=1.0)
    with pytest.raises(ConfigError):
        simulate_delta_sups(SpectralModel.from_eigenvalues([], 1.0), 20, 100, [0.0], 0)
    with pytest.raises(ConfigError):
        simulate_delta_sups(SpectralModel.from_eigenvalues([1.0], -1.0), 20, 100, [0.0], 0)


def test_export_table(tmp_path):
    table = CriticalValueTable(np.arange(1.0, 201.0), (0.05, 0.1))
    export_table(table, tmp_path / "cv.csv", dump_samples=True)
    rows = list(csv.reader((tmp_path / "cv.csv").open()))
    assert rows == [["level", "critical_value"], ["0.05", "190.0"], ["0.1", "180.0"]]
    assert np.loadtxt(tmp_path / "cv.sups.csv", delimiter=",").shape == (200,)


def test_drift_levels():
    assert drift_levels(0.0, 0.5) == (0.5, 0.5)
    assert drift_levels(0.0, 0.3) == pytest.approx((0.7, 0.3))
    left, right = drift_levels(0.6, 0.2)
    assert left == pytest.approx(0.7 * 0.8 + 0.3 * 0.2)
    assert right == pytest.approx(0.7 * 0.2 + 0.3 * 0.8)
    for a in (0.0, 0.4, 0.9):
        assert sum(drift_levels(a, 0.37)) == pytest.approx(1.0)


def test_xi_matches_closed_form_cdf():
    xi = simulate_xi_alpha(0.0, 0.5, n_reps=20000, seed=5)
    for x in (-8.0, -3.0, -1.0, 0.5, 2.0, 5.0, 11.0):
        emp = float(np.mean(xi.samples <= x))
        assert emp == pytest.approx(_argmax_cdf(x), abs=0.015)
    assert xi.quantile(0.975) == pytest.approx(11.03, abs=1.0)
    assert xi.boundary_fraction < 1e-3


def test_xi_symmetry_and_determinism():
    xi = simulate_xi_alpha(0.5, 0.5, n_reps=20000, seed=1)
    s = np.asarray(xi.samples)
    skew = float(np.mean((s - s.mean()) ** 3) / s.std() ** 3)
    assert abs(skew) < 0.1
    assert xi.m_alpha_left == xi.m_alpha_right
    again = simulate_xi_alpha(0.5, 0.5, n_reps=20000, seed=1, workers=4)
    assert np.array_equal(xi.samples, again.samples)


def test_xi_skews_toward_slow_side():
    # theta = 0.2: the left drift is steeper, so the argmax leans right
    xi = simulate_xi_alpha(0.0, 0.2, n_reps=4000, seed=2)
    assert np.median(xi.samples) > 0
    assert xi.m_alpha_left > xi.m_alpha_right


def test_xi_errors():
    with pytest.raises(ConfigError):
        simulate_xi_alpha(1.0, 0.5)
    with pytest.raises(ConfigError):
        simulate_xi_alpha(0.0, 1.0)
    with pytest.raises(ConfigError):
        simulate_xi_alpha(0.0, 0.5, n_reps=0)


def _xi(samples):
    s = np.asarray(samples, dtype=float)
    return XiAlphaModel(0.0, 0.5, 0.5, 0.5, s, 50.0, 0.01, 0)


def test_breakdate_ci_rounding_and_clamp():
    xi = _xi(np.linspace(-10, 10, 2001))
    est = SimpleNamespace(k_hat=50, n_obs=100, delta_norm=2.0, sigma2_hat=1.0)
    ci = breakdate_ci(est, xi, 0.95)
    assert ci.scale == 0.25
    assert ci.raw_lower == pytest.approx(50 - 9.5 * 0.25)
    assert ci.raw_upper == pytest.approx(50 + 9.5 * 0.25)
    assert (ci.lower, ci.upper) == (47, 53)
    near_edge = SimpleNamespace(k_hat=3, n_obs=100, delta_norm=0.4, sigma2_hat=1.0)
    ci = breakdate_ci(near_edge, xi, 0.95)
    assert ci.raw_upper == pytest.approx(3 + 9.5 * 6.25)
    assert ci.lower == 1 and ci.upper == 63
    far = SimpleNamespace(k_hat=95, n_obs=100, delta_norm=0.4, sigma2_hat=1.0)
    assert breakdate_ci(far, xi, 0.95).upper == 100
    assert set(ci.to_dict()) == {"level", "lower", "upper", "raw_lower", "raw_upper", "scale"}


def test_breakdate_ci_errors():
    xi = _xi([0.0, 1.0])
    with pytest.raises(DegenerateError):
        breakdate_ci(SimpleNamespace(k_hat=5, n_obs=10, delta_norm=0.0, sigma2_hat=1.0), xi)
    with pytest.raises(ConfigError):
        breakdate_ci(SimpleNamespace(k_hat=5, n_obs=10, delta_norm=1.0, sigma2_hat=1.0), xi, 1.0)


def test_dense_grid_approaches_continuous_quantile():
    # on a fine grid the discrete-monitoring bias is small: target (1.3581 - 0.5826/sqrt(n))^2 -> 1.844
    model = SpectralModel.from_eigenvalues([1.0], 0.0)
    table = tables_for_alphas(model, 20000, 4000, [0.0], seed=6)[0]
    expected = (1.3581 - 0.5826 / math.sqrt(20000)) ** 2
    assert expected == pytest.approx(1.844, abs=0.02)
    assert table.critical_value(0.05) == pytest.approx(expected, abs=0.07)


def test_p_value_at_median():
    model = SpectralModel.from_eigenvalues([1.0, 0.5], 1.0)
    table = tables_for_alphas(model, 50, 1001, [0.0], seed=8)[0]
    med = float(np.median(table.sup_samples))
    assert table.p_value(med) == pytest.approx(0.5, abs=2 / 1001)
    assert table.p_value(-1.0) == 1.0


def test_weaker_drift_widens_xi():
    strong = simulate_xi_alpha(0.0, 0.5, n_reps=4000, seed=3)
    weak = simulate_xi_alpha(0.0, 0.5, n_reps=4000, seed=3, drift_scale=0.5, window=200.0, step=0.04)
    assert weak.quantile(0.95) > 2 * strong.quantile(0.95)


def test_ci_width_scales_with_shift():
    xi = _xi(np.linspace(-10, 10, 2001))
    base = breakdate_ci(SimpleNamespace(k_hat=500, n_obs=1000, delta_norm=0.5, sigma2_hat=1.0), xi, 0.9)
    dbl = breakdate_ci(SimpleNamespace(k_hat=500, n_obs=1000, delta_norm=1.0, sigma2_hat=1.0), xi, 0.9)
    assert (base.raw_upper - base.raw_lower) == pytest.approx(4 * (dbl.raw_upper - dbl.raw_lower))
    assert base.raw_upper - 500 == pytest.approx(500 - base.raw_lower)
