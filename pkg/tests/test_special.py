"""Gamma, Mittag-Leffler, and singular-kernel quadrature against independent references."""

import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from fidhvi.special import (
    caputo_l1,
    gamma_fn,
    kernel_cell_weights,
    mittag_leffler,
    riemann_liouville_weights,
)


def test_gamma_matches_stdlib_on_working_range():
    xs = np.geomspace(1e-3, 50.0, 240)
    rel = max(abs(gamma_fn(x) - math.gamma(x)) / math.gamma(x) for x in xs)
    assert rel <= 1e-12


@given(st.floats(min_value=1e-3, max_value=25.0, allow_nan=False))
def test_gamma_recurrence(x):
    assert gamma_fn(x + 1.0) == pytest.approx(x * gamma_fn(x), rel=1e-11)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.nan, math.inf])
def test_gamma_rejects_nonpositive_and_nonfinite(bad):
    with pytest.raises(ValueError):
        gamma_fn(bad)


def test_ml_order_one_is_exp():
    for x in np.linspace(-5.0, 5.0, 21):
        ev = mittag_leffler(1.0, float(x))
        assert ev.value == pytest.approx(math.exp(x), rel=1e-12)
        assert ev.truncation_bound <= 1e-10 * max(1.0, math.exp(x))


def test_ml_order_two_is_cosh_of_sqrt():
    for z in (0.25, 1.0, 4.0, 9.0):
        got = mittag_leffler(2.0, z).value
        assert got == pytest.approx(math.cosh(math.sqrt(z)), rel=1e-12)


def test_ml_matches_high_precision_series_on_tame_arguments():
    for kappa in (0.3, 0.5, 0.8, 1.0, 1.3, 1.7):
        for x in (-2.0, -0.7, 0.0, 0.9, 3.0):
            ev = mittag_leffler(kappa, x)
            ref = oracles.ml_reference(kappa, x)
            assert abs(ev.value - ref) <= 5e-11 * max(1.0, abs(ref)), (kappa, x)
            # the reported bound must be informative here, not vacuously huge
            assert ev.truncation_bound <= 1e-8 * max(1.0, abs(ref))


def test_ml_truncation_bound_is_sound_on_wider_arguments():
    # alternating series lose digits as |x| grows; the diagnostic must cover it
    for kappa in (0.5, 0.8, 1.0, 1.6):
        for x in (-8.0, -5.0, -3.0, 3.0, 6.0):
            ev = mittag_leffler(kappa, x)
            ref = oracles.ml_reference(kappa, x, dps=200)
            assert abs(ev.value - ref) <= ev.truncation_bound + 1e-13 * abs(ref), (kappa, x)


def test_ml_domain_and_trivial_cases():
    assert mittag_leffler(0.5, 0.0).value == 1.0
    with pytest.raises(ValueError):
        mittag_leffler(0.0, 1.0)
    with pytest.raises(ValueError):
        mittag_leffler(2.5, 1.0)
    with pytest.raises(ValueError):
        mittag_leffler(0.5, 51.0)


def test_weights_order_one_reduce_to_trapezoid():
    nodes = np.linspace(0.0, 1.0, 9)
    kw = riemann_liouville_weights(1.0, nodes, 1.0)
    h = 0.125
    expected = np.full(9, h)
    expected[0] = expected[-1] = 0.5 * h
    assert np.abs(kw.weights - expected).max() <= 1e-15


def test_weights_sum_to_kernel_moment():
    rng = np.random.default_rng(3)
    nodes = np.concatenate([[0.0], np.cumsum(rng.uniform(0.02, 0.2, size=11))])
    t = float(nodes[-1])
    for kappa in (0.3, 0.5, 0.9):
        kw = riemann_liouville_weights(kappa, nodes, t)
        moment = oracles.singular_moment(kappa, t, 0)
        assert kw.weights.sum() == pytest.approx(moment, rel=1e-13)
        assert kw.weights.min() >= 0.0


def test_weights_exact_for_linear_integrands():
    nodes = np.linspace(0.0, 1.0, 33)
    kappa = 0.5
    kw = riemann_liouville_weights(kappa, nodes, 1.0)
    a, b = 0.7, -0.4
    got = float(kw.weights @ (a + b * nodes))
    expected = a * oracles.singular_moment(kappa, 1.0, 0) + b * oracles.singular_moment(kappa, 1.0, 1)
    # cross-validate the closed form itself with adaptive quadrature
    with mp.workdps(40):
        quad = float(mp.quad(lambda s: (1 - s) ** (kappa - 1) * (a + b * s), [0, 1]))
    assert expected == pytest.approx(quad, rel=1e-12)
    assert got == pytest.approx(expected, rel=1e-12)


@given(
    st.lists(st.floats(min_value=0.01, max_value=0.5), min_size=2, max_size=10),
    st.floats(min_value=0.05, max_value=1.0),
)
def test_weights_nonnegative_and_consistent_on_arbitrary_grids(steps, kappa):
    nodes = np.concatenate([[0.0], np.cumsum(np.asarray(steps))])
    kw = riemann_liouville_weights(kappa, nodes, float(nodes[-1]))
    assert kw.weights.min() >= 0.0
    moment = oracles.singular_moment(kappa, float(nodes[-1]), 0)
    assert kw.weights.sum() == pytest.approx(moment, rel=1e-9)


def test_weights_require_a_grid_node():
    nodes = np.linspace(0.0, 1.0, 5)
    with pytest.raises(ValueError):
        riemann_liouville_weights(0.5, nodes, 0.3)
    with pytest.raises(ValueError):
        riemann_liouville_weights(0.5, nodes, 0.0)


def test_cell_weights_integrate_one_sided_jumps_exactly():
    # integrand linear on [0, 0.5] and on (0.5, 1] with a jump at 0.5:
    # u = 1 + s below, u = 3 - s above; both one-sided limits enter the rule
    nodes = np.linspace(0.0, 1.0, 65)
    kappa = 0.5
    left, right = kernel_cell_weights(kappa, nodes, 64)
    mid = 32

    def u_right(s_idx):
        s = nodes[s_idx]
        return 3.0 - s if s_idx >= mid else 1.0 + s

    def u_left(s_idx):
        s = nodes[s_idx]
        return 3.0 - s if s_idx > mid else 1.0 + s

    total = sum(
        left[i] * u_right(i) + right[i] * u_left(i + 1) for i in range(64)
    )
    with mp.workdps(40):
        ref = float(
            mp.quad(lambda s: (1 - s) ** (kappa - 1) * (1 + s), [0, 0.5])
            + mp.quad(lambda s: (1 - s) ** (kappa - 1) * (3 - s), [0.5, 1])
        )
    assert total == pytest.approx(ref, rel=1e-12)


def test_caputo_l1_annihilates_constants():
    out = caputo_l1(np.full(17, 2.5), 0.0625, 0.5)
    assert np.abs(out).max() == 0.0


def test_caputo_l1_exact_for_linear_samples():
    n = 65
    ts = np.linspace(0.0, 1.0, n)
    kappa = 0.4
    out = caputo_l1(ts, 1.0 / (n - 1), kappa)
    expected = ts ** (1.0 - kappa) / gamma_fn(2.0 - kappa)
    assert np.abs(out - expected).max() <= 1e-13


def test_caputo_l1_power_function_accuracy():
    n = 513
    ts = np.linspace(0.0, 1.0, n)
    out = caputo_l1(ts**2, 1.0 / (n - 1), 0.5)
    expected = 2.0 * ts**1.5 / math.gamma(2.5)
    keep = ts >= 0.1
    # measured 4.0e-5 at this resolution; the scheme's order is h^(2-kappa)
    assert np.abs(out - expected)[keep].max() <= 2e-4


def test_caputo_l1_rejects_bad_inputs():
    with pytest.raises(ValueError):
        caputo_l1(np.zeros(5), 0.1, 1.0)
    with pytest.raises(ValueError):
        caputo_l1(np.zeros(2), 0.1, 0.5)
    with pytest.raises(ValueError):
        caputo_l1(np.zeros(5), 0.0, 0.5)
