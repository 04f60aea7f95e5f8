"""
Special functions against exact and scipy references
"""

import math

import numpy as np
import pytest

from src import oracles
from src.errors import SeriesNotConverged, SpecialFunctionOverflow
from src.models import SeriesControl
from src.specfun import (
    bessel_j,
    bessel_sequence,
    bessel_tail_bound,
    displacement_amplitudes,
    jacobi_anger,
    laguerre,
    laguerre_bessel_asymptotic,
    sqrt_factorial_ratio,
)
from src.tools.identity_checks import run_identity_checks


# ========== BESSEL ==========


def test_bessel_matches_exact_series(rng):
    for _ in range(100):
        p, z = int(rng.integers(0, 41)), rng.uniform(0.0, 50.0)
        ref = oracles.bessel_series_exact(p, z)
        assert abs(bessel_j(p, z) - ref) <= 1.0e-12 * max(abs(ref), 1.0e-2)


def test_bessel_matches_scipy(rng):
    for _ in range(200):
        p, z = int(rng.integers(0, 41)), rng.uniform(0.0, 50.0)
        ref = oracles.bessel_scipy(p, z)
        assert abs(bessel_j(p, z) - ref) <= 1.0e-12 * max(abs(ref), 1.0e-2)


@pytest.mark.parametrize("p", [0, 1, 4])
def test_bessel_at_zero(p):
    assert bessel_j(p, 0.0) == (1.0 if p == 0 else 0.0)


@pytest.mark.parametrize("p,z", [(3, 2.5), (4, 7.0), (7, 0.3)])
def test_bessel_reflections(p, z):
    assert bessel_j(-p, z) == pytest.approx((-1) ** p * bessel_j(p, z), abs=1e-15)
    assert bessel_j(p, -z) == pytest.approx((-1) ** p * bessel_j(p, z), abs=1e-15)


def test_bessel_sum_rule():
    # J_0 + 2 sum J_2k = 1
    values = bessel_sequence(80, 17.3)
    assert values[0] + 2.0 * values[2::2].sum() == pytest.approx(1.0, abs=1e-13)


def test_bessel_argument_out_of_range():
    with pytest.raises(SpecialFunctionOverflow):
        bessel_j(0, 1.0e7)
    with pytest.raises(SpecialFunctionOverflow):
        bessel_j(1, float("nan"))


def test_bessel_series_term_limit():
    with pytest.raises(SeriesNotConverged):
        bessel_j(40, 1.3, SeriesControl(max_terms=1))


def test_bessel_tail_bound_dominates():
    for m in range(1, 30):
        assert abs(bessel_j(m, 3.0)) <= bessel_tail_bound(m, 3.0)
    assert bessel_tail_bound(0, 5.0) == 1.0
    assert bessel_tail_bound(3, 0.0) == 0.0


def test_jacobi_anger(rng):
    for _ in range(100):
        z, theta = rng.uniform(0.0, 30.0), rng.uniform(0.0, 2.0 * math.pi)
        total = jacobi_anger(z, theta, int(math.ceil(z)) + 25)
        assert abs(total - np.exp(1j * z * math.sin(theta))) <= 1.0e-10


def test_jacobi_anger_rejects_negative_cutoff():
    with pytest.raises(ValueError):
        jacobi_anger(1.0, 0.0, -1)


# ========== LAGUERRE ==========


def test_laguerre_matches_exact_sum(rng):
    for _ in range(200):
        n, k, x = int(rng.integers(0, 51)), int(rng.integers(0, 11)), rng.uniform(-20.0, 20.0)
        ref = oracles.laguerre_exact(n, k, x)
        assert abs(laguerre(n, k, x) - ref) <= 1.0e-11 * oracles.laguerre_scale(n, k, x, ref)


@pytest.mark.parametrize("n,k,x", [(32, 3, -13.88), (50, 10, -20.0), (20, 0, -5.5)])
def test_laguerre_negative_argument_is_relative(n, k, x):
    ref = oracles.laguerre_exact(n, k, x)
    assert ref > math.comb(n + k, n)
    assert abs(laguerre(n, k, x) - ref) <= 1.0e-12 * ref


@pytest.mark.parametrize("seed", [3, 7, 11, 2024])
def test_laguerre_check_passes_for_any_seed(seed):
    [result] = run_identity_checks(samples=250, seed=seed, names=["laguerre_exact"])
    assert result["name"] == "laguerre_exact"
    assert result["passed"], result["max_residual"]


def test_laguerre_matches_scipy(rng):
    for _ in range(100):
        n, k, x = int(rng.integers(0, 41)), int(rng.integers(0, 9)), rng.uniform(-15.0, 15.0)
        ref = oracles.laguerre_scipy(n, k, x)
        assert abs(laguerre(n, k, x) - ref) <= 1.0e-10 * oracles.laguerre_scale(n, k, x, ref)


@pytest.mark.parametrize("n,k", [(0, 0), (5, 0), (7, 3), (30, 10)])
def test_laguerre_at_zero_is_binomial(n, k):
    assert laguerre(n, k, 0.0) == float(math.comb(n + k, n))


def test_laguerre_low_degrees():
    assert laguerre(0, 4, 2.5) == 1.0
    assert laguerre(1, 2, 0.75) == pytest.approx(3.0 - 0.75)
    assert laguerre(2, 0, 1.0) == pytest.approx(0.5 * (1.0 - 4.0 + 2.0))


def test_laguerre_rejects_negative_indices():
    with pytest.raises(ValueError):
        laguerre(-1, 0, 1.0)
    with pytest.raises(ValueError):
        laguerre(2, -1, 1.0)


# ========== FACTORIAL RATIOS AND DISPLACEMENT TABLE ==========


@pytest.mark.parametrize("n,k", [(0, 1), (3, 2), (20, 6), (170, 30), (300, 60)])
def test_sqrt_factorial_ratio(n, k):
    ref = oracles.sqrt_factorial_ratio_exact(n, k)
    assert abs(sqrt_factorial_ratio(n, k) - ref) <= 1.0e-14 * ref


def test_sqrt_factorial_ratio_identity():
    assert sqrt_factorial_ratio(12, 0) == 1.0
    with pytest.raises(ValueError):
        sqrt_factorial_ratio(-1, 2)


def test_displacement_amplitudes_closed_form():
    beta, n_max = 1.3, 15
    table = displacement_amplitudes(beta, n_max)
    x = beta * beta
    for n in range(n_max + 1):
        for k in range(n_max + 1 - n):
            expected = math.exp(-0.5 * x) * beta**k * sqrt_factorial_ratio(n, k) * laguerre(n, k, x)
            assert table[n, k] == pytest.approx(expected, abs=1e-12)


def test_displacement_amplitudes_zero_beta():
    table = displacement_amplitudes(0.0, 6)
    assert np.all(table[:, 0] == 1.0)
    assert np.all(table[:, 1:] == 0.0)


# ========== ASYMPTOTICS ==========


@pytest.mark.parametrize("p", [0, 1, 2])
def test_laguerre_bessel_error_shrinks(p):
    errors = [laguerre_bessel_asymptotic(n, p, 0.25)[2] for n in (10, 100, 1000)]
    assert errors[0] > errors[1] > errors[2]


def test_laguerre_bessel_szego_closer():
    plain = laguerre_bessel_asymptotic(100, 2, 4.0, "plain")[2]
    szego = laguerre_bessel_asymptotic(100, 2, 4.0, "szego")[2]
    assert szego < plain


def test_laguerre_bessel_rejects_bad_arguments():
    with pytest.raises(ValueError):
        laguerre_bessel_asymptotic(10, 1, 0.0)
    with pytest.raises(ValueError):
        laguerre_bessel_asymptotic(10, 1, 1.0, "wkb")
