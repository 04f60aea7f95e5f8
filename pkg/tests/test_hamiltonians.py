"""
Hamiltonian representations against brute-force conjugation
"""

import cmath
import math

import numpy as np
import pytest

from src import oracles
from src.errors import AlphaZero, CutoffInsufficient, TruncationTooSmall
from src.fockspace import IDENTITY_2, SIGMA_X, SIGMA_Z
from src.hamiltonians import (
    DisplacedBasisHamiltonian,
    displaced_harmonics,
    h_hyperbolic_sc,
    h_normal_ordered_sc,
    h_q,
    h_q_bessel_series_element,
    h_q_displaced,
    h_q_displaced_bessel_element,
    h_q_rot_fock_element,
    h_q_rotating,
    h_q_transformed_element,
    h_sc,
    h_sc_bessel,
    reliable_element,
    renormalized_freq_q,
    renormalized_freq_sc,
    u_sc,
)
from src.models import DriveParams, ModelParams, SeriesCutoffs, Truncation

WIDE = Truncation(N=60, guard_band=40)
COUPLED = ModelParams(omega=0.7, omega0=1.0, lam=0.3)


def _max_abs(block):
    return float(np.max(np.abs(block)))


# ========== SEMICLASSICAL ==========


def test_h_sc_values():
    params = ModelParams(omega=2.0, omega0=1.0, lam=0.1)
    drive = DriveParams(amplitude=0.5, phase=0.0)
    assert np.allclose(h_sc(params, drive, 0.0), SIGMA_Z + SIGMA_X)
    assert np.allclose(h_sc(params, drive, math.pi / 2), SIGMA_Z)


@pytest.mark.parametrize("amplitude,phase,t", [(0.2, 0.0, 0.3), (0.8, 1.1, 2.5), (1.4, -0.6, 5.0)])
def test_bessel_form_is_the_u_sc_frame(amplitude, phase, t):
    params = ModelParams(omega=1.3, omega0=0.9, lam=0.1)
    drive = DriveParams(amplitude=amplitude, phase=phase)
    u = u_sc(drive, params, t)
    derivative = oracles.central_difference(lambda s: u_sc(drive, params, s), t)
    frame = u.conj().T @ h_sc(params, drive, t) @ u - 1j * u.conj().T @ derivative
    assert _max_abs(frame - h_sc_bessel(params, drive, t)) <= 1.0e-8


def test_u_sc_is_unitary():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.1)
    u = u_sc(DriveParams(amplitude=0.7, phase=0.2), params, 1.7)
    assert np.allclose(u.conj().T @ u, IDENTITY_2, atol=1e-14)


def test_period_average_gives_renormalized_frequency():
    params = ModelParams(omega=1.2, omega0=1.0, lam=0.1)
    drive = DriveParams(amplitude=0.6, phase=0.4)
    average = oracles.gauss_time_average(lambda t: h_sc_bessel(params, drive, t), 2.0 * math.pi, nodes=128)
    assert _max_abs(average - 0.5 * renormalized_freq_sc(params, drive) * SIGMA_Z) <= 1.0e-12


def test_harmonic_cutoff_too_small():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.1)
    with pytest.raises(CutoffInsufficient):
        h_sc_bessel(params, DriveParams(amplitude=2.0), 0.0, SeriesCutoffs(p_max=1))


def test_c_number_forms_carry_the_shift():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.2)
    hyperbolic = h_hyperbolic_sc(params, 2.5, 0.0, 0.3)
    normal = h_normal_ordered_sc(params, 2.5, 0.0, 0.3)
    bessel = h_sc_bessel(params, DriveParams(amplitude=0.5), 0.3)
    assert np.allclose(hyperbolic, -0.04 * IDENTITY_2 + bessel)
    assert np.allclose(normal, -0.04 * IDENTITY_2 + math.exp(-0.5 * 0.16) * bessel)


def test_renormalized_frequencies():
    params = ModelParams(omega=1.5, omega0=1.0, lam=0.25)
    assert renormalized_freq_sc(params, DriveParams(amplitude=0.0)) == 1.5
    assert renormalized_freq_q(params, 0) == pytest.approx(1.5 * math.exp(-0.125))
    with pytest.raises(ValueError):
        renormalized_freq_q(params, -1)


# ========== QUANTUM MATRICES ==========


def test_h_q_uncoupled_spectrum():
    params = ModelParams(omega=0.8, omega0=1.0, lam=0.0)
    diagonal = np.diag(h_q(params, Truncation(N=3)).entries).real
    assert np.allclose(diagonal, [0.4, -0.4, 1.4, 0.6, 2.4, 1.6, 3.4, 2.6])


def test_h_q_coupling_element():
    trunc = Truncation(N=5)
    entries = h_q(COUPLED, trunc).entries
    # <1, -z| lambda sigma_x a^dag |0, +z> = lambda
    assert entries[3, 0] == pytest.approx(COUPLED.lam)
    assert entries[2, 0] == 0.0


@pytest.mark.parametrize("n,k", [(0, 0), (3, 0), (2, 1), (5, 3), (12, 6), (20, 2)])
def test_transformed_element_matches_conjugation(n, k):
    params = ModelParams(omega=1.1, omega0=0.8, lam=0.24)
    reference = oracles.block(oracles.transformed_by_conjugation(params, Truncation(N=80)), n, k)
    assert _max_abs(h_q_transformed_element(n, k, params).full() - reference) <= 1.0e-9


def test_transformed_element_rejects_negative():
    with pytest.raises(ValueError):
        h_q_transformed_element(-1, 0, COUPLED)


@pytest.mark.parametrize("n,k,t", [(0, 0, 0.0), (4, 0, 1.3), (3, 1, 0.7), (10, 4, 2.2), (20, 6, 5.9)])
def test_normal_ordered_series_matches_closed_form(n, k, t):
    series = h_q_bessel_series_element(n, k, t, COUPLED)
    shift = -COUPLED.lam**2 / COUPLED.omega0 if k == 0 else 0.0
    closed = shift * IDENTITY_2 + h_q_rot_fock_element(n, k, t, COUPLED)
    assert _max_abs(series - closed) <= 1.0e-10


def test_normal_ordered_series_truncated_too_early():
    with pytest.raises(CutoffInsufficient):
        h_q_bessel_series_element(10, 1, 0.0, COUPLED, SeriesCutoffs(l_max=1))


def test_rotating_frame_is_zero_alpha_displacement():
    t = 0.9
    assert np.array_equal(h_q_rotating(COUPLED, t, WIDE).entries, h_q_displaced(COUPLED, 0.0, t, WIDE).entries)


def test_displaced_matrix_matches_conjugation():
    alpha, t = 1.2 * cmath.exp(0.5j), 1.4
    m = 2 * (WIDE.reliable_max + 1)
    d = np.kron(oracles.displacement_expm(alpha, WIDE), IDENTITY_2)
    conjugated = d.conj().T @ h_q_rotating(COUPLED, t, WIDE).entries @ d
    direct = h_q_displaced(COUPLED, alpha, t, WIDE).entries
    assert _max_abs(conjugated[:m, :m] - direct[:m, :m]) <= 1.0e-9


def test_displaced_matrix_needs_room():
    with pytest.raises(TruncationTooSmall):
        h_q_displaced(COUPLED, 3.0, 0.0, Truncation(N=20))


# ========== DISPLACED-BASIS ELEMENTS ==========


@pytest.mark.parametrize(
    "n,k,alpha,t",
    [
        (0, 0, 1.1 * cmath.exp(0.3j), 0.9),
        (2, 1, 1.1 * cmath.exp(0.3j), 0.9),
        (5, 3, 2.0, 3.3),
        (3, -2, 0.6j, 1.7),
        (8, 5, 2.7 * cmath.exp(-2.0j), 4.4),
    ],
)
def test_displaced_element_matches_conjugation(n, k, alpha, t):
    params = ModelParams(omega=0.7, omega0=1.0, lam=0.2)
    trunc = oracles.oracle_truncation(max(n, n + k), abs(k), abs(alpha))
    closed = h_q_displaced_bessel_element(n, k, alpha, t, params).full()
    reference = oracles.displaced_conjugation_element(params, n, k, alpha, t, trunc)
    assert _max_abs(closed - reference) <= 1.0e-7


def test_displaced_element_at_reference_point():
    # chi = 0.3, conjugation of H_q on N = 80
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.3)
    closed = h_q_displaced_bessel_element(1, 2, 2.0 + 1.0j, 0.7, params).full()
    reference = oracles.displaced_conjugation_element(params, 1, 2, 2.0 + 1.0j, 0.7, Truncation(N=80))
    assert _max_abs(closed - reference) <= 1.0e-7


def test_displaced_harmonics_need_alpha():
    with pytest.raises(AlphaZero):
        displaced_harmonics(1, 0.0, COUPLED)


def test_displaced_element_hermitian_reflection():
    up = h_q_displaced_bessel_element(2, 3, 1.5, 0.4, COUPLED)
    down = h_q_displaced_bessel_element(5, -3, 1.5, 0.4, COUPLED)
    assert np.allclose(down.full(), up.full().conj().T)


def test_displaced_generator_assembles_elements():
    alpha, t = 1.5 * cmath.exp(0.2j), 0.8
    trunc = Truncation(N=8)
    matrix = DisplacedBasisHamiltonian(COUPLED, alpha, trunc)(t)
    assert matrix.shape == (18, 18)
    assert np.allclose(matrix, matrix.conj().T, atol=1e-14)
    for n, k in [(0, 0), (3, 0), (1, 2), (4, 4)]:
        element = h_q_displaced_bessel_element(n, k, alpha, t, COUPLED).full()
        assert np.allclose(reliable_element(matrix, n, k), element, atol=1e-13)
