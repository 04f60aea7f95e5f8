"""
Propagation, frame maps and quantum vs semiclassical comparisons
"""

import cmath

import numpy as np
import pytest

from src.dynamics import (
    StaticHamiltonian,
    collapse_ratio,
    compare_quantum_semiclassical,
    displaced_coefficient_dynamics,
    displaced_to_lab,
    fidelity,
    frame_consistency,
    inversion_gap_sweep,
    leakage_onset_time,
    omega_zero_oracle_gap,
    oscillation_envelope,
    propagate,
    reversed_hamiltonian,
    spin_conditional_displaced_evolution,
)
from src.errors import DimensionMismatch, StepLimitExceeded
from src.fockspace import SIGMA_Z, coherent_state, displacement_matrix, product_state, spin_state
from src.hamiltonians import DisplacedBasisHamiltonian, h_q, h_sc
from src.models import DriveParams, ModelParams, PropagationConfig, Truncation

RESONANT = ModelParams(omega=1.0, omega0=1.0, lam=0.1)


# ========== PROPAGATION ==========


def test_free_precession():
    omega = 1.3
    config = PropagationConfig(t_end=10.0, dt_initial=0.01, sample_dt=0.1)
    traj = propagate(lambda t: 0.5 * omega * SIGMA_Z, spin_state("+x"), config)
    assert np.allclose(traj.observables["sigma_x"], np.cos(omega * traj.times), atol=1e-8)
    assert np.allclose(traj.observables["sigma_y"], np.sin(omega * traj.times), atol=1e-8)
    assert traj.norm_drift < 1e-12
    assert traj.halvings == 0


def test_output_grid_is_decoupled_from_step():
    config = PropagationConfig(t_end=1.0, dt_initial=0.003, sample_dt=0.25)
    traj = propagate(lambda t: SIGMA_Z, spin_state("+z"), config)
    assert np.allclose(traj.times, [0.0, 0.25, 0.5, 0.75, 1.0])
    assert traj.states.shape == (5, 2)


def test_omega_zero_semiclassical_is_exact():
    params = ModelParams(omega=0.0, omega0=1.0, lam=0.1)
    drive = DriveParams(amplitude=0.3, phase=0.4)
    config = PropagationConfig(t_end=5.0, dt_initial=0.01, sample_dt=0.05)
    spin0 = spin_state("+z")
    traj = propagate(lambda t: h_sc(params, drive, t), spin0, config)
    assert omega_zero_oracle_gap(params, drive, traj, spin0) <= 1.0e-8


def test_midpoint_scheme_tracks_cfm4():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.1)
    drive = DriveParams(amplitude=0.3)

    def provider(t):
        return h_sc(params, drive, t)

    cfm4 = propagate(provider, spin_state("+z"), PropagationConfig(t_end=5.0, dt_initial=0.01, sample_dt=0.5))
    midpoint = propagate(
        provider,
        spin_state("+z"),
        PropagationConfig(t_end=5.0, dt_initial=0.01, sample_dt=0.5, scheme="midpoint"),
    )
    assert midpoint.norm_drift < 1.0e-12
    assert np.max(np.abs(midpoint.observables["sigma_z"] - cfm4.observables["sigma_z"])) < 1.0e-3


def test_quantum_norm_conserved(rng):
    trunc = Truncation(N=30)
    psi0 = rng.normal(size=2 * trunc.dim) + 1j * rng.normal(size=2 * trunc.dim)
    psi0 /= np.linalg.norm(psi0)
    config = PropagationConfig(t_end=10.0, dt_initial=0.05, sample_dt=0.5)
    traj = propagate(StaticHamiltonian(h_q(RESONANT, trunc).entries), psi0, config)
    assert traj.norm_drift < config.norm_tolerance


def test_unnormalized_start_rejected():
    with pytest.raises(ValueError):
        propagate(lambda t: SIGMA_Z, np.array([1.0, 1.0]), PropagationConfig(t_end=1.0, dt_initial=0.1))


def test_step_limit_exceeded():
    decaying = -0.1j * np.eye(2)
    config = PropagationConfig(t_end=1.0, dt_initial=0.1, max_step_halvings=1)
    with pytest.raises(StepLimitExceeded):
        propagate(lambda t: decaying, spin_state("+z"), config)


def _strong_drive(t):
    return h_sc(RESONANT, DriveParams(amplitude=1.0), t)


def test_local_error_estimate_halves_the_step():
    coarse = PropagationConfig(
        t_end=4.0, dt_initial=0.8, sample_dt=0.8, error_tolerance=1.0e-6, max_step_halvings=8
    )
    traj = propagate(_strong_drive, spin_state("+z"), coarse)
    assert traj.halvings >= 1
    assert traj.dt < 0.8
    fine = PropagationConfig(t_end=4.0, dt_initial=0.001, sample_dt=0.8)
    reference = propagate(_strong_drive, spin_state("+z"), fine)
    assert np.max(np.abs(traj.states - reference.states)) < 1.0e-4


def test_local_error_limit_exceeded():
    config = PropagationConfig(
        t_end=4.0, dt_initial=0.8, sample_dt=0.8, error_tolerance=1.0e-14, max_step_halvings=0
    )
    with pytest.raises(StepLimitExceeded, match="local error"):
        propagate(_strong_drive, spin_state("+z"), config)


def test_error_tolerance_must_be_positive():
    with pytest.raises(ValueError):
        PropagationConfig(t_end=1.0, dt_initial=0.1, error_tolerance=0.0)


def test_time_reversal_recovers_start():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.1)
    drive = DriveParams(amplitude=0.4, phase=0.3)
    config = PropagationConfig(t_end=6.0, dt_initial=0.01, sample_dt=0.1)

    def provider(t):
        return h_sc(params, drive, t)

    forward = propagate(provider, spin_state("+x"), config)
    back = propagate(reversed_hamiltonian(provider, config.t_end), forward.states[-1], config)
    assert fidelity(back.states[-1], forward.states[0]) >= 1.0 - 1.0e-10


# ========== ANALYTIC AND FRAME MAPS ==========


def test_omega_zero_quantum_matches_spin_conditional_displacement():
    params = ModelParams(omega=0.0, omega0=1.0, lam=0.1)
    alpha = 1.5 * cmath.exp(0.4j)
    trunc = Truncation.for_coherent(abs(alpha))
    spin0 = spin_state("+z")
    psi0 = product_state(spin0, coherent_state(alpha, trunc))
    config = PropagationConfig(t_end=5.0, dt_initial=0.01, sample_dt=0.25)
    traj = propagate(StaticHamiltonian(h_q(params, trunc).entries), psi0, config)
    for state, t in zip(traj.states, traj.times):
        exact = spin_conditional_displaced_evolution(params, alpha, spin0, t, trunc)
        assert fidelity(state, exact) >= 1.0 - 1.0e-7


def test_displaced_to_lab_at_zero_coupling():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.0)
    alpha = 0.8 + 0.3j
    lab_trunc = Truncation(N=30)
    c = product_state(spin_state("+z"), np.eye(6)[2])
    psi = displaced_to_lab(c, alpha, 0.0, params, lab_trunc)
    expected = product_state(spin_state("+z"), displacement_matrix(alpha, lab_trunc).entries[:, 2])
    assert np.allclose(psi, expected, atol=1e-14)


# ========== DISPLACED-BASIS DYNAMICS ==========


def test_uncoupled_coefficients_stay_put():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.0)
    config = PropagationConfig(t_end=3.0, dt_initial=0.01, sample_dt=0.1)
    traj = displaced_coefficient_dynamics(params, 1.0, 2, config, Truncation(N=30))
    assert np.allclose(traj.observables["population_n0"], 1.0, atol=1e-12)
    assert leakage_onset_time(traj) is None


def test_semiclassical_regime_keeps_level():
    # A = lambda |alpha| = 0.5
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.001)
    config = PropagationConfig(t_end=20.0, dt_initial=0.01, sample_dt=0.1)
    traj = displaced_coefficient_dynamics(params, 500.0, 0, config, Truncation(N=20))
    assert np.min(traj.observables["population_n0"]) >= 0.999


def test_leakage_onset_earlier_for_higher_level():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.2)
    config = PropagationConfig(t_end=20.0, dt_initial=0.01, sample_dt=0.05)
    trunc = Truncation(N=30)
    ground = displaced_coefficient_dynamics(params, 2.5, 0, config, trunc)
    excited = displaced_coefficient_dynamics(params, 2.5, 5, config, trunc)
    onset_excited = leakage_onset_time(excited)
    onset_ground = leakage_onset_time(ground)
    assert onset_excited is not None
    assert onset_ground is None or onset_excited < onset_ground


def test_displaced_level_must_be_reliable():
    with pytest.raises(ValueError):
        displaced_coefficient_dynamics(
            RESONANT, 1.0, 5, PropagationConfig(t_end=1.0, dt_initial=0.1), Truncation(N=10)
        )


def test_prebuilt_generator_is_reused():
    trunc = Truncation(N=20)
    config = PropagationConfig(t_end=1.0, dt_initial=0.01, sample_dt=0.1)
    generator = DisplacedBasisHamiltonian(RESONANT, 1.5, trunc)
    built = displaced_coefficient_dynamics(RESONANT, 1.5, 0, config, trunc)
    reused = displaced_coefficient_dynamics(RESONANT, 1.5, 0, config, trunc, generator=generator)
    assert np.allclose(reused.states, built.states, atol=1.0e-14)
    with pytest.raises(DimensionMismatch):
        displaced_coefficient_dynamics(RESONANT, 1.5, 0, config, Truncation(N=30), generator=generator)
    with pytest.raises(ValueError):
        displaced_coefficient_dynamics(RESONANT, 2.0, 0, config, trunc, generator=generator)


def test_frame_consistency():
    config = PropagationConfig(t_end=3.0, dt_initial=0.005, sample_dt=0.05)
    worst = frame_consistency(RESONANT, 1.0, 1, config, Truncation(N=20), Truncation(N=40))
    assert set(worst) == {"lab_rotating", "lab_displaced", "rotating_displaced"}
    assert min(worst.values()) >= 1.0 - 1.0e-6


# ========== QUANTUM VS SEMICLASSICAL ==========


def test_zero_coupling_runs_agree():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.0)
    config = PropagationConfig(t_end=10.0, dt_initial=0.01, sample_dt=0.1)
    result = compare_quantum_semiclassical(params, 0.0, config, spin_state("+x"))
    assert result.max_inversion_gap < 1.0e-8


def test_inversion_gap_shrinks_with_coupling():
    config = PropagationConfig(t_end=30.0, dt_initial=0.01, sample_dt=0.05)
    runs = inversion_gap_sweep(RESONANT, 0.25, [0.1, 0.05, 0.025], config)
    gaps = [run.max_inversion_gap for run in runs]
    assert gaps[0] > gaps[1] > gaps[2]
    for run in runs:
        assert run.traj_q.norm_drift < 1.0e-8
        assert run.traj_sc.norm_drift < 1.0e-8


def test_oscillation_envelope():
    signal = np.tile([1.0, -1.0, 0.5, -0.5], 3)
    assert np.allclose(oscillation_envelope(signal, 4), [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        oscillation_envelope(signal, 20)


def test_quantum_collapses_semiclassical_does_not():
    params = ModelParams(omega=1.0, omega0=1.0, lam=0.5)
    config = PropagationConfig(t_end=30.0, dt_initial=0.01, sample_dt=0.05)
    result = compare_quantum_semiclassical(params, 3.0, config)
    assert collapse_ratio(result.traj_q, 5.0) < 0.25
    assert collapse_ratio(result.traj_sc, 5.0) >= 0.9
