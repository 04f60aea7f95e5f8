"""
Identity checks - closed-form evaluators against independent oracles
"""

import math
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence

import numpy as np

from .. import oracles
from ..config import settings
from ..fockspace import (
    DisplacedFockLabel,
    SIGMA_Z,
    coherent_state,
    displacement_matrix,
    quadrature_dispersion,
    spin_displacement,
)
from ..hamiltonians import (
    h_q_bessel_series_element,
    h_q_displaced,
    h_q_displaced_bessel_element,
    h_q_rot_fock_element,
    h_q_rotating,
    h_q_transformed_element,
    h_sc,
    h_sc_bessel,
    renormalized_freq_sc,
    u_sc,
)
from ..models import DriveParams, ModelParams, Truncation
from ..specfun import bessel_j, jacobi_anger, laguerre, sqrt_factorial_ratio
from ..utils.logger import setup_logger

logger = setup_logger(__name__)

Residual = Callable[[np.random.Generator, int], float]

# reliable levels 0..20 with a wide guard band
_WIDE = Truncation(N=60, guard_band=40)


class IdentityCheck(NamedTuple):
    name: str
    description: str
    tolerance: float
    residual: Residual


CHECKS: List[IdentityCheck] = []


def identity_check(name: str, description: str, tolerance: float):
    """Register a residual function under name"""

    def register(fn: Residual) -> Residual:
        CHECKS.append(IdentityCheck(name, description, tolerance, fn))
        return fn

    return register


def _random_params(rng: np.random.Generator, chi_max: float = 0.8) -> ModelParams:
    omega0 = rng.uniform(0.5, 2.0)
    return ModelParams(
        omega=rng.uniform(0.2, 2.0),
        omega0=omega0,
        lam=rng.uniform(0.0, chi_max) * omega0,
    )


def _random_alpha(rng: np.random.Generator, low: float, high: float) -> complex:
    return complex(rng.uniform(low, high) * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi)))


def _period_time(rng: np.random.Generator, params: ModelParams) -> float:
    return rng.uniform(0.0, 2.0 * math.pi / params.omega0)


def _max_abs(block: np.ndarray) -> float:
    return float(np.max(np.abs(block)))


# ========== SPECIAL FUNCTIONS ==========


@identity_check("bessel_series", "J_p(z) against the exact rational power series, relative", 1.0e-12)
def _bessel_series(rng, samples):
    worst = 0.0
    for _ in range(samples):
        p, z = int(rng.integers(-40, 41)), rng.uniform(0.0, 50.0)
        ref = oracles.bessel_series_exact(p, z)
        worst = max(worst, abs(bessel_j(p, z) - ref) / max(abs(ref), 1.0e-2))
    return worst


@identity_check("bessel_scipy", "J_p(z) against scipy.special.jv, relative", 1.0e-12)
def _bessel_scipy(rng, samples):
    worst = 0.0
    for _ in range(samples):
        p, z = int(rng.integers(0, 41)), rng.uniform(0.0, 50.0)
        ref = oracles.bessel_scipy(p, z)
        worst = max(worst, abs(bessel_j(p, z) - ref) / max(abs(ref), 1.0e-2))
    return worst


@identity_check("laguerre_exact", "L_n^k(x) against the exact finite sum, relative with a bound floor", 1.0e-11)
def _laguerre_exact(rng, samples):
    worst = 0.0
    for _ in range(samples):
        n, k, x = int(rng.integers(0, 51)), int(rng.integers(0, 11)), rng.uniform(-20.0, 20.0)
        ref = oracles.laguerre_exact(n, k, x)
        err = abs(laguerre(n, k, x) - ref)
        worst = max(worst, err / oracles.laguerre_scale(n, k, x, ref))
    return worst


@identity_check("jacobi_anger", "sum_p J_p(z) e^{ip theta} = exp(i z sin theta)", 1.0e-10)
def _jacobi_anger(rng, samples):
    worst = 0.0
    for _ in range(samples):
        z, theta = rng.uniform(0.0, 30.0), rng.uniform(0.0, 2.0 * math.pi)
        total = jacobi_anger(z, theta, int(math.ceil(z)) + 25)
        worst = max(worst, abs(total - np.exp(1j * z * math.sin(theta))))
    return worst


@identity_check("sqrt_factorial_ratio", "sqrt(n!/(n+k)!) against exact integers, relative", 1.0e-14)
def _sqrt_factorial_ratio(rng, samples):
    worst = 0.0
    for _ in range(samples):
        n, k = int(rng.integers(0, 301)), int(rng.integers(0, 61))
        ref = oracles.sqrt_factorial_ratio_exact(n, k)
        worst = max(worst, abs(sqrt_factorial_ratio(n, k) - ref) / ref)
    return worst


# ========== FIELD OPERATORS ==========


@identity_check("displacement_expm", "closed-form D(beta) against expm of the generator", 1.0e-10)
def _displacement_expm(rng, samples):
    m = _WIDE.reliable_max + 1
    worst = 0.0
    for _ in range(samples):
        beta = _random_alpha(rng, 0.0, 1.5)
        closed = displacement_matrix(beta, _WIDE).reliable_block()
        worst = max(worst, _max_abs(closed - oracles.displacement_expm(beta, _WIDE)[:m, :m]))
    return worst


@identity_check("displacement_inverse", "D(beta) D(-beta) = I on the reliable block", 1.0e-7)
def _displacement_inverse(rng, samples):
    m = _WIDE.reliable_max + 1
    worst = 0.0
    for _ in range(samples):
        beta = _random_alpha(rng, 0.0, 1.5)
        product = displacement_matrix(beta, _WIDE).entries @ displacement_matrix(-beta, _WIDE).entries
        worst = max(worst, _max_abs(product[:m, :m] - np.eye(m)))
    return worst


@identity_check("coherent_state", "|alpha> = D(alpha)|0>", 1.0e-12)
def _coherent_state(rng, samples):
    worst = 0.0
    for _ in range(samples):
        alpha = _random_alpha(rng, 0.0, 3.0)
        trunc = Truncation.for_coherent(abs(alpha))
        column = displacement_matrix(alpha, trunc).entries[:, 0]
        worst = max(worst, _max_abs(coherent_state(alpha, trunc) - column))
    return worst


@identity_check("quadrature_dispersion", "Var x = Var p = n + 1/2 in |alpha, n>", 1.0e-6)
def _quadrature_dispersion(rng, samples):
    trunc = Truncation(N=200)
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(0, 11))
        var_x, var_p = quadrature_dispersion(DisplacedFockLabel(_random_alpha(rng, 0.0, 3.0), n), trunc)
        worst = max(worst, abs(var_x - (n + 0.5)), abs(var_p - (n + 0.5)))
    return worst


@identity_check("spin_displacement_expm", "rotating-frame D(-g sigma_x) against expm", 1.0e-10)
def _spin_displacement_expm(rng, samples):
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        t = _period_time(rng, params)
        closed = spin_displacement(params, _WIDE, t=t).reliable_block()
        m = closed.shape[0]
        worst = max(worst, _max_abs(closed - oracles.spin_displacement_expm(params, _WIDE, t)[:m, :m]))
    return worst


# ========== HAMILTONIAN REPRESENTATIONS ==========


@identity_check("transformed_conjugation", "Fock elements of D^dag H_q D against expm conjugation", 1.0e-9)
def _transformed_conjugation(rng, samples):
    trunc = Truncation(N=80)
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        n, k = int(rng.integers(0, 21)), int(rng.integers(0, 7))
        closed = h_q_transformed_element(n, k, params).full()
        reference = oracles.block(oracles.transformed_by_conjugation(params, trunc), n, k)
        worst = max(worst, _max_abs(closed - reference))
    return worst


@identity_check("normal_ordered_series", "normal-ordered series against rotating-frame Fock elements", 1.0e-10)
def _normal_ordered_series(rng, samples):
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        n, k = int(rng.integers(0, 21)), int(rng.integers(0, 7))
        t = _period_time(rng, params)
        series = h_q_bessel_series_element(n, k, t, params)
        if k == 0:
            series = series + params.lam**2 / params.omega0 * np.eye(2)
        worst = max(worst, _max_abs(series - h_q_rot_fock_element(n, k, t, params)))
    return worst


@identity_check("displaced_conjugation", "displaced Fock elements against expm conjugation", 1.0e-7)
def _displaced_conjugation(rng, samples):
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        n, k = int(rng.integers(0, 21)), int(rng.integers(0, 7))
        alpha = _random_alpha(rng, 0.1, 3.0)
        t = _period_time(rng, params)
        trunc = oracles.oracle_truncation(n, k, abs(alpha))
        closed = h_q_displaced_bessel_element(n, k, alpha, t, params).full()
        reference = oracles.displaced_conjugation_element(params, n, k, alpha, t, trunc)
        worst = max(worst, _max_abs(closed - reference))
    return worst


@identity_check("displaced_frame_matrix", "D^dag(alpha) H_rot D(alpha) against the displaced matrix", 1.0e-9)
def _displaced_frame_matrix(rng, samples):
    m = 2 * (_WIDE.reliable_max + 1)
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        alpha = _random_alpha(rng, 0.0, 1.5)
        t = _period_time(rng, params)
        d = np.kron(oracles.displacement_expm(alpha, _WIDE), np.eye(2))
        conjugated = d.conj().T @ h_q_rotating(params, t, _WIDE).entries @ d
        direct = h_q_displaced(params, alpha, t, _WIDE).entries
        worst = max(worst, _max_abs(conjugated[:m, :m] - direct[:m, :m]))
    return worst


def _random_drive(rng: np.random.Generator, high: float) -> DriveParams:
    return DriveParams(amplitude=rng.uniform(0.0, high), phase=rng.uniform(0.0, 2.0 * math.pi))


@identity_check("semiclassical_frame", "u_sc^dag H_sc u_sc - i u_sc^dag du_sc/dt = Bessel form", 1.0e-8)
def _semiclassical_frame(rng, samples):
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        drive = _random_drive(rng, 1.5)
        t = _period_time(rng, params)
        u = u_sc(drive, params, t)
        derivative = oracles.central_difference(lambda s: u_sc(drive, params, s), t)
        frame = u.conj().T @ h_sc(params, drive, t) @ u - 1j * u.conj().T @ derivative
        worst = max(worst, _max_abs(frame - h_sc_bessel(params, drive, t)))
    return worst


@identity_check("omega_zero_propagator", "i du_sc/dt = H_sc u_sc at Omega = 0", 1.0e-8)
def _omega_zero_propagator(rng, samples):
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng).model_copy(update={"omega": 0.0})
        drive = _random_drive(rng, 1.5)
        t = _period_time(rng, params)
        derivative = oracles.central_difference(lambda s: u_sc(drive, params, s), t)
        worst = max(worst, _max_abs(1j * derivative - h_sc(params, drive, t) @ u_sc(drive, params, t)))
    return worst


@identity_check("renormalized_frequency_sc", "period average of the Bessel form = (Omega/2) J_0 sigma_z", 1.0e-12)
def _renormalized_frequency_sc(rng, samples):
    worst = 0.0
    for _ in range(samples):
        params = _random_params(rng)
        drive = _random_drive(rng, 1.0)
        period = 2.0 * math.pi / params.omega0
        average = oracles.gauss_time_average(lambda t: h_sc_bessel(params, drive, t), period, nodes=128)
        target = 0.5 * renormalized_freq_sc(params, drive) * SIGMA_Z
        worst = max(worst, _max_abs(average - target))
    return worst


# ========== SUITE ==========


def run_identity_checks(
    samples: int = settings.oracle_samples,
    seed: int = settings.default_seed,
    tolerance_scale: float = 1.0,
    names: Optional[Sequence[str]] = None,
) -> List[Dict[str, object]]:
    """
    Run the registered checks (all, or those in `names`) on `samples` random points

    Each check draws from its own child of SeedSequence(seed), so results
    do not depend on which other checks run.

    Returns:
        One dict per check: name, description, samples, max_residual,
        tolerance, passed
    """
    children = np.random.SeedSequence(seed).spawn(len(CHECKS))
    results = []
    for check, child in zip(CHECKS, children):
        if names is not None and check.name not in names:
            continue
        residual = check.residual(np.random.default_rng(child), samples)
        tolerance = check.tolerance * tolerance_scale
        passed = bool(residual <= tolerance)
        log = logger.info if passed else logger.warning
        log(f"[CHECK] {check.name}: residual {residual:.3e} (tolerance {tolerance:.1e}) passed={passed}")
        results.append(
            {
                "name": check.name,
                "description": check.description,
                "samples": samples,
                "max_residual": residual,
                "tolerance": tolerance,
                "passed": passed,
            }
        )
    return results


def evaluate_checks(results: List[Dict[str, object]]) -> Dict[str, object]:
    """
    Summarize check results

    Returns:
        Dict with total, passed_count, all_passed and first_failure (name or None)
    """
    if not results:
        logger.error("No check results to evaluate")
        raise ValueError("no check results")
    passed = [r for r in results if r["passed"]]
    failures = [r["name"] for r in results if not r["passed"]]
    summary = {
        "total": len(results),
        "passed_count": len(passed),
        "all_passed": not failures,
        "first_failure": failures[0] if failures else None,
    }
    logger.info(f"Check evaluation: {len(passed)}/{len(results)} passed")
    return summary
