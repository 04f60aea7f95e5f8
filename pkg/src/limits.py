"""
Semiclassical limiting procedures

- displaced-basis recipe: lambda -> 0, |alpha| -> inf with lambda |alpha| = A fixed
- Fock-basis route: lambda = A / sqrt(n), n -> inf
- transformation-operator limit: D^dag(alpha) D~(t) D(alpha) -> u_sc(t) (x) I
- agreement of the two reduction paths (limit-then-transform vs transform-then-limit)
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import settings
from .errors import DegenerateFit, TruncationTooSmall
from .fockspace import PROJ_MINUS_X, PROJ_PLUS_X, displacement_matrix
from .hamiltonians import (
    SpinBlock,
    h_q_displaced_bessel_element,
    h_q_rot_fock_element,
    h_sc_bessel,
    renormalized_freq_q,
    renormalized_freq_sc,
    u_sc,
)
from .models import (
    ConvergenceReport,
    ConvergenceRow,
    DriveParams,
    ModelParams,
    SeriesCutoffs,
    SweepConfig,
    Truncation,
)
from .specfun import AsymptoticVariant, bessel_j
from .utils.logger import setup_logger

logger = setup_logger(__name__)


class FockLimitPoint(NamedTuple):
    n: int
    element_value: float
    bessel_target: float
    abs_err: float


class LimitPoint(NamedTuple):
    lam: float
    deviation: float


class DiagramResult(NamedTuple):
    path1: SpinBlock
    path2: SpinBlock
    deviation: float


def max_abs(block: np.ndarray) -> float:
    return float(np.max(np.abs(block)))


def _default_times(params: ModelParams, count: int = 16) -> List[float]:
    period = 2.0 * math.pi / params.omega0
    return [period * j / count for j in range(count)]


def _spin_element(
    params: ModelParams, alpha: complex, n: int, k: int, t: float, cutoffs: SeriesCutoffs
) -> SpinBlock:
    """Spin part of the displaced element, or the Fock element when alpha = 0"""
    if alpha == 0:
        return h_q_rot_fock_element(n, k, t, params)
    return h_q_displaced_bessel_element(n, k, alpha, t, params, cutoffs).spin


# ========== DISPLACED-BASIS SWEEP ==========


def offdiag_magnitude(
    params: ModelParams,
    alpha: complex,
    n: int,
    k: int,
    t_samples: Optional[Sequence[float]] = None,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> float:
    """max over t of the max-abs entry of <alpha, n+k| H |alpha, n>"""
    cutoffs = cutoffs or SeriesCutoffs()
    times = t_samples if t_samples is not None else _default_times(params)
    return max(max_abs(_spin_element(params, alpha, n, k, t, cutoffs)) for t in times)


def fit_power_law(lambdas: Sequence[float], magnitudes: Sequence[float]) -> Tuple[float, float]:
    """
    Least-squares slope and prefactor of log(magnitude) vs log(lambda)

    Raises:
        DegenerateFit: fewer than two points or non-positive magnitudes
    """
    if len(lambdas) < 2:
        raise DegenerateFit("need at least two points for a log-log fit")
    mags = np.asarray(magnitudes, dtype=float)
    if np.any(~np.isfinite(mags)) or np.any(mags <= 1.0e-300):
        raise DegenerateFit(f"magnitudes underflow or vanish: {mags.tolist()}")
    slope, intercept = np.polyfit(np.log(np.asarray(lambdas, dtype=float)), np.log(mags), 1)
    return float(slope), float(math.exp(intercept))


def offdiag_scaling_exponent(
    params: ModelParams,
    alpha: complex,
    n: int,
    k: int,
    lambda_sequence: Sequence[float],
    t_samples: Optional[Sequence[float]] = None,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> float:
    """
    Log-log slope of the k-photon element vs lambda at fixed A

    A = params.lam * |alpha|; along the sequence alpha keeps its phase and
    |alpha| = A / lambda. The fit uses the three smallest lambda values.
    """
    if k < 1 or n < 1:
        raise ValueError(f"offdiag_scaling_exponent needs k >= 1, n >= 1 (got n={n}, k={k})")
    alpha = complex(alpha)
    amplitude = params.lam * abs(alpha)
    direction = alpha / abs(alpha) if alpha != 0 else 1.0
    lambdas = sorted(lambda_sequence)[:3]
    mags = []
    for lam in lambdas:
        point = params.with_coupling(lam)
        a_lam = direction * amplitude / lam if amplitude > 0 else 0.0
        mags.append(offdiag_magnitude(point, a_lam, n, k, t_samples, cutoffs))
    slope, _ = fit_power_law(lambdas, mags)
    return slope


def _sweep_point(
    lam: float, config: SweepConfig, params: ModelParams, times: List[float]
) -> Tuple[ConvergenceRow, Dict[int, float]]:
    point = params.with_coupling(lam)
    amplitude = config.amplitude_fixed
    alpha = amplitude / lam if amplitude > 0 else 0.0
    drive = DriveParams(amplitude=amplitude, phase=0.0)
    targets = [h_sc_bessel(point, drive, t, config.cutoffs) for t in times]

    by_order: Dict[int, float] = {}
    diag_residual = 0.0
    for n in sorted({n for n, _ in config.probe_levels}):
        for t, target in zip(times, targets):
            spin = _spin_element(point, alpha, n, 0, t, config.cutoffs)
            diag_residual = max(diag_residual, max_abs(spin - target))
    for n, k in config.probe_levels:
        if k < 1:
            continue
        mag = offdiag_magnitude(point, alpha, n, k, times, config.cutoffs)
        by_order[k] = max(by_order.get(k, 0.0), mag)

    offdiag = max(by_order.values()) if by_order else 0.0
    logger.debug(f"[SWEEP] lambda={lam:.4g} |alpha|={alpha:.4g} offdiag={offdiag:.3e} diag={diag_residual:.3e}")
    row = ConvergenceRow(lam=lam, alpha_mag=alpha, offdiag_norm=offdiag, diag_residual=diag_residual)
    return row, by_order


def semiclassical_sweep(config: SweepConfig, params: ModelParams) -> ConvergenceReport:
    """
    Displaced-basis semiclassical limit at fixed A = lambda |alpha|

    alpha is real and positive. offdiag_norm is the largest k >= 1 element
    over probes and time samples; diag_residual compares the k = 0 spin
    block with h_sc_bessel(A) (the constant -lambda^2/omega0 is excluded).
    A = 0 runs through the Fock-basis elements.
    """
    times = config.resolved_times(params.omega0)
    lambdas = list(config.lambda_sequence)
    logger.info(
        f"[SWEEP] A={config.amplitude_fixed}, {len(lambdas)} couplings, "
        f"{len(config.probe_levels)} probes, {len(times)} times"
    )

    with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
        results = list(pool.map(lambda lam: _sweep_point(lam, config, params, times), lambdas))
    results.sort(key=lambda item: -item[0].lam)

    rows = [row for row, _ in results]
    orders = sorted({k for _, by_order in results for k in by_order})
    offdiag_by_order = {k: [by_order[k] for _, by_order in results] for k in orders}

    exponents: Dict[int, float] = {}
    prefactors: Dict[int, float] = {}
    smallest = slice(-3, None)
    for k, mags in offdiag_by_order.items():
        try:
            exponents[k], prefactors[k] = fit_power_law(
                [row.lam for row in rows][smallest], mags[smallest]
            )
        except DegenerateFit as e:
            logger.warning(f"[SWEEP] no exponent for k={k}: {e}")

    return ConvergenceReport(
        amplitude=config.amplitude_fixed,
        rows=rows,
        offdiag_by_order=offdiag_by_order,
        fitted_exponents=exponents,
        fitted_prefactors=prefactors,
    )


# ========== FOCK-BASIS ROUTE ==========


def _fock_coupling(amplitude: float, n: int, k: int, variant: AsymptoticVariant) -> float:
    if variant == "plain":
        return amplitude / math.sqrt(n)
    if variant == "szego":
        return amplitude / math.sqrt(n + 0.5 * (k + 1))
    raise ValueError(f"Unknown asymptotic variant: {variant}")


def fock_limit_check(
    params: ModelParams,
    amplitude: float,
    k: int,
    n_sequence: Sequence[int],
    variant: AsymptoticVariant = "plain",
) -> List[FockLimitPoint]:
    """
    Rotating-frame Fock element with lambda = A/sqrt(n) against (Omega/2) J_k(4A/omega0)

    The Szego variant scales with the effective level n + (k+1)/2.
    params.lam is ignored; the coupling follows from A and n.
    """
    if k < 0:
        raise ValueError("k >= 0")
    if any(b <= a for a, b in zip(n_sequence, n_sequence[1:])) or min(n_sequence) < 1:
        raise ValueError("n_sequence must be increasing and >= 1")
    target = 0.5 * params.omega * bessel_j(k, 4.0 * amplitude / params.omega0)
    points = []
    for n in n_sequence:
        point = params.with_coupling(_fock_coupling(amplitude, n, k, variant))
        block = h_q_rot_fock_element(n, k, 0.0, point)
        value = float(((-1) ** k * block[0, k % 2]).real)
        points.append(FockLimitPoint(n, value, target, abs(value - target)))
    return points


def renormalized_frequency_limit(
    params: ModelParams,
    amplitude: float,
    n_sequence: Sequence[int],
    variant: AsymptoticVariant = "plain",
) -> List[Tuple[int, float, float, float]]:
    """(n, quantum frequency, semiclassical frequency, gap) with lambda = A/sqrt(n)"""
    target = renormalized_freq_sc(params, DriveParams(amplitude=amplitude))
    rows = []
    for n in n_sequence:
        quantum = renormalized_freq_q(params.with_coupling(_fock_coupling(amplitude, n, 0, variant)), n)
        rows.append((n, quantum, target, abs(quantum - target)))
    return rows


# ========== TRANSFORMATION OPERATOR ==========


def transformation_deviation(
    params: ModelParams,
    amplitude: float,
    lam: float,
    t_samples: Sequence[float],
    alpha_phase: float = 0.0,
    probe_levels: int = 10,
    trunc: Optional[Truncation] = None,
) -> float:
    """
    max over t of |D^dag(alpha) D~(t) D(alpha) - u_sc(t) (x) I|_max on levels < probe_levels

    D~(t) is the rotating-frame spin-dependent displacement with g = lambda/omega0;
    |alpha| = A/lambda with phase alpha_phase, drive phase -alpha_phase.
    """
    point = params.with_coupling(lam)
    alpha = amplitude / lam * np.exp(1j * alpha_phase)
    needed = Truncation.for_displacement(abs(alpha), probe_levels)
    if trunc is None:
        trunc = needed
    elif trunc.N < needed.N:
        raise TruncationTooSmall(f"transformation check at |alpha|={abs(alpha):.4g} needs N >= {needed.N}")
    logger.debug(f"[TRANSFORM] lambda={lam:.4g} |alpha|={abs(alpha):.4g} N={trunc.N}")

    columns = displacement_matrix(alpha, trunc).entries[:, :probe_levels]
    drive = DriveParams(amplitude=amplitude, phase=-alpha_phase)
    g = lam / params.omega0
    worst = 0.0
    for t in t_samples:
        rot = np.exp(1j * params.omega0 * t)
        plus = columns.conj().T @ (displacement_matrix(-g * rot, trunc).entries @ columns)
        minus = columns.conj().T @ (displacement_matrix(g * rot, trunc).entries @ columns)
        conjugated = np.kron(plus, PROJ_PLUS_X) + np.kron(minus, PROJ_MINUS_X)
        target = np.kron(np.eye(probe_levels), u_sc(drive, point, t))
        worst = max(worst, max_abs(conjugated - target))
    return worst


def transformation_limit_check(
    params: ModelParams,
    amplitude: float,
    lambda_sequence: Sequence[float],
    t_samples: Optional[Sequence[float]] = None,
    alpha_phase: float = 0.0,
    probe_levels: int = 10,
    trunc: Optional[Truncation] = None,
) -> List[LimitPoint]:
    """Deviation from u_sc (x) I per coupling; truncation auto-scales with |alpha|^2"""
    if not amplitude > 0:
        raise ValueError("transformation_limit_check needs A > 0")
    times = t_samples if t_samples is not None else _default_times(params, 8)
    results = []
    for lam in lambda_sequence:
        deviation = transformation_deviation(params, amplitude, lam, times, alpha_phase, probe_levels, trunc)
        logger.info(f"[TRANSFORM] lambda={lam:.4g} deviation={deviation:.3e}")
        results.append(LimitPoint(lam, deviation))
    return results


# ========== REDUCTION DIAGRAM ==========


def diagram_commutes(
    params: ModelParams,
    amplitude: float,
    lambda_small: float,
    t: float,
    cutoffs: Optional[SeriesCutoffs] = None,
    level: int = 0,
) -> DiagramResult:
    """
    path1: diagonal displaced element (scalar included) at lambda_small, |alpha| = A/lambda_small
    path2: h_sc_bessel at A, the same object the sweep uses as its diagonal target
    """
    if not lambda_small > 0:
        raise ValueError("lambda_small > 0")
    cutoffs = cutoffs or SeriesCutoffs()
    point = params.with_coupling(lambda_small)
    shift = -lambda_small**2 / params.omega0
    if amplitude > 0:
        alpha = amplitude / lambda_small
        path1 = h_q_displaced_bessel_element(level, 0, alpha, t, point, cutoffs).full()
    else:
        path1 = shift * np.eye(2) + h_q_rot_fock_element(level, 0, t, point)
    path2 = h_sc_bessel(point, DriveParams(amplitude=amplitude, phase=0.0), t, cutoffs)
    return DiagramResult(path1, path2, max_abs(path1 - path2))
