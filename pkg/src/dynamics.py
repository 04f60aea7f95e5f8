"""
Time evolution, observables and trajectory comparisons

Propagation is by per-step unitary exponentials (scipy.linalg.expm):
    cfm4     - fourth-order commutator-free two-exponential step
    midpoint - single exponential at the step midpoint
Time-independent Hamiltonians reuse one exact step propagator.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import expm

from .config import settings
from .errors import DimensionMismatch, StepLimitExceeded
from .fockspace import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    TruncatedOperator,
    coherent_state,
    displacement_matrix,
    product_state,
    rotating_frame_phases,
    spin_displacement,
    spin_state,
)
from .hamiltonians import DisplacedBasisHamiltonian, h_q, h_q_rotating, h_sc, u_sc
from .models import DriveParams, ModelParams, PropagationConfig, SeriesCutoffs, Truncation
from .utils.logger import setup_logger

logger = setup_logger(__name__)

HamiltonianProvider = Callable[[float], Union[np.ndarray, TruncatedOperator]]

_SQRT3 = math.sqrt(3.0)
_CFM4_NODES = (0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0)
_CFM4_WEIGHTS = (0.25 + _SQRT3 / 6.0, 0.25 - _SQRT3 / 6.0)


@dataclass(frozen=True)
class StaticHamiltonian:
    """Time-independent provider; propagate precomputes its step propagator"""

    matrix: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        return self.matrix


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (samples, dim)
    observables: Dict[str, np.ndarray] = field(default_factory=dict)
    dt: float = 0.0
    halvings: int = 0
    scheme: str = "cfm4"

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.observables["norm"] - 1.0)))


class ComparisonResult(NamedTuple):
    traj_q: Trajectory
    traj_sc: Trajectory
    max_inversion_gap: float


def _matrix(h: Union[np.ndarray, TruncatedOperator]) -> np.ndarray:
    return h.entries if isinstance(h, TruncatedOperator) else np.asarray(h, dtype=complex)


def fidelity(psi: np.ndarray, phi: np.ndarray) -> float:
    return float(abs(np.vdot(psi, phi)) ** 2)


# ========== OBSERVABLES ==========


def default_observables(dim: int) -> Dict[str, np.ndarray]:
    """Bloch components (and photon_number on spin (x) field spaces)"""
    if dim == 2:
        return {"sigma_z": SIGMA_Z, "sigma_x": SIGMA_X, "sigma_y": SIGMA_Y}
    levels = dim // 2
    field_id = np.eye(levels)
    return {
        "sigma_z": np.kron(field_id, SIGMA_Z),
        "sigma_x": np.kron(field_id, SIGMA_X),
        "sigma_y": np.kron(field_id, SIGMA_Y),
        "photon_number": np.kron(np.diag(np.arange(levels, dtype=float)), IDENTITY_2),
    }


def _measure(states: np.ndarray, operators: Dict[str, np.ndarray]) -> Dict[str, np.ndarray]:
    values = {
        name: np.einsum("ti,ij,tj->t", states.conj(), op, states).real for name, op in operators.items()
    }
    values["norm"] = np.linalg.norm(states, axis=1)
    return values


# ========== PROPAGATION ==========


def _output_grid(config: PropagationConfig) -> np.ndarray:
    sample_dt = config.sample_dt or config.dt_initial
    count = max(1, int(math.ceil(config.t_end / sample_dt - 1.0e-9)))
    return np.linspace(0.0, config.t_end, count + 1)


def _step(h_of_t: HamiltonianProvider, psi: np.ndarray, t: float, dt: float, scheme: str) -> np.ndarray:
    if scheme == "midpoint":
        return expm(-1j * dt * _matrix(h_of_t(t + 0.5 * dt))) @ psi
    h1 = _matrix(h_of_t(t + _CFM4_NODES[0] * dt))
    h2 = _matrix(h_of_t(t + _CFM4_NODES[1] * dt))
    a1, a2 = _CFM4_WEIGHTS
    psi = expm(-1j * dt * (a1 * h1 + a2 * h2)) @ psi
    return expm(-1j * dt * (a2 * h1 + a1 * h2)) @ psi


def _checked_step(
    h_of_t: HamiltonianProvider, psi: np.ndarray, t: float, dt: float, config: PropagationConfig
) -> Optional[np.ndarray]:
    """
    One step; with error_tolerance set, also two half steps

    The half-step result is kept. None when the two differ by more than
    error_tolerance.
    """
    full = _step(h_of_t, psi, t, dt, config.scheme)
    if config.error_tolerance is None:
        return full
    half = 0.5 * dt
    fine = _step(h_of_t, _step(h_of_t, psi, t, half, config.scheme), t + half, half, config.scheme)
    if np.linalg.norm(fine - full) > config.error_tolerance:
        return None
    return fine


def _run(
    h_of_t: HamiltonianProvider,
    psi0: np.ndarray,
    times: np.ndarray,
    dt: float,
    config: PropagationConfig,
) -> Tuple[Optional[np.ndarray], str]:
    """States on the output grid, or None and the reason the step was rejected"""
    states = np.empty((len(times), psi0.shape[0]), dtype=complex)
    states[0] = psi0
    psi = psi0
    static_cache: Dict[int, np.ndarray] = {}
    for j in range(1, len(times)):
        start, interval = times[j - 1], times[j] - times[j - 1]
        substeps = max(1, int(math.ceil(interval / dt - 1.0e-9)))
        dt_eff = interval / substeps
        if isinstance(h_of_t, StaticHamiltonian):
            if substeps not in static_cache:
                static_cache[substeps] = expm(-1j * interval * h_of_t.matrix)
            psi = static_cache[substeps] @ psi
        else:
            for s in range(substeps):
                psi = _checked_step(h_of_t, psi, start + s * dt_eff, dt_eff, config)
                if psi is None:
                    return None, f"local error above {config.error_tolerance:.1e}"
        states[j] = psi
        if abs(np.linalg.norm(psi) - 1.0) > config.norm_tolerance:
            return None, f"norm drift above {config.norm_tolerance:.1e}"
    return states, ""


def propagate(
    h_of_t: HamiltonianProvider,
    psi0: np.ndarray,
    config: PropagationConfig,
    observables: Optional[Dict[str, np.ndarray]] = None,
) -> Trajectory:
    """
    Solve i dpsi/dt = H(t) psi on the output grid

    The step is halved and the run restarted when the norm drifts past
    norm_tolerance, or when error_tolerance is set and a step-doubling
    estimate exceeds it; at most max_step_halvings times.

    Raises:
        ValueError: psi0 not normalized within 1e-10
        StepLimitExceeded: tolerance unreachable
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1.0e-10:
        raise ValueError("initial state must be normalized within 1e-10")
    times = _output_grid(config)
    dt = config.dt_initial
    reason = ""
    for halving in range(config.max_step_halvings + 1):
        states, reason = _run(h_of_t, psi0, times, dt, config)
        if states is not None:
            operators = observables if observables is not None else default_observables(psi0.shape[0])
            logger.debug(f"[PROPAGATE] dim={psi0.shape[0]} dt={dt:.3g} samples={len(times)}")
            return Trajectory(times, states, _measure(states, operators), dt, halving, config.scheme)
        logger.warning(f"[PROPAGATE] {reason} at dt={dt:.3g}; halving")
        dt *= 0.5
    logger.error(f"[PROPAGATE] gave up after {config.max_step_halvings} halvings")
    raise StepLimitExceeded(f"{reason}, still after {config.max_step_halvings} halvings")


def reversed_hamiltonian(h_of_t: HamiltonianProvider, t_end: float) -> HamiltonianProvider:
    """s -> -H(t_end - s); propagating psi(t_end) under it for t_end recovers psi(0)"""
    if isinstance(h_of_t, StaticHamiltonian):
        return StaticHamiltonian(-h_of_t.matrix)
    return lambda s: -_matrix(h_of_t(t_end - s))


# ========== ANALYTIC AND FRAME MAPS ==========


def spin_conditional_displaced_evolution(
    params: ModelParams, beta: complex, spin0: np.ndarray, t: float, trunc: Truncation
) -> np.ndarray:
    """
    Exact Omega = 0 state at time t from |beta> (x) spin0 under H_q

    Per sigma_x eigenvalue s, with g = lambda/omega0 and
    gamma = (beta + s g) e^{-i omega0 t}:
        e^{i omega0 g^2 t} e^{-i s g Im beta} e^{i s g Im gamma} |gamma - s g>
    """
    beta = complex(beta)
    g = params.lam / params.omega0
    psi = np.zeros(2 * trunc.dim, dtype=complex)
    for s, label in ((1, "+x"), (-1, "-x")):
        axis = spin_state(label)
        weight = np.vdot(axis, spin0)
        if weight == 0:
            continue
        gamma = (beta + s * g) * np.exp(-1j * params.omega0 * t)
        phase = np.exp(1j * params.omega0 * g * g * t - 1j * s * g * beta.imag + 1j * s * g * gamma.imag)
        psi += weight * phase * product_state(axis, coherent_state(gamma - s * g, trunc))
    return psi


def displaced_to_lab(
    c: np.ndarray, alpha: complex, t: float, params: ModelParams, trunc: Truncation
) -> np.ndarray:
    """psi_lab = D(-(lambda/omega0) sigma_x) e^{-i omega0 t a^dag a} D(alpha) c"""
    coeffs = np.asarray(c, dtype=complex).reshape(-1, 2)
    levels = coeffs.shape[0]
    if levels > trunc.dim:
        raise ValueError(f"displaced space with {levels} levels does not fit lab truncation N={trunc.N}")
    field = displacement_matrix(alpha, trunc).entries[:, :levels] @ coeffs
    field = rotating_frame_phases(t, params.omega0, trunc)[:, None] * field
    return spin_displacement(params, trunc).entries @ field.reshape(-1)


# ========== RUNS ==========


def displaced_coefficient_dynamics(
    params: ModelParams,
    alpha: complex,
    n0: int,
    config: PropagationConfig,
    trunc: Truncation,
    cutoffs: Optional[SeriesCutoffs] = None,
    spin0: Optional[np.ndarray] = None,
    generator: Optional[DisplacedBasisHamiltonian] = None,
) -> Trajectory:
    """
    Coefficients c_m(t) on |alpha, m> driven by the displaced-basis elements

    Observables add population_n0 = sum over spin of |c_{n0}|^2. A prebuilt
    generator must be the one for (params, alpha, trunc).
    """
    if not 0 <= n0 <= trunc.reliable_max:
        raise ValueError(f"n0={n0} must lie in the reliable block 0..{trunc.reliable_max}")
    spin0 = spin_state("+z") if spin0 is None else np.asarray(spin0, dtype=complex)
    field0 = np.zeros(trunc.dim, dtype=complex)
    field0[n0] = 1.0
    if generator is None:
        generator = DisplacedBasisHamiltonian(params, alpha, trunc, cutoffs)
    elif generator.trunc.N != trunc.N:
        raise DimensionMismatch(f"generator has N_d={generator.trunc.N}, run needs {trunc.N}")
    elif generator.alpha != complex(alpha) or generator.params != params:
        raise ValueError("prebuilt generator was made for another alpha or model")
    operators = default_observables(2 * trunc.dim)
    level = np.zeros(trunc.dim)
    level[n0] = 1.0
    operators["population_n0"] = np.kron(np.diag(level), IDENTITY_2)
    logger.info(f"[PROPAGATE] displaced basis alpha={complex(alpha)}, n0={n0}, N_d={trunc.N}")
    return propagate(generator, product_state(spin0, field0), config, operators)


def leakage_onset_time(traj: Trajectory, threshold: float = 0.01) -> Optional[float]:
    """First sample time at which 1 - population_n0 exceeds threshold"""
    leaked = 1.0 - traj.observables["population_n0"]
    hits = np.nonzero(leaked > threshold)[0]
    return float(traj.times[hits[0]]) if hits.size else None


def oscillation_envelope(signal: np.ndarray, window: int) -> np.ndarray:
    """Half peak-to-peak amplitude over consecutive windows of samples"""
    signal = np.asarray(signal, dtype=float)
    count = len(signal) // window
    if count < 1:
        raise ValueError("window longer than the signal")
    chunks = signal[: count * window].reshape(count, window)
    return 0.5 * (chunks.max(axis=1) - chunks.min(axis=1))


def collapse_ratio(traj: Trajectory, window_time: float, observable: str = "sigma_z") -> float:
    """Envelope of the last window over that of the first"""
    step = traj.times[1] - traj.times[0]
    window = max(2, int(round(window_time / step)))
    envelope = oscillation_envelope(traj.observables[observable], window)
    if envelope[0] == 0:
        return 0.0
    return float(envelope[-1] / envelope[0])


def compare_quantum_semiclassical(
    params: ModelParams,
    alpha: complex,
    config: PropagationConfig,
    spin0: Optional[np.ndarray] = None,
    trunc: Optional[Truncation] = None,
) -> ComparisonResult:
    """
    Lab-frame quantum run from |alpha> (x) spin0 against the semiclassical
    run with A = lambda |alpha|, phase = -arg alpha
    """
    alpha = complex(alpha)
    spin0 = spin_state("+z") if spin0 is None else np.asarray(spin0, dtype=complex)
    trunc = trunc or Truncation.for_coherent(abs(alpha))
    psi_q = product_state(spin0, coherent_state(alpha, trunc))
    traj_q = propagate(StaticHamiltonian(h_q(params, trunc).entries), psi_q, config)

    drive = DriveParams.from_coherent(params, alpha)
    traj_sc = propagate(lambda t: h_sc(params, drive, t), spin0, config)
    gap = float(np.max(np.abs(traj_q.observables["sigma_z"] - traj_sc.observables["sigma_z"])))
    logger.info(f"[COMPARE] lambda={params.lam:.4g} |alpha|={abs(alpha):.4g} N={trunc.N} gap={gap:.3e}")
    return ComparisonResult(traj_q, traj_sc, gap)


def inversion_gap_sweep(
    params: ModelParams,
    amplitude: float,
    lambda_sequence: Sequence[float],
    config: PropagationConfig,
    spin0: Optional[np.ndarray] = None,
) -> List[ComparisonResult]:
    """compare_quantum_semiclassical at fixed A for each lambda, in sequence order"""

    def run(lam: float) -> ComparisonResult:
        return compare_quantum_semiclassical(params.with_coupling(lam), amplitude / lam, config, spin0)

    with ThreadPoolExecutor(max_workers=settings.max_workers) as pool:
        return list(pool.map(run, lambda_sequence))


def frame_consistency(
    params: ModelParams,
    alpha: complex,
    n0: int,
    config: PropagationConfig,
    displaced_trunc: Truncation,
    lab_trunc: Truncation,
    cutoffs: Optional[SeriesCutoffs] = None,
    spin0: Optional[np.ndarray] = None,
) -> Dict[str, float]:
    """
    Minimum pairwise fidelity between lab, rotating-frame and displaced-basis runs

    All start from D(-(lambda/omega0) sigma_x) |alpha, n0> (x) spin0 and are
    compared in the lab frame.
    """
    spin0 = spin_state("+z") if spin0 is None else np.asarray(spin0, dtype=complex)
    displaced = displaced_coefficient_dynamics(params, alpha, n0, config, displaced_trunc, cutoffs, spin0)
    psi0 = displaced_to_lab(displaced.states[0], alpha, 0.0, params, lab_trunc)

    lab = propagate(StaticHamiltonian(h_q(params, lab_trunc).entries), psi0, config)
    rotating = propagate(lambda t: h_q_rotating(params, t, lab_trunc), psi0, config)

    worst = {"lab_rotating": 1.0, "lab_displaced": 1.0, "rotating_displaced": 1.0}
    for j, t in enumerate(lab.times):
        from_rotating = rotating_frame_phases(t, params.omega0, lab_trunc).repeat(2) * rotating.states[j]
        from_displaced = displaced_to_lab(displaced.states[j], alpha, t, params, lab_trunc)
        worst["lab_rotating"] = min(worst["lab_rotating"], fidelity(lab.states[j], from_rotating))
        worst["lab_displaced"] = min(worst["lab_displaced"], fidelity(lab.states[j], from_displaced))
        worst["rotating_displaced"] = min(worst["rotating_displaced"], fidelity(from_rotating, from_displaced))
    logger.info(f"[FRAMES] min fidelities {worst}")
    return worst


def omega_zero_oracle_gap(params: ModelParams, drive: DriveParams, traj: Trajectory, spin0: np.ndarray) -> float:
    """max over samples of |psi(t) - u_sc(t) u_sc(0)^dag psi0| for a semiclassical Omega = 0 run"""
    start = u_sc(drive, params, 0.0).conj().T @ np.asarray(spin0, dtype=complex)
    gaps = [np.max(np.abs(traj.states[j] - u_sc(drive, params, t) @ start)) for j, t in enumerate(traj.times)]
    return float(max(gaps))
