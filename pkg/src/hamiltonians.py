"""
Hamiltonian representations of the semiclassical and quantum Rabi models

Explicit truncated matrices (quantum, rotating frame, displaced) and
closed-form matrix-element evaluators (transformed Fock basis,
normal-ordered series, displaced Fock basis), plus renormalized frequencies.
Spin blocks are 2x2 complex numpy arrays in the sigma_z eigenbasis.
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from .errors import AlphaZero, CutoffInsufficient, TruncationTooSmall
from .fockspace import (
    IDENTITY_2,
    SIGMA_X,
    SIGMA_Z,
    TruncatedOperator,
    ladder_operators,
    number_operator,
    tensor,
)
from .models import DriveParams, ModelParams, SeriesCutoffs, Truncation
from .specfun import bessel_j, bessel_tail_bound, laguerre, sqrt_factorial_ratio
from .utils.logger import setup_logger

logger = setup_logger(__name__)

SpinBlock = np.ndarray


@dataclass(frozen=True)
class ElementBlock:
    """scalar * I_2 + spin"""

    scalar: complex
    spin: SpinBlock

    def full(self) -> SpinBlock:
        return self.scalar * IDENTITY_2 + self.spin

    def dagger(self) -> "ElementBlock":
        return ElementBlock(complex(np.conj(self.scalar)), self.spin.conj().T)


def _minus_sigma_x_power(p: int) -> SpinBlock:
    return IDENTITY_2 if p % 2 == 0 else -SIGMA_X


def _sigma_x_power(k: int) -> SpinBlock:
    return IDENTITY_2 if k % 2 == 0 else SIGMA_X


def _check_harmonic_tail(order: int, z: float, cutoffs: SeriesCutoffs, what: str):
    bound = bessel_tail_bound(order, z)
    if bound > cutoffs.tail_tolerance:
        logger.error(f"[CUTOFF] {what}: dropped |J_{order}({z:.4g})| bound {bound:.3e}")
        raise CutoffInsufficient(
            f"{what}: dropped Bessel order {order} at z={z:.4g} has bound {bound:.3e} "
            f"> {cutoffs.tail_tolerance:.1e}"
        )


# ========== SEMICLASSICAL ==========


def h_sc(params: ModelParams, drive: DriveParams, t: float) -> SpinBlock:
    """(Omega/2) sigma_z + 2A sigma_x cos(omega0 t + phase)"""
    return 0.5 * params.omega * SIGMA_Z + 2.0 * drive.amplitude * math.cos(
        params.omega0 * t + drive.phase
    ) * SIGMA_X


def u_sc(drive: DriveParams, params: ModelParams, t: float) -> SpinBlock:
    """exp[-i (2A/omega0) sigma_x sin(omega0 t + phase)], the Omega = 0 propagator"""
    theta = 2.0 * drive.amplitude / params.omega0 * math.sin(params.omega0 * t + drive.phase)
    return math.cos(theta) * IDENTITY_2 - 1j * math.sin(theta) * SIGMA_X


def _bessel_brace(z: float, angle: float, p_max: int) -> SpinBlock:
    """J_0 + sum_p (-sigma_x)^p J_p(z) [e^{ip angle} + (-1)^p e^{-ip angle}]"""
    brace = bessel_j(0, z) * IDENTITY_2
    for p in range(1, p_max + 1):
        jp = bessel_j(p, z)
        if jp == 0.0:
            continue
        weight = np.exp(1j * p * angle) + (-1) ** p * np.exp(-1j * p * angle)
        brace = brace + jp * weight * _minus_sigma_x_power(p)
    return brace


def h_sc_bessel(
    params: ModelParams,
    drive: DriveParams,
    t: float,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> SpinBlock:
    """
    Semiclassical Hamiltonian in the frame of u_sc, expanded in harmonics

        (Omega/2) sigma_z [J_0(z) + sum_p (-sigma_x)^p J_p(z)
                           (e^{ip(w t + phase)} + (-1)^p e^{-ip(w t + phase)})]

    with z = 4A/omega0.

    Raises:
        CutoffInsufficient: dropped harmonics exceed the tail tolerance
    """
    cutoffs = cutoffs or SeriesCutoffs()
    z = 4.0 * drive.amplitude / params.omega0
    p_max = cutoffs.harmonics_for(z)
    _check_harmonic_tail(p_max + 1, z, cutoffs, "h_sc_bessel")
    brace = _bessel_brace(z, params.omega0 * t + drive.phase, p_max)
    return 0.5 * params.omega * SIGMA_Z @ brace


def h_hyperbolic_sc(
    params: ModelParams,
    alpha_mag: float,
    phase: float,
    t: float,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> SpinBlock:
    """c-number replacement of the spin-rotation form: carries -lambda^2/omega0"""
    drive = DriveParams(amplitude=params.lam * alpha_mag, phase=phase)
    shift = -params.lam**2 / params.omega0
    return shift * IDENTITY_2 + h_sc_bessel(params, drive, t, cutoffs)


def h_normal_ordered_sc(
    params: ModelParams,
    alpha_mag: float,
    phase: float,
    t: float,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> SpinBlock:
    """c-number replacement of the normal-ordered form: Omega terms carry e^{-chi^2/2}"""
    drive = DriveParams(amplitude=params.lam * alpha_mag, phase=phase)
    shift = -params.lam**2 / params.omega0
    damping = math.exp(-0.5 * params.chi**2)
    return shift * IDENTITY_2 + damping * h_sc_bessel(params, drive, t, cutoffs)


def renormalized_freq_sc(params: ModelParams, drive: DriveParams) -> float:
    """Omega J_0(4A/omega0)"""
    return params.omega * bessel_j(0, 4.0 * drive.amplitude / params.omega0)


def renormalized_freq_q(params: ModelParams, n: int) -> float:
    """Omega e^{-chi^2/2} L_n(chi^2)"""
    if n < 0:
        raise ValueError("n >= 0")
    chi2 = params.chi**2
    return params.omega * math.exp(-0.5 * chi2) * laguerre(n, 0, chi2)


# ========== QUANTUM MATRICES ==========


def h_q(params: ModelParams, trunc: Truncation) -> TruncatedOperator:
    """omega0 a^dag a + (Omega/2) sigma_z + lambda sigma_x (a^dag + a)"""
    lower, upper = ladder_operators(trunc)
    field_id = np.eye(trunc.dim)
    entries = (
        params.omega0 * np.kron(number_operator(trunc).entries, IDENTITY_2)
        + 0.5 * params.omega * np.kron(field_id, SIGMA_Z)
        + params.lam * np.kron(lower.entries + upper.entries, SIGMA_X)
    )
    return TruncatedOperator(entries, trunc, "full", hermitian=True)


def h_q_rotating(params: ModelParams, t: float, trunc: Truncation) -> TruncatedOperator:
    """(Omega/2) sigma_z + lambda sigma_x (e^{i w t} a^dag + e^{-i w t} a)"""
    return h_q_displaced(params, 0.0, t, trunc)


def h_q_displaced(params: ModelParams, alpha: complex, t: float, trunc: Truncation) -> TruncatedOperator:
    """
    D^dag(alpha) [rotating-frame H_q(t)] D(alpha)

        (Omega/2) sigma_z + lambda sigma_x (e^{iwt} alpha* + e^{-iwt} alpha)
        + lambda sigma_x (e^{iwt} a^dag + e^{-iwt} a)
    """
    alpha = complex(alpha)
    if abs(alpha) ** 2 > trunc.N / 4.0:
        raise TruncationTooSmall(f"|alpha|^2 = {abs(alpha) ** 2:.4g} > N/4 = {trunc.N / 4.0:.4g}")
    rot = np.exp(1j * params.omega0 * t)
    lower, upper = ladder_operators(trunc)
    classical = 2.0 * (rot.conjugate() * alpha).real
    field = rot * upper.entries + rot.conjugate() * lower.entries
    entries = (
        np.kron(np.eye(trunc.dim), 0.5 * params.omega * SIGMA_Z + params.lam * classical * SIGMA_X)
        + params.lam * np.kron(field, SIGMA_X)
    )
    return TruncatedOperator(entries, trunc, "full", hermitian=True)


# ========== FOCK-BASIS ELEMENTS ==========


def _transformed_prefactor(n: int, k: int, params: ModelParams) -> float:
    """(Omega/2) e^{-chi^2/2} (-chi)^k sqrt(n!/(n+k)!) L_n^k(chi^2)"""
    chi = params.chi
    if k > 0 and chi == 0.0:
        return 0.0
    return (
        0.5
        * params.omega
        * math.exp(-0.5 * chi * chi)
        * (-chi) ** k
        * sqrt_factorial_ratio(n, k)
        * laguerre(n, k, chi * chi)
    )


def h_q_transformed_element(n: int, k: int, params: ModelParams) -> ElementBlock:
    """<n+k| D^dag H_q D |n> for D = D(-(lambda/omega0) sigma_x)"""
    if n < 0 or k < 0:
        raise ValueError(f"h_q_transformed_element needs n, k >= 0 (got {n}, {k})")
    scalar = n * params.omega0 - params.lam**2 / params.omega0 if k == 0 else 0.0
    spin = _transformed_prefactor(n, k, params) * SIGMA_Z @ _sigma_x_power(k)
    return ElementBlock(scalar, spin)


def h_q_rot_fock_element(n: int, k: int, t: float, params: ModelParams) -> SpinBlock:
    """Rotating-frame spin part: transformed element times e^{i k omega0 t}"""
    if n < 0 or k < 0:
        raise ValueError(f"h_q_rot_fock_element needs n, k >= 0 (got {n}, {k})")
    phase = np.exp(1j * k * params.omega0 * t)
    return phase * _transformed_prefactor(n, k, params) * SIGMA_Z @ _sigma_x_power(k)


def _normal_ordered_log_term(l: int, n: int, k: int, log_chi: float) -> float:
    # log |chi^{2l+k}/(l!(l+k)!) * sqrt(n!(n+k)!)/(n-l)!|
    return (
        (2 * l + k) * log_chi
        - math.lgamma(l + 1)
        - math.lgamma(l + k + 1)
        + 0.5 * (math.lgamma(n + 1) + math.lgamma(n + k + 1))
        - math.lgamma(n - l + 1)
    )


def h_q_bessel_series_element(
    n: int,
    k: int,
    t: float,
    params: ModelParams,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> SpinBlock:
    """
    Rotating-frame Fock element by direct summation of the normal-ordered series

    Only the p = k harmonic of a^dag^{l+p} a^l has a nonzero <n+k|...|n>
    element, and that sum is finite (l <= n). The lowering family
    a^dag^l a^{l+p} never connects n to n+k for k >= 0 except at p = 0,
    which is counted once. Includes the constant -lambda^2/omega0 at k = 0.

    Raises:
        CutoffInsufficient: p_max < k with a non-negligible dropped harmonic,
            or l_max < n with a non-negligible next term
    """
    if n < 0 or k < 0:
        raise ValueError(f"h_q_bessel_series_element needs n, k >= 0 (got {n}, {k})")
    cutoffs = cutoffs or SeriesCutoffs()
    chi = params.chi
    shift = -params.lam**2 / params.omega0 if k == 0 else 0.0
    half_omega = 0.5 * params.omega

    if chi == 0.0:
        spin = half_omega * SIGMA_Z if k == 0 else np.zeros((2, 2), dtype=complex)
        return shift * IDENTITY_2 + spin

    z = 2.0 * chi * math.sqrt(n + k)
    p_max = cutoffs.harmonics_for(z)
    if k > p_max:
        _check_harmonic_tail(k, z, cutoffs, "normal-ordered series harmonic")
        return shift * IDENTITY_2 + np.zeros((2, 2), dtype=complex)

    l_top = n if cutoffs.l_max is None else min(n, cutoffs.l_max)
    log_chi = math.log(chi)
    total = 0.0
    for l in range(l_top + 1):
        total += (-1) ** l * math.exp(_normal_ordered_log_term(l, n, k, log_chi))
    if l_top < n:
        nxt = math.exp(_normal_ordered_log_term(l_top + 1, n, k, log_chi))
        if nxt > cutoffs.tail_tolerance * max(1.0, abs(total)):
            raise CutoffInsufficient(
                f"normal-ordered series cut at l_max={l_top} drops a term of size {nxt:.3e}"
            )

    phase = np.exp(1j * k * params.omega0 * t)
    spin = (
        half_omega
        * math.exp(-0.5 * chi * chi)
        * total
        * phase
        * SIGMA_Z
        @ _minus_sigma_x_power(k)
    )
    return shift * IDENTITY_2 + spin


# ========== DISPLACED-BASIS ELEMENTS ==========


def displaced_harmonics(
    k: int,
    alpha: complex,
    params: ModelParams,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> np.ndarray:
    """
    Fourier coefficients C_p (p = -p_max..p_max) of the displaced-element brace

        brace(t) = sum_p C_p e^{i p omega0 t}
        C_0  = sigma_z u^k J_k(z)
        C_+p = sigma_z (-sigma_x)^p (-1)^k conj(u)^{p-k} J_{p-k}(z)
        C_-p = sigma_z (-sigma_x)^p (-1)^p u^{p+k} J_{p+k}(z)

    with u = alpha/|alpha|, z = 4 lambda |alpha| / omega0.

    Returns:
        Array of shape (2 p_max + 1, 2, 2), index p + p_max
    """
    alpha = complex(alpha)
    if alpha == 0:
        raise AlphaZero("displaced-basis elements need alpha != 0; use the Fock-basis evaluators")
    cutoffs = cutoffs or SeriesCutoffs()
    mag = abs(alpha)
    u = alpha / mag
    z = 4.0 * params.lam * mag / params.omega0
    p_max = cutoffs.harmonics_for(z, k)
    if p_max + 1 - k < 1:
        raise CutoffInsufficient(f"p_max={p_max} too small for k={k}")
    _check_harmonic_tail(p_max + 1 - k, z, cutoffs, "displaced harmonics")

    coeffs = np.zeros((2 * p_max + 1, 2, 2), dtype=complex)
    coeffs[p_max] = u**k * bessel_j(k, z) * SIGMA_Z
    sign_k = (-1) ** k
    for p in range(1, p_max + 1):
        spin = SIGMA_Z @ _minus_sigma_x_power(p)
        coeffs[p_max + p] = sign_k * np.conj(u) ** (p - k) * bessel_j(p - k, z) * spin
        coeffs[p_max - p] = (-1) ** p * u ** (p + k) * bessel_j(p + k, z) * spin
    return coeffs


def _brace_at(coeffs: np.ndarray, omega0: float, t: float) -> SpinBlock:
    p_max = (coeffs.shape[0] - 1) // 2
    phases = np.exp(1j * omega0 * t * np.arange(-p_max, p_max + 1))
    return np.tensordot(phases, coeffs, axes=1)


def h_q_displaced_bessel_element(
    n: int,
    k: int,
    alpha: complex,
    t: float,
    params: ModelParams,
    cutoffs: Optional[SeriesCutoffs] = None,
) -> ElementBlock:
    """
    <alpha, n+k| H(t) |alpha, n> in the displaced Fock basis (rotating frame)

    scalar = -lambda^2/omega0 for k = 0; spin = transformed prefactor times the
    harmonic brace. Negative k goes through the Hermitian reflection
    H^{n, n+k} = (H^{n+k, n})^dag.

    Raises:
        AlphaZero: alpha == 0
        CutoffInsufficient: harmonic tail above tolerance
    """
    if k < 0:
        if n + k < 0:
            raise ValueError(f"n + k must be >= 0 (got n={n}, k={k})")
        return h_q_displaced_bessel_element(n + k, -k, alpha, t, params, cutoffs).dagger()
    if n < 0:
        raise ValueError("n >= 0")
    coeffs = displaced_harmonics(k, alpha, params, cutoffs)
    scalar = -params.lam**2 / params.omega0 if k == 0 else 0.0
    spin = _transformed_prefactor(n, k, params) * _brace_at(coeffs, params.omega0, t)
    return ElementBlock(scalar, spin)


class DisplacedBasisHamiltonian:
    """
    Coefficient generator M(t) on displaced levels 0..N_d

    i dc/dt = M(t) c, M assembled from the displaced-basis elements with the
    harmonics precomputed once per photon-transition order k.
    """

    def __init__(
        self,
        params: ModelParams,
        alpha: complex,
        trunc: Truncation,
        cutoffs: Optional[SeriesCutoffs] = None,
        negligible: float = 1.0e-18,
    ):
        self.params = params
        self.alpha = complex(alpha)
        self.trunc = trunc
        self.cutoffs = cutoffs or SeriesCutoffs()
        size = trunc.dim
        self._shift = -params.lam**2 / params.omega0
        self._orders: Dict[int, tuple] = {}
        for k in range(size):
            levels = np.arange(size - k)
            prefactors = np.array([_transformed_prefactor(int(n), k, params) for n in levels])
            if k > 0 and np.max(np.abs(prefactors)) < negligible:
                continue
            field = np.zeros((size, size))
            field[levels + k, levels] = prefactors
            self._orders[k] = (field, displaced_harmonics(k, self.alpha, params, self.cutoffs))
        logger.debug(
            f"[DISPLACED] alpha={self.alpha}, N_d={trunc.N}, orders kept={sorted(self._orders)}"
        )

    @property
    def dim(self) -> int:
        return 2 * self.trunc.dim

    def __call__(self, t: float) -> np.ndarray:
        lower = np.zeros((self.dim, self.dim), dtype=complex)
        diagonal = self._shift * np.eye(self.dim, dtype=complex)
        for k, (field, coeffs) in self._orders.items():
            block = np.kron(field, _brace_at(coeffs, self.params.omega0, t))
            if k == 0:
                diagonal += block
            else:
                lower += block
        return diagonal + lower + lower.conj().T


def reliable_element(op: Union[TruncatedOperator, np.ndarray], n: int, k: int) -> SpinBlock:
    """2x2 block <n+k| op |n> of a full-space matrix"""
    entries = op.entries if isinstance(op, TruncatedOperator) else np.asarray(op)
    row, col = 2 * (n + k), 2 * n
    return entries[row : row + 2, col : col + 2]
