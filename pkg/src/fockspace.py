"""
Truncated spin (x) field operator algebra

Basis convention for the full space: index = 2n + s, spin index fastest,
s = 0 is the +z eigenstate. Field operators live on levels 0..N.
"""

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.special import gammaln

from .errors import DimensionMismatch, TruncationTooSmall
from .models import ModelParams, Truncation
from .specfun import displacement_amplitudes
from .utils.logger import setup_logger

logger = setup_logger(__name__)

BASIS_ORDER = "index = 2n + s, spin fastest, s=0 is +z"

# ========== SPIN CONSTANTS ==========

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJ_PLUS_X = 0.5 * (IDENTITY_2 + SIGMA_X)
PROJ_MINUS_X = 0.5 * (IDENTITY_2 - SIGMA_X)

SpinLabel = Literal["+z", "-z", "+x", "-x"]

_SPIN_STATES = {
    "+z": np.array([1, 0], dtype=complex),
    "-z": np.array([0, 1], dtype=complex),
    "+x": np.array([1, 1], dtype=complex) / math.sqrt(2.0),
    "-x": np.array([1, -1], dtype=complex) / math.sqrt(2.0),
}


class DisplacedFockLabel(NamedTuple):
    """|alpha, n> = D(alpha)|n>"""

    alpha: complex
    n: int


@dataclass(frozen=True)
class TruncatedOperator:
    """
    Dense operator on the truncated field space (dim N+1) or on
    spin (x) field (dim 2(N+1)). Entries are stored read-only.
    """

    entries: np.ndarray
    trunc: Truncation
    space: Literal["full", "field"] = "full"
    hermitian: bool = False

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex)
        expected = self.trunc.dim if self.space == "field" else 2 * self.trunc.dim
        if entries.shape != (expected, expected):
            raise DimensionMismatch(
                f"{self.space} operator needs shape {(expected, expected)}, got {entries.shape}"
            )
        if self.hermitian:
            scale = max(np.max(np.abs(entries)), 1.0e-300)
            skew = np.max(np.abs(entries - entries.conj().T))
            if skew > 1.0e-12 * scale:
                raise ValueError(f"operator flagged Hermitian has |H - H^dag|_max = {skew:.3e}")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def basis_order(self) -> str:
        return BASIS_ORDER

    def dagger(self) -> "TruncatedOperator":
        return TruncatedOperator(self.entries.conj().T, self.trunc, self.space, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, TruncatedOperator):
            if other.space != self.space or other.trunc.N != self.trunc.N:
                raise DimensionMismatch("operators act on different spaces")
            return TruncatedOperator(self.entries @ other.entries, self.trunc, self.space)
        vec = np.asarray(other)
        if vec.shape[0] != self.dim:
            raise DimensionMismatch(f"vector of length {vec.shape[0]} on dim {self.dim}")
        return self.entries @ vec

    def reliable_count(self) -> int:
        """Number of leading basis indices inside the reliable block"""
        levels = self.trunc.reliable_max + 1
        return levels if self.space == "field" else 2 * levels

    def reliable_block(self) -> np.ndarray:
        m = self.reliable_count()
        return self.entries[:m, :m]


def _field_matrix(field: Union[TruncatedOperator, np.ndarray]) -> np.ndarray:
    if isinstance(field, TruncatedOperator):
        if field.space != "field":
            raise DimensionMismatch("expected a field-space operator")
        return field.entries
    return np.asarray(field, dtype=complex)


def tensor(
    spin: np.ndarray,
    field: Union[TruncatedOperator, np.ndarray],
    trunc: Optional[Truncation] = None,
    hermitian: bool = False,
) -> TruncatedOperator:
    """entry[2n+s, 2m+t] = spin[s, t] * field[n, m]"""
    spin = np.asarray(spin, dtype=complex)
    if spin.shape != (2, 2):
        raise DimensionMismatch(f"spin factor must be 2x2, got {spin.shape}")
    field_entries = _field_matrix(field)
    if trunc is None:
        if not isinstance(field, TruncatedOperator):
            raise DimensionMismatch("a raw field matrix needs an explicit Truncation")
        trunc = field.trunc
    if field_entries.shape != (trunc.dim, trunc.dim):
        raise DimensionMismatch(
            f"field factor must be {trunc.dim}x{trunc.dim}, got {field_entries.shape}"
        )
    return TruncatedOperator(np.kron(field_entries, spin), trunc, "full", hermitian)


# ========== FIELD OPERATORS ==========


def ladder_operators(trunc: Truncation) -> Tuple[TruncatedOperator, TruncatedOperator]:
    """(a, a^dag) with <n-1|a|n> = sqrt(n)"""
    lower = np.diag(np.sqrt(np.arange(1, trunc.dim, dtype=float)), k=1).astype(complex)
    return (
        TruncatedOperator(lower, trunc, "field"),
        TruncatedOperator(lower.conj().T, trunc, "field"),
    )


def number_operator(trunc: Truncation) -> TruncatedOperator:
    return TruncatedOperator(np.diag(np.arange(trunc.dim, dtype=float)), trunc, "field", True)


def quadratures(trunc: Truncation) -> Tuple[TruncatedOperator, TruncatedOperator]:
    """x = (a + a^dag)/sqrt 2, p = i(a^dag - a)/sqrt 2"""
    lower, upper = ladder_operators(trunc)
    x = (lower.entries + upper.entries) / math.sqrt(2.0)
    p = 1j * (upper.entries - lower.entries) / math.sqrt(2.0)
    return (
        TruncatedOperator(x, trunc, "field", True),
        TruncatedOperator(p, trunc, "field", True),
    )


def displacement_matrix(beta: complex, trunc: Truncation) -> TruncatedOperator:
    """
    D(beta) = exp(beta a^dag - beta* a) from its closed-form elements

        <n+k|D|n> = h[n, k] e^{i k arg beta}
        <n|D|n+k> = h[n, k] (-e^{-i arg beta})^k

    with h from specfun.displacement_amplitudes.

    Raises:
        TruncationTooSmall: |beta|^2 > N/4
    """
    beta = complex(beta)
    size = trunc.dim
    mag = abs(beta)
    if mag * mag > trunc.N / 4.0:
        logger.error(f"Displacement |beta|^2={mag * mag:.4g} exceeds N/4 for N={trunc.N}")
        raise TruncationTooSmall(f"|beta|^2 = {mag * mag:.4g} > N/4 = {trunc.N / 4.0:.4g}")
    if mag == 0.0:
        return TruncatedOperator(np.eye(size, dtype=complex), trunc, "field")

    table = displacement_amplitudes(mag, trunc.N)
    phase = beta / mag
    down = -np.conj(phase)
    entries = np.zeros((size, size), dtype=complex)
    for k in range(size):
        n = np.arange(size - k)
        h = table[: size - k, k]
        entries[n + k, n] = h * phase**k
        if k:
            entries[n, n + k] = h * down**k
    return TruncatedOperator(entries, trunc, "field")


def spin_displacement(
    params: ModelParams, trunc: Truncation, sign: int = 1, t: Optional[float] = None
) -> TruncatedOperator:
    """
    D(-sign (lambda/omega0) sigma_x) = P_+x (x) D(-sign g) + P_-x (x) D(+sign g)

    With t given, the rotating-frame version: g -> g e^{i omega0 t}.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    g = sign * params.lam / params.omega0
    if t is not None:
        g = g * np.exp(1j * params.omega0 * t)
    if abs(g) ** 2 > trunc.N / 4.0:
        raise TruncationTooSmall(f"(lambda/omega0)^2 = {abs(g) ** 2:.4g} > N/4")
    d_plus = displacement_matrix(-g, trunc).entries
    d_minus = displacement_matrix(g, trunc).entries
    entries = np.kron(d_plus, PROJ_PLUS_X) + np.kron(d_minus, PROJ_MINUS_X)
    return TruncatedOperator(entries, trunc, "full")


# ========== STATES ==========


def number_state(n: int, trunc: Truncation) -> np.ndarray:
    if not 0 <= n <= trunc.N:
        raise TruncationTooSmall(f"Fock level {n} outside 0..{trunc.N}")
    vec = np.zeros(trunc.dim, dtype=complex)
    vec[n] = 1.0
    return vec


def spin_state(label: SpinLabel) -> np.ndarray:
    try:
        return _SPIN_STATES[label].copy()
    except KeyError:
        raise ValueError(f"Unknown spin state: {label}")


def product_state(spin: np.ndarray, field: np.ndarray) -> np.ndarray:
    """|field> (x) |spin> in the 2n + s ordering"""
    return np.kron(np.asarray(field, dtype=complex), np.asarray(spin, dtype=complex))


def coherent_state(alpha: complex, trunc: Truncation, tail_tolerance: float = 1.0e-12) -> np.ndarray:
    """
    Field amplitudes of |alpha> on levels 0..N

    Raises:
        TruncationTooSmall: Poisson weight beyond N exceeds tail_tolerance
    """
    alpha = complex(alpha)
    mag = abs(alpha)
    if mag == 0.0:
        return number_state(0, trunc)
    n = np.arange(trunc.dim, dtype=float)
    log_mag = -0.5 * mag * mag + n * math.log(mag) - 0.5 * gammaln(n + 1.0)
    vec = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    tail = 1.0 - float(np.sum(np.abs(vec) ** 2))
    if tail > tail_tolerance:
        logger.error(f"Coherent state |alpha|={mag:.4g} loses weight {tail:.3e} at N={trunc.N}")
        raise TruncationTooSmall(f"coherent state tail {tail:.3e} > {tail_tolerance:.1e}; raise N")
    return vec


def rotating_frame_phases(t: float, omega0: float, trunc: Truncation) -> np.ndarray:
    """Diagonal of exp(-i omega0 t a^dag a)"""
    return np.exp(-1j * omega0 * t * np.arange(trunc.dim, dtype=float))


def expectation(op: Union[TruncatedOperator, np.ndarray], psi: np.ndarray) -> complex:
    matrix = op.entries if isinstance(op, TruncatedOperator) else np.asarray(op)
    return complex(np.vdot(psi, matrix @ psi))


def quadrature_dispersion(label: DisplacedFockLabel, trunc: Truncation) -> Tuple[float, float]:
    """
    Variances of x and p in D(alpha)|n>

    Raises:
        TruncationTooSmall: state reaches into the guard band
    """
    alpha, n = complex(label.alpha), int(label.n)
    if n > trunc.reliable_max:
        raise TruncationTooSmall(f"level {n} above reliable_max {trunc.reliable_max}")
    state = displacement_matrix(alpha, trunc).entries[:, n]
    top_weight = float(np.sum(np.abs(state[trunc.reliable_max + 1 :]) ** 2))
    if top_weight > 1.0e-14:
        raise TruncationTooSmall(f"|alpha={alpha}, n={n}> has weight {top_weight:.2e} in the guard band")
    x_op, p_op = quadratures(trunc)
    variances = []
    for op in (x_op.entries, p_op.entries):
        mean = np.vdot(state, op @ state).real
        second = np.vdot(op @ state, op @ state).real
        variances.append(float(second - mean * mean))
    return variances[0], variances[1]
