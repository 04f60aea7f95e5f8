"""
Special functions used by every closed-form matrix element

Bessel functions of the first kind (integer order, real argument),
associated Laguerre polynomials, factorial ratios, Jacobi-Anger partial sums
and the Laguerre -> Bessel asymptotic correspondence.
All functions are pure; the Bessel core is memoized.
"""

import math
from functools import lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from .config import settings
from .errors import SeriesNotConverged, SpecialFunctionOverflow
from .models import SeriesControl
from .utils.logger import setup_logger

logger = setup_logger(__name__)

AsymptoticVariant = Literal["plain", "szego"]

# Miller recurrence rescaling thresholds
_BIG = 1.0e10
_BIG_INV = 1.0e-10


# ========== BESSEL ==========


def _bessel_series(p: int, z: float, control: SeriesControl) -> float:
    """Power series sum_m (-1)^m (z/2)^(2m+p) / (m! (m+p)!)"""
    half = 0.5 * z
    log_first = p * math.log(half) - math.lgamma(p + 1)
    if log_first < -745.0:
        return 0.0
    term = math.exp(log_first)
    total = term
    q = -half * half
    quiet = 0
    for m in range(1, control.max_terms + 1):
        term *= q / (m * (m + p))
        total += term
        if abs(term) < control.tail_tolerance * abs(total):
            quiet += 1
            if quiet == 3:
                return total
        else:
            quiet = 0
    logger.error(f"[BESSEL] series for J_{p}({z}) not converged in {control.max_terms} terms")
    raise SeriesNotConverged(f"J_{p}({z}): tail bound not met within {control.max_terms} terms")


def _bessel_miller(p: int, z: float) -> float:
    """Downward recurrence normalized by J_0 + 2 sum_k J_2k = 1"""
    top = max(p, int(math.ceil(z)))
    start = 2 * ((top + 20 + int(math.sqrt(160.0 * top))) // 2)
    two_over_z = 2.0 / z
    j_next, j_cur = 0.0, 1.0
    value = 0.0
    even_sum = 0.0
    add = False
    for j in range(start, 0, -1):
        j_prev = j * two_over_z * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if abs(j_cur) > _BIG:
            j_cur *= _BIG_INV
            j_next *= _BIG_INV
            value *= _BIG_INV
            even_sum *= _BIG_INV
        if add:
            even_sum += j_cur
        add = not add
        if j == p:
            value = j_next
    norm = 2.0 * even_sum - j_cur
    if p == 0:
        value = j_cur
    result = value / norm
    if not math.isfinite(result):
        raise SpecialFunctionOverflow(f"J_{p}({z}): recurrence left the representable range")
    return result


@lru_cache(maxsize=65536)
def _bessel_core(p: int, z: float, max_terms: int, tail_tolerance: float) -> float:
    # p >= 0, z > 0
    if 0.25 * z * z <= 0.5 * (p + 1):
        return _bessel_series(p, z, SeriesControl(max_terms=max_terms, tail_tolerance=tail_tolerance))
    return _bessel_miller(p, z)


def bessel_j(p: int, z: float, control: Optional[SeriesControl] = None) -> float:
    """
    Bessel function of the first kind J_p(z), integer order, real argument

    Small arguments use the power series; larger ones Miller's downward
    recurrence. Negative orders and arguments use J_{-p} = (-1)^p J_p and
    J_p(-z) = (-1)^p J_p(z).

    Raises:
        SpecialFunctionOverflow: argument outside the supported range
        SeriesNotConverged: series tail bound not met within max_terms
    """
    p = int(p)
    z = float(z)
    if not math.isfinite(z) or abs(z) > settings.bessel_max_argument:
        raise SpecialFunctionOverflow(f"J_{p}({z}): argument outside supported range")
    sign = 1.0
    if p < 0:
        p = -p
        if p % 2:
            sign = -sign
    if z < 0:
        z = -z
        if p % 2:
            sign = -sign
    if z == 0.0:
        return 1.0 if p == 0 else 0.0
    control = control or SeriesControl()
    return sign * _bessel_core(p, z, control.max_terms, control.tail_tolerance)


def bessel_sequence(m_max: int, z: float) -> np.ndarray:
    """[J_0(z), ..., J_{m_max}(z)]"""
    return np.array([bessel_j(m, z) for m in range(m_max + 1)])


def bessel_tail_bound(m: int, z: float) -> float:
    """Upper bound (|z|/2)^m / m! on |J_m(z)|, evaluated in log space"""
    if m <= 0:
        return 1.0
    if z == 0:
        return 0.0
    return math.exp(m * math.log(0.5 * abs(z)) - math.lgamma(m + 1))


def jacobi_anger(z: float, theta: float, p_max: int) -> complex:
    """Partial sum of exp(i z sin theta) = sum_p J_p(z) e^{i p theta}, |p| <= p_max"""
    if p_max < 0:
        raise ValueError("p_max >= 0")
    total = complex(bessel_j(0, z))
    for p in range(1, p_max + 1):
        jp = bessel_j(p, z)
        total += jp * (np.exp(1j * p * theta) + (-1) ** p * np.exp(-1j * p * theta))
    return complex(total)


# ========== LAGUERRE ==========


def laguerre(n: int, k: int, x: float) -> float:
    """
    Associated Laguerre polynomial L_n^k(x)

    Upward three-term recurrence in n at fixed k:
        (j+1) L_{j+1} = (2j+1+k-x) L_j - (j+k) L_{j-1}
    x = 0 returns the binomial C(n+k, n). Plain float arithmetic, no
    compensated summation: at the small arguments 4 lambda^2/omega0^2 of the
    matrix elements the error stays at rounding level up to n = 1e4.
    """
    if n < 0 or k < 0:
        raise ValueError(f"laguerre needs n >= 0, k >= 0 (got n={n}, k={k})")
    x = float(x)
    if x == 0.0:
        return float(math.comb(n + k, n))
    if n == 0:
        return 1.0
    l_prev, l_cur = 1.0, 1.0 + k - x
    for j in range(1, n):
        l_prev, l_cur = l_cur, ((2 * j + 1 + k - x) * l_cur - (j + k) * l_prev) / (j + 1)
        if not math.isfinite(l_cur):
            raise SpecialFunctionOverflow(f"L_{n}^{k}({x}) overflowed at degree {j + 1}")
    return l_cur


def sqrt_factorial_ratio(n: int, k: int) -> float:
    """sqrt(n! / (n+k)!)"""
    if n < 0 or k < 0:
        raise ValueError(f"sqrt_factorial_ratio needs n, k >= 0 (got {n}, {k})")
    if k == 0:
        return 1.0
    if k > 4096:
        return math.exp(0.5 * (math.lgamma(n + 1) - math.lgamma(n + k + 1)))
    falling = math.perm(n + k, k)  # exact (n+k)!/n!
    shift = max(0, falling.bit_length() - 64)
    shift += shift % 2
    mantissa = falling >> shift
    return math.ldexp(math.sqrt(1.0 / mantissa), -shift // 2)


def displacement_amplitudes(abs_beta: float, n_max: int) -> np.ndarray:
    """
    Table h[n, k] = e^{-x/2} |beta|^k sqrt(n!/(n+k)!) L_n^k(x), x = |beta|^2

    Filled for n + k <= n_max by the normalized recurrence in n, vectorized
    over k, so no factorials are formed.
    """
    size = n_max + 1
    table = np.zeros((size, size))
    if abs_beta == 0.0:
        table[:, 0] = 1.0
        return table

    x = abs_beta * abs_beta
    k = np.arange(size, dtype=float)
    h_prev = np.exp(-0.5 * x + k * math.log(abs_beta) - 0.5 * gammaln(k + 1.0))
    table[0, :] = h_prev
    if n_max == 0:
        return table
    h_cur = (1.0 + k - x) * h_prev / np.sqrt(k + 1.0)
    table[1, : size - 1] = h_cur[: size - 1]
    for n in range(1, n_max):
        h_next = ((2 * n + 1 + k - x) * h_cur - np.sqrt(n * (n + k)) * h_prev) / np.sqrt(
            (n + 1) * (n + k + 1)
        )
        h_prev, h_cur = h_cur, h_next
        width = size - (n + 1)
        table[n + 1, :width] = h_cur[:width]
    if not np.all(np.isfinite(table)):
        raise SpecialFunctionOverflow(f"displacement amplitudes for |beta|={abs_beta} overflowed")
    return table


# ========== ASYMPTOTICS ==========


def laguerre_bessel_asymptotic(
    n: int, p: int, x: float, variant: AsymptoticVariant = "plain"
) -> Tuple[float, float, float]:
    """
    Compare n^{-p} L_n^p(x/n) with its Bessel limit at finite n

    plain:  x^{-p/2} J_p(2 sqrt(x))
    szego:  the same limit with the effective degree n + (p+1)/2 and the
            exact factorial and exponential prefactors kept

    Returns:
        (lhs, rhs, abs_err)
    """
    if n < 1 or p < 0 or not x > 0:
        raise ValueError(f"laguerre_bessel_asymptotic needs n >= 1, p >= 0, x > 0 (got {n}, {p}, {x})")
    lhs = laguerre(n, p, x / n) / float(n) ** p
    if variant == "plain":
        rhs = x ** (-0.5 * p) * bessel_j(p, 2.0 * math.sqrt(x))
    elif variant == "szego":
        eff = n + 0.5 * (p + 1)
        log_scale = (
            x / (2.0 * n)
            - 0.5 * p * math.log(x)
            - 0.5 * p * math.log(n)
            - 0.5 * p * math.log(eff)
            + math.lgamma(n + p + 1)
            - math.lgamma(n + 1)
        )
        rhs = math.exp(log_scale) * bessel_j(p, 2.0 * math.sqrt(eff * x / n))
    else:
        raise ValueError(f"Unknown asymptotic variant: {variant}")
    return lhs, rhs, abs(lhs - rhs)
