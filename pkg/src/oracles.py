"""
Independent reference computations

Matrix exponentials of truncated generators, exact rational finite sums
and scipy special functions. Nothing here shares code paths with the
closed-form evaluators it is used to check.
"""

import math
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm
from scipy.special import eval_genlaguerre, jv

from .fockspace import IDENTITY_2, SIGMA_X, SIGMA_Z
from .models import ModelParams, Truncation


def _lower(trunc: Truncation) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, trunc.dim, dtype=float)), k=1).astype(complex)


# ========== SPECIAL FUNCTIONS ==========


def bessel_series_exact(p: int, z: float, cutoff: float = 1.0e-40) -> float:
    """J_p(z) from the power series in exact rational arithmetic"""
    sign = 1
    if p < 0:
        p = -p
        sign = (-1) ** p
    if z == 0:
        return float(sign) if p == 0 else 0.0
    half = Fraction(z) / 2
    square = half * half
    term = half**p / math.factorial(p)
    total = term
    m = 0
    while True:
        m += 1
        term = -term * square / (m * (m + p))
        total += term
        if m > abs(z) and abs(term) < cutoff * max(abs(total), Fraction(1, 10**300)):
            break
    return sign * float(total)


def laguerre_exact(n: int, k: int, x: float) -> float:
    """sum_j (-1)^j C(n+k, n-j) x^j / j!, exactly"""
    xf = Fraction(x)
    total = sum(
        Fraction((-1) ** j * math.comb(n + k, n - j), math.factorial(j)) * xf**j for j in range(n + 1)
    )
    return float(total)


def laguerre_scipy(n: int, k: int, x: float) -> float:
    return float(eval_genlaguerre(n, k, x))


def bessel_scipy(p: int, z: float) -> float:
    return float(jv(p, z))


def sqrt_factorial_ratio_exact(n: int, k: int) -> float:
    return math.sqrt(Fraction(math.factorial(n), math.factorial(n + k)))


def laguerre_scale(n: int, k: int, x: float, reference: float) -> float:
    """
    Error scale for recurrence values of L_n^k(x)

    max(|L|, C(n+k, n) e^{x/2}). The second term bounds |L_j^k(x)| for all
    j <= n when x >= 0, so it covers the cancellation near zeros; for x < 0
    every term of the finite sum is positive and |L| itself is the scale.
    """
    bound = math.comb(n + k, n) * math.exp(0.5 * max(x, 0.0))
    return max(abs(reference), bound)


# ========== OPERATORS BY MATRIX EXPONENTIAL ==========


def displacement_expm(beta: complex, trunc: Truncation) -> np.ndarray:
    """exp(beta a^dag - beta* a) on the truncated field space"""
    lower = _lower(trunc)
    return expm(beta * lower.conj().T - np.conj(beta) * lower)


def spin_displacement_expm(params: ModelParams, trunc: Truncation, t: float = None) -> np.ndarray:
    """exp[-(lambda/omega0) sigma_x (a^dag - a)], rotating frame when t is given"""
    lower = _lower(trunc)
    rot = 1.0 if t is None else np.exp(1j * params.omega0 * t)
    generator = rot * lower.conj().T - np.conj(rot) * lower
    return expm(-(params.lam / params.omega0) * np.kron(generator, SIGMA_X))


def oracle_truncation(n: int, k: int, alpha_mag: float) -> Truncation:
    """Room for D(alpha)|n+k> with a wide margin"""
    reach = math.sqrt(n + k) + alpha_mag
    return Truncation(N=int(math.ceil(reach * reach + 12.0 * reach + 40.0)))


def h_q_matrix(params: ModelParams, trunc: Truncation) -> np.ndarray:
    lower = _lower(trunc)
    upper = lower.conj().T
    return (
        params.omega0 * np.kron(upper @ lower, IDENTITY_2)
        + 0.5 * params.omega * np.kron(np.eye(trunc.dim), SIGMA_Z)
        + params.lam * np.kron(lower + upper, SIGMA_X)
    )


def transformed_by_conjugation(params: ModelParams, trunc: Truncation) -> np.ndarray:
    """D^dag H_q D with D = exp[-(lambda/omega0) sigma_x (a^dag - a)]"""
    d = spin_displacement_expm(params, trunc)
    return d.conj().T @ h_q_matrix(params, trunc) @ d


def displaced_conjugation_element(
    params: ModelParams, n: int, k: int, alpha: complex, t: float, trunc: Truncation
) -> np.ndarray:
    """
    <alpha, n+k| H~(t) |alpha, n> with H~ built from H_q alone

        T    = D^dag H_q D,                D = exp[-(lambda/omega0) sigma_x (a^dag - a)]
        H~(t) = R(t) (T - omega0 a^dag a) R^dag(t),   R(t) = exp(i omega0 t a^dag a)

    then conjugated by D(alpha); every displacement by matrix exponential.
    """
    number = np.kron(np.diag(np.arange(trunc.dim, dtype=float)), IDENTITY_2)
    rotation = np.exp(1j * params.omega0 * t * np.diag(number))
    interaction = transformed_by_conjugation(params, trunc) - params.omega0 * number
    hamiltonian = rotation[:, None] * interaction * rotation.conj()[None, :]
    d_alpha = np.kron(displacement_expm(alpha, trunc), IDENTITY_2)
    return block(d_alpha.conj().T @ hamiltonian @ d_alpha, n, k)


def block(matrix: np.ndarray, n: int, k: int) -> np.ndarray:
    row, col = 2 * (n + k), 2 * n
    return matrix[row : row + 2, col : col + 2]


# ========== QUADRATURE ==========


def gauss_time_average(f: Callable[[float], np.ndarray], period: float, nodes: int = 64) -> np.ndarray:
    """(1/period) int_0^period f(t) dt by Gauss-Legendre quadrature"""
    x, w = leggauss(nodes)
    t = 0.5 * period * (x + 1.0)
    return sum(wi * f(ti) for ti, wi in zip(t, w)) * 0.5


def central_difference(f: Callable[[float], np.ndarray], t: float, h: float = 1.0e-5) -> np.ndarray:
    return (f(t + h) - f(t - h)) / (2.0 * h)
