"""
Special functions needed by the closed-form metrics.

Provides log-gamma, the beta function, the lower non-regularized incomplete
beta function, Gauss's hypergeometric function 2F1 on z <= 0 and the
Gaussian Q-function. Every function is pure and thread-safe.
"""
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import erfc, gammaln

from .errors import ConvergenceError, DomainError

_TINY = 1e-300
_RESCALE = 1e200


@dataclass(frozen=True)
class Accuracy:
    """Stopping rule for series and continued fractions."""

    rel_tol: float = 1e-12
    max_iter: int = 10_000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise DomainError(f"max_iter must be a positive integer, got {self.max_iter}")


DEFAULT_ACCURACY = Accuracy()


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x}")
    return float(gammaln(x))


def log_beta(a: float, b: float) -> float:
    """ln B(a, b) for a, b > 0."""
    if not (a > 0 and b > 0):
        raise DomainError(f"beta requires a > 0 and b > 0, got a={a}, b={b}")
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def beta(a: float, b: float) -> float:
    """B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b), evaluated through log_gamma."""
    return math.exp(log_beta(a, b))


def _beta_continued_fraction(x: float, a: float, b: float, accuracy: Accuracy) -> float:
    """Modified Lentz evaluation of the incomplete-beta continued fraction."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, accuracy.max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) <= accuracy.rel_tol:
            return h
    raise ConvergenceError(
        f"incomplete beta continued fraction did not converge in {accuracy.max_iter} "
        f"iterations (x={x}, a={a}, b={b})"
    )


def _log_lower_incomplete_beta(x: float, a: float, b: float, accuracy: Accuracy) -> float:
    # ln of x^a (1-x)^b / a * cf, the non-regularized form of the standard expansion
    log_front = a * math.log(x) + b * math.log1p(-x) - math.log(a)
    return log_front + math.log(_beta_continued_fraction(x, a, b, accuracy))


def log_incomplete_beta(x: float, a: float, b: float,
                        accuracy: Accuracy = DEFAULT_ACCURACY) -> float:
    """ln of the lower non-regularized incomplete beta; -inf at x = 0.

    Callers that scale the result by x^(-a) should add the scale to this
    logarithm, since for large a both factors leave the float range.
    """
    if not (a > 0 and b > 0):
        raise DomainError(f"incomplete_beta requires a > 0 and b > 0, got a={a}, b={b}")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"incomplete_beta requires 0 <= x <= 1, got {x}")
    if x == 0.0:
        return -math.inf
    if x == 1.0:
        return log_beta(a, b)
    if x < (a + 1.0) / (a + b + 2.0):
        return _log_lower_incomplete_beta(x, a, b, accuracy)
    full = log_beta(a, b)
    ratio = math.exp(_log_lower_incomplete_beta(1.0 - x, b, a, accuracy) - full)
    if ratio >= 1.0:
        return -math.inf
    return full + math.log1p(-ratio)


def incomplete_beta(x: float, a: float, b: float,
                    accuracy: Accuracy = DEFAULT_ACCURACY) -> float:
    """Lower non-regularized incomplete beta: integral of y^(a-1) (1-y)^(b-1) on [0, x]."""
    return math.exp(log_incomplete_beta(x, a, b, accuracy))


def _scaled_hyp2f1_series(a: float, b: float, c: float, z: float,
                          accuracy: Accuracy) -> Tuple[float, float]:
    """Gauss series as (mantissa, log scale), rescaled whenever the partial sum grows past 1e200."""
    if not abs(z) < 1.0:
        raise DomainError(f"2F1 series requires |z| < 1, got {z}")
    total = 1.0
    term = 1.0
    log_shift = 0.0
    for k in range(accuracy.max_iter):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0:
            return total, log_shift
        if abs(total) > _RESCALE:
            log_shift += math.log(abs(total))
            term /= abs(total)
            total = math.copysign(1.0, total)
        if abs(term) <= accuracy.rel_tol * abs(total) and abs((a + k + 1) * (b + k + 1) * z) < abs((c + k + 1) * (k + 2)):
            return total, log_shift
    raise ConvergenceError(
        f"2F1 series did not converge in {accuracy.max_iter} terms (a={a}, b={b}, c={c}, z={z})"
    )


def hyp2f1_series(a: float, b: float, c: float, z: float,
                  accuracy: Accuracy = DEFAULT_ACCURACY) -> float:
    """Direct Gauss series for |z| < 1."""
    total, log_shift = _scaled_hyp2f1_series(a, b, c, z, accuracy)
    return total * math.exp(log_shift)


def gauss_2f1(a: float, b: float, c: float, z: float,
              accuracy: Accuracy = DEFAULT_ACCURACY) -> float:
    """Gauss hypergeometric 2F1(a, b; c; z) for z <= 0.

    The argument is mapped into [0, 1) with one of the two Pfaff
    transformations, ``(1-z)^(-b) 2F1(c-a, b; c; z/(z-1))`` or
    ``(1-z)^(-a) 2F1(a, c-b; c; z/(z-1))``. The form whose numerator
    parameters are non-negative is summed, and of two such forms the one
    with the smaller parameter product, whose terms decay sooner. The
    power and the series are combined in log space.
    """
    if not c > 0:
        raise DomainError(f"gauss_2f1 requires c > 0, got c={c}")
    if z > 0:
        raise DomainError(f"gauss_2f1 is only supported for z <= 0, got z={z}")
    if z == 0.0:
        return 1.0
    w = z / (z - 1.0)
    log_scale = math.log1p(-z)
    forms = [(b, c - a, b), (a, a, c - b)]
    positive = [form for form in forms if form[1] >= 0 and form[2] >= 0]
    power, first, second = min(positive, key=lambda f: f[1] * f[2]) if positive else forms[0]
    total, log_shift = _scaled_hyp2f1_series(first, second, c, w, accuracy)
    if total == 0.0:
        return 0.0
    return math.copysign(math.exp(log_shift + math.log(abs(total)) - power * log_scale), total)


def q_function(x):
    """Gaussian tail probability Q(x) = 0.5 erfc(x / sqrt(2)); accepts scalars or arrays."""
    value = 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))
    if np.ndim(value) == 0:
        return float(value)
    return value
