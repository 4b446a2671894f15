"""Adaptive quadrature on the unit interval with mudkit error handling.

Semi-infinite integrals over x in [0, inf) are mapped to y = e^(-x) in (0, 1]
before they reach this module (dx = -dy / y, and the unit-exponential density
e^(-x) dx becomes dy).
"""
import math
from typing import Callable, Iterable, Optional, Sequence

from scipy.integrate import quad

from .config import get_settings
from .errors import ConvergenceError
from .log import get_logger

logger = get_logger(__name__)

# scipy refuses epsrel below max(50 * machine eps, 5e-29) when epsabs is zero
_MIN_REL_TOL = 50 * 2.220446049250313e-16


def breakpoints_for_scale(scale: float) -> list:
    """Interior break points clustering around y ~ 1/scale.

    Integrands of the form g(y) * U_N(1-y) change over a width of order 1/E[N]
    near y = 0; QUADPACK converges much faster when told so.
    """
    if not scale > 1.0:
        return []
    points = []
    for factor in (0.01, 0.1, 1.0, 10.0, 100.0):
        y = factor / scale
        if 0.0 < y < 1.0:
            points.append(y)
    return points


def integrate_unit_interval(func: Callable[[float], float], tol: Optional[float] = None,
                            points: Iterable[float] = (), what: str = "integral") -> float:
    """Integrate ``func`` over [0, 1] to relative tolerance ``tol``.

    Raises ConvergenceError when QUADPACK exhausts the subdivision cap.
    """
    settings = get_settings()
    rel_tol = max(tol if tol is not None else settings.quad_tol, _MIN_REL_TOL)
    limit = settings.quad_limit
    pts: Sequence[float] = sorted({p for p in points if 0.0 < p < 1.0})
    kwargs = {"points": pts} if pts else {}
    value, abserr, info, *message = quad(
        func, 0.0, 1.0, epsabs=0.0, epsrel=rel_tol, limit=limit, full_output=1, **kwargs
    )
    ier = 0
    if message:
        ier = 1 if "maximum number of subdivisions" in message[0] else 2
    logger.debug("%s: value=%.15g abserr=%.3g evaluations=%d", what, value, abserr, info["neval"])
    if ier == 1 or not math.isfinite(value):
        raise ConvergenceError(
            f"quadrature for {what} did not converge within {limit} subdivisions "
            f"(estimate {value:.6g}, error {abserr:.3g})"
        )
    if ier and abserr > 100 * rel_tol * abs(value) and abserr > 1e-15:
        logger.warning("quadrature for %s flagged by QUADPACK: %s", what, message[0].strip())
    return float(value)
