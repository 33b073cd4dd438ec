"""Adaptive definite integration with a log-singular-endpoint variant.

A global-adaptive scheme on a priority queue of subintervals, each scored
by the (G7, K15) Gauss-Kronrod pair; the worst interval is bisected until
the summed error estimate meets the tolerance or the refinement budget
(interval depth) runs out.  Integrands with f = O(log x) at x = 0 are
handled by the substitution x = t^2, which turns the singular factor into
t log t, plus an initial mesh graded toward 0.
"""

from dataclasses import dataclass
from heapq import heappush, heappop

import numpy as np

# 15-point Kronrod nodes on [-1, 1] and weights; rows 0..14.  The embedded
# 7-point Gauss rule lives on nodes 1, 3, 5, ..., 13.
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
])


@dataclass
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int


class QuadratureError(RuntimeError):
    """Refinement budget exhausted; .best carries the last estimate."""

    def __init__(self, message, best):
        super().__init__(message)
        self.best = best


def _gk15(f, a, b):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    x = mid + half * _XK
    fx = np.asarray(f(x), dtype=float)
    k = half * float(fx @ _WK)
    g = half * float(fx[1:14:2] @ _WG)
    return k, abs(k - g)


def integrate(f, a, b, tol=1e-10, max_levels=20):
    """Adaptive integral of a vectorized f over [a, b].

    Raises QuadratureError when bisection down to `max_levels` levels cannot
    push the summed Kronrod-Gauss discrepancy below tol.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0)
    if b < a:
        r = integrate(f, b, a, tol=tol, max_levels=max_levels)
        return QuadratureResult(-r.value, r.error_estimate, r.evaluations)
    # A single panel can under-report the error on oscillatory integrands;
    # start from a modest uniform subdivision.
    knots = np.linspace(a, b, 9)
    return _adaptive(f, list(zip(knots[:-1], knots[1:])), tol, max_levels)


def _adaptive(f, pieces, tol, max_levels):
    heap = []
    total = 0.0
    err = 0.0
    evals = 0
    for ia, ib in pieces:
        v, e = _gk15(f, ia, ib)
        evals += 15
        total += v
        err += e
        heappush(heap, (-e, ia, ib, v, 0))
    while err > tol:
        neg_e, ia, ib, v, lev = heappop(heap)
        if lev >= max_levels:
            heappush(heap, (neg_e, ia, ib, v, lev))
            raise QuadratureError(
                f"quadrature did not converge: error estimate {err:.3e} > tol {tol:.3e}",
                best=QuadratureResult(total, err, evals),
            )
        mid = 0.5 * (ia + ib)
        v1, e1 = _gk15(f, ia, mid)
        v2, e2 = _gk15(f, mid, ib)
        evals += 30
        total += v1 + v2 - v
        err += e1 + e2 + neg_e
        err = max(err, 0.0)
        heappush(heap, (-e1, ia, mid, v1, lev + 1))
        heappush(heap, (-e2, mid, ib, v2, lev + 1))
    return QuadratureResult(total, err, evals)


def integrate_log_singular(f, b, tol=1e-10, max_levels=20):
    """Integral over (0, b] of an f with at worst a log singularity at 0.

    Substitutes x = t^2 (so dx = 2t dt) and starts from a mesh graded
    geometrically toward t = 0; endpoints are never evaluated.
    """
    if b <= 0:
        raise ValueError("integrate_log_singular requires b > 0")

    def g(t):
        return 2.0 * t * np.asarray(f(t * t), dtype=float)

    tb = np.sqrt(b)
    knots = [0.0] + [tb * 2.0 ** (-j) for j in range(12, -1, -1)]
    pieces = list(zip(knots[:-1], knots[1:]))
    return _adaptive(g, pieces, tol, max_levels)
