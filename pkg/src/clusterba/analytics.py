"""Closed-form layer: critical density, implicit equation for the visit
probability, per-collision-type probabilities, and the recursion residual.

The implicit equation is implemented through the denominator

    D(v) = 1 + v^2 - 2 v f(v) - v^2 (1 - v^2) f'(v),

equivalently p = F(v) = (1 - v)^2 / D(v) on the supercritical branch.  For
evaluation we use the algebraically identical, cancellation-free form

    F(v) = 1 / C(v),
    C(v) = 1 + v * sum_k mu_k * (2 * sum_{j<k} (j+1) v^j  +  k v^k),

whose coefficients are all nonnegative: C is exact near v = 1 where D
suffers catastrophic cancellation, and C(1) = (1 + E[mu])^2 + var(mu) is
the reciprocal critical density.
"""

import math
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .laws import ClusterLaw, Delta, Geometric

BISECT_HI = 1.0 - 1e-9
BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200


class SingularDenominatorError(ArithmeticError):
    pass


class BracketError(ArithmeticError):
    """The bisection bracket for the implicit equation could not be set up."""


@dataclass(frozen=True)
class AnalyticCurve:
    law: ClusterLaw
    pc: float
    points: List[Tuple[float, float, float]]  # (p, q, theta)


def pc(law: ClusterLaw) -> float:
    """Critical cluster-site density 1 / ((E[mu] + 1)^2 + var(mu));
    0 for infinite variance."""
    mean, var = law.moments()
    if math.isinf(var):
        return 0.0
    return 1.0 / ((mean + 1.0) ** 2 + var)


def reference_denominator(law: ClusterLaw, v: float) -> float:
    """D(v) as printed above; kept for reference and regression tests."""
    f = law.pgf(v)
    d1 = law.pgf_d1(v)
    return 1.0 + v * v - 2.0 * v * f - v * v * (1.0 - v * v) * d1


def _C(law: ClusterLaw, v: float) -> float:
    """Cancellation-free D(v) / (1-v)^2; see module docstring."""
    if isinstance(law, Geometric):
        b = law.beta
        g = 1.0 - (1.0 - b) * v
        # tail sums are (1-b)^j, both inner series telescope
        return 1.0 + v * (2.0 + b * v) / (g * g)
    w = law.weights
    if w is None:  # pragma: no cover - all current laws are covered above
        raise NotImplementedError("law %r lacks a weight vector" % law)
    kmax = len(w) - 1
    if kmax == 0:
        return 1.0
    j = np.arange(kmax, dtype=np.float64)
    vj = v ** j
    # tail[j] = P(X > j)
    tail = np.cumsum(w[::-1])[::-1]
    acc = 2.0 * float(np.dot((j + 1.0) * vj, tail[1:]))
    k = np.arange(1, kmax + 1, dtype=np.float64)
    acc += float(np.dot(k * w[1:], v ** k))
    return 1.0 + v * acc


def F_of_v(law: ClusterLaw, v: float, tol: float = 1e-300) -> float:
    """The fixed-point map: the unique u with h(u, v) = 0; p = F(q(p)) on
    the supercritical branch and F(1-) = pc."""
    if not 0.0 <= v < 1.0:
        raise ValueError("v must lie in [0, 1)")
    c = _C(law, v)
    if c * (1.0 - v) ** 2 <= tol:
        raise SingularDenominatorError("denominator vanished at v=%r" % v)
    return 1.0 / c


def solve_q(law: ClusterLaw, p: float) -> float:
    """Visit probability q(p): 1 below the critical density, else the unique
    root of F(v) = p, by bisection to absolute tolerance 1e-12."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    crit = pc(law)
    if p <= crit:
        return 1.0
    if p == 1.0:
        return 0.0
    lo, hi = 0.0, BISECT_HI
    flo = F_of_v(law, lo) - p
    fhi = F_of_v(law, hi) - p
    if fhi > 0.0:
        # p sits between pc and F(1 - 1e-9); the root is within 1e-9 of 1
        return 1.0
    if flo < 0.0:
        raise BracketError(
            "no sign change on [0, %r]: F(0)-p=%r, F(hi)-p=%r"
            % (BISECT_HI, flo, fhi))
    for _ in range(BISECT_MAX_ITER):
        mid = 0.5 * (lo + hi)
        fm = F_of_v(law, mid) - p
        if fm >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= BISECT_TOL:
            break
    return 0.5 * (lo + hi)


def q_geometric_closed(beta: float, p: float) -> float:
    """Closed-form q(p) for the geometric family (valid for p >= pc)."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")
    if p < pc(Geometric(beta)) - 1e-15:
        raise ValueError("closed form only valid for p >= pc")
    num = math.sqrt(p * p * beta - p * p - p * beta + 2.0 * p) \
        - p * beta + beta - 1.0
    den = p * beta * beta - p * beta + p - beta * beta + 2.0 * beta - 1.0
    return num / den


def theta_from_q(q: float) -> float:
    """Two-sided blockade survival probability (1 - q)^2."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    return (1.0 - q) ** 2


def s_formula(law: ClusterLaw, p: float, q: float) -> float:
    """P(origin visited and the first particle dies on a cluster):
    p q^2 f'(q) / 2."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    return 0.5 * p * q * q * law.pgf_d1(q)


def sk_formula(law: ClusterLaw, p: float, q: float, k: int) -> float:
    """Per-size term: p mu_k q^(k+1) k / 2."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    return 0.5 * p * law.pmf(k) * q ** (k + 1) * k


def r_formula(law: ClusterLaw, p: float, q: float) -> float:
    """P(origin NOT visited and the first particle dies on a cluster):
    p q (q^2 f'(q) - q f'(q) - f(q) + 1) / (1 - q)."""
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    d1 = law.pgf_d1(q)
    return p * q * (q * q * d1 - q * d1 - law.pgf(q) + 1.0) / (1.0 - q)


def rk_formula(law: ClusterLaw, p: float, q: float, k: int) -> float:
    """Per-size term: p mu_k q (k q^(k+1) - k q^k - q^k + 1) / (1 - q)."""
    if not 0.0 <= q < 1.0:
        raise ValueError("q must lie in [0, 1)")
    qk = q ** k
    return p * law.pmf(k) * q * (k * q * qk - k * qk - qk + 1.0) / (1.0 - q)


def arrow_arrow_first_formula(law: ClusterLaw, p: float, q: float) -> float:
    """P(the first particle dies on another arrow), by closure:
    (1 - p)/2 = s + r + this."""
    return 0.5 * (1.0 - p) - s_formula(law, p, q) - r_formula(law, p, q)


def recursion_residual(law: ClusterLaw, p: float, q: float) -> float:
    """RHS minus LHS of the one-step recursion
    q = (1-p)/2 + p q f(q) + s + q ((1-p)/2 - s - r)."""
    s = s_formula(law, p, q)
    r = r_formula(law, p, q)
    rhs = 0.5 * (1.0 - p) + p * q * law.pgf(q) + s \
        + q * (0.5 * (1.0 - p) - s - r)
    return rhs - q


def tabulate_curve(law: ClusterLaw, p_grid) -> AnalyticCurve:
    """Solve the implicit equation across a p-grid."""
    crit = pc(law)
    points = []
    for p in p_grid:
        q = solve_q(law, float(p))
        points.append((float(p), q, theta_from_q(q)))
    return AnalyticCurve(law, crit, points)
