"""Special functions and adaptive quadrature.

Everything the closed-form expectation/variance of the rebalanced spectrum
needs: log-Gamma (Lanczos), the Gauss hypergeometric function 2F1 with the
argument reductions that the parameter ranges force (Pfaff transformation
for negative arguments, the z -> 1-z connection formula near the unit
argument, including its logarithmic integer-parameter case), the Beta
density, the change-of-variable density x_bullet, and a global-adaptive
Gauss-Kronrod integrator.

Precision note: several callers know ``1 - z`` exactly (it is their gamma
parameter).  Recomputing the complement from a rounded ``z`` near 1 loses
up to half the significant digits, so the internal entry points thread the
complement through every transformation instead of re-deriving it.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

MAX_SERIES_TERMS = 100_000
SERIES_RELTOL = 1e-16
MAX_QUAD_DEPTH = 40
MAX_QUAD_PANELS = 20_000

# Lanczos approximation, g = 7, 9 coefficients.
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    x = float(x)
    if not (x > 0.0) or not math.isfinite(x):
        raise ValidationError(f"log_gamma requires x > 0, got {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.log(math.pi / math.sin(math.pi * x)) - log_gamma(1.0 - x)
    xm = x - 1.0
    acc = _LANCZOS_C[0]
    for i in range(1, len(_LANCZOS_C)):
        acc += _LANCZOS_C[i] / (xm + i)
    t = xm + _LANCZOS_G + 0.5
    return _HALF_LOG_TWO_PI + (xm + 0.5) * math.log(t) - t + math.log(acc)


def _gamma_signed(x: float) -> tuple[float, float]:
    """(sign, log|Gamma(x)|) for any real x that is not a pole."""
    if x > 0.0:
        return 1.0, log_gamma(x)
    if x == math.floor(x):
        raise NumericalError(f"Gamma pole at {x}")
    s = math.sin(math.pi * x)
    sign = 1.0 if s > 0 else -1.0
    return sign, math.log(math.pi / abs(s)) - log_gamma(1.0 - x)


def digamma(x: float) -> float:
    x = float(x)
    if x <= 0.0:
        if x == math.floor(x):
            raise NumericalError(f"digamma pole at {x}")
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 8.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760))))))
    return acc + math.log(x) - 0.5 / x - tail


def _series_2f1(a: float, b: float, c: float, z: float) -> float:
    term = 1.0
    total = 1.0
    for n in range(MAX_SERIES_TERMS):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if abs(term) < SERIES_RELTOL * abs(total):
            return total
    raise NumericalError("2F1 series did not converge within the term cap")


def _gauss_sum_unit(a: float, b: float, c: float) -> float:
    s1, l1 = _gamma_signed(c)
    s2, l2 = _gamma_signed(c - a - b)
    s3, l3 = _gamma_signed(c - a)
    s4, l4 = _gamma_signed(c - b)
    return s1 * s2 * s3 * s4 * math.exp(l1 + l2 - l3 - l4)


def _connection_integer(a: float, b: float, c: float, m: int, w: float) -> float:
    """2F1(a,b;c;1-w) for c - a - b = m, a non-negative integer (log case)."""
    lw = math.log(w)
    finite = 0.0
    if m > 0:
        pref = math.exp(log_gamma(m) + log_gamma(c) - log_gamma(a + m) - log_gamma(b + m))
        term = 1.0
        acc = term
        for n in range(1, m):
            term *= (a + n - 1.0) * (b + n - 1.0) / (n * (n - m)) * w
            acc += term
        finite = pref * acc
    pref2 = math.exp(log_gamma(c) - log_gamma(a) - log_gamma(b)) * ((-1.0) ** m) * w**m
    term = 1.0 / math.factorial(m)
    acc = 0.0
    psi_a = digamma(a + m)
    psi_b = digamma(b + m)
    psi_1 = digamma(1.0)
    psi_m1 = digamma(m + 1.0)
    for n in range(MAX_SERIES_TERMS):
        contrib = term * (psi_1 + psi_m1 - psi_a - psi_b - lw)
        acc += contrib
        if n > 2 and abs(contrib) < SERIES_RELTOL * max(abs(acc), 1e-300):
            return finite + pref2 * acc
        term *= (a + m + n) * (b + m + n) / ((n + 1.0) * (n + 1.0 + m)) * w
        psi_1 += 1.0 / (n + 1.0)
        psi_m1 += 1.0 / (m + n + 1.0)
        psi_a += 1.0 / (a + m + n)
        psi_b += 1.0 / (b + m + n)
    raise NumericalError("2F1 logarithmic series did not converge within the term cap")


def _connection_near_unit(a: float, b: float, c: float, w: float) -> float:
    """2F1(a,b;c;1-w) for 0 < w < 0.2 via the z -> 1-z connection formula."""
    s = c - a - b
    m = round(s)
    if abs(s - m) <= 1e-8:
        if m < 0:
            # Euler transformation flips the sign of c - a - b
            return w**s * _connection_integer(c - a, c - b, c, -m, w)
        return _connection_integer(a, b, c, int(m), w)
    g = _gamma_signed
    s1, l1 = g(c)
    s2, l2 = g(s)
    s3, l3 = g(c - a)
    s4, l4 = g(c - b)
    t1 = s1 * s2 * s3 * s4 * math.exp(l1 + l2 - l3 - l4) * _series_2f1(a, b, 1.0 - s, w)
    s5, l5 = g(-s)
    s6, l6 = g(a)
    s7, l7 = g(b)
    t2 = s1 * s5 * s6 * s7 * math.exp(l1 + l5 - l6 - l7) * w**s * _series_2f1(c - a, c - b, 1.0 + s, w)
    return t1 + t2


def _hyp2f1(a: float, b: float, c: float, z: float, omz: float) -> float:
    """2F1(a,b;c;z) with the complement omz = 1 - z supplied exactly."""
    if c <= 0.0 and c == math.floor(c):
        raise ValidationError(f"2F1 parameter c must not be a non-positive integer, got {c}")
    if z == 0.0:
        return 1.0
    if z > 1.0 or omz < 0.0:
        raise ValidationError(f"2F1 argument must satisfy z <= 1, got {z}")
    if omz == 0.0:
        if c - a - b <= 0.0:
            raise NumericalError(f"2F1 diverges at z = 1 for c-a-b = {c - a - b}")
        return _gauss_sum_unit(a, b, c)
    if z < 0.0:
        # Pfaff: 2F1(a,b;c;z) = (1-z)^{-a} 2F1(a, c-b; c; z/(z-1))
        return omz ** (-a) * _hyp2f1(a, c - b, c, z / (z - 1.0), 1.0 / omz)
    if z <= 0.8:
        return _series_2f1(a, b, c, z)
    s = c - a - b
    eps = abs(s - round(s))
    if 1e-8 < eps < 1e-3 and z <= 0.9996:
        # near-integer c-a-b: the two-term connection formula cancels
        # catastrophically, but the raw series still fits the term cap here
        return _series_2f1(a, b, c, z)
    return _connection_near_unit(a, b, c, omz)


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 1."""
    return _hyp2f1(float(a), float(b), float(c), float(z), 1.0 - float(z))


def gauss_2f1_at_one_minus(a: float, b: float, c: float, gamma: float) -> float:
    """2F1(a, b; c; 1 - gamma) with the complement gamma taken exactly.

    Avoids forming ``1 - gamma`` and re-deriving the complement, which for
    tiny gamma would wipe out half the significant digits of the result.
    """
    gamma = float(gamma)
    return _hyp2f1(float(a), float(b), float(c), 1.0 - gamma, gamma)


def log_beta(a: float, b: float) -> float:
    return log_gamma(a) + log_gamma(b) - log_gamma(a + b)


def beta_pdf(x: float, a: float, b: float) -> float:
    """Beta(a, b) density at x in (0, 1)."""
    x = float(x)
    if not (0.0 < x < 1.0):
        raise ValidationError(f"beta_pdf support is (0, 1), got x = {x}")
    if a <= 0.0 or b <= 0.0:
        raise ValidationError("beta_pdf shape parameters must be positive")
    return math.exp((a - 1.0) * math.log(x) + (b - 1.0) * math.log1p(-x) - log_beta(a, b))


@dataclass(frozen=True)
class AnalyticParams:
    """Parameters of the rebalancing surrogate model for one spectral index.

    ``beta`` holds (sigma_l^{2k})^2 for every l; ``alpha`` and ``gamma``
    are the Gamma-fit shape and scale ratio for the off-index weighted
    chi-square sum, computed from ``beta`` exactly as defined.
    """

    beta: np.ndarray
    alpha: float
    gamma: float
    index: int
    iterations: int
    _log_beta_norm: float = field(default=0.0, compare=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size < 2:
            raise ValidationError("beta must be a vector with at least two entries")
        if np.any(beta < 0) or not np.all(np.isfinite(beta)):
            raise ValidationError("beta entries must be finite and non-negative")
        if np.count_nonzero(beta) < 2:
            raise ValidationError("at least two beta entries must be strictly positive")
        if not (0.0 < self.alpha < math.inf) or not (0.0 < self.gamma < math.inf):
            raise ValidationError("alpha and gamma must be positive and finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "_log_beta_norm", log_beta(0.5, self.alpha))


def _x_bullet_parts(z: float, omz: float, p: AnalyticParams) -> float:
    """Density of the rebalancing ratio with the complement supplied exactly."""
    gamma = p.gamma
    den = gamma + (1.0 - gamma) * omz  # equals 1 - (1 - gamma) z without cancellation
    if den <= 5e-324 or not math.isfinite(den):
        raise NumericalError(f"x_bullet denominator underflow at z={z}, gamma={gamma}")
    x = gamma * z / den
    one_minus_x = omz / den
    if x <= 0.0 or one_minus_x <= 0.0:
        return 0.0
    log_pdf = -0.5 * math.log(x) + (p.alpha - 1.0) * math.log(one_minus_x) - p._log_beta_norm
    jac = gamma / (den * den)
    return jac * math.exp(log_pdf)


def pdf_x_bullet(z: float, p: AnalyticParams) -> float:
    """Change-of-variable density of the rebalanced-ratio surrogate at z."""
    z = float(z)
    if not (0.0 < z < 1.0):
        raise ValidationError(f"pdf_x_bullet support is (0, 1), got z = {z}")
    return _x_bullet_parts(z, 1.0 - z, p)


# Gauss-Kronrod 7-15 nodes and weights (positive half; node 0 last).
_KRONROD_X = (
    0.991455371120813, 0.949107912342759, 0.864864423359769,
    0.741531185599394, 0.586087235467691, 0.405845151377397,
    0.207784955007898,
)
_KRONROD_W = (
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
)
_GAUSS_W = (0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469)


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    h = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = []
    for x in _KRONROD_X:
        vals.append(f(mid - h * x))
        vals.append(f(mid + h * x))
    f0 = f(mid)
    kron = f0 * _KRONROD_W[7]
    for i in range(7):
        kron += _KRONROD_W[i] * (vals[2 * i] + vals[2 * i + 1])
    gauss = f0 * _GAUSS_W[3]
    for i in range(3):
        gauss += _GAUSS_W[i] * (vals[2 * (2 * i + 1)] + vals[2 * (2 * i + 1) + 1])
    return kron * h, abs((kron - gauss) * h)


def integrate(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Globally adaptive Gauss-Kronrod quadrature with absolute tolerance.

    Panels are bisected worst-error-first; a panel whose error estimate is
    at rounding level is frozen.  Integrable endpoint singularities of type
    z^{-1/2} should be softened by the caller with the z = t^2 substitution
    (the analysis routines do this), since bisection alone cannot reach the
    requested tolerances against a power singularity.
    """
    lo = float(lo)
    hi = float(hi)
    if hi == lo:
        return 0.0
    if hi < lo:
        raise ValidationError("integrate requires hi >= lo")
    if tol <= 0.0:
        raise ValidationError("tolerance must be positive")
    val, err = _gk15(f, lo, hi)
    heap = [(-err, lo, hi, val, err, 0)]
    total_err = err
    panels = 1
    while total_err > tol:
        neg_err, a, b, v, e, depth = heapq.heappop(heap)
        if neg_err == 0.0:
            heapq.heappush(heap, (neg_err, a, b, v, e, depth))
            break  # every remaining panel is frozen at rounding level
        if e <= 1e-16 * abs(v) + 1e-300 or (b - a) < 1e-15 * (hi - lo):
            heapq.heappush(heap, (0.0, a, b, v, e, depth))
            continue
        if depth >= MAX_QUAD_DEPTH or panels >= MAX_QUAD_PANELS:
            raise NumericalError("quadrature tolerance not reached within the subdivision cap")
        mid = 0.5 * (a + b)
        v1, e1 = _gk15(f, a, mid)
        v2, e2 = _gk15(f, mid, b)
        total_err += e1 + e2 - e
        heapq.heappush(heap, (-e1, a, mid, v1, e1, depth + 1))
        heapq.heappush(heap, (-e2, mid, b, v2, e2, depth + 1))
        panels += 1
    return math.fsum(item[3] for item in heap)


def density_moment(p: AnalyticParams, moment: int, tol: float = 1e-10) -> float:
    """integral of z^moment * x_bullet(z) over (0, 1) by substituted quadrature.

    The density carries a z^{-1/2} factor at the left endpoint (softened by
    z = t^2) and a (1-z)^{alpha-1} factor at the right endpoint (softened by
    1-z = u^{1/alpha} when alpha < 1, which flattens the power exactly).
    """
    def left(t: float) -> float:
        z = t * t
        if z <= 0.0:
            return 0.0
        return 2.0 * t * (z**moment) * _x_bullet_parts(z, 1.0 - z, p)

    power = 1.0 if p.alpha >= 1.0 else 1.0 / p.alpha

    def right(u: float) -> float:
        if u <= 0.0:
            return 0.0
        omz = u**power
        z = 1.0 - omz
        if z <= 0.0:
            return 0.0
        return power * u ** (power - 1.0) * (z**moment) * _x_bullet_parts(z, omz, p)

    half = 0.5 * tol
    return integrate(left, 0.0, math.sqrt(0.5), half) + integrate(right, 0.0, 0.5 ** (1.0 / power), half)
