"""Special functions and adaptive quadrature used by the analytic bounds.

Everything here is plain-float Python built on math.lgamma; no scipy.
"""
from __future__ import annotations

import heapq
import math

_EPS = 1e-16
_TINY = 1e-300
_MAX_IT = 100000


class ConvergenceError(ArithmeticError):
    def __init__(self, what: str, achieved: float):
        super().__init__(f"{what} did not converge (achieved {achieved:.3g})")
        self.achieved = achieved


def reg_lower_gamma(a: float, x: float) -> float:
    """P(a, x) = gamma(a, x) / Gamma(a)."""
    if a <= 0:
        raise ValueError("a must be > 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    log_pre = a * math.log(x) - x - math.lgamma(a)
    if x < a + 1:
        # power series
        ap, term = a, 1.0 / a
        total = term
        for _ in range(_MAX_IT):
            ap += 1
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                return min(1.0, total * math.exp(log_pre))
        raise ConvergenceError("lower gamma series", abs(term / total))
    # continued fraction for Q(a, x), modified Lentz
    b = x + 1 - a
    c = 1 / _TINY
    d = 1 / b
    h = d
    for i in range(1, _MAX_IT):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        d = _TINY if abs(d) < _TINY else d
        c = b + an / c
        c = _TINY if abs(c) < _TINY else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < _EPS:
            return max(0.0, 1.0 - math.exp(log_pre) * h)
    raise ConvergenceError("upper gamma continued fraction", abs(delta - 1))


def _beta_cf(x: float, a: float, b: float) -> float:
    qab, qap, qam = a + b, a + 1, a - 1
    c = 1.0
    d = 1 - qab * x / qap
    d = _TINY if abs(d) < _TINY else d
    d = 1 / d
    h = d
    for mm in range(1, _MAX_IT):
        m2 = 2 * mm
        aa = mm * (b - mm) * x / ((qam + m2) * (a + m2))
        d = 1 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1 / d
        h *= d * c
        aa = -(a + mm) * (qab + mm) * x / ((a + m2) * (qap + m2))
        d = 1 + aa * d
        d = _TINY if abs(d) < _TINY else d
        c = 1 + aa / c
        c = _TINY if abs(c) < _TINY else c
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < _EPS:
            return h
    raise ConvergenceError("incomplete beta continued fraction", abs(delta - 1))


def reg_incomplete_beta(x: float, a: float, b: float) -> float:
    """I_x(a, b)."""
    if not 0 <= x <= 1:
        raise ValueError("x must lie in [0, 1]")
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be > 0")
    if x == 0 or x == 1:
        return float(x)
    log_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                 + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1) / (a + b + 2):
        return math.exp(log_front) * _beta_cf(x, a, b) / a
    return 1.0 - math.exp(log_front) * _beta_cf(1 - x, b, a) / b


def noncentral_f_cdf(x: float, n1: float = 2, n2: float = 2, lam: float = 0.0,
                     tail_tol: float = 1e-14, max_terms: int = 10000) -> float:
    """CDF of the noncentral F(n1, n2, lam) as a Poisson mixture of incomplete betas.

    Terms are summed outward from the Poisson mode so large lam stays cheap;
    summation stops once the unvisited Poisson mass is below tail_tol.
    """
    if lam < 0:
        raise ValueError("noncentrality must be >= 0")
    if x < 0:
        raise ValueError("x must be >= 0")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    z = n1 * x / (n2 + n1 * x)
    half = lam / 2

    def weight(j: int) -> float:
        if half == 0:
            return 1.0 if j == 0 else 0.0
        return math.exp(-half + j * math.log(half) - math.lgamma(j + 1))

    def term(j: int) -> float:
        return weight(j) * reg_incomplete_beta(z, n1 / 2 + j, n2 / 2)

    def tail_bound(lo: int, hi: int) -> float:
        # Poisson weights fall off geometrically away from the mode, so the
        # unvisited mass on each side is at most a geometric series
        up = weight(hi) / (1 - half / (hi + 1)) if hi + 1 > half else math.inf
        down = 0.0
        if lo >= 0:
            down = weight(lo) / (1 - lo / half) if lo < half else math.inf
        return up + down

    mode = int(half)
    total = term(mode)
    lo, hi = mode - 1, mode + 1
    used = 1
    while tail_bound(lo, hi) > tail_tol:
        if used >= max_terms:
            raise ConvergenceError("noncentral F series", tail_bound(lo, hi))
        if lo >= 0 and weight(lo) >= weight(hi):
            total += term(lo)
            lo -= 1
        else:
            total += term(hi)
            hi += 1
        used += 1
    return min(1.0, max(0.0, total))


# Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
_XGK = (0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000)
_WGK = (0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714)
_WG = (0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
       0.381830050505118944950369775488975, 0.417959183673469387755102040816327)


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    c, h = (a + b) / 2, (b - a) / 2
    fc = f(c)
    k = _WGK[7] * fc
    g = _WG[3] * fc
    for j in range(7):
        dx = h * _XGK[j]
        s = f(c - dx) + f(c + dx)
        k += _WGK[j] * s
        if j % 2 == 1:
            g += _WG[j // 2] * s
    return k * h, abs((k - g) * h)


def integrate(f, a: float, b: float, abs_tol: float = 1e-10, max_intervals: int = 4000) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod 15 quadrature. Returns (value, error estimate)."""
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    while total_err > abs_tol:
        if len(heap) >= max_intervals:
            raise ConvergenceError("adaptive quadrature", total_err)
        e, lo, hi, v = heapq.heappop(heap)
        mid = (lo + hi) / 2
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
    # re-sum to shed accumulated rounding from the running updates
    return math.fsum(item[3] for item in heap), total_err
