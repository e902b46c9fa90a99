"""Lower bounds on the two-pass identification success probability.

p1: the first pick lands on a true support index; an integral over the
    strongest channel gain of a regularized gamma function.
p2: every second-pass pick beats the off-support competitors; a power of a
    noncentral F(2, 2) survival probability.
The total bound averages p1 * p2 over channel draws, because rho and zeta
depend on the realized support.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import sample_channel
from .encoder import select_support
from .spectrum import SensingDims, interval_index, lobe_bound
from .specfun import integrate, noncentral_f_cdf, reg_lower_gamma

ZETA_CONVENTIONS = ("beta", "beta2", "exact")
PDF_CONVENTIONS = ("variance2", "unit")


@dataclass(frozen=True)
class BoundInputs:
    n: int
    m: int
    k: int
    alpha: float
    rho: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        if not (1 <= self.k <= self.m):
            raise ValueError("need m >= k >= 1")
        if self.rho < 0 or self.zeta < 0:
            raise ValueError("rho and zeta must be >= 0")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")

    @property
    def beta(self) -> float:
        return math.sqrt(2 * self.m * self.alpha / self.k)


@dataclass(frozen=True)
class BoundEstimate:
    mean: float
    se: float
    trials: int


def symbol_amplitude(m: int, k: int, alpha: float) -> float:
    """beta = sqrt(2 m alpha / k): per-subcarrier amplitude at linear SNR alpha."""
    return math.sqrt(2 * m * alpha / k)


def max_gain_pdf(r: float, n: int, convention: str = "variance2") -> float:
    """Density of max_i |h_i| over n i.i.d. Rayleigh gains.

    variance2: E|h_i|^2 = 2, the form used inside the bound integral.
    unit:      E|h_i|^2 = 1, the simulator's channel.
    """
    if r <= 0:
        return 0.0
    if convention not in PDF_CONVENTIONS:
        raise ValueError(f"unknown pdf convention {convention!r}")
    s = 2.0 if convention == "variance2" else 1.0
    e = math.exp(-r * r / s)
    return n * (2 / s) * r * e * (-math.expm1(-r * r / s)) ** (n - 1)


def rho_of_support(anchor: int, support, dims: SensingDims, include_anchor: bool = False) -> float:
    """Sum of per-interval correlation bounds between the anchor and the other support indices.

    Distances are cyclic. With include_anchor the anchor itself contributes
    the first-interval term, the most pessimistic reading of a k-term sum.
    """
    total = 0.0
    for w in np.asarray(support, dtype=np.int64):
        if w == anchor:
            if include_anchor:
                total += float(lobe_bound(dims.m, 0))
            continue
        d = abs(int(w) - int(anchor)) % dims.n
        d = min(d, dims.n - d)
        total += float(lobe_bound(dims.m, interval_index(dims, d)))
    return total


@lru_cache(maxsize=4096)
def _p1_cached(n: int, m: int, k: int, alpha: float, rho: float, pdf: str, tol: float) -> float:
    c = alpha * m / (2 * k) * (1 - rho) ** 2
    s = 2.0 if pdf == "variance2" else 1.0
    # P(max |h| > r) <= n exp(-r^2/s) < 1e-13 beyond r_max
    r_max = math.sqrt(s * math.log(n / 1e-13))

    def f(r):
        return reg_lower_gamma(m, c * r * r) * max_gain_pdf(r, n, pdf)

    # the max-gain density is negligible below its 1e-16 quantile; start there
    r_lo = math.sqrt(-s * math.log1p(-(1e-16) ** (1 / n)))
    val, _ = integrate(f, r_lo, r_max, abs_tol=tol)
    return min(1.0, max(0.0, val))


def p1_lower_bound(inp: BoundInputs, pdf: str = "variance2", tol: float = 1e-10) -> float:
    if inp.rho >= 1:
        return 0.0
    return _p1_cached(inp.n, inp.m, inp.k, float(inp.alpha), round(float(inp.rho), 12), pdf, tol)


def p2_lower_bound(k: int, m: int, zeta: float) -> float:
    if not m > k >= 1:
        raise ValueError("need m > k >= 1")
    if zeta < 0:
        raise ValueError("zeta must be >= 0")
    if k == 1:
        return 1.0
    return (1 - noncentral_f_cdf(1.0, 2, 2, zeta)) ** ((k - 1) * (m - k))


def zeta_of(beta: float, gain_sq: float, convention: str = "beta") -> float:
    """Noncentrality for the weakest second-pass gain.

    beta:  beta |h|^2, taken verbatim.
    beta2: beta^2 |h|^2.
    exact: 2 beta^2 |h|^2, the chi-square noncentrality of |beta h + v|^2 / (1/2).
    """
    if convention == "beta":
        return beta * gain_sq
    if convention == "beta2":
        return beta * beta * gain_sq
    if convention == "exact":
        return 2 * beta * beta * gain_sq
    raise ValueError(f"unknown zeta convention {convention!r}")


def bound_for_channel(h: np.ndarray, dims: SensingDims, k: int, alpha: float,
                      zeta_convention: str = "beta", pdf: str = "variance2",
                      include_anchor: bool = False) -> float:
    """p1 * p2 for one channel draw, with the support chosen by channel-aware selection."""
    support = select_support(h, k, dims)
    anchor = int(np.argmax(np.abs(h))) + 1
    rho = rho_of_support(anchor, support, dims, include_anchor)
    beta = symbol_amplitude(dims.m, k, alpha)
    others = support[support != anchor]
    gmin = float(np.min(np.abs(h[others - 1]) ** 2)) if len(others) else 0.0
    zeta = zeta_of(beta, gmin, zeta_convention)
    inp = BoundInputs(dims.n, dims.m, k, alpha, rho, zeta)
    p2 = p2_lower_bound(k, dims.m, zeta) if dims.m > k else 0.0
    if p2 == 0.0:
        return 0.0
    return p1_lower_bound(inp, pdf) * p2


def total_bound(dims: SensingDims, k: int, alpha: float, trials: int, rng: np.random.Generator,
                zeta_convention: str = "beta", pdf: str = "variance2",
                include_anchor: bool = False) -> BoundEstimate:
    """Monte Carlo average of p1 * p2 over channel draws."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vals = np.array([
        bound_for_channel(sample_channel(dims.n, rng).h, dims, k, alpha,
                          zeta_convention, pdf, include_anchor)
        for _ in range(trials)
    ])
    se = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundEstimate(float(vals.mean()), se, trials)
