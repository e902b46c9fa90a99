"""Partial-IDFT sensing model.

The sensing matrix A keeps the first m rows of the n-point inverse DFT, with
columns scaled to unit 2-norm:

    A[l, w] = exp(+j 2 pi (w-1)(l-1) / n) / sqrt(m),   l = 1..m, w = 1..n

Subcarrier indices are 1-based everywhere in the public API.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ORTH_EPS = 1e-8


@dataclass(frozen=True)
class SensingDims:
    n: int
    m: int
    relaxed: bool = False

    def __post_init__(self):
        if not (1 <= self.m <= self.n):
            raise ValueError(f"need 1 <= m <= n, got n={self.n}, m={self.m}")
        if self.n % self.m and not self.relaxed:
            raise ValueError(
                f"n={self.n} is not a multiple of m={self.m}; pass relaxed=True "
                "to build orthogonal sets from exact nulls only"
            )

    @property
    def strict(self) -> bool:
        return self.n % self.m == 0

    @property
    def spacing(self) -> float:
        return self.n / self.m


@dataclass(frozen=True)
class SparseFreqVector:
    """Length-n frequency vector stored by its support (1-based, ascending)."""
    n: int
    support: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        sup = np.asarray(self.support, dtype=np.int64)
        vals = np.asarray(self.values, dtype=complex)
        if sup.shape != vals.shape:
            raise ValueError("support and values differ in length")
        if len(np.unique(sup)) != len(sup):
            raise ValueError("duplicate support indices")
        if len(sup) and (sup.min() < 1 or sup.max() > self.n):
            raise ValueError("support index outside [1, n]")
        order = np.argsort(sup, kind="stable")
        object.__setattr__(self, "support", sup[order])
        object.__setattr__(self, "values", vals[order])

    @property
    def k(self) -> int:
        return len(self.support)

    def dense(self) -> np.ndarray:
        out = np.zeros(self.n, dtype=complex)
        out[self.support - 1] = self.values
        return out


def _check_index(dims: SensingDims, w) -> np.ndarray:
    w = np.asarray(w, dtype=np.int64)
    if np.any(w < 1) or np.any(w > dims.n):
        raise IndexError(f"subcarrier index outside [1, {dims.n}]")
    return w


def idft_columns(dims: SensingDims, idx) -> np.ndarray:
    """Columns of A for the given 1-based indices, shape (m, len(idx))."""
    idx = _check_index(dims, np.atleast_1d(idx))
    l = np.arange(dims.m)[:, None]
    # reduce the phase product mod n in integers so large n stays exact
    ph = ((idx[None, :] - 1) * l) % dims.n
    return np.exp(2j * np.pi * ph / dims.n) / math.sqrt(dims.m)


def idft_column(dims: SensingDims, w: int) -> np.ndarray:
    return idft_columns(dims, [w])[:, 0]


def column_correlation(dims: SensingDims, delta) -> np.ndarray | float:
    """|<a_w, a_{w+delta}>| in closed form (Dirichlet kernel), 1 at delta = 0 mod n."""
    d = np.mod(np.asarray(delta, dtype=np.int64), dims.n)
    scalar = d.ndim == 0
    d = np.atleast_1d(d)
    out = np.ones(d.shape)
    nz = d != 0
    x = np.pi * d[nz] / dims.n
    out[nz] = np.abs(np.sin(dims.m * x) / np.sin(x)) / dims.m
    return float(out[0]) if scalar else out


def _main_lobe_check(dims: SensingDims, delta):
    a = np.abs(np.asarray(delta, dtype=np.int64))
    if np.any(2 * dims.m * a < dims.n):
        raise ValueError("|delta| < n/(2m): inside the main lobe")
    return a


def interval_index(dims: SensingDims, delta):
    """Smallest i >= 0 with |delta| <= (i+1) n/m, for |delta| >= n/(2m)."""
    a = _main_lobe_check(dims, delta)
    # ceil(a m / n) - 1 in exact integer arithmetic
    i = np.maximum(0, -((-a * dims.m) // dims.n) - 1)
    return int(i) if np.ndim(i) == 0 else i


def lobe_bound(m: int, i) -> np.ndarray | float:
    """1 / (m |sin(pi (2i+1) / (2m))|)."""
    return 1.0 / (m * np.abs(np.sin(np.pi * (2 * np.asarray(i) + 1) / (2 * m))))


def correlation_upper_bound(dims: SensingDims, delta):
    i = interval_index(dims, delta)
    b = lobe_bound(dims.m, i)
    return float(b) if np.ndim(b) == 0 else b


def orthogonal_index_set(dims: SensingDims, anchor: int) -> np.ndarray:
    """Indices whose columns are orthogonal to the anchor column, anchor first.

    Strict mode: anchor + c n/m for c = 0..m-1, wrapped into [1, n].
    Relaxed mode: every g whose correlation with the anchor is <= ORTH_EPS,
    which for a partial DFT are the multiples of n / gcd(n, m).
    """
    _check_index(dims, anchor)
    return (anchor - 1 + _orth_offsets(dims)) % dims.n + 1


@lru_cache(maxsize=256)
def _orth_offsets(dims: SensingDims) -> np.ndarray:
    if dims.strict:
        offs = np.arange(dims.m, dtype=np.int64) * (dims.n // dims.m)
    else:
        d = np.arange(1, dims.n, dtype=np.int64)
        offs = np.r_[0, d[column_correlation(dims, d) <= ORTH_EPS]]
    offs.flags.writeable = False
    return offs


def sensing_matrix(dims: SensingDims) -> np.ndarray:
    """Dense A; only meant for small n (tests and oracles)."""
    if dims.n > 4096:
        raise ValueError("dense sensing matrix limited to n <= 4096")
    return idft_columns(dims, np.arange(1, dims.n + 1))
