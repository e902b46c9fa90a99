"""Channel-aware support selection and grant construction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectrum import SensingDims, SparseFreqVector, orthogonal_index_set

BITS_PER_SYMBOL = {"qpsk": 2}

# Gray map, (b0, b1) -> quadrant; b0 drives the real sign, b1 the imaginary sign.
_QPSK = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / math.sqrt(2)


@dataclass(frozen=True)
class GrantPayload:
    user_support: np.ndarray
    info_bits: np.ndarray
    modulation: str = "qpsk"

    def __post_init__(self):
        bps = bits_per_symbol(self.modulation)
        if len(self.info_bits) != len(self.user_support) * bps:
            raise ValueError("info_bits length must equal k * bits_per_symbol")


def bits_per_symbol(modulation: str) -> int:
    try:
        return BITS_PER_SYMBOL[modulation.lower()]
    except KeyError:
        raise ValueError(f"unsupported modulation {modulation!r}") from None


def top_k(values: np.ndarray, k: int) -> np.ndarray:
    """Positions of the k largest entries, ties to the lower position."""
    return np.argsort(-values, kind="stable")[:k]


def select_support(h: np.ndarray, k: int, dims: SensingDims) -> np.ndarray:
    """Strongest subcarrier plus the k-1 strongest of its orthogonal set.

    Returns 1-based indices in ascending order.
    """
    mag = np.abs(h)
    anchor = int(np.argmax(mag)) + 1
    gamma = orthogonal_index_set(dims, anchor)
    if k > len(gamma):
        raise ValueError(f"k={k} exceeds the orthogonal set size {len(gamma)}")
    picked = gamma[top_k(mag[gamma - 1], k)]
    return np.sort(picked)


def random_support(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform size-k subset of [1, n], ascending."""
    return np.sort(rng.choice(n, size=k, replace=False) + 1)


def map_bits_to_symbols(bits, modulation: str = "qpsk", beta: float = 1.0) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64)
    bps = bits_per_symbol(modulation)
    if bits.ndim != 1 or len(bits) % bps:
        raise ValueError(f"bit length {bits.size} not divisible by {bps}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0/1")
    pairs = bits.reshape(-1, 2)
    return beta * _QPSK[2 * pairs[:, 0] + pairs[:, 1]]


def build_grant_vector(support, symbols, n: int) -> SparseFreqVector:
    support = np.asarray(support, dtype=np.int64)
    symbols = np.asarray(symbols, dtype=complex)
    if len(support) != len(symbols):
        raise ValueError("support and symbol counts differ")
    # i-th smallest index carries the i-th symbol
    return SparseFreqVector(n=n, support=np.sort(support), values=symbols)


def support_rank(support, n: int, k: int) -> int:
    """Colexicographic rank of a k-subset of [1, n]."""
    s = np.sort(np.asarray(support, dtype=np.int64))
    if len(s) != k or len(np.unique(s)) != k or (k and (s[0] < 1 or s[-1] > n)):
        raise ValueError("not a valid size-k subset of [1, n]")
    return sum(math.comb(int(c) - 1, i + 1) for i, c in enumerate(s))


def support_unrank(rank: int, n: int, k: int) -> np.ndarray:
    if not 0 <= rank < math.comb(n, k):
        raise ValueError("rank out of range")
    out = []
    for i in range(k, 0, -1):
        c = i - 1
        while math.comb(c + 1, i) <= rank:
            c += 1
        out.append(c + 1)
        rank -= math.comb(c, i)
    return np.array(out[::-1], dtype=np.int64)
