"""Rayleigh channel draws, the sparse uplink-grant transmit path, and CSI impairments."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .spectrum import SensingDims, SparseFreqVector, idft_columns


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    estimate: np.ndarray | None = None

    def __post_init__(self):
        if self.estimate is not None and len(self.estimate) != len(self.h):
            raise ValueError("estimate length differs from channel length")

    @property
    def n(self) -> int:
        return len(self.h)

    @property
    def view(self) -> np.ndarray:
        """What a receiver sees: the estimate when present, else the true gains."""
        return self.h if self.estimate is None else self.estimate


@dataclass(frozen=True)
class NoiseSpec:
    variance: float = 1.0

    def __post_init__(self):
        if self.variance < 0:
            raise ValueError("noise variance must be >= 0")


def complex_normal(rng: np.random.Generator, size, variance: float = 1.0) -> np.ndarray:
    """CN(0, variance) samples."""
    g = rng.standard_normal((2,) + tuple(np.atleast_1d(size)))
    return (g[0] + 1j * g[1]) * math.sqrt(variance / 2)


def sample_channel(n: int, rng: np.random.Generator) -> ChannelRealization:
    if n < 1:
        raise ValueError("n must be >= 1")
    return ChannelRealization(h=complex_normal(rng, n))


def transmit(grant: SparseFreqVector, ch: ChannelRealization, noise: NoiseSpec,
             dims: SensingDims, rng: np.random.Generator | None = None) -> np.ndarray:
    """First m time samples of the faded grant plus CN(0, noise.variance) noise."""
    if not (grant.n == ch.n == dims.n):
        raise ValueError(f"dimension mismatch: grant {grant.n}, channel {ch.n}, dims {dims.n}")
    y = np.zeros(dims.m, dtype=complex)
    if grant.k:
        cols = idft_columns(dims, grant.support)
        y = cols @ (ch.h[grant.support - 1] * grant.values)
    if noise.variance > 0:
        if rng is None:
            raise ValueError("noisy transmit needs an rng")
        y = y + complex_normal(rng, dims.m, noise.variance)
    return y


def transmit_dense(grant: SparseFreqVector, ch: ChannelRealization, dims: SensingDims) -> np.ndarray:
    """Noise-free reference path: full n-point inverse transform, keep m samples."""
    x = ch.h * grant.dense()
    return np.fft.ifft(x)[: dims.m] * dims.n / math.sqrt(dims.m)


def degrade_estimate(ch: ChannelRealization, error_variance: float,
                     rng: np.random.Generator) -> ChannelRealization:
    if error_variance < 0:
        raise ValueError("error variance must be >= 0")
    est = ch.h.copy()
    if error_variance > 0:
        est = est + complex_normal(rng, ch.n, error_variance)
    return replace(ch, estimate=est)


def reciprocity_perturb(ch: ChannelRealization, mismatch_variance: float,
                        rng: np.random.Generator) -> ChannelRealization:
    """Base-station view of the channel: reciprocal gains plus CN mismatch.

    Same mechanics as degrade_estimate; kept separate so the two impairments
    draw from their own streams and can be switched independently.
    """
    return degrade_estimate(ch, mismatch_variance, rng)
