"""Two-pass greedy support identification, tau-close acceptance and symbol recovery."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .encoder import bits_per_symbol, top_k
from .spectrum import SensingDims, idft_columns, orthogonal_index_set


class Status(str, Enum):
    GRANTED = "granted"
    NOT_GRANTED = "not_granted"
    IDENTIFICATION_FAILED = "identification_failed"
    SYMBOL_ERROR = "symbol_error"


@dataclass(frozen=True)
class DecodeOutcome:
    status: Status
    decoded_support: np.ndarray
    decoded_bits: np.ndarray | None = None
    symbols: np.ndarray | None = None

    def __post_init__(self):
        if (self.decoded_bits is not None) != (self.status is Status.GRANTED):
            raise ValueError("decoded_bits must be present exactly when granted")


def correlation_sweep(y: np.ndarray, dims: SensingDims) -> np.ndarray:
    """|<a_w, y>| for every w = 1..n via one zero-padded length-n FFT."""
    return np.abs(np.fft.fft(y, dims.n)) / math.sqrt(dims.m)


def matched_filter(y: np.ndarray, dims: SensingDims, candidates, method: str = "fft") -> np.ndarray:
    cand = np.atleast_1d(np.asarray(candidates, dtype=np.int64))
    if cand.size == 0:
        raise ValueError("empty candidate set")
    if method == "fft":
        if np.any(cand < 1) or np.any(cand > dims.n):
            raise IndexError("candidate outside [1, n]")
        return correlation_sweep(y, dims)[cand - 1]
    if method == "direct":
        return np.abs(idft_columns(dims, cand).conj().T @ y)
    raise ValueError(f"unknown method {method!r}")


def lattice_sweep(y: np.ndarray, dims: SensingDims, anchor: int) -> np.ndarray:
    """|<a_g, y>| over the strict orthogonal set of anchor, in orthogonal_index_set order.

    Demodulating y by the anchor frequency turns the set into the m-point DFT grid.
    """
    l = np.arange(dims.m)
    z = y * np.exp(-2j * np.pi * (((anchor - 1) * l) % dims.n) / dims.n)
    return np.abs(np.fft.fft(z)) / math.sqrt(dims.m)


def identify_support(y: np.ndarray, k: int, dims: SensingDims, trace: list | None = None) -> np.ndarray:
    """Strongest correlation over all n, then the k-1 strongest of its orthogonal set.

    Exactly two correlation sweeps regardless of k; `trace` receives one
    entry per sweep when given. Returns 1-based indices, ascending.
    """
    if k > dims.m:
        raise ValueError("k must not exceed m")
    c = correlation_sweep(y, dims)
    if trace is not None:
        trace.append("all")
    w1 = int(np.argmax(c)) + 1
    if k == 1:
        return np.array([w1], dtype=np.int64)
    gamma = orthogonal_index_set(dims, w1)[1:]
    if k - 1 > len(gamma):
        raise ValueError(f"k-1={k - 1} exceeds the orthogonal set size {len(gamma)}")
    cg = lattice_sweep(y, dims, w1)[1:] if dims.strict else matched_filter(y, dims, gamma, "direct")
    if trace is not None:
        trace.append("lattice")
    rest = gamma[top_k(cg, k - 1)]
    return np.sort(np.r_[w1, rest])


def greedy_pursuit(y: np.ndarray, k: int, dims: SensingDims) -> np.ndarray:
    """k-step orthogonal matching pursuit; the decoder for unstructured supports."""
    chosen: list[int] = []
    r = y
    for _ in range(k):
        c = correlation_sweep(r, dims)
        if chosen:
            c[np.array(chosen) - 1] = -1.0
        chosen.append(int(np.argmax(c)) + 1)
        a = idft_columns(dims, chosen)
        z, *_ = np.linalg.lstsq(a, y, rcond=None)
        r = y - a @ z
    return np.sort(np.array(chosen, dtype=np.int64))


def _cyclic_dist(a: np.ndarray, b: np.ndarray, n: int | None) -> np.ndarray:
    d = np.abs(a - b)
    return d if n is None else np.minimum(d, n - d)


def _pairing(est, own, tau: int, n: int | None):
    est = np.sort(np.asarray(est, dtype=np.int64))
    own = np.sort(np.asarray(own, dtype=np.int64))
    if len(est) != len(own):
        raise ValueError("support sizes differ")
    # ascending pairing; on the cyclic index ring also try rotations so a
    # wrap-around neighbour (1 vs n) pairs with its own index
    shifts = range(len(est)) if n is not None else (0,)
    for s in shifts:
        cand = np.roll(est, s)
        if np.all(_cyclic_dist(cand, own, n) <= tau - 1):
            return cand
    return None


def tau_close_match(est, own, tau: int, n: int | None = None) -> bool:
    """Every decoded index lies within +-(tau-1) of its paired own index.

    With n given, distances are taken on the cyclic subcarrier ring.
    """
    return _pairing(est, own, tau, n) is not None


def snap_support(est, own, tau: int, n: int | None = None) -> np.ndarray:
    if _pairing(est, own, tau, n) is None:
        raise ValueError("decoded support is not tau-close to the own support")
    return np.sort(np.asarray(own, dtype=np.int64))


def estimate_symbols(y: np.ndarray, support, h_view: np.ndarray, dims: SensingDims,
                     noise_var: float = 0.0, prior_power: float | None = None) -> np.ndarray:
    """Least squares on the m x k reduced system A_Omega diag(h_Omega).

    With prior_power set, the normal equations get the LMMSE ridge
    noise_var / prior_power.
    """
    support = np.asarray(support, dtype=np.int64)
    if dims.m <= len(support):
        raise ValueError("need m > k for an overdetermined system")
    g = idft_columns(dims, support) * h_view[support - 1][None, :]
    gram = g.conj().T @ g
    if prior_power:
        gram = gram + (noise_var / prior_power) * np.eye(len(support))
    if np.linalg.cond(gram) > 1e12:
        raise np.linalg.LinAlgError("reduced system is rank deficient")
    return np.linalg.solve(gram, g.conj().T @ y)


def slice_symbols(s: np.ndarray, modulation: str = "qpsk") -> np.ndarray:
    """Nearest QPSK point per symbol; a zero real/imag part counts as positive."""
    bits_per_symbol(modulation)
    s = np.asarray(s)
    b0 = (s.real < 0).astype(np.int64)
    b1 = (s.imag < 0).astype(np.int64)
    return np.column_stack([b0, b1]).ravel()


def decode(y: np.ndarray, own_support, h_view: np.ndarray, dims: SensingDims, k: int, tau: int,
           noise_var: float = 1.0, beta: float = 1.0, modulation: str = "qpsk",
           identify=identify_support) -> DecodeOutcome:
    """Device-side pipeline: identify, accept if tau-close to own support, recover bits."""
    try:
        est = identify(y, k, dims)
    except ValueError:
        return DecodeOutcome(Status.IDENTIFICATION_FAILED, np.array([], dtype=np.int64))
    if not tau_close_match(est, own_support, tau, dims.n):
        return DecodeOutcome(Status.NOT_GRANTED, est)
    sup = snap_support(est, own_support, tau, dims.n)
    try:
        s = estimate_symbols(y, sup, h_view, dims, noise_var)
    except np.linalg.LinAlgError:
        return DecodeOutcome(Status.SYMBOL_ERROR, sup)
    s = s / beta
    return DecodeOutcome(Status.GRANTED, sup, slice_symbols(s, modulation), s)

