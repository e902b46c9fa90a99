"""TDD uplink access latency: subframe-scheduled grants, mini-slot grants and sparse early-sample grants.

All times are in milliseconds. Every access latency is the sum
t_up = t_prop + (t_buff + t_dec) + t_wait.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUBCARRIER_SPACING_HZ = 15_000.0

# LTE TDD uplink/downlink configurations 5 and 4
PATTERN_9_1 = "DSUDDDDDDD"
PATTERN_8_2 = "DSUUDDDDDD"


@dataclass(frozen=True)
class TddFrameConfig:
    pattern: str = PATTERN_9_1
    n: int = 1024
    subframe_ms: float = 1.0
    symbols_per_subframe: int = 14

    def __post_init__(self):
        p = self.pattern.upper()
        if len(p) != 10 or set(p) - set("DSU"):
            raise ValueError(f"pattern must be 10 characters over D/S/U, got {self.pattern!r}")
        if "U" not in p:
            raise ValueError(f"pattern {self.pattern!r} has no uplink subframe")
        object.__setattr__(self, "pattern", p)

    @property
    def sample_rate(self) -> float:
        return self.n * SUBCARRIER_SPACING_HZ

    @property
    def symbol_ms(self) -> float:
        """Useful OFDM symbol length, 1/15 kHz = 66.7 us."""
        return 1e3 / SUBCARRIER_SPACING_HZ

    @property
    def frame_ms(self) -> float:
        return len(self.pattern) * self.subframe_ms

    def dl_ul_ratio(self) -> str:
        ul = self.pattern.count("U")
        return f"{len(self.pattern) - ul}:{ul}"


@dataclass(frozen=True)
class LatencyCalibration:
    """Constants shared by every access scheme; fitted once and then frozen."""
    t_prop_ms: float = 0.005
    t_dec_floor_ms: float = 0.55
    t_dec_per_sample_us: float = 0.473
    arrival_phase_ms: float = 0.41
    arrival_period_ms: float = 2.0
    minislot_symbols: int = 2

    def decode_ms(self, samples: int) -> float:
        return self.t_dec_floor_ms + self.t_dec_per_sample_us * 1e-3 * samples


@dataclass(frozen=True)
class LatencyBreakdown:
    t_prop: float
    t_buff: float
    t_dec: float
    t_wait: float

    def __post_init__(self):
        for name in ("t_prop", "t_buff", "t_dec", "t_wait"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def t_proc(self) -> float:
        return self.t_buff + self.t_dec

    @property
    def t_up(self) -> float:
        return self.t_prop + self.t_proc + self.t_wait


def wait_to_uplink(config: TddFrameConfig, t_ms: float) -> float:
    """Time from t to the start of the next uplink subframe.

    Uplink data is scheduled on whole subframes, so a time inside a U
    subframe waits for the next U boundary; exactly on a U boundary waits 0.
    """
    sf = config.subframe_ms
    idx = math.ceil(t_ms / sf - 1e-9)
    for step in range(len(config.pattern) + 1):
        if config.pattern[(idx + step) % len(config.pattern)] == "U":
            return max(0.0, (idx + step) * sf - t_ms)
    raise ValueError("pattern has no uplink subframe")


def arrival_times(config: TddFrameConfig, cal: LatencyCalibration) -> np.ndarray:
    """Packet arrivals over one frame: one every arrival_period_ms, offset by the phase."""
    count = int(round(config.frame_ms / cal.arrival_period_ms))
    return cal.arrival_phase_ms + cal.arrival_period_ms * np.arange(count)


def conventional_access_latency(config: TddFrameConfig, cal: LatencyCalibration) -> LatencyBreakdown:
    """Subframe-level TDD: after the grant is handled the device waits for the next U subframe."""
    proc = cal.t_prop_ms + cal.t_dec_floor_ms
    waits = [wait_to_uplink(config, a + proc) for a in arrival_times(config, cal)]
    return LatencyBreakdown(cal.t_prop_ms, 0.0, cal.t_dec_floor_ms, float(np.mean(waits)))


def minislot_access_latency(config: TddFrameConfig, cal: LatencyCalibration,
                            minislot_symbols: int | None = None) -> LatencyBreakdown:
    """Mini-slot grant: the full grant symbols are buffered and decoded, then the link flips."""
    ns = cal.minislot_symbols if minislot_symbols is None else minislot_symbols
    if ns not in (2, 4, 7):
        raise ValueError("mini-slot length must be 2, 4 or 7 symbols")
    return LatencyBreakdown(cal.t_prop_ms, ns * config.symbol_ms, cal.decode_ms(config.n), 0.0)


def cast_access_latency(m: int, config: TddFrameConfig, cal: LatencyCalibration) -> LatencyBreakdown:
    """Sparse grant decoded from the first m samples; the link flips right after the grant."""
    if not 1 <= m <= config.n:
        raise ValueError("need 1 <= m <= n")
    return LatencyBreakdown(cal.t_prop_ms, 1e3 * m / config.sample_rate, cal.decode_ms(m), 0.0)


def expected_latency_with_retry(p_success: float, single_attempt, retry_period: float | None = None) -> float:
    """Mean latency when a failed attempt is repeated after retry_period (geometric retries).

    retry_period defaults to the attempt latency itself, i.e. the whole
    procedure is rerun. Returns inf for p_success = 0.
    """
    t_up = single_attempt.t_up if isinstance(single_attempt, LatencyBreakdown) else float(single_attempt)
    if not 0 <= p_success <= 1:
        raise ValueError("p_success must lie in [0, 1]")
    if p_success == 0:
        return math.inf
    period = t_up if retry_period is None else retry_period
    return t_up + period * (1 / p_success - 1)


def latency_table(patterns, m: int, cal: LatencyCalibration, n: int = 1024) -> list[dict]:
    """One row per TDD pattern with the three schemes' t_up in ms."""
    rows = []
    for pat in patterns:
        cfg = TddFrameConfig(pattern=pat, n=n)
        rows.append({
            "pattern": cfg.pattern,
            "dl_ul": cfg.dl_ul_ratio(),
            "m": m,
            "conventional_ms": conventional_access_latency(cfg, cal).t_up,
            "minislot_ms": minislot_access_latency(cfg, cal).t_up,
            "cast_ms": cast_access_latency(m, cfg, cal).t_up,
        })
    return rows
