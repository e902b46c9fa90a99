"""Trial engine and parameter sweeps.

Each trial draws from its own child stream keyed on (master seed, cell key,
trial index). The cell key hashes (k, m, snr_db) only, so the two selection
rules see identical channels, payloads and noise in a paired comparison.
"""
from __future__ import annotations

import csv
import io
import itertools
import math
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import bounds
from .channel import ChannelRealization, NoiseSpec, complex_normal, degrade_estimate, reciprocity_perturb, transmit
from .decoder import Status, decode, greedy_pursuit, identify_support
from .encoder import bits_per_symbol, build_grant_vector, map_bits_to_symbols, random_support, select_support
from .latency import LatencyCalibration, TddFrameConfig, cast_access_latency, expected_latency_with_retry
from .spectrum import SensingDims

RULES = ("channel_aware", "uniform_random")

CSV_COLUMNS = (
    "experiment_id", "n", "k", "m", "snr_db", "tau", "selection_rule", "trials",
    "success_rate", "success_se", "ser", "ser_se", "bler", "bler_se",
    "mean_latency_ms", "bound_lower", "bound_se", "seed",
)


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


@dataclass(frozen=True)
class ExperimentConfig:
    experiment_id: str
    n: int = 1024
    k: tuple = (6,)
    m: tuple = (128,)
    snr_db: tuple = (0.0,)
    tau: int = 2
    trials: int = 10_000
    seed: int = 0
    selection_rule: tuple = ("channel_aware",)
    channel_error_variance: float = 0.0
    reciprocity_variance: float = 0.0
    noise_variance: float = 1.0
    modulation: str = "qpsk"
    attach_bound: bool = False
    bound_trials: int = 2000
    zeta_convention: str = "beta"
    bound_pdf: str = "variance2"
    pattern: str = "DSUDDDDDDD"
    retry_period_ms: float | None = None
    calibration: LatencyCalibration = field(default_factory=LatencyCalibration)

    def __post_init__(self):
        for name in ("k", "m", "snr_db", "selection_rule"):
            vals = tuple(_as_list(getattr(self, name)))
            if not vals:
                raise ValueError(f"{name}: sweep list is empty")
            object.__setattr__(self, name, vals)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if max(self.k) > min(self.m):
            raise ValueError("k must not exceed the smallest m")
        for r in self.selection_rule:
            if r not in RULES:
                raise ValueError(f"selection_rule: unknown rule {r!r}")
        for m in self.m:
            if not 1 <= m <= self.n:
                raise ValueError(f"m={m} outside [1, n]")
        if self.tau < 1:
            raise ValueError("tau must be >= 1")
        bits_per_symbol(self.modulation)
        TddFrameConfig(pattern=self.pattern, n=self.n)


@dataclass(frozen=True)
class Cell:
    k: int
    m: int
    snr_db: float
    rule: str

    @property
    def key(self) -> int:
        # rule left out on purpose: paired rules share every random draw
        return zlib.crc32(f"{self.k}|{self.m}|{float(self.snr_db)!r}".encode())


@dataclass(frozen=True)
class TrialRecord:
    success: bool
    status: str
    symbol_errors: int
    symbols: int
    block_error: bool


@dataclass(frozen=True)
class CellResult:
    experiment_id: str
    n: int
    k: int
    m: int
    snr_db: float
    tau: int
    selection_rule: str
    trials: int
    success_rate: float
    success_se: float
    ser: float
    ser_se: float
    bler: float
    bler_se: float
    mean_latency_ms: float
    bound_lower: float
    bound_se: float
    seed: int


def dims_for(n: int, m: int) -> SensingDims:
    return SensingDims(n, m, relaxed=bool(n % m))


def trial_streams(seed: int, cell_key: int, trial: int) -> list[np.random.Generator]:
    """Five independent generators: channel, selection, payload, noise, csi."""
    ss = np.random.SeedSequence(seed, spawn_key=(cell_key, trial))
    return [np.random.default_rng(s) for s in ss.spawn(5)]


def run_trial(cfg: ExperimentConfig, cell: Cell, trial_index: int) -> TrialRecord:
    n, k, m = cfg.n, cell.k, cell.m
    dims = dims_for(n, m)
    rng_ch, rng_sel, rng_pay, rng_noise, rng_csi = trial_streams(cfg.seed, cell.key, trial_index)

    h = complex_normal(rng_ch, n)
    ch = ChannelRealization(h)
    # both ends work from the same pilot-based estimate; reciprocity mismatch
    # then perturbs only the base station's copy of it
    dev = degrade_estimate(ch, cfg.channel_error_variance, rng_csi)
    bs_view = reciprocity_perturb(ChannelRealization(dev.view), cfg.reciprocity_variance, rng_csi).view

    if cell.rule == "channel_aware":
        try:
            omega = select_support(bs_view, k, dims)
            own = select_support(dev.view, k, dims)
        except ValueError:
            # orthogonal set smaller than k: no grant can be formed, counted as a failed trial
            return TrialRecord(False, Status.IDENTIFICATION_FAILED.value, 0, 0, True)
        identify = identify_support
    else:
        omega = random_support(n, k, rng_sel)
        own = omega
        identify = greedy_pursuit

    bps = bits_per_symbol(cfg.modulation)
    bits = rng_pay.integers(0, 2, size=k * bps)
    alpha = 10 ** (cell.snr_db / 10)
    beta = bounds.symbol_amplitude(m, k, alpha)
    grant = build_grant_vector(omega, map_bits_to_symbols(bits, cfg.modulation, beta), n)
    y = transmit(grant, ch, NoiseSpec(cfg.noise_variance), dims, rng_noise)

    out = decode(y, own, dev.view, dims, k, cfg.tau, cfg.noise_variance, beta, cfg.modulation, identify)
    success = out.status in (Status.GRANTED, Status.SYMBOL_ERROR)
    if out.status is Status.GRANTED:
        sym_err = int(np.any((out.decoded_bits != bits).reshape(k, bps), axis=1).sum())
        return TrialRecord(True, out.status.value, sym_err, k, sym_err > 0)
    if out.status is Status.SYMBOL_ERROR:
        return TrialRecord(True, out.status.value, k, k, True)
    return TrialRecord(success, out.status.value, 0, 0, True)


def _run_chunk(args) -> tuple[int, int, int, int]:
    cfg, cell, start, stop = args
    succ = sym_err = syms = blk = 0
    for t in range(start, stop):
        r = run_trial(cfg, cell, t)
        succ += r.success
        sym_err += r.symbol_errors
        syms += r.symbols
        blk += r.block_error
    return succ, sym_err, syms, blk


def _rate_se(count: int, total: int) -> tuple[float, float]:
    if total == 0:
        return math.nan, math.nan
    p = count / total
    return p, math.sqrt(p * (1 - p) / total)


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        env = os.environ.get("CAST_SIM_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def cells_of(cfg: ExperimentConfig) -> list[Cell]:
    return [Cell(k, m, float(s), r) for k, m, s, r in
            itertools.product(cfg.k, cfg.m, cfg.snr_db, cfg.selection_rule)]


def _chunks(cfg: ExperimentConfig, cell: Cell, size: int):
    return [(cfg, cell, a, min(a + size, cfg.trials)) for a in range(0, cfg.trials, size)]


def _cell_bound(cfg: ExperimentConfig, cell: Cell) -> tuple[float, float]:
    if not cfg.attach_bound or cell.rule != "channel_aware" or cell.m <= cell.k:
        return math.nan, math.nan
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(cell.key,)))
    est = bounds.total_bound(dims_for(cfg.n, cell.m), cell.k, 10 ** (cell.snr_db / 10),
                             cfg.bound_trials, rng, cfg.zeta_convention, cfg.bound_pdf)
    return est.mean, est.se


def _assemble(cfg: ExperimentConfig, cell: Cell, counts, bound) -> CellResult:
    succ, sym_err, syms, blk = counts
    p, p_se = _rate_se(succ, cfg.trials)
    ser, ser_se = _rate_se(sym_err, syms)
    bler, bler_se = _rate_se(blk, cfg.trials)
    attempt = cast_access_latency(cell.m, TddFrameConfig(cfg.pattern, cfg.n), cfg.calibration)
    lat = expected_latency_with_retry(1 - bler, attempt, cfg.retry_period_ms)
    return CellResult(cfg.experiment_id, cfg.n, cell.k, cell.m, cell.snr_db, cfg.tau, cell.rule,
                      cfg.trials, p, p_se, ser, ser_se, bler, bler_se, lat, bound[0], bound[1], cfg.seed)


def run_sweep(cfg: ExperimentConfig, threads: int | None = None, chunk: int = 500) -> list[CellResult]:
    """Aggregate every cell of the sweep; counts are integer sums, so order never matters."""
    threads = resolve_threads(threads)
    cells = cells_of(cfg)
    jobs = [(i, c) for i, cell in enumerate(cells) for c in _chunks(cfg, cell, chunk)]
    totals = [np.zeros(4, dtype=np.int64) for _ in cells]
    if threads == 1:
        for i, job in jobs:
            totals[i] += _run_chunk(job)
        bnds = [_cell_bound(cfg, c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            parts = ex.map(_run_chunk, [j for _, j in jobs])
            bfut = [ex.submit(_cell_bound, cfg, c) for c in cells]
            for (i, _), part in zip(jobs, parts):
                totals[i] += part
            bnds = [f.result() for f in bfut]
    return [_assemble(cfg, c, tuple(int(v) for v in t), b) for c, t, b in zip(cells, totals, bnds)]


def compare_rules(cfg: ExperimentConfig, threads: int | None = None) -> list[tuple[CellResult, CellResult]]:
    """Channel-aware and uniform-random results for each cell, on identical draws."""
    res = run_sweep(replace(cfg, selection_rule=RULES), threads)
    by = {(r.k, r.m, r.snr_db, r.selection_rule): r for r in res}
    keys = sorted({(r.k, r.m, r.snr_db) for r in res}, key=lambda t: (cfg.k.index(t[0]), cfg.m.index(t[1]),
                                                                     cfg.snr_db.index(t[2])))
    return [(by[key + ("channel_aware",)], by[key + ("uniform_random",)]) for key in keys]


def samples_for_success(ms, rates, target: float) -> float:
    """Smallest m where the success curve first reaches target, linear between grid points.

    Returns inf when the curve never gets there.
    """
    ms = np.asarray(ms, dtype=float)
    rates = np.asarray(rates, dtype=float)
    order = np.argsort(ms)
    ms, rates = ms[order], rates[order]
    if rates[0] >= target:
        return float(ms[0])
    for i in range(1, len(ms)):
        if rates[i] >= target:
            lo, hi = rates[i - 1], rates[i]
            return float(ms[i - 1] + (target - lo) / (hi - lo) * (ms[i] - ms[i - 1]))
    return math.inf


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cells_to_csv(cells: list[CellResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cells:
        d = asdict(c)
        w.writerow([_fmt(d[col]) for col in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(cells: list[CellResult], path) -> None:
    with open(path, "w", newline="") as f:
        f.write(cells_to_csv(cells))
