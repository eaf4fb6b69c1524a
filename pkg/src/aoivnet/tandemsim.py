"""Discrete-event simulation of the transmission/computation tandem queue.

Both stages are FCFS single servers with exponential service. The Lindley
recursion ``end_n = max(arrival_n, end_{n-1}) + S_n`` is evaluated in closed
form as a running maximum, so a 2e5-packet trace costs a few milliseconds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import stats

from .analytic import QueueParams


class InsufficientSampleError(ValueError):
    def __init__(self, count: int, required: int):
        super().__init__(f"only {count} completions in the averaging window (need >= {required})")
        self.count = count
        self.required = required


MIN_COMPLETIONS = 100
DEFAULT_WARMUP_FRACTION = 0.1


@dataclass(frozen=True)
class PacketRecord:
    gen_time: float
    stage1_start: float
    stage1_end: float
    stage2_start: float
    stage2_end: float

    @property
    def system_time(self) -> float:
        return self.stage2_end - self.gen_time


@dataclass(frozen=True)
class TandemTrace:
    """Timestamps of every packet that completed both stages by ``horizon``."""

    gen: np.ndarray
    s1_start: np.ndarray
    s1_end: np.ndarray
    s2_start: np.ndarray
    s2_end: np.ndarray
    horizon: float
    warmup_cut: float
    seed: object = None

    def __len__(self) -> int:
        return int(self.gen.size)

    @property
    def packets(self) -> list[PacketRecord]:
        return [
            PacketRecord(*map(float, row))
            for row in zip(self.gen, self.s1_start, self.s1_end, self.s2_start, self.s2_end)
        ]

    @property
    def system_times(self) -> np.ndarray:
        return self.s2_end - self.gen

    def window(self, warmup_cut: float | None = None) -> slice:
        """Packets whose completion falls at or after the warm-up cut."""
        cut = self.warmup_cut if warmup_cut is None else warmup_cut
        return slice(int(np.searchsorted(self.s2_end, cut)), len(self))


def fcfs_stage(arrivals: np.ndarray, service: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start and end times of a FCFS single-server stage."""
    if arrivals.size == 0:
        return arrivals.copy(), arrivals.copy()
    c = np.cumsum(service)
    end = c + np.maximum.accumulate(arrivals - (c - service))
    # the closed form can be off by an ulp; restore the ordering invariants
    start = np.maximum(end - service, arrivals)
    start[1:] = np.maximum(start[1:], end[:-1])
    end = np.maximum(end, start)
    start[1:] = np.maximum(start[1:], end[:-1])
    return start, np.maximum(end, start)


def _service(rng: np.random.Generator, mu: float, n: int) -> np.ndarray:
    if math.isinf(mu):
        return np.zeros(n)
    return rng.exponential(1.0 / mu, n)


def simulate_from_arrivals(
    gen: np.ndarray,
    service1: np.ndarray,
    service2: np.ndarray,
    horizon: float,
    warmup_cut: float = 0.0,
    seed=None,
) -> TandemTrace:
    s1_start, s1_end = fcfs_stage(gen, service1)
    s2_start, s2_end = fcfs_stage(s1_end, service2)
    keep = s2_end <= horizon
    return TandemTrace(
        gen[keep], s1_start[keep], s1_end[keep], s2_start[keep], s2_end[keep],
        horizon=horizon, warmup_cut=warmup_cut, seed=seed,
    )


def simulate(
    q: QueueParams,
    horizon: float,
    rng=None,
    warmup_fraction: float = DEFAULT_WARMUP_FRACTION,
) -> TandemTrace:
    """Simulate the tandem queue on ``[0, horizon]``.

    Stability is not required. ``mu1``/``mu2`` may be ``inf`` for zero
    service time. Packets still in the system at ``horizon`` are dropped.
    """
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    if q.lam <= 0 or q.mu1 <= 0 or q.mu2 <= 0:
        raise ValueError("rates must be > 0")
    seed = rng if isinstance(rng, (int, np.integer, list, tuple)) else None
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    chunks, t = [], 0.0
    expected = q.lam * horizon
    while t <= horizon:
        n = int(expected + 6.0 * math.sqrt(expected) + 16)
        g = t + np.cumsum(rng.exponential(1.0 / q.lam, n))
        chunks.append(g)
        t = g[-1]
    gen = np.concatenate(chunks)
    gen = gen[gen <= horizon]
    n = gen.size
    return simulate_from_arrivals(
        gen, _service(rng, q.mu1, n), _service(rng, q.mu2, n),
        horizon=horizon, warmup_cut=warmup_fraction * horizon, seed=seed,
    )


@dataclass(frozen=True)
class AoITrajectory:
    """Sawtooth ``Delta(t)``: slope one between drops at ``times``.

    ``before[k]`` / ``after[k]`` are the ages just before / after drop ``k``.
    """

    times: np.ndarray
    before: np.ndarray
    after: np.ndarray
    initial_age: float = 0.0

    def age(self, t: float) -> float:
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k < 0:
            return self.initial_age + t
        return float(self.after[k] + (t - self.times[k]))


def aoi_trajectory(trace: TandemTrace, initial_age: float = 0.0) -> AoITrajectory:
    """Breakpoints of the age process; under FCFS every completion is a drop."""
    if len(trace) == 0:
        raise ValueError("empty trace")
    times = trace.s2_end
    after = trace.s2_end - trace.gen
    before = np.empty_like(after)
    before[0] = initial_age + times[0]
    before[1:] = times[1:] - trace.gen[:-1]
    return AoITrajectory(times, before, after, initial_age)


def _window_indices(trace: TandemTrace, warmup_cut: float | None) -> tuple[int, int]:
    sl = trace.window(warmup_cut)
    i0, i1 = sl.start, sl.stop - 1
    count = i1 - i0
    if count < MIN_COMPLETIONS:
        raise InsufficientSampleError(max(count, 0), MIN_COMPLETIONS)
    return i0, i1


def aoi_area(trace: TandemTrace, warmup_cut: float | None = None) -> tuple[float, float]:
    """Area under the sawtooth between the first and last completion of the
    window, summed trapezoid by trapezoid. Returns ``(area, duration)``."""
    i0, i1 = _window_indices(trace, warmup_cut)
    d, g = trace.s2_end[i0:i1 + 1], trace.gen[i0:i1 + 1]
    start_age = d[:-1] - g[:-1]
    end_age = d[1:] - g[:-1]
    area = float(np.sum(0.5 * (start_age + end_age) * np.diff(d)))
    return area, float(d[-1] - d[0])


def aoi_area_decomposition(trace: TandemTrace, warmup_cut: float | None = None) -> tuple[float, float]:
    """Same area as :func:`aoi_area` via ``Q_n = T_n Y_n + Y_n^2 / 2`` plus the
    two boundary triangles."""
    i0, i1 = _window_indices(trace, warmup_cut)
    g = trace.gen[i0:i1 + 1]
    sys_t = trace.s2_end[i0:i1 + 1] - g
    y = np.diff(g)
    q = sys_t[1:] * y + 0.5 * y * y
    area = float(np.sum(q)) - 0.5 * sys_t[0] ** 2 + 0.5 * sys_t[-1] ** 2
    return area, float(trace.s2_end[i1] - trace.s2_end[i0])


def average_aoi(trace: TandemTrace, warmup_cut: float | None = None) -> float:
    """Time-average age over ``[first completion after warmup_cut, last completion]``."""
    area, duration = aoi_area(trace, warmup_cut)
    return area / duration


def average_aoi_decomposition(trace: TandemTrace, warmup_cut: float | None = None) -> float:
    area, duration = aoi_area_decomposition(trace, warmup_cut)
    return area / duration


def generation_only_age(trace: TandemTrace, warmup_cut: float | None = None) -> float:
    """``E[Y^2 / 2] / E[Y]`` from the same window: the age with zero service."""
    i0, i1 = _window_indices(trace, warmup_cut)
    y = np.diff(trace.gen[i0:i1 + 1])
    return float(np.mean(0.5 * y * y) / np.mean(y))


@dataclass(frozen=True)
class PoissonCheck:
    statistic: float
    pvalue: float
    n: int
    rate: float
    alpha: float = 0.01

    @property
    def rejected(self) -> bool:
        return self.pvalue < self.alpha

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "pvalue": self.pvalue, "n": self.n,
                "rate": self.rate, "alpha": self.alpha, "rejected": self.rejected}


def departure_poisson_check(
    trace: TandemTrace,
    rate: float,
    stage: int = 1,
    warmup_cut: float | None = None,
    alpha: float = 0.01,
) -> PoissonCheck:
    """Kolmogorov-Smirnov test of inter-departure gaps against Exp(``rate``).

    ``stage`` 0 tests the generation gaps themselves.
    """
    times = {0: trace.gen, 1: trace.s1_end, 2: trace.s2_end}[stage]
    cut = trace.warmup_cut if warmup_cut is None else warmup_cut
    gaps = np.diff(times[times >= cut])
    res = stats.kstest(gaps, stats.expon(scale=1.0 / rate).cdf)
    return PoissonCheck(float(res.statistic), float(res.pvalue), int(gaps.size), rate, alpha)


TRACE_COLUMNS = ("index", "gen", "s1_start", "s1_end", "s2_start", "s2_end")


def write_trace_csv(trace: TandemTrace, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for i, row in enumerate(zip(trace.gen, trace.s1_start, trace.s1_end, trace.s2_start, trace.s2_end)):
            w.writerow([i, *(repr(float(v)) for v in row)])
    return path


def read_trace_csv(path, horizon: float | None = None, warmup_cut: float = 0.0) -> TandemTrace:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    cols = [data[:, k] for k in range(1, 6)]
    if horizon is None:
        horizon = float(cols[4][-1]) if data.size else 0.0
    return TandemTrace(*cols, horizon=horizon, warmup_cut=warmup_cut)


def simulate_average_aoi(
    q: QueueParams,
    horizon: float,
    seeds,
    warmup_fraction: float = DEFAULT_WARMUP_FRACTION,
) -> tuple[float, float]:
    """Mean and standard error of the DES average AoI over independent seeds."""
    est = np.array([average_aoi(simulate(q, horizon, s, warmup_fraction)) for s in seeds])
    se = float(est.std(ddof=1) / math.sqrt(est.size)) if est.size > 1 else float("nan")
    return float(est.mean()), se
