"""Synthetic tick streams for tests, benchmarks and demonstrations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NS = 1_000_000_000


@dataclass(frozen=True)
class Stream:
    t: np.ndarray  # int64 ns
    p: np.ndarray
    v: np.ndarray
    burst: np.ndarray | None = None  # tick lies inside a burst
    quiet: np.ndarray | None = None  # tick lies in the quiet regime

    def __len__(self):
        return len(self.t)

    def to_tsv(self, path, extra_cols: int = 0) -> None:
        """Write ``t p v`` (plus zero-filled padding columns) as TSV."""
        pad = "\t0" * extra_cols
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            for t, p, v in zip(self.t.tolist(), self.p.tolist(), self.v.tolist()):
                fh.write(f"{t}\t{p!r}\t{int(v)}{pad}\n")


def random_walk(n_ticks: int, seed: int = 0, mean_dt: float = 0.5, price0: float = 100.0,
                tick_size: float = 0.01, max_shares: int = 500,
                t0: float = 34_200.0) -> Stream:
    """Poisson arrivals, random-walk prices on a tick grid, uniform lot sizes."""
    rng = np.random.default_rng(seed)
    gaps = rng.exponential(mean_dt, n_ticks)
    gaps[0] = 0.0
    t = int(t0 * NS) + np.cumsum(np.round(gaps * NS).astype(np.int64))
    steps = rng.choice([-1, 0, 0, 1], size=n_ticks)
    steps[0] = 0
    p = np.round(price0 / tick_size + np.cumsum(steps)) * tick_size
    v = rng.integers(1, max_shares + 1, n_ticks).astype(float)
    return Stream(t, p, v)


def constant(n_ticks: int, dt: float = 1.0, price: float = 50.0, shares: float = 100.0,
             t0: float = 34_200.0) -> Stream:
    """Equally spaced ticks with fixed price and size."""
    t = int(t0 * NS) + np.arange(n_ticks, dtype=np.int64) * int(round(dt * NS))
    return Stream(t, np.full(n_ticks, price), np.full(n_ticks, shares))


def two_regime(tau: float, seed: int = 0, half_taus: float = 8.0, base_per_tau: float = 64.0,
               burst_peak: float = 20.0, burst_taus: float = 0.25, decay_taus: float = 0.5,
               price0: float = 100.0, tick_size: float = 0.01) -> Stream:
    """Bursty first half followed by a quiet second half of equal duration.

    Bursty half: Poisson background at ``base_per_tau`` ticks per tau,
    interrupted every 0.75 tau by a burst lasting ``burst_taus`` tau during
    which the arrival rate ramps linearly up to ``burst_peak`` times the
    background; the last burst ends exactly at the half-way point.
    Quiet half: deterministic arrivals whose rate starts at the background
    level and decays with time constant ``decay_taus`` tau, so the recent
    bursts keep dominating the execution flow.
    """
    rng = np.random.default_rng(seed)
    half = half_taus * tau
    rate = base_per_tau / tau
    length = burst_taus * tau
    starts = np.arange(half - length, -1e-9, -0.75 * tau)[::-1]
    times: list[float] = []
    burst: list[bool] = []
    t = 0.0
    ramp = rate * (burst_peak - 1) / (2 * length)
    for s in starts:
        while True:
            t += rng.exponential(1 / rate)
            if t >= s:
                break
            times.append(t)
            burst.append(False)
        # cumulative count rate*u + ramp*u^2 inverted at integer counts
        k = np.arange(1, int(rate * length + ramp * length ** 2) + 1)
        u = (-rate + np.sqrt(rate * rate + 4 * ramp * k)) / (2 * ramp)
        times += list(s + u)
        burst += [True] * len(u)
        t = s + length
    n_bursty = len(times)
    d = decay_taus * tau
    k = np.arange(1, int(rate * d * (1 - np.exp(-half / d))) + 1)
    quiet_times = half - d * np.log1p(-k / (rate * d))
    t_all = np.concatenate([times, quiet_times])
    n_ticks = len(t_all)
    t_ns = int(34_200 * NS) + np.round(t_all * NS).astype(np.int64)
    steps = rng.choice([-1, 0, 1], size=n_ticks)
    steps[0] = 0
    p = np.round(price0 / tick_size + np.cumsum(steps)) * tick_size
    is_burst = np.zeros(n_ticks, dtype=bool)
    is_burst[:n_bursty] = burst
    is_quiet = np.zeros(n_ticks, dtype=bool)
    is_quiet[n_bursty:] = True
    return Stream(t_ns, p, np.full(n_ticks, 100.0), is_burst, is_quiet)
