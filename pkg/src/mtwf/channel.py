"""Random per-relay, per-subcarrier squared channel gains.

Base gains are drawn i.i.d. and raised to the channel-difference exponent
``plc``; ``plc = 0`` makes every link identical. The A-side and B-side gains
come from separate child streams, each filled relay by relay, so the first
``M`` relays of a realization with more relays are the same draws. That
gives common random numbers across relay-count sweeps.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

GAIN_FLOOR = 1e-6
BASE_DISTRIBUTIONS = ("exponential", "uniform01")


@dataclass(frozen=True)
class ChannelRealization:
    """Squared gains ``h2[m, n]`` (A to relay m) and ``g2[m, n]`` (B to relay m)."""

    h2: np.ndarray
    g2: np.ndarray
    sigma2: float = 1.0
    bandwidth: float = 16.0

    def __post_init__(self):
        if self.h2.ndim != 2 or self.h2.shape != self.g2.shape:
            raise ValueError("h2 and g2 must be 2-D arrays of identical shape (M, N)")
        if self.h2.shape[0] < 1 or self.h2.shape[1] < 1:
            raise ValueError("need at least one relay and one subcarrier")
        if not (np.all(self.h2 > 0) and np.all(self.g2 > 0)):
            raise ValueError("squared gains must be positive")
        if not self.sigma2 > 0 or not self.bandwidth > 0:
            raise ValueError("sigma2 and bandwidth must be positive")

    @property
    def n_relays(self) -> int:
        return self.h2.shape[0]

    @property
    def n_subcarriers(self) -> int:
        return self.h2.shape[1]

    @property
    def subcarrier_bandwidth(self) -> float:
        return self.bandwidth / self.n_subcarriers


def _base_draw(rng: np.random.Generator, shape, base_dist: str) -> np.ndarray:
    if base_dist == "exponential":
        return rng.exponential(1.0, size=shape)
    if base_dist == "uniform01":
        return rng.random(size=shape)
    raise ValueError(f"unknown base distribution {base_dist!r}; expected one of {BASE_DISTRIBUTIONS}")


def generate(
    n_subcarriers: int,
    n_relays: int,
    plc: float,
    sigma2: float = 1.0,
    bandwidth: float = 16.0,
    seed=None,
    base_dist: str = "exponential",
) -> ChannelRealization:
    if n_subcarriers < 1 or n_relays < 1:
        raise ValueError("n_subcarriers and n_relays must be >= 1")
    if not plc >= 0:
        raise ValueError(f"plc must be >= 0, got {plc!r}")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng_h, rng_g = (np.random.default_rng(s) for s in ss.spawn(2))
    shape = (n_relays, n_subcarriers)
    h_base = _base_draw(rng_h, shape, base_dist)
    g_base = _base_draw(rng_g, shape, base_dist)
    h2 = np.maximum(h_base**plc, GAIN_FLOOR)
    g2 = np.maximum(g_base**plc, GAIN_FLOOR)
    return ChannelRealization(h2=h2, g2=g2, sigma2=float(sigma2), bandwidth=float(bandwidth))


def dump_csv(chan: ChannelRealization, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "h2", "g2"])
        for m in range(chan.n_relays):
            for n in range(chan.n_subcarriers):
                writer.writerow([m, n, repr(float(chan.h2[m, n])), repr(float(chan.g2[m, n]))])


def load_csv(path, sigma2: float = 1.0, bandwidth: float = 16.0) -> ChannelRealization:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no channel rows")
    n_relays = max(int(r["m"]) for r in rows) + 1
    n_sub = max(int(r["n"]) for r in rows) + 1
    h2 = np.full((n_relays, n_sub), np.nan)
    g2 = np.full((n_relays, n_sub), np.nan)
    for r in rows:
        m, n = int(r["m"]), int(r["n"])
        h2[m, n] = float(r["h2"])
        g2[m, n] = float(r["g2"])
    if np.isnan(h2).any() or np.isnan(g2).any():
        raise ValueError(f"{path}: missing (m, n) entries")
    return ChannelRealization(h2=h2, g2=g2, sigma2=sigma2, bandwidth=bandwidth)
