"""Single-server FIFO queue simulation with Poisson or on/off arrivals.

Waiting times follow the Lindley recursion, evaluated in closed form as
``W_k = U_k - min_{j<=k} U_j`` with ``U`` the running sum of
``service_k - interarrival_{k+1}``; that keeps a million-packet run in
vectorised numpy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .traffic import STABILITY_MARGIN, DirectionTraffic, InstabilityError

WARMUP_FRACTION = 0.1
N_BATCHES = 20


@dataclass(frozen=True)
class QueueTrace:
    packets_served: int
    mean_delay: float
    mean_queue_length: float
    sim_time: float
    delay_std: float = math.nan
    delay_ci95: float = math.nan


def _rng(seed) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.default_rng(seed)


def _check_stable(arrival_rate: float, service_rate: float) -> None:
    if not service_rate - arrival_rate >= STABILITY_MARGIN:
        raise InstabilityError(
            f"unstable queue: service rate {service_rate:g} <= arrival rate {arrival_rate:g}"
        )


def _serve(arrivals: np.ndarray, service_rate: float, rng: np.random.Generator) -> QueueTrace:
    n = arrivals.size
    service = rng.exponential(1.0 / service_rate, size=n)
    steps = np.empty(n)
    steps[0] = 0.0
    np.subtract(service[:-1], np.diff(arrivals), out=steps[1:])
    u = np.cumsum(steps)
    wait = u - np.minimum(np.minimum.accumulate(u), 0.0)
    sojourn = wait + service
    departures = arrivals + sojourn

    k0 = int(n * WARMUP_FRACTION)
    kept = sojourn[k0:]
    t0 = arrivals[k0]
    t1 = arrivals[-1]
    # time integral of the number in system over [t0, t1]
    overlap = np.minimum(departures, t1) - np.maximum(arrivals, t0)
    area = np.clip(overlap, 0.0, None).sum()

    batches = np.array_split(kept, N_BATCHES)
    batch_means = np.array([b.mean() for b in batches])
    ci = 1.96 * batch_means.std(ddof=1) / math.sqrt(N_BATCHES)
    return QueueTrace(
        packets_served=int(kept.size),
        mean_delay=float(kept.mean()),
        mean_queue_length=float(area / (t1 - t0)),
        sim_time=float(departures[-1]),
        delay_std=float(kept.std()),
        delay_ci95=float(ci),
    )


def _check_horizon(horizon) -> int:
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1 packet, got {horizon}")
    # need enough packets to leave a measurable post-warm-up sample
    return max(horizon, 2 * N_BATCHES)


def simulate_poisson_queue(arrival_rate: float, service_rate: float, horizon: int, seed) -> QueueTrace:
    """M/M/1 queue fed by a homogeneous Poisson stream for ``horizon`` packets."""
    if not arrival_rate > 0:
        raise ValueError("arrival_rate must be > 0: no packets would be served")
    _check_stable(arrival_rate, service_rate)
    horizon = _check_horizon(horizon)
    rng = _rng(seed)
    arrivals = np.cumsum(rng.exponential(1.0 / arrival_rate, size=horizon))
    return _serve(arrivals, service_rate, rng)


def bursty_arrivals(traffic: DirectionTraffic, n_packets: int, rng: np.random.Generator) -> np.ndarray:
    """Arrival epochs of the first ``n_packets`` packets of an on/off source.

    In-burst arrivals form a Poisson process on the concatenated on-time
    axis, and burst ends on that axis form an independent Poisson process
    of rate ``1/burst_duration``. Between two consecutive packets the number
    of bursts that end is Poisson, and the idle time inserted is the Gamma
    sum of that many exponential gaps. The cycle starts idle.
    """
    gaps = rng.exponential(1.0 / traffic.packet_rate, size=n_packets)
    ended = rng.poisson(gaps / traffic.burst_duration)
    ended[0] += 1
    idle = rng.gamma(shape=ended, scale=1.0 / traffic.burst_rate)
    return np.cumsum(gaps + idle)


def simulate_bursty_queue(traffic: DirectionTraffic, service_rate: float, horizon: int, seed) -> QueueTrace:
    """Single exponential server fed by on/off bursty arrivals."""
    lam_eq = traffic.equivalent_rate
    if not lam_eq > 0:
        raise ValueError("in-burst packet rate must be > 0: no packets would be served")
    _check_stable(lam_eq, service_rate)
    horizon = _check_horizon(horizon)
    rng = _rng(seed)
    arrivals = bursty_arrivals(traffic, horizon, rng)
    return _serve(arrivals, service_rate, rng)


@dataclass(frozen=True)
class EquivalenceCase:
    """One on/off source against a homogeneous stream of the same mean rate."""

    packet_rate: float
    burst_duration: float
    burst_rate: float
    service_rate: float

    @property
    def traffic(self) -> DirectionTraffic:
        return DirectionTraffic(self.burst_rate, self.burst_duration, self.packet_rate, 1.0)


# lam* = 5 packets/s and mu = 15 throughout; burstiness lam/lam* of 2, 1.5, 2, 4, 8
EQUIVALENCE_CASES = (
    EquivalenceCase(10.0, 2.0, 0.5, 15.0),
    EquivalenceCase(7.5, 1.0, 2.0, 15.0),
    EquivalenceCase(10.0, 1.0, 1.0, 15.0),
    EquivalenceCase(20.0, 1.0, 1.0 / 3.0, 15.0),
    EquivalenceCase(40.0, 1.0, 1.0 / 7.0, 15.0),
)


@dataclass(frozen=True)
class EquivalenceRow:
    case: EquivalenceCase
    seeds: int
    horizon: int
    bursty_delay: float
    poisson_delay: float
    closed_form_delay: float
    bursty_delay_std: float
    poisson_delay_std: float

    @property
    def equivalence_error(self) -> float:
        return abs(self.bursty_delay - self.poisson_delay) / self.poisson_delay

    @property
    def bursty_closed_form_error(self) -> float:
        return abs(self.bursty_delay - self.closed_form_delay) / self.closed_form_delay

    @property
    def poisson_closed_form_error(self) -> float:
        return abs(self.poisson_delay - self.closed_form_delay) / self.closed_form_delay


def compare_arrivals(case: EquivalenceCase, horizon: int = 1_000_000, seeds=range(10)) -> EquivalenceRow:
    """Seed-averaged mean delay of the bursty and homogeneous queues.

    The two queues at one seed draw from independent child streams.
    """
    lam_eq = case.traffic.equivalent_rate
    seeds = list(seeds)
    bursty, poisson = [], []
    for seed in seeds:
        b_ss, p_ss = np.random.SeedSequence(seed).spawn(2)
        bursty.append(simulate_bursty_queue(case.traffic, case.service_rate, horizon, b_ss).mean_delay)
        poisson.append(simulate_poisson_queue(lam_eq, case.service_rate, horizon, p_ss).mean_delay)
    return EquivalenceRow(
        case=case,
        seeds=len(seeds),
        horizon=int(horizon),
        bursty_delay=float(np.mean(bursty)),
        poisson_delay=float(np.mean(poisson)),
        closed_form_delay=1.0 / (case.service_rate - lam_eq),
        bursty_delay_std=float(np.std(bursty)),
        poisson_delay_std=float(np.std(poisson)),
    )
