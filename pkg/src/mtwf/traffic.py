"""Bursty traffic reduction and max-delay to sum-rate conversion.

Each service direction is an on/off source: bursts start after exponential
idle gaps (rate ``burst_rate``), last an exponential time with mean
``burst_duration`` and emit Poisson packets at ``packet_rate`` while on.
The source is replaced by a homogeneous Poisson stream with the same
long-run packet rate, and the M/M/1 mean-delay formula turns the delay
budget into a minimum sum rate in bits/second.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Minimum service-minus-arrival gap, packets/s, accepted as stable.
STABILITY_MARGIN = 1e-9


class InstabilityError(ValueError):
    """Raised when the departure rate does not exceed the arrival rate."""


@dataclass(frozen=True)
class DirectionTraffic:
    """On/off traffic of one service in one direction.

    Attributes:
        burst_rate: rate of burst starts, bursts/s.
        burst_duration: mean burst length, s.
        packet_rate: packet arrival rate inside a burst, packets/s.
        packet_length: mean packet length, bits.
    """

    burst_rate: float
    burst_duration: float
    packet_rate: float
    packet_length: float

    def __post_init__(self):
        for name in ("burst_rate", "burst_duration", "packet_length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
        if not (math.isfinite(self.packet_rate) and self.packet_rate >= 0):
            raise ValueError(f"packet_rate must be finite and >= 0, got {self.packet_rate!r}")

    @property
    def equivalent_rate(self) -> float:
        return equivalent_arrival_rate(self.packet_rate, self.burst_duration, self.burst_rate)


@dataclass(frozen=True)
class BurstyServiceSpec:
    service_id: int
    max_delay: float
    downlink: DirectionTraffic
    uplink: DirectionTraffic

    def __post_init__(self):
        if not (math.isfinite(self.max_delay) and self.max_delay > 0):
            raise ValueError(f"max_delay must be finite and > 0, got {self.max_delay!r}")


@dataclass(frozen=True)
class RateRequirement:
    service_id: int
    rate_down: float
    rate_up: float
    equivalent_rate_down: float = 0.0
    equivalent_rate_up: float = 0.0


def equivalent_arrival_rate(packet_rate: float, burst_duration: float, burst_rate: float) -> float:
    """Long-run packet rate of an on/off source, ``lam*T / (T + 1/Lambda)``."""
    if not (math.isfinite(burst_duration) and burst_duration > 0):
        raise ValueError(f"burst_duration must be finite and > 0, got {burst_duration!r}")
    if not (math.isfinite(burst_rate) and burst_rate > 0):
        raise ValueError(f"burst_rate must be finite and > 0, got {burst_rate!r}")
    if not (math.isfinite(packet_rate) and packet_rate >= 0):
        raise ValueError(f"packet_rate must be finite and >= 0, got {packet_rate!r}")
    return packet_rate * burst_duration / (burst_duration + 1.0 / burst_rate)


def required_rate(packet_length: float, max_delay: float, eq_rate: float) -> float:
    """Smallest sum rate (bits/s) whose M/M/1 mean delay equals ``max_delay``."""
    return packet_length / max_delay + eq_rate * packet_length


def sum_rate_constraint(spec: BurstyServiceSpec) -> RateRequirement:
    lam_down = spec.downlink.equivalent_rate
    lam_up = spec.uplink.equivalent_rate
    return RateRequirement(
        service_id=spec.service_id,
        rate_down=required_rate(spec.downlink.packet_length, spec.max_delay, lam_down),
        rate_up=required_rate(spec.uplink.packet_length, spec.max_delay, lam_up),
        equivalent_rate_down=lam_down,
        equivalent_rate_up=lam_up,
    )


def departure_rate(subcarrier_rates, packet_length: float) -> float:
    """Merged packet departure rate of independent per-subcarrier servers."""
    return sum(r / packet_length for r in subcarrier_rates)


def mm1_delay(total_rate: float, packet_length: float, eq_rate: float) -> float:
    """Mean M/M/1 sojourn time with service rate ``total_rate / packet_length``.

    Raises:
        InstabilityError: if the service rate exceeds the arrival rate by
            less than ``STABILITY_MARGIN``.
    """
    gap = total_rate / packet_length - eq_rate
    if not gap >= STABILITY_MARGIN:
        raise InstabilityError(
            f"unstable queue: service rate {total_rate / packet_length:g} <= "
            f"arrival rate {eq_rate:g} packets/s"
        )
    return 1.0 / gap
