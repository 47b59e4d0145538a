"""Two-way water filling per service and node power recovery.

Under the high-rate approximation the power of service ``s`` is
``sum_n eta_n * mr_n``, which separates into one convex problem per
direction. Each direction's optimum puts ``(w/2) * log2(B / eta_n)`` on every
active subcarrier, with the water level ``B`` fixed by the sum-rate
constraint; subcarriers whose ``eta`` sits above the level are dropped and
the level is recomputed. Dropped subcarriers are never re-admitted.

``fill`` works on a batch of subcarrier masks at once so the genetic search
can decode a whole population per call.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .relayselect import RelayChoice, alpha_star, demand_term

# rates below -EXCLUDE_TOL drop the subcarrier; rates in [-EXCLUDE_TOL, 0) clamp to 0
EXCLUDE_TOL = 1e-12


class AllocationError(RuntimeError):
    """Internal-consistency failure while building an allocation."""


def water_level(etas, rate: float, w: float) -> float:
    """``(2^(2 rate / w) * prod(etas)) ** (1 / len(etas))``, evaluated in log2."""
    etas = np.asarray(etas, dtype=float)
    if etas.size == 0 or np.any(etas <= 0):
        raise ValueError("need a nonempty list of positive etas")
    if rate < 0:
        raise ValueError("rate must be >= 0")
    with np.errstate(over="ignore"):
        return float(np.exp2((2.0 * rate / w + np.log2(etas).sum()) / etas.size))


def fill(etas, masks, rates, w: float):
    """Batched single-direction water filling with exclusion.

    Args:
        etas: shape ``(N,)`` noise-channel coefficients.
        masks: bool, shape ``(P, N)``; candidate subcarriers per row.
        rates: shape ``(P,)`` or scalar sum-rate per row.
        w: per-subcarrier bandwidth, Hz.

    Returns:
        ``(r, log2_level, active)`` with ``r`` of shape ``(P, N)``.
    """
    etas = np.asarray(etas, dtype=float)
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (masks.shape[0],))
    if np.any(rates > 0) and not np.all(masks[rates > 0].any(axis=1)):
        raise AllocationError("positive rate demand with no candidate subcarrier")
    log_eta = np.log2(etas)
    active = masks.copy()
    half_w = 0.5 * w
    for _ in range(etas.size + 1):
        k = active.sum(axis=1)
        safe_k = np.maximum(k, 1)
        mean_log = np.where(active, log_eta, 0.0).sum(axis=1) / safe_k
        r = rates[:, None] / safe_k[:, None] + half_w * (mean_log[:, None] - log_eta)
        r = np.where(active, r, 0.0)
        negative = active & (r < -EXCLUDE_TOL)
        if not negative.any():
            break
        active &= ~negative
    else:  # pragma: no cover - each pass removes at least one subcarrier
        raise AllocationError("water filling did not converge")
    log2_level = (2.0 * rates / w) / np.maximum(active.sum(axis=1), 1) + mean_log
    r = np.maximum(r, 0.0)
    return r, log2_level, active


@dataclass(frozen=True)
class ServiceAllocation:
    r_down: np.ndarray
    r_up: np.ndarray
    level_down: float
    level_up: float
    active_down: np.ndarray
    active_up: np.ndarray


def allocate_service(etas, rate_down: float, rate_up: float, w: float) -> ServiceAllocation:
    """Water-fill both directions of one service over its own subcarriers."""
    etas = np.asarray(etas, dtype=float)
    if etas.size == 0:
        raise ValueError("service owns no subcarrier")
    if rate_down < 0 or rate_up < 0:
        raise ValueError("rate demands must be >= 0")
    mask = np.ones((2, etas.size), dtype=bool)
    r, log2_level, active = fill(etas, mask, np.array([rate_down, rate_up]), w)
    return ServiceAllocation(
        r_down=r[0],
        r_up=r[1],
        level_down=float(2.0 ** log2_level[0]),
        level_up=float(2.0 ** log2_level[1]),
        active_down=active[0],
        active_up=active[1],
    )


def decode_assignment(owners, etas, rate_down, rate_up, w: float):
    """Rates of every subcarrier for a batch of assignments.

    ``owners`` has shape ``(P, N)`` (or ``(N,)``) with service indices.
    Returns ``(r_down, r_up)`` of the same shape.
    """
    owners = np.asarray(owners)
    single = owners.ndim == 1
    owners = np.atleast_2d(owners)
    r_down = np.zeros(owners.shape)
    r_up = np.zeros(owners.shape)
    for s, (rd, ru) in enumerate(zip(rate_down, rate_up)):
        mask = owners == s
        stacked = np.concatenate([mask, mask])
        demand = np.concatenate([np.full(len(mask), rd), np.full(len(mask), ru)])
        r, _, _ = fill(etas, stacked, demand, w)
        r_down += r[: len(mask)]
        r_up += r[len(mask):]
    if single:
        return r_down[0], r_up[0]
    return r_down, r_up


def recover_powers(r_down, r_up, h2, g2, sigma2, w):
    """Node transmit powers ``(P_A, P_B, P_R)`` realising the given rates.

    Uses the optimal amplification factor for the combined demand; where
    both rates are zero every power is zero.
    """
    r_down = np.asarray(r_down, dtype=float)
    r_up = np.asarray(r_up, dtype=float)
    m_down = np.expm1(np.log(2.0) * 2.0 * r_down / w)
    m_up = np.expm1(np.log(2.0) * 2.0 * r_up / w)
    mr = m_down + m_up
    alpha = alpha_star(mr, h2, g2)
    busy = alpha > 0
    safe_alpha = np.where(busy, alpha, 1.0)
    p_a = np.where(busy, m_down * (1.0 + g2 * safe_alpha) * sigma2 / (h2 * g2 * safe_alpha), 0.0)
    p_b = np.where(busy, m_up * (1.0 + h2 * safe_alpha) * sigma2 / (h2 * g2 * safe_alpha), 0.0)
    p_r = np.where(busy, alpha * (h2 * p_a + g2 * p_b + sigma2), 0.0)
    return p_a, p_b, p_r, alpha


def rates_from_powers(p_a, p_b, alpha, h2, g2, sigma2, w):
    """Achievable end-to-end rates through one AF relay with self-interference removed."""
    snr_down = h2 * g2 * alpha * p_a / (sigma2 + g2 * alpha * sigma2)
    snr_up = h2 * g2 * alpha * p_b / (sigma2 + h2 * alpha * sigma2)
    return 0.5 * w * np.log2(1.0 + snr_down), 0.5 * w * np.log2(1.0 + snr_up)


@dataclass
class RateAllocation:
    """Per-subcarrier rates and powers of one complete solution.

    ``level_down``/``level_up`` hold the per-service water levels (empty for
    schemes that do not water-fill).
    """

    owner: np.ndarray
    r_down: np.ndarray
    r_up: np.ndarray
    p_a: np.ndarray
    p_b: np.ndarray
    p_r: np.ndarray
    alpha: np.ndarray
    eta: np.ndarray
    level_down: np.ndarray = field(default_factory=lambda: np.array([]))
    level_up: np.ndarray = field(default_factory=lambda: np.array([]))

    def service_sums(self, n_services: int):
        down = np.bincount(self.owner, weights=self.r_down, minlength=n_services)
        up = np.bincount(self.owner, weights=self.r_up, minlength=n_services)
        return down, up


def build_allocation(owner, r_down, r_up, choice: RelayChoice, sigma2: float, w: float,
                     level_down=None, level_up=None) -> RateAllocation:
    owner = np.asarray(owner, dtype=int)
    p_a, p_b, p_r, alpha = recover_powers(r_down, r_up, choice.h2, choice.g2, sigma2, w)
    empty = np.array([])
    return RateAllocation(
        owner=owner,
        r_down=np.asarray(r_down, dtype=float),
        r_up=np.asarray(r_up, dtype=float),
        p_a=p_a,
        p_b=p_b,
        p_r=p_r,
        alpha=alpha,
        eta=np.asarray(choice.eta, dtype=float),
        level_down=empty if level_down is None else np.asarray(level_down, dtype=float),
        level_up=empty if level_up is None else np.asarray(level_up, dtype=float),
    )


def mtwf_allocation(owner, rate_down, rate_up, choice: RelayChoice, sigma2: float, w: float) -> RateAllocation:
    """Two-way water filling of every service under a fixed assignment."""
    owner = np.asarray(owner, dtype=int)
    n = owner.size
    r_down = np.zeros(n)
    r_up = np.zeros(n)
    levels = np.zeros((len(rate_down), 2))
    for s, (rd, ru) in enumerate(zip(rate_down, rate_up)):
        idx = np.flatnonzero(owner == s)
        if idx.size == 0:
            raise AllocationError(f"service {s} owns no subcarrier")
        sa = allocate_service(choice.eta[idx], rd, ru, w)
        r_down[idx] = sa.r_down
        r_up[idx] = sa.r_up
        levels[s] = sa.level_down, sa.level_up
    return build_allocation(owner, r_down, r_up, choice, sigma2, w, levels[:, 0], levels[:, 1])


def total_power(alloc: RateAllocation) -> float:
    return float(alloc.p_a.sum() + alloc.p_b.sum() + alloc.p_r.sum())


def approx_power(r_down, r_up, etas, w) -> float:
    """High-rate objective ``sum_n mr_n * eta_n``."""
    return float(np.sum(demand_term(r_down, r_up, w) * etas))


def approx_total_power(alloc: RateAllocation, w: float) -> float:
    return approx_power(alloc.r_down, alloc.r_up, alloc.eta, w)


def constraint_violation(alloc: RateAllocation, rate_down, rate_up) -> float:
    """Largest relative sum-rate mismatch over services and directions."""
    rate_down = np.asarray(rate_down, dtype=float)
    rate_up = np.asarray(rate_up, dtype=float)
    down, up = alloc.service_sums(len(rate_down))
    target = np.concatenate([rate_down, rate_up])
    got = np.concatenate([down, up])
    scale = np.maximum(np.abs(target), 1e-300)
    viol = np.where(target > 0, np.abs(got - target) / scale, np.abs(got))
    return float(viol.max())
