"""Comparison rate allocators: equal split, per-direction water filling, joint GA.

All three reuse the relay choice and the assignment search so that only
the rate-allocation rule differs from the two-way water filling scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .assign import (
    GaConfig,
    Scorer,
    _check_feasible,
    mutate_assignment,
    random_assignments,
    repair,
    roulette,
)
from .relayselect import RelayChoice
from .waterfill import AllocationError, RateAllocation, build_allocation


def ma_rates(owners, rate_down, rate_up):
    """Each service splits each direction's demand equally over its subcarriers."""
    owners = np.asarray(owners)
    r_down = np.zeros(owners.shape)
    r_up = np.zeros(owners.shape)
    for s, (rd, ru) in enumerate(zip(rate_down, rate_up)):
        mask = owners == s
        k = mask.sum(axis=-1, keepdims=True)
        if np.any(k == 0):
            raise AllocationError(f"service {s} owns no subcarrier")
        r_down += np.where(mask, rd / k, 0.0)
        r_up += np.where(mask, ru / k, 0.0)
    return r_down, r_up


def ma_allocate(owner, rate_down, rate_up, choice: RelayChoice, sigma2: float, w: float) -> RateAllocation:
    rd, ru = ma_rates(owner, rate_down, rate_up)
    return build_allocation(owner, rd, ru, choice, sigma2, w)


def mwf_direction_cost(choice_eta):
    """Cost weight of ``2^(2r/w) - 1`` in the single-direction water filling.

    Swap this out to try other per-direction noise-channel terms.
    """
    return choice_eta


def classic_water_filling(weights, masks, rates, w: float) -> np.ndarray:
    """Sort-based water filling: minimise ``sum weight * 2^(2r/w)`` with ``sum r = R``.

    For each row, subcarriers are ranked by weight and the largest prefix
    whose worst member still lies below its water level is used.
    """
    weights = np.asarray(weights, dtype=float)
    masks = np.atleast_2d(np.asarray(masks, dtype=bool))
    rates = np.broadcast_to(np.asarray(rates, dtype=float), (masks.shape[0],))
    log_w = np.where(masks, np.log2(weights)[None, :], np.inf)
    order = np.argsort(log_w, axis=1, kind="stable")
    sorted_log = np.take_along_axis(log_w, order, axis=1)
    k = np.arange(1, weights.size + 1)[None, :]
    finite = np.isfinite(sorted_log)
    csum = np.cumsum(np.where(finite, sorted_log, 0.0), axis=1)
    level = (2.0 * rates[:, None] / w + csum) / k
    ok = finite & (sorted_log <= level)
    n_used = np.maximum((k * ok).max(axis=1), 1)
    chosen_level = level[np.arange(len(rates)), n_used - 1]
    r_sorted = 0.5 * w * (chosen_level[:, None] - sorted_log)
    r_sorted = np.where(k <= n_used[:, None], np.maximum(r_sorted, 0.0), 0.0)
    r_sorted = np.where(finite, r_sorted, 0.0)
    r = np.zeros_like(r_sorted)
    np.put_along_axis(r, order, r_sorted, axis=1)
    return r


def mwf_rates(owners, etas, rate_down, rate_up, w: float):
    owners = np.atleast_2d(np.asarray(owners))
    cost = mwf_direction_cost(np.asarray(etas, dtype=float))
    r_down = np.zeros(owners.shape)
    r_up = np.zeros(owners.shape)
    for s, (rd, ru) in enumerate(zip(rate_down, rate_up)):
        mask = owners == s
        if not np.all(mask.any(axis=1)):
            raise AllocationError(f"service {s} owns no subcarrier")
        r_down += classic_water_filling(cost, mask, rd, w)
        r_up += classic_water_filling(cost, mask, ru, w)
    return r_down, r_up


def mwf_allocate(owner, rate_down, rate_up, choice: RelayChoice, sigma2: float, w: float) -> RateAllocation:
    rd, ru = mwf_rates(owner, choice.eta, rate_down, rate_up, w)
    return build_allocation(owner, rd[0], ru[0], choice, sigma2, w)


@dataclass(frozen=True)
class MgaConfig:
    """Extra knobs of the joint assignment-and-rate genetic search."""

    generations: int = 2000
    share_mutation_prob: float = 0.1
    share_mutation_sigma: float = 0.05
    blend_alpha: float = 0.2

    def __post_init__(self):
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0.0 <= self.share_mutation_prob <= 1.0:
            raise ValueError("share_mutation_prob must lie in [0, 1]")
        if self.share_mutation_sigma < 0 or self.blend_alpha < 0:
            raise ValueError("share_mutation_sigma and blend_alpha must be >= 0")


def share_rates(owners, shares, rate_down, rate_up):
    """Rates from share genes ``shares[..., d, n]`` normalised within each service."""
    owners = np.atleast_2d(np.asarray(owners))
    shares = np.asarray(shares, dtype=float).reshape(owners.shape[0], 2, owners.shape[1])
    r = np.zeros(shares.shape)
    demand = np.stack([np.asarray(rate_down, dtype=float), np.asarray(rate_up, dtype=float)])
    for s in range(demand.shape[1]):
        mask = (owners == s)[:, None, :]
        part = np.where(mask, shares, 0.0)
        total = part.sum(axis=2, keepdims=True)
        k = mask.sum(axis=2, keepdims=True)
        frac = np.where(total > 0, part / np.where(total > 0, total, 1.0), mask / np.maximum(k, 1))
        r += frac * demand[:, s][None, :, None]
    return r[:, 0, :], r[:, 1, :]


def shares_from_rates(owner, r_down, r_up, rate_down, rate_up):
    """Share genes that reproduce the given rates exactly."""
    owner = np.asarray(owner)
    rd = np.asarray(rate_down, dtype=float)[owner]
    ru = np.asarray(rate_up, dtype=float)[owner]
    return np.stack([np.where(rd > 0, r_down / np.where(rd > 0, rd, 1.0), 1.0),
                     np.where(ru > 0, r_up / np.where(ru > 0, ru, 1.0), 1.0)])


@dataclass
class MgaResult:
    owner: np.ndarray
    shares: np.ndarray
    r_down: np.ndarray
    r_up: np.ndarray
    fitness: float
    best_fitness: list = field(default_factory=list)
    best_approx_power: list = field(default_factory=list)
    converged_generation: int = 0


def mga_optimize(etas, rate_down, rate_up, config: GaConfig, w: float, mga: MgaConfig = MgaConfig(),
                 scorer: Scorer | None = None, initial=None) -> MgaResult:
    """Genetic search over assignment genes and per-direction rate-share genes.

    Assignment genes use single-point crossover and per-gene reassignment;
    share genes use blend crossover and clamped Gaussian mutation. Runs
    ``mga.generations`` generations. ``initial`` optionally seeds the whole
    population with one ``(owner, shares)`` pair.
    """
    etas = np.asarray(etas, dtype=float)
    n = etas.size
    n_services = len(rate_down)
    _check_feasible(n, n_services)
    if scorer is None:
        scorer = Scorer(etas, rate_down, rate_up, w, fitness=config.fitness)
    rng = np.random.default_rng(config.seed)
    p = config.popsize

    if initial is None:
        owners = random_assignments(p, n, n_services, rng)
        shares = rng.random((p, 2, n))
    else:
        owners = np.tile(np.asarray(initial[0]), (p, 1))
        shares = np.tile(np.asarray(initial[1], dtype=float), (p, 1, 1))

    def evaluate(o, sh):
        rd, ru = share_rates(o, sh, rate_down, rate_up)
        return rd, ru, scorer.fitness(rd, ru)

    rd, ru, fit = evaluate(owners, shares)
    best = int(np.argmax(fit))
    result = MgaResult(owner=owners[best].copy(), shares=shares[best].copy(), r_down=rd[best].copy(),
                       r_up=ru[best].copy(), fitness=float(fit[best]))
    result.best_fitness.append(result.fitness)
    result.best_approx_power.append(float(scorer.approx_power(rd[best], ru[best])))

    n_child = p - config.elitism_count
    n_pairs = (n_child + 1) // 2
    for gen in range(1, mga.generations + 1):
        elite = np.argsort(-fit, kind="stable")[: config.elitism_count]
        parents = roulette(fit, 2 * n_pairs, rng)
        ia, ib = parents[0::2], parents[1::2]
        oa, ob = owners[ia].copy(), owners[ib].copy()
        sa, sb = shares[ia], shares[ib]

        do = rng.random(n_pairs) < config.crossover_prob
        if n >= 2:
            cut = rng.integers(1, n, size=n_pairs)
            tail = (np.arange(n)[None, :] >= cut[:, None]) & do[:, None]
            tmp = oa[tail]
            oa[tail] = ob[tail]
            ob[tail] = tmp
        lo = np.minimum(sa, sb)
        hi = np.maximum(sa, sb)
        span = hi - lo
        u1 = rng.uniform(lo - mga.blend_alpha * span, hi + mga.blend_alpha * span)
        u2 = rng.uniform(lo - mga.blend_alpha * span, hi + mga.blend_alpha * span)
        ca = np.where(do[:, None, None], u1, sa)
        cb = np.where(do[:, None, None], u2, sb)

        child_o = np.concatenate([oa, ob])[:n_child]
        child_s = np.concatenate([ca, cb])[:n_child]
        child_o = mutate_assignment(child_o, n_services, config.mutation_prob_per_gene, rng)
        child_o = repair(child_o, n_services, rng)
        hit = rng.random(child_s.shape) < mga.share_mutation_prob
        child_s = child_s + hit * rng.normal(0.0, mga.share_mutation_sigma, size=child_s.shape)
        child_s = np.clip(child_s, 0.0, 1.0)

        c_rd, c_ru, c_fit = evaluate(child_o, child_s)
        owners = np.concatenate([owners[elite], child_o])
        shares = np.concatenate([shares[elite], child_s])
        rd = np.concatenate([rd[elite], c_rd])
        ru = np.concatenate([ru[elite], c_ru])
        fit = np.concatenate([fit[elite], c_fit])

        top = int(np.argmax(fit))
        if fit[top] > result.fitness:
            result.owner = owners[top].copy()
            result.shares = shares[top].copy()
            result.r_down = rd[top].copy()
            result.r_up = ru[top].copy()
            result.fitness = float(fit[top])
            result.converged_generation = gen
        result.best_fitness.append(result.fitness)
        result.best_approx_power.append(float(scorer.approx_power(result.r_down, result.r_up)))
    return result
