"""Subcarrier-to-service assignment by elitist genetic search.

A chromosome is a length-``N`` integer vector, ``genes[n]`` being the
service that owns subcarrier ``n``; every service must own at least one
subcarrier. Each individual is decoded into rates by a pluggable rate
allocator (two-way water filling by default) and scored against the ideal
single-virtual-service allocation in which all demands share all
subcarriers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .relayselect import pmin_exact, demand_term
from .waterfill import decode_assignment

Decoder = Callable[[np.ndarray], tuple]


class InfeasibleError(ValueError):
    """Fewer subcarriers than services."""


@dataclass(frozen=True)
class GaConfig:
    popsize: int = 40
    generations: int = 300
    crossover_prob: float = 0.8
    mutation_prob_per_gene: float = 0.1
    elitism_count: int = 1
    seed: int | None = 0
    fitness: str = "eoc"

    def __post_init__(self):
        if self.popsize < 2:
            raise ValueError("popsize must be >= 2")
        if not 1 <= self.elitism_count <= self.popsize:
            raise ValueError("elitism_count must be in [1, popsize]")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        for name in ("crossover_prob", "mutation_prob_per_gene"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.fitness not in ("eoc", "power"):
            raise ValueError("fitness must be 'eoc' or 'power'")


@dataclass(frozen=True)
class IdealLevels:
    log2_down: float
    log2_up: float
    r_down: np.ndarray
    r_up: np.ndarray

    @property
    def down(self) -> float:
        return float(2.0 ** self.log2_down)

    @property
    def up(self) -> float:
        return float(2.0 ** self.log2_up)


def ideal_water_levels(etas, total_down: float, total_up: float, w: float) -> IdealLevels:
    """Water levels and rates when one virtual service carries every demand.

    No exclusion is applied: the ideal rates may be negative on poor
    subcarriers, which keeps ``B* = 2^(2 r*_n / w) * eta_n`` exact for all n.
    """
    log_eta = np.log2(np.asarray(etas, dtype=float))
    n = log_eta.size
    lvl_down = (2.0 * total_down / w + log_eta.sum()) / n
    lvl_up = (2.0 * total_up / w + log_eta.sum()) / n
    return IdealLevels(
        log2_down=float(lvl_down),
        log2_up=float(lvl_up),
        r_down=0.5 * w * (lvl_down - log_eta),
        r_up=0.5 * w * (lvl_up - log_eta),
    )


def equivalent_objective(r_down, r_up, ideal: IdealLevels, w: float):
    """``B1* sum 2^(2 dr1 / w) + B2* sum 2^(2 dr2 / w)``; batched over leading axes."""
    dr_down = np.asarray(r_down) - ideal.r_down
    dr_up = np.asarray(r_up) - ideal.r_up
    down = np.exp2(ideal.log2_down + 2.0 * dr_down / w).sum(axis=-1)
    up = np.exp2(ideal.log2_up + 2.0 * dr_up / w).sum(axis=-1)
    return down + up


def repair(owners: np.ndarray, n_services: int, rng: np.random.Generator) -> np.ndarray:
    """Give every empty service one subcarrier taken from the largest service."""
    counts = np.stack([(owners == s).sum(axis=1) for s in range(n_services)], axis=1)
    for i in np.flatnonzero((counts == 0).any(axis=1)):
        row = owners[i]
        c = counts[i]
        for s in np.flatnonzero(c == 0):
            donor = int(np.argmax(c))
            n = rng.choice(np.flatnonzero(row == donor))
            row[n] = s
            c[donor] -= 1
            c[s] += 1
    return owners


def random_assignments(popsize: int, n: int, n_services: int, rng: np.random.Generator) -> np.ndarray:
    return repair(rng.integers(0, n_services, size=(popsize, n)), n_services, rng)


def roulette(fitness: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Indices of ``k`` parents drawn with probability proportional to fitness."""
    cum = np.cumsum(fitness)
    return np.minimum(np.searchsorted(cum, rng.random(k) * cum[-1], side="right"), fitness.size - 1)


def single_point_crossover(a: np.ndarray, b: np.ndarray, prob: float, rng: np.random.Generator):
    """Swap gene tails of paired rows after one random cut point per pair."""
    a = a.copy()
    b = b.copy()
    n = a.shape[1]
    if n < 2:
        return a, b
    do = rng.random(a.shape[0]) < prob
    cut = rng.integers(1, n, size=a.shape[0])
    tail = (np.arange(n)[None, :] >= cut[:, None]) & do[:, None]
    a_tail = a[tail]
    a[tail] = b[tail]
    b[tail] = a_tail
    return a, b


def mutate_assignment(owners: np.ndarray, n_services: int, prob: float, rng: np.random.Generator) -> np.ndarray:
    """Move each gene, with probability ``prob``, to a different service."""
    if n_services < 2:
        return owners
    hit = rng.random(owners.shape) < prob
    shift = rng.integers(1, n_services, size=owners.shape)
    return np.where(hit, (owners + shift) % n_services, owners)


@dataclass
class GaResult:
    owner: np.ndarray
    r_down: np.ndarray
    r_up: np.ndarray
    fitness: float
    best_fitness: list = field(default_factory=list)
    best_approx_power: list = field(default_factory=list)
    converged_generation: int = 0


class Scorer:
    """Fitness and high-rate power of decoded populations for one instance."""

    def __init__(self, etas, rate_down, rate_up, w: float, h2=None, g2=None, sigma2: float = 1.0,
                 fitness: str = "eoc"):
        self.etas = np.asarray(etas, dtype=float)
        self.w = w
        self.ideal = ideal_water_levels(self.etas, float(np.sum(rate_down)), float(np.sum(rate_up)), w)
        self.mode = fitness
        if fitness == "power" and (h2 is None or g2 is None):
            raise ValueError("power fitness needs the selected-relay gains")
        self.h2, self.g2, self.sigma2 = h2, g2, sigma2

    def fitness(self, r_down, r_up) -> np.ndarray:
        if self.mode == "eoc":
            return 1.0 / equivalent_objective(r_down, r_up, self.ideal, self.w)
        mr = demand_term(r_down, r_up, self.w)
        return 1.0 / pmin_exact(mr, self.h2, self.g2, self.sigma2).sum(axis=-1)

    def approx_power(self, r_down, r_up) -> np.ndarray:
        return (demand_term(r_down, r_up, self.w) * self.etas).sum(axis=-1)


def _check_feasible(n: int, n_services: int) -> None:
    if n_services < 1:
        raise InfeasibleError("need at least one service")
    if n < n_services:
        raise InfeasibleError("infeasible: fewer subcarriers than services")


def esga_optimize(etas, rate_down, rate_up, config: GaConfig, w: float, decoder: Decoder | None = None,
                  scorer: Scorer | None = None) -> GaResult:
    """Elitist genetic search over assignments.

    ``decoder`` maps a ``(P, N)`` batch of assignments to ``(r_down, r_up)``
    rate arrays; it defaults to per-service two-way water filling. The best
    ``elitism_count`` individuals pass to the next generation unchanged; the
    rest are produced by roulette selection, single-point crossover in
    pairs, per-gene mutation and feasibility repair.
    """
    etas = np.asarray(etas, dtype=float)
    n = etas.size
    n_services = len(rate_down)
    _check_feasible(n, n_services)
    if decoder is None:
        def decoder(owners):
            return decode_assignment(owners, etas, rate_down, rate_up, w)
    if scorer is None:
        scorer = Scorer(etas, rate_down, rate_up, w, fitness=config.fitness)
    rng = np.random.default_rng(config.seed)

    pop = random_assignments(config.popsize, n, n_services, rng)
    rd, ru = decoder(pop)
    fit = scorer.fitness(rd, ru)
    best = int(np.argmax(fit))
    result = GaResult(owner=pop[best].copy(), r_down=rd[best].copy(), r_up=ru[best].copy(),
                      fitness=float(fit[best]))
    result.best_fitness.append(result.fitness)
    result.best_approx_power.append(float(scorer.approx_power(rd[best], ru[best])))

    n_child = config.popsize - config.elitism_count
    n_pairs = (n_child + 1) // 2
    for gen in range(1, config.generations + 1):
        elite = np.argsort(-fit, kind="stable")[: config.elitism_count]
        parents = roulette(fit, 2 * n_pairs, rng)
        a, b = single_point_crossover(pop[parents[0::2]], pop[parents[1::2]], config.crossover_prob, rng)
        children = np.concatenate([a, b])[:n_child]
        children = mutate_assignment(children, n_services, config.mutation_prob_per_gene, rng)
        children = repair(children, n_services, rng)
        child_rd, child_ru = decoder(children)
        child_fit = scorer.fitness(child_rd, child_ru)

        pop = np.concatenate([pop[elite], children])
        rd = np.concatenate([rd[elite], child_rd])
        ru = np.concatenate([ru[elite], child_ru])
        fit = np.concatenate([fit[elite], child_fit])

        top = int(np.argmax(fit))
        if fit[top] > result.fitness:
            result.owner = pop[top].copy()
            result.r_down = rd[top].copy()
            result.r_up = ru[top].copy()
            result.fitness = float(fit[top])
            result.converged_generation = gen
        result.best_fitness.append(result.fitness)
        result.best_approx_power.append(float(scorer.approx_power(result.r_down, result.r_up)))
    return result


MAX_ENUMERATION = 600_000


def all_assignments(n: int, n_services: int) -> np.ndarray:
    """Every assignment in which each service owns at least one subcarrier."""
    _check_feasible(n, n_services)
    if n_services**n > MAX_ENUMERATION:
        raise ValueError(f"{n_services}^{n} assignments is too many to enumerate")
    owners = np.array(list(itertools.product(range(n_services), repeat=n)), dtype=np.int64).reshape(-1, n)
    ok = np.ones(len(owners), dtype=bool)
    for s in range(n_services):
        ok &= (owners == s).any(axis=1)
    return owners[ok]


def exhaustive_oracle(etas, rate_down, rate_up, w: float, decoder: Decoder | None = None, chunk: int = 65536):
    """Assignment with the smallest high-rate power ``sum mr * eta``, by enumeration.

    Returns ``(owner, power)``; ties go to the lexicographically first
    assignment.
    """
    etas = np.asarray(etas, dtype=float)
    if decoder is None:
        def decoder(owners):
            return decode_assignment(owners, etas, rate_down, rate_up, w)
    owners = all_assignments(etas.size, len(rate_down))
    best_val = np.inf
    best_idx = -1
    for start in range(0, len(owners), chunk):
        rd, ru = decoder(owners[start:start + chunk])
        vals = (demand_term(rd, ru, w) * etas).sum(axis=1)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_idx = start + i
    return owners[best_idx].copy(), best_val
