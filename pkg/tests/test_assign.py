import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtwf.assign import (
    GaConfig,
    InfeasibleError,
    Scorer,
    all_assignments,
    equivalent_objective,
    esga_optimize,
    exhaustive_oracle,
    ideal_water_levels,
    mutate_assignment,
    random_assignments,
    repair,
    roulette,
    single_point_crossover,
)
from mtwf.channel import generate
from mtwf.relayselect import demand_term, pmin_exact, select_relays
from mtwf.waterfill import decode_assignment

from oracles import approx_objective


def test_ideal_levels_example():
    ideal = ideal_water_levels([1.0, 4.0], 3.0, 0.0, 2.0)
    assert ideal.down == pytest.approx(math.sqrt(32), rel=1e-12)
    np.testing.assert_allclose(ideal.r_down, [2.5, 0.5], rtol=1e-12)
    assert ideal.up == pytest.approx(2.0, rel=1e-12)


def test_ideal_levels_symmetric_and_permutation_invariant():
    ideal = ideal_water_levels([2.0] * 5, 10.0, 5.0, 1.0)
    np.testing.assert_allclose(ideal.r_down, 2.0)
    np.testing.assert_allclose(ideal.r_up, 1.0)
    etas = np.array([0.5, 3.0, 7.0, 1.2])
    perm = np.array([2, 0, 3, 1])
    a = ideal_water_levels(etas, 6.0, 2.0, 1.5)
    b = ideal_water_levels(etas[perm], 6.0, 2.0, 1.5)
    assert a.log2_down == pytest.approx(b.log2_down, rel=1e-14)
    np.testing.assert_allclose(a.r_down[perm], b.r_down, rtol=1e-12)


def test_ideal_rates_may_go_negative():
    ideal = ideal_water_levels([1.0, 100.0], 2.0, 2.0, 2.0)
    assert ideal.r_down[1] < 0
    assert ideal.r_down.sum() == pytest.approx(2.0)


def test_objective_at_ideal_is_n_times_levels():
    etas = np.array([0.7, 2.0, 5.0])
    ideal = ideal_water_levels(etas, 9.0, 6.0, 1.0)
    val = equivalent_objective(ideal.r_down, ideal.r_up, ideal, 1.0)
    assert val == pytest.approx(3 * (ideal.down + ideal.up), rel=1e-12)


@given(seed=st.integers(0, 10_000))
@settings(max_examples=100)
def test_objective_above_ideal_for_other_splits(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    etas = rng.exponential(2.0, n) + 0.1
    ideal = ideal_water_levels(etas, 10.0, 4.0, 1.0)
    rd = rng.dirichlet(np.ones(n)) * 10.0
    ru = rng.dirichlet(np.ones(n)) * 4.0
    base = n * (ideal.down + ideal.up)
    assert equivalent_objective(rd, ru, ideal, 1.0) > base * (1 - 1e-12)


def test_objective_ranks_like_high_rate_power():
    rng = np.random.default_rng(2024)
    disagreements = 0
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        s = int(rng.integers(1, min(n, 3) + 1))
        etas = rng.exponential(2.0, n) + 0.05
        rate_down = rng.uniform(0.5, 6.0, s)
        rate_up = rng.uniform(0.5, 6.0, s)
        owners = random_assignments(2, n, s, rng)
        w = 1.0
        rd, ru = decode_assignment(owners, etas, rate_down, rate_up, w)
        ideal = ideal_water_levels(etas, rate_down.sum(), rate_up.sum(), w)
        eoc = equivalent_objective(rd, ru, ideal, w)
        power = [approx_objective(rd[i], ru[i], etas, w) for i in range(2)]
        if abs(power[0] - power[1]) <= 1e-9 * max(power):
            continue
        disagreements += (eoc[0] < eoc[1]) != (power[0] < power[1])
    assert disagreements == 0


def test_single_service_every_assignment_is_ideal():
    etas = np.array([1.0, 1.5, 2.0, 2.5])
    ideal = ideal_water_levels(etas, 12.0, 12.0, 1.0)
    assert np.all(ideal.r_down > 0)
    owners = np.zeros((1, 4), int)
    rd, ru = decode_assignment(owners, etas, [12.0], [12.0], 1.0)
    np.testing.assert_allclose(rd[0], ideal.r_down, rtol=1e-12)
    res = esga_optimize(etas, [12.0], [12.0], GaConfig(generations=3), 1.0)
    np.testing.assert_array_equal(res.owner, 0)
    assert 1 / res.fitness == pytest.approx(4 * (ideal.down + ideal.up), rel=1e-12)


def test_oracle_two_subcarrier_example():
    etas = np.array([1.0, 4.0])
    # equal demands tie; the first enumerated assignment wins
    owner, power = exhaustive_oracle(etas, [2.0, 2.0], [2.0, 2.0], 1.0)
    np.testing.assert_array_equal(owner, [0, 1])
    both = [approx_objective(*decode_assignment(o, etas, [2.0, 2.0], [2.0, 2.0], 1.0), etas, 1.0)
            for o in ([0, 1], [1, 0])]
    assert both[0] == pytest.approx(both[1])
    # heavier service gets the better subcarrier
    owner, _ = exhaustive_oracle(etas, [1.0, 3.0], [1.0, 3.0], 1.0)
    np.testing.assert_array_equal(owner, [1, 0])


def test_oracle_is_minimum_of_enumeration():
    rng = np.random.default_rng(5)
    etas = rng.exponential(2.0, 7) + 0.1
    rate_down, rate_up = [3.0, 5.0, 1.0], [2.0, 2.0, 4.0]
    owner, power = exhaustive_oracle(etas, rate_down, rate_up, 1.0, chunk=100)
    owners = all_assignments(7, 3)
    assert len(owners) == 3**7 - 3 * 2**7 + 3
    values = [approx_objective(*decode_assignment(o, etas, rate_down, rate_up, 1.0), etas, 1.0) for o in owners]
    assert power == pytest.approx(min(values), rel=1e-12)
    assert power <= min(values) * (1 + 1e-12)


def test_enumeration_limit():
    with pytest.raises(ValueError):
        all_assignments(20, 3)
    with pytest.raises(InfeasibleError):
        all_assignments(2, 3)


def _instance(seed, n=6, s=2, rate=8.0):
    chan = generate(n, 6, 1.0, bandwidth=float(n), seed=seed)
    choice = select_relays(chan)
    return choice, np.full(s, rate), np.full(s, rate)


def test_esga_matches_oracle_small():
    hits = 0
    for seed in range(100):
        choice, rd, ru = _instance(seed)
        res = esga_optimize(choice.eta, rd, ru, GaConfig(seed=seed), 1.0)
        _, best = exhaustive_oracle(choice.eta, rd, ru, 1.0)
        hits += approx_objective(res.r_down, res.r_up, choice.eta, 1.0) <= best * (1 + 1e-9)
    assert hits >= 95


def test_esga_history_monotone_and_deterministic():
    choice, rd, ru = _instance(3, n=12, s=3)
    cfg = GaConfig(generations=60, seed=1)
    res = esga_optimize(choice.eta, rd, ru, cfg, 1.0)
    assert len(res.best_fitness) == 61
    assert np.all(np.diff(res.best_fitness) >= 0)
    assert np.all(np.diff(res.best_approx_power) <= 1e-9 * res.best_approx_power[0])
    again = esga_optimize(choice.eta, rd, ru, cfg, 1.0)
    np.testing.assert_array_equal(res.owner, again.owner)
    assert res.best_fitness == again.best_fitness
    assert 0 <= res.converged_generation <= 60
    for svc in range(3):
        assert res.r_down[res.owner == svc].sum() == pytest.approx(8.0, rel=1e-12)


def test_esga_rejects_infeasible():
    with pytest.raises(InfeasibleError, match="infeasible: fewer subcarriers than services"):
        esga_optimize([1.0, 2.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0], GaConfig(), 1.0)


def test_power_and_objective_fitness_share_argmin():
    w = 1.0
    owners = all_assignments(6, 2)
    for seed in range(50):
        choice, rate_down, rate_up = _instance(seed)
        rd, ru = decode_assignment(owners, choice.eta, rate_down, rate_up, w)
        eoc = Scorer(choice.eta, rate_down, rate_up, w).fitness(rd, ru)
        exact = Scorer(choice.eta, rate_down, rate_up, w, choice.h2, choice.g2, fitness="power").fitness(rd, ru)
        assert np.argmax(eoc) == np.argmax(exact)
        np.testing.assert_allclose(
            1 / exact, pmin_exact(demand_term(rd, ru, w), choice.h2, choice.g2).sum(axis=1), rtol=1e-12)


def test_power_fitness_runs_and_needs_gains():
    choice, rd, ru = _instance(0)
    res = esga_optimize(choice.eta, rd, ru, GaConfig(generations=20, fitness="power"), 1.0,
                        scorer=Scorer(choice.eta, rd, ru, 1.0, choice.h2, choice.g2, fitness="power"))
    assert np.all(np.diff(res.best_fitness) >= 0)
    with pytest.raises(ValueError):
        Scorer(choice.eta, rd, ru, 1.0, fitness="power")


@pytest.mark.parametrize("kwargs", [dict(popsize=1), dict(elitism_count=0), dict(elitism_count=41),
                                    dict(crossover_prob=1.5), dict(mutation_prob_per_gene=-0.1),
                                    dict(generations=-1), dict(fitness="size")])
def test_ga_config_validation(kwargs):
    with pytest.raises(ValueError):
        GaConfig(**kwargs)


@given(seed=st.integers(0, 10_000), n=st.integers(3, 12), s=st.integers(1, 3))
def test_repair_makes_every_service_present(seed, n, s):
    rng = np.random.default_rng(seed)
    owners = np.zeros((5, n), dtype=np.int64)
    owners[1] = rng.integers(0, s, n)
    fixed = repair(owners.copy(), s, rng)
    for row in fixed:
        assert set(row) == set(range(s))
    # feasible rows are left alone
    ok = random_assignments(5, n, s, rng)
    np.testing.assert_array_equal(repair(ok.copy(), s, rng), ok)


def test_mutation_moves_to_other_service():
    rng = np.random.default_rng(0)
    owners = np.zeros((200, 10), dtype=np.int64)
    moved = mutate_assignment(owners, 3, 1.0, rng)
    assert np.all(moved != 0)
    assert set(np.unique(moved)) == {1, 2}
    np.testing.assert_array_equal(mutate_assignment(owners, 3, 0.0, rng), owners)
    np.testing.assert_array_equal(mutate_assignment(owners, 1, 1.0, rng), owners)


def test_crossover_swaps_tails():
    rng = np.random.default_rng(1)
    a = np.zeros((50, 8), dtype=np.int64)
    b = np.ones((50, 8), dtype=np.int64)
    ca, cb = single_point_crossover(a, b, 1.0, rng)
    np.testing.assert_array_equal(ca + cb, 1)
    for row in ca:
        cut = np.argmax(row == 1)
        assert 1 <= cut <= 7 and np.all(row[cut:] == 1) and np.all(row[:cut] == 0)
    same_a, _ = single_point_crossover(a, b, 0.0, rng)
    np.testing.assert_array_equal(same_a, a)


def test_roulette_is_proportional():
    rng = np.random.default_rng(3)
    picks = roulette(np.array([1.0, 3.0, 0.0, 6.0]), 100_000, rng)
    freq = np.bincount(picks, minlength=4) / picks.size
    np.testing.assert_allclose(freq, [0.1, 0.3, 0.0, 0.6], atol=0.01)
