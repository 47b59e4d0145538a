"""Monte Carlo runner: scenarios, per-trial scheme comparison, sweeps, CSV.

Every trial derives its channel and GA streams from ``(seed, trial)``, and
every scheme in a trial uses the same GA seed, so schemes and sweep points
see common random numbers.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import channel as channel_mod
from .assign import GaConfig, InfeasibleError, Scorer, esga_optimize
from .baselines import MgaConfig, ma_rates, mga_optimize, mwf_rates
from .relayselect import select_relays
from .traffic import BurstyServiceSpec, sum_rate_constraint
from .waterfill import (
    build_allocation,
    constraint_violation,
    decode_assignment,
    mtwf_allocation,
    rates_from_powers,
    total_power,
)

log = logging.getLogger(__name__)

SCHEMES = ("mtwf", "mwf", "ma", "mga")
CONSTRAINT_TOL = 1e-6
TRIAL_COLUMNS = (
    "scenario_hash",
    "trial",
    "scheme",
    "total_power_w",
    "ee_bits_per_joule",
    "energy_per_bit_db",
    "normalized_energy",
    "converged_generation",
)
METRICS = ("total_power_w", "ee_bits_per_joule", "energy_per_bit_db", "normalized_energy",
           "converged_generation")
SWEEP_PARAMS = ("rate", "rate_ratio_direction", "rate_ratio_service", "plc", "relays",
                "service_count", "ga_generations", "rate_iterations")


class ConstraintViolation(RuntimeError):
    """A scheme returned rates that miss a sum-rate constraint."""


@dataclass(frozen=True)
class ServiceDemand:
    """One service: either direct sum rates or a bursty-traffic description."""

    rate_down: float | None = None
    rate_up: float | None = None
    bursty: BurstyServiceSpec | None = None

    def __post_init__(self):
        direct = self.rate_down is not None or self.rate_up is not None
        if direct == (self.bursty is not None):
            raise ValueError("give either rate_down/rate_up or a bursty spec, not both")
        if direct and (self.rate_down is None or self.rate_up is None
                       or self.rate_down < 0 or self.rate_up < 0):
            raise ValueError("rate_down and rate_up must both be given and >= 0")

    def rates(self) -> tuple[float, float]:
        if self.bursty is not None:
            req = sum_rate_constraint(self.bursty)
            return req.rate_down, req.rate_up
        return float(self.rate_down), float(self.rate_up)


def _default_services():
    return (ServiceDemand(16.0, 16.0), ServiceDemand(16.0, 16.0))


@dataclass(frozen=True)
class Scenario:
    n_subcarriers: int = 16
    n_relays: int = 6
    bandwidth: float = 16.0
    sigma2: float = 1.0
    plc: float = 1.0
    trials: int = 10
    seed: int = 0
    schemes: tuple = SCHEMES
    circuit_power: float = 0.0
    base_dist: str = "exponential"
    services: tuple = field(default_factory=_default_services)
    ga: GaConfig = field(default_factory=GaConfig)
    mga: MgaConfig = field(default_factory=MgaConfig)

    def __post_init__(self):
        if self.n_subcarriers < 1 or self.n_relays < 1:
            raise ValueError("n_subcarriers and n_relays must be >= 1")
        if not self.services:
            raise ValueError("need at least one service")
        if self.n_subcarriers < len(self.services):
            raise InfeasibleError("infeasible: fewer subcarriers than services")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.bandwidth > 0 or not self.sigma2 > 0:
            raise ValueError("bandwidth and sigma2 must be > 0")
        if not self.plc >= 0:
            raise ValueError("plc must be >= 0")
        if self.circuit_power < 0:
            raise ValueError("circuit_power must be >= 0")
        unknown = set(self.schemes) - set(SCHEMES)
        if unknown or not self.schemes:
            raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}, got {self.schemes}")
        if self.base_dist not in channel_mod.BASE_DISTRIBUTIONS:
            raise ValueError(f"base_dist must be one of {channel_mod.BASE_DISTRIBUTIONS}")

    @property
    def n_services(self) -> int:
        return len(self.services)

    def demands(self):
        rates = np.array([s.rates() for s in self.services], dtype=float)
        return rates[:, 0], rates[:, 1]


@dataclass
class AllocationReport:
    scheme: str
    trial: int
    total_power: float
    ee: float
    energy_per_bit_db: float
    normalized_energy: float
    converged_generation: int
    allocation: object = None
    history: list = field(default_factory=list)
    violation: float = 0.0
    rate_error: float = 0.0


def trial_streams(seed: int, trial: int):
    """Channel seed sequence and integer GA seed of one trial."""
    chan_ss, ga_ss = np.random.SeedSequence([seed, trial]).spawn(2)
    return chan_ss, int(ga_ss.generate_state(1)[0])


def power_rate_error(alloc, choice, sigma2: float, w: float) -> float:
    """Relative mismatch between allocated rates and rates the recovered powers achieve."""
    rd, ru = rates_from_powers(alloc.p_a, alloc.p_b, alloc.alpha, choice.h2, choice.g2, sigma2, w)
    got = np.concatenate([rd, ru])
    want = np.concatenate([alloc.r_down, alloc.r_up])
    return float(np.max(np.abs(got - want) / np.maximum(np.abs(want), 1.0)))


def _solve(scheme: str, eta, choice, rate_down, rate_up, sc: Scenario, ga: GaConfig, w: float):
    scorer = Scorer(eta, rate_down, rate_up, w, h2=choice.h2, g2=choice.g2, sigma2=sc.sigma2,
                    fitness=ga.fitness)
    if scheme == "mga":
        res = mga_optimize(eta, rate_down, rate_up, ga, w, sc.mga, scorer=scorer)
        alloc = build_allocation(res.owner, res.r_down, res.r_up, choice, sc.sigma2, w)
        return alloc, res
    if scheme == "mtwf":
        def decoder(o):
            return decode_assignment(o, eta, rate_down, rate_up, w)
    elif scheme == "mwf":
        def decoder(o):
            return mwf_rates(o, eta, rate_down, rate_up, w)
    else:
        def decoder(o):
            return ma_rates(o, rate_down, rate_up)
    res = esga_optimize(eta, rate_down, rate_up, ga, w, decoder=decoder, scorer=scorer)
    if scheme == "mtwf":
        alloc = mtwf_allocation(res.owner, rate_down, rate_up, choice, sc.sigma2, w)
    else:
        alloc = build_allocation(res.owner, res.r_down, res.r_up, choice, sc.sigma2, w)
    return alloc, res


def run_trial(sc: Scenario, trial: int) -> list[AllocationReport]:
    chan_ss, ga_seed = trial_streams(sc.seed, trial)
    chan = channel_mod.generate(sc.n_subcarriers, sc.n_relays, sc.plc, sc.sigma2, sc.bandwidth,
                                chan_ss, sc.base_dist)
    choice = select_relays(chan)
    w = chan.subcarrier_bandwidth
    rate_down, rate_up = sc.demands()
    total_rate = float(rate_down.sum() + rate_up.sum())
    ga = replace(sc.ga, seed=ga_seed)

    order = list(sc.schemes)
    if "ma" not in order:
        order.append("ma")
    results = {}
    for scheme in order:
        alloc, res = _solve(scheme, choice.eta, choice, rate_down, rate_up, sc, ga, w)
        viol = constraint_violation(alloc, rate_down, rate_up)
        if viol > CONSTRAINT_TOL:
            raise ConstraintViolation(
                f"trial {trial}, scheme {scheme}: sum-rate constraint missed by {viol:.3e} (relative)"
            )
        power = total_power(alloc) + sc.circuit_power
        results[scheme] = (alloc, res, power, viol, power_rate_error(alloc, choice, sc.sigma2, w))

    p_ma = results["ma"][2]
    reports = []
    for scheme in sc.schemes:
        alloc, res, power, viol, rate_err = results[scheme]
        reports.append(AllocationReport(
            scheme=scheme,
            trial=trial,
            total_power=power,
            ee=total_rate / power,
            energy_per_bit_db=10.0 * math.log10(power / total_rate),
            normalized_energy=power / p_ma,
            converged_generation=res.converged_generation,
            allocation=alloc,
            history=res.best_approx_power,
            violation=viol,
            rate_error=rate_err,
        ))
    return reports


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("MTWF_THREADS", "1")))
    except ValueError:
        return 1


def run_scenario(sc: Scenario, threads: int | None = None) -> list[AllocationReport]:
    """All trials of a scenario, in trial order."""
    threads = default_threads() if threads is None else threads
    trials = range(sc.trials)
    if threads > 1 and sc.trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(run_trial, [sc] * sc.trials, trials))
    else:
        chunks = [run_trial(sc, t) for t in trials]
    return [r for chunk in chunks for r in chunk]


def aggregate(reports: list[AllocationReport]) -> dict:
    """Per-scheme ``{metric: (mean, std)}``; means are over per-trial values."""
    by_scheme: dict[str, list[AllocationReport]] = {}
    for r in reports:
        by_scheme.setdefault(r.scheme, []).append(r)
    out = {}
    for scheme, rows in by_scheme.items():
        vals = {
            "total_power_w": [r.total_power for r in rows],
            "ee_bits_per_joule": [r.ee for r in rows],
            "energy_per_bit_db": [r.energy_per_bit_db for r in rows],
            "normalized_energy": [r.normalized_energy for r in rows],
            "converged_generation": [r.converged_generation for r in rows],
        }
        out[scheme] = {k: (float(np.mean(v)), float(np.std(v))) for k, v in vals.items()}
    return out


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def trial_csv(reports: list[AllocationReport], scenario_hash: str, header: str = "") -> str:
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n" if line else "#\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for r in reports:
        writer.writerow([scenario_hash, r.trial, r.scheme, _fmt(r.total_power), _fmt(r.ee),
                         _fmt(r.energy_per_bit_db), _fmt(r.normalized_energy), r.converged_generation])
    for stat, pos in (("mean", 0), ("std", 1)):
        for scheme, metrics in aggregate(reports).items():
            writer.writerow([scenario_hash, stat, scheme] + [_fmt(metrics[m][pos]) for m in METRICS])
    return buf.getvalue()


def _scaled_services(services, factor_down, factor_up):
    return tuple(ServiceDemand(rd * fd, ru * fu) for (rd, ru), fd, fu in
                 zip((s.rates() for s in services), factor_down, factor_up))


def apply_sweep_value(base: Scenario, param: str, value: float) -> Scenario:
    """Scenario at one grid point of a sweep."""
    if param not in SWEEP_PARAMS:
        raise ValueError(f"unknown sweep parameter {param!r}; expected one of {SWEEP_PARAMS}")
    rates = [s.rates() for s in base.services]
    if param == "rate":
        return replace(base, services=tuple(ServiceDemand(value, value) for _ in rates))
    if param == "rate_ratio_direction":
        if not 0.0 <= value <= 1.0:
            raise ValueError("rate_ratio_direction must lie in [0, 1]")
        return replace(base, services=tuple(
            ServiceDemand(value * (rd + ru), (1.0 - value) * (rd + ru)) for rd, ru in rates))
    if param == "rate_ratio_service":
        if len(rates) != 2 or not 0.0 <= value <= 1.0:
            raise ValueError("rate_ratio_service needs exactly two services and a value in [0, 1]")
        total_down = rates[0][0] + rates[1][0]
        total_up = rates[0][1] + rates[1][1]
        return replace(base, services=(
            ServiceDemand(value * total_down, value * total_up),
            ServiceDemand((1.0 - value) * total_down, (1.0 - value) * total_up),
        ))
    if param == "plc":
        return replace(base, plc=float(value))
    if param == "relays":
        return replace(base, n_relays=int(value))
    if param == "service_count":
        k = int(value)
        if k < 1:
            raise ValueError("service_count must be >= 1")
        total_down = sum(r[0] for r in rates)
        total_up = sum(r[1] for r in rates)
        return replace(base, services=tuple(ServiceDemand(total_down / k, total_up / k) for _ in range(k)))
    if param == "ga_generations":
        g = int(value)
        return replace(base, ga=replace(base.ga, generations=g), mga=replace(base.mga, generations=g))
    return replace(base, mga=replace(base.mga, generations=int(value)))


def sweep(base: Scenario, param: str, grid, threads: int | None = None) -> list[dict]:
    """Long-format rows ``{sweep_param, value, scheme, metric, mean, std}``."""
    grid = list(grid)
    if not grid:
        raise ValueError("sweep grid must be nonempty")
    rows = []
    for value in grid:
        sc = apply_sweep_value(base, param, value)
        log.info("sweep %s=%s", param, value)
        for scheme, metrics in aggregate(run_scenario(sc, threads)).items():
            for metric in METRICS:
                mean, std = metrics[metric]
                rows.append(dict(sweep_param=param, value=value, scheme=scheme, metric=metric,
                                 mean=mean, std=std))
    return rows


def sweep_csv(rows: list[dict], header: str = "") -> str:
    buf = io.StringIO()
    if header:
        for line in header.splitlines():
            buf.write(f"# {line}\n" if line else "#\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("sweep_param", "value", "scheme", "metric", "mean", "std"))
    for r in rows:
        writer.writerow([r["sweep_param"], _fmt(r["value"]), r["scheme"], r["metric"],
                         _fmt(r["mean"]), _fmt(r["std"])])
    return buf.getvalue()


@dataclass(frozen=True)
class OracleCheck:
    trials: int
    matches: int
    worst_gap: float

    @property
    def match_rate(self) -> float:
        return self.matches / self.trials


def oracle_check(n: int, n_services: int, trials: int, seed: int = 0, ga: GaConfig = GaConfig(),
                 rate: float = 8.0, n_relays: int = 6, plc: float = 1.0, rel_tol: float = 1e-9) -> OracleCheck:
    """How often ESGA reaches the exhaustive optimum of the high-rate power.

    Each trial draws a channel with one-hertz subcarriers and equal demands
    of ``rate`` per service and direction; a GA result counts as a match
    when its power is within ``rel_tol`` of the enumerated minimum.
    """
    from .assign import exhaustive_oracle
    from .waterfill import approx_power

    rate_down = np.full(n_services, float(rate))
    rate_up = rate_down.copy()
    matches = 0
    worst = 0.0
    for t in range(trials):
        chan_ss, ga_seed = trial_streams(seed, t)
        chan = channel_mod.generate(n, n_relays, plc, 1.0, float(n), chan_ss)
        eta = select_relays(chan).eta
        res = esga_optimize(eta, rate_down, rate_up, replace(ga, seed=ga_seed), 1.0)
        _, best = exhaustive_oracle(eta, rate_down, rate_up, 1.0)
        gap = approx_power(res.r_down, res.r_up, eta, 1.0) / best - 1.0
        worst = max(worst, gap)
        matches += gap <= rel_tol
    return OracleCheck(trials=trials, matches=int(matches), worst_gap=float(worst))
