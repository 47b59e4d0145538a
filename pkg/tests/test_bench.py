import math
from dataclasses import replace

import numpy as np
import pytest

from mtwf.assign import GaConfig, InfeasibleError
from mtwf.baselines import MgaConfig
from mtwf.bench import (
    TRIAL_COLUMNS,
    ConstraintViolation,
    Scenario,
    ServiceDemand,
    aggregate,
    apply_sweep_value,
    oracle_check,
    run_scenario,
    run_trial,
    sweep,
    sweep_csv,
    trial_csv,
    trial_streams,
)
from mtwf.traffic import BurstyServiceSpec, DirectionTraffic

FAST = dict(ga=GaConfig(popsize=20, generations=30), mga=MgaConfig(generations=60))


def small(**kw):
    base = dict(n_subcarriers=8, n_relays=3, bandwidth=8.0, trials=2, **FAST)
    base.update(kw)
    return Scenario(**base)


def test_report_metric_identities():
    sc = small(services=(ServiceDemand(6.0, 3.0), ServiceDemand(2.0, 5.0)))
    reports = run_trial(sc, 0)
    assert [r.scheme for r in reports] == ["mtwf", "mwf", "ma", "mga"]
    total = 16.0
    for r in reports:
        assert r.ee * r.total_power == pytest.approx(total, rel=1e-9)
        assert r.energy_per_bit_db == pytest.approx(10 * math.log10(r.total_power / total), rel=1e-12)
        assert r.violation <= 1e-9
        assert r.rate_error <= 1e-9
    ma = next(r for r in reports if r.scheme == "ma")
    assert ma.normalized_energy == 1.0


def test_ma_is_always_computed_for_normalisation():
    sc = small(schemes=("mtwf",))
    reports = run_trial(sc, 0)
    assert [r.scheme for r in reports] == ["mtwf"]
    assert 0 < reports[0].normalized_energy <= 1.0 + 1e-12


def test_single_service_mtwf_equals_mwf():
    sc = small(services=(ServiceDemand(10.0, 10.0),), schemes=("mtwf", "mwf"))
    a, b = run_trial(sc, 1)
    assert a.ee == pytest.approx(b.ee, rel=1e-9)


def test_bursty_services_become_rates():
    traffic = DirectionTraffic(0.5, 2.0, 10.0, 1.0)
    svc = ServiceDemand(bursty=BurstyServiceSpec(0, 0.5, traffic, traffic))
    assert svc.rates() == pytest.approx((1 / 0.5 + 5.0, 1 / 0.5 + 5.0))
    sc = small(services=(svc, ServiceDemand(3.0, 3.0)), schemes=("mtwf",))
    rd, ru = sc.demands()
    np.testing.assert_allclose(rd, [7.0, 3.0])
    assert run_trial(sc, 0)[0].ee > 0


def test_circuit_power_enters_denominator():
    base = small(schemes=("ma",))
    extra = replace(base, circuit_power=100.0)
    a, b = run_trial(base, 0)[0], run_trial(extra, 0)[0]
    assert b.total_power == pytest.approx(a.total_power + 100.0)


def test_scenario_validation():
    with pytest.raises(InfeasibleError, match="infeasible: fewer subcarriers than services"):
        Scenario(n_subcarriers=2, services=(ServiceDemand(1, 1),) * 3)
    with pytest.raises(ValueError):
        Scenario(trials=0)
    with pytest.raises(ValueError):
        Scenario(schemes=("mtwf", "best"))
    with pytest.raises(ValueError):
        ServiceDemand(1.0, None)
    with pytest.raises(ValueError):
        ServiceDemand()


def test_trial_streams_independent_of_scheme_and_count():
    a = trial_streams(7, 3)
    b = trial_streams(7, 3)
    assert a[1] == b[1]
    assert trial_streams(7, 4)[1] != a[1]
    one = run_scenario(small(trials=1))
    two = run_scenario(small(trials=2))
    assert [r.total_power for r in one] == [r.total_power for r in two[:4]]


def test_run_scenario_threads_match_serial():
    sc = small(trials=3, schemes=("mtwf", "ma"))
    serial = run_scenario(sc, threads=1)
    parallel = run_scenario(sc, threads=2)
    assert [r.total_power for r in serial] == [r.total_power for r in parallel]


def test_trial_csv_schema_and_aggregates():
    sc = small(trials=3, schemes=("mtwf", "ma"))
    reports = run_scenario(sc)
    text = trial_csv(reports, "abc123", header="[scenario]\nseed = 0")
    lines = text.splitlines()
    assert lines[0] == "# [scenario]" and lines[1] == "# seed = 0"
    assert lines[2] == ",".join(TRIAL_COLUMNS)
    body = lines[3:]
    assert len(body) == 3 * 2 + 2 * 2
    assert body[-4].startswith("abc123,mean,mtwf,")
    agg = aggregate(reports)
    mean_ee = np.mean([r.ee for r in reports if r.scheme == "mtwf"])
    assert agg["mtwf"]["ee_bits_per_joule"][0] == pytest.approx(mean_ee)
    assert agg["ma"]["normalized_energy"] == (1.0, 0.0)


def test_sweep_points():
    base = small(services=(ServiceDemand(4.0, 2.0), ServiceDemand(1.0, 3.0)))
    s = apply_sweep_value(base, "rate", 5.0)
    assert [x.rates() for x in s.services] == [(5.0, 5.0), (5.0, 5.0)]
    s = apply_sweep_value(base, "rate_ratio_direction", 0.25)
    assert s.services[0].rates() == pytest.approx((1.5, 4.5))
    s = apply_sweep_value(base, "rate_ratio_service", 0.8)
    assert s.services[0].rates() == pytest.approx((4.0, 4.0))
    assert s.services[1].rates() == pytest.approx((1.0, 1.0))
    assert apply_sweep_value(base, "plc", 2.0).plc == 2.0
    assert apply_sweep_value(base, "relays", 5).n_relays == 5
    s = apply_sweep_value(base, "service_count", 4)
    assert len(s.services) == 4 and s.services[0].rates() == pytest.approx((1.25, 1.25))
    s = apply_sweep_value(base, "ga_generations", 10)
    assert s.ga.generations == 10 and s.mga.generations == 10
    s = apply_sweep_value(base, "rate_iterations", 10)
    assert s.ga.generations == base.ga.generations and s.mga.generations == 10
    with pytest.raises(ValueError):
        apply_sweep_value(base, "temperature", 1.0)
    with pytest.raises(ValueError):
        apply_sweep_value(base, "rate_ratio_direction", 1.5)


def test_sweep_long_format():
    base = small(trials=1, schemes=("mtwf", "ma"))
    rows = sweep(base, "plc", [0.0, 1.0])
    assert len(rows) == 2 * 2 * 5
    zero = [r for r in rows if r["value"] == 0.0 and r["metric"] == "normalized_energy"]
    for r in zero:
        assert r["mean"] == pytest.approx(1.0, rel=1e-12)
    text = sweep_csv(rows)
    assert text.splitlines()[0] == "sweep_param,value,scheme,metric,mean,std"
    with pytest.raises(ValueError):
        sweep(base, "plc", [])


def test_constraint_violation_is_reported(monkeypatch):
    import mtwf.bench as bench

    monkeypatch.setattr(bench, "constraint_violation", lambda *a: 1e-3)
    with pytest.raises(ConstraintViolation, match="sum-rate constraint"):
        bench.run_trial(small(schemes=("ma",)), 0)


def test_oracle_check_small():
    res = oracle_check(6, 2, trials=5, seed=1)
    assert res.trials == 5 and res.matches >= 4
    assert 0.0 <= res.match_rate <= 1.0
