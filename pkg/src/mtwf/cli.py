"""Command-line front end.

Exit codes: 0 success, 1 validation error (missing file, bad config,
infeasible scenario, unstable queue), 2 internal-consistency failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import replace

from . import config as cfg
from .assign import GaConfig, InfeasibleError
from .bench import SCHEMES, SWEEP_PARAMS, ConstraintViolation, oracle_check, run_scenario, sweep, sweep_csv, trial_csv
from .queuesim import EQUIVALENCE_CASES, EquivalenceCase, compare_arrivals
from .traffic import InstabilityError
from .waterfill import AllocationError

log = logging.getLogger("mtwf")


def _write(text: str, out) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _load(args):
    sc, _ = cfg.load(args.config, args.set)
    if args.seed is not None:
        sc = replace(sc, seed=args.seed)
    if args.scheme:
        sc = replace(sc, schemes=SCHEMES if "all" in args.scheme else tuple(dict.fromkeys(args.scheme)))
    text = cfg.format_scenario(sc)
    return sc, text


def cmd_run(args) -> int:
    sc, text = _load(args)
    reports = run_scenario(sc, args.threads)
    _write(trial_csv(reports, cfg.scenario_hash(text), text), args.out)
    return 0


def _grid(raw: str):
    try:
        return [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise cfg.ConfigError(f"--grid must be a comma list of numbers, got {raw!r}") from None


def cmd_sweep(args) -> int:
    sc, text = _load(args)
    rows = sweep(sc, args.param, _grid(args.grid), args.threads)
    header = f"{text}\nsweep_param = {args.param}\ngrid = {args.grid}\n"
    _write(sweep_csv(rows, header), args.out)
    return 0


def cmd_validate_queue(args) -> int:
    if args.case:
        cases = []
        for raw in args.case:
            try:
                lam, t, big_lam, mu = (float(v) for v in raw.split(","))
            except ValueError:
                raise cfg.ConfigError(f"--case needs lam,T,Lambda,mu; got {raw!r}") from None
            cases.append(EquivalenceCase(lam, t, big_lam, mu))
    else:
        cases = EQUIVALENCE_CASES
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["packet_rate", "burst_duration", "burst_rate", "service_rate", "equivalent_rate",
                "seeds", "horizon", "bursty_delay", "poisson_delay", "closed_form_delay",
                "bursty_delay_std", "poisson_delay_std", "rel_err_bursty_vs_poisson",
                "rel_err_bursty_vs_closed", "rel_err_poisson_vs_closed"])
    for case in cases:
        row = compare_arrivals(case, args.horizon, range(args.seed, args.seed + args.seeds))
        c = row.case
        w.writerow([repr(v) for v in (c.packet_rate, c.burst_duration, c.burst_rate, c.service_rate,
                                      c.traffic.equivalent_rate)]
                   + [row.seeds, row.horizon]
                   + [repr(v) for v in (row.bursty_delay, row.poisson_delay, row.closed_form_delay,
                                        row.bursty_delay_std, row.poisson_delay_std, row.equivalence_error,
                                        row.bursty_closed_form_error, row.poisson_closed_form_error)])
    _write(buf.getvalue(), args.out)
    return 0


def cmd_oracle_check(args) -> int:
    ga = GaConfig(popsize=args.popsize, generations=args.generations)
    res = oracle_check(args.n, args.s, args.trials, args.seed, ga, rate=args.rate)
    _write(f"n={args.n} s={args.s} trials={res.trials} matches={res.matches} "
           f"match_rate={res.match_rate:.3f} worst_gap={res.worst_gap:.3e}\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtwf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_args(sp):
        sp.add_argument("--config", required=True, help="scenario file")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--scheme", action="append", choices=SCHEMES + ("all",),
                        help="scheme to run (repeatable); overrides [scenario] schemes")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: $MTWF_THREADS or 1)")
        sp.add_argument("--out", default=None, help="output CSV (default stdout)")

    run = sub.add_parser("run", help="Monte Carlo comparison of schemes")
    scenario_args(run)
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="run a scenario over a parameter grid")
    scenario_args(sw)
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--grid", required=True, help="comma-separated values")
    sw.set_defaults(func=cmd_sweep)

    vq = sub.add_parser("validate-queue", help="bursty vs homogeneous queue delay check")
    vq.add_argument("--case", action="append", metavar="LAM,T,LAMBDA,MU",
                    help="parameter set (repeatable; default: built-in sets)")
    vq.add_argument("--horizon", type=int, default=1_000_000)
    vq.add_argument("--seeds", type=int, default=10)
    vq.add_argument("--seed", type=int, default=0, help="first seed")
    vq.add_argument("--out", default=None)
    vq.set_defaults(func=cmd_validate_queue)

    oc = sub.add_parser("oracle-check", help="ESGA vs exhaustive search match rate")
    oc.add_argument("--n", type=int, default=8)
    oc.add_argument("--s", type=int, default=2)
    oc.add_argument("--trials", type=int, default=50)
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--rate", type=float, default=8.0, help="demand per service and direction, b/s")
    oc.add_argument("--popsize", type=int, default=GaConfig.popsize)
    oc.add_argument("--generations", type=int, default=GaConfig.generations)
    oc.add_argument("--out", default=None)
    oc.set_defaults(func=cmd_oracle_check)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except cfg.ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 1
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConstraintViolation, AllocationError) as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
