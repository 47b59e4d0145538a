"""Scenario files: sectioned ``key = value`` text read with configparser.

Grammar::

    [scenario]   n_subcarriers n_relays bandwidth sigma2 plc trials seed
                 schemes (comma list or "all") circuit_power
    [channel]    base_dist = exponential | uniform01
    [ga]         popsize generations crossover_prob mutation_prob_per_gene
                 elitism_count fitness = eoc | power
    [mga]        generations share_mutation_prob share_mutation_sigma blend_alpha
    [service.K]  rate_down rate_up
                 or max_delay plus down_/up_ burst_rate burst_duration
                 packet_rate packet_length

Services are ordered by the integer K. Every section and key is optional
except at least one service; unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import fields, replace

from .assign import GaConfig
from .baselines import MgaConfig
from .bench import SCHEMES, Scenario, ServiceDemand
from .traffic import BurstyServiceSpec, DirectionTraffic


class ConfigError(ValueError):
    """Schema violation in a scenario file or override."""


SCENARIO_KEYS = {
    "n_subcarriers": int,
    "n_relays": int,
    "bandwidth": float,
    "sigma2": float,
    "plc": float,
    "trials": int,
    "seed": int,
    "schemes": str,
    "circuit_power": float,
}
CHANNEL_KEYS = {"base_dist": str}
GA_KEYS = {
    "popsize": int,
    "generations": int,
    "crossover_prob": float,
    "mutation_prob_per_gene": float,
    "elitism_count": int,
    "fitness": str,
}
MGA_KEYS = {
    "generations": int,
    "share_mutation_prob": float,
    "share_mutation_sigma": float,
    "blend_alpha": float,
}
DIRECTION_KEYS = ("burst_rate", "burst_duration", "packet_rate", "packet_length")
SERVICE_KEYS = {"rate_down", "rate_up", "max_delay"} | {
    f"{d}_{k}" for d in ("down", "up") for k in DIRECTION_KEYS
}


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    return cp


def _convert(section: str, key: str, raw: str, kind):
    try:
        return kind(raw.strip())
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {kind.__name__}") from None


def _take(cp, section: str, schema: dict) -> dict:
    if not cp.has_section(section):
        return {}
    out = {}
    for key, raw in cp.items(section):
        if key not in schema:
            raise ConfigError(f"[{section}] unknown key {key!r}; allowed: {sorted(schema)}")
        out[key] = _convert(section, key, raw, schema[key])
    return out


def _parse_schemes(raw: str) -> tuple:
    names = [s.strip() for s in raw.split(",") if s.strip()]
    if names == ["all"]:
        return SCHEMES
    bad = [s for s in names if s not in SCHEMES]
    if bad or not names:
        raise ConfigError(f"[scenario] schemes: unknown {bad or raw!r}; choose from {SCHEMES} or 'all'")
    return tuple(names)


def _service(section: str, items: dict, sid: int) -> ServiceDemand:
    for key in items:
        if key not in SERVICE_KEYS:
            raise ConfigError(f"[{section}] unknown key {key!r}; allowed: {sorted(SERVICE_KEYS)}")
    vals = {k: _convert(section, k, v, float) for k, v in items.items()}
    direct = {"rate_down", "rate_up"} & vals.keys()
    bursty = vals.keys() - {"rate_down", "rate_up"}
    try:
        if direct and not bursty:
            if len(direct) != 2:
                raise ConfigError(f"[{section}] needs both rate_down and rate_up")
            return ServiceDemand(vals["rate_down"], vals["rate_up"])
        if bursty and not direct:
            missing = (SERVICE_KEYS - {"rate_down", "rate_up"}) - vals.keys()
            if missing:
                raise ConfigError(f"[{section}] bursty service is missing {sorted(missing)}")
            dirs = [DirectionTraffic(**{k: vals[f"{d}_{k}"] for k in DIRECTION_KEYS}) for d in ("down", "up")]
            return ServiceDemand(bursty=BurstyServiceSpec(sid, vals["max_delay"], dirs[0], dirs[1]))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None
    raise ConfigError(f"[{section}] give either rate_down/rate_up or the bursty keys")


def scenario_from_parser(cp: configparser.ConfigParser) -> Scenario:
    allowed = {"scenario", "channel", "ga", "mga"}
    services = []
    for section in cp.sections():
        if section.startswith("service."):
            try:
                order = int(section.split(".", 1)[1])
            except ValueError:
                raise ConfigError(f"service section {section!r} needs an integer suffix") from None
            services.append((order, section))
        elif section not in allowed:
            raise ConfigError(f"unknown section [{section}]")
    if not services:
        raise ConfigError("at least one [service.K] section is required")
    services.sort()
    demands = tuple(_service(sec, dict(cp.items(sec)), i) for i, (_, sec) in enumerate(services))

    sc = _take(cp, "scenario", SCENARIO_KEYS)
    if "schemes" in sc:
        sc["schemes"] = _parse_schemes(sc["schemes"])
    ch = _take(cp, "channel", CHANNEL_KEYS)
    try:
        ga = GaConfig(**_take(cp, "ga", GA_KEYS))
        mga = MgaConfig(**_take(cp, "mga", MGA_KEYS))
        return Scenario(services=demands, ga=ga, mga=mga, **sc, **ch)
    except ConfigError:
        raise
    except ValueError as exc:
        if str(exc).startswith("infeasible"):
            raise
        raise ConfigError(str(exc)) from None


def parse_text(text: str) -> Scenario:
    cp = _parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return scenario_from_parser(cp)


def load(path, overrides=()) -> tuple[Scenario, str]:
    """Scenario plus the effective config text after applying ``section.key=value`` overrides."""
    cp = _parser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    apply_overrides(cp, overrides)
    sc = scenario_from_parser(cp)
    return sc, format_scenario(sc)


def apply_overrides(cp: configparser.ConfigParser, overrides) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not section.key=value")
        dotted, value = item.split("=", 1)
        section, sep, key = dotted.strip().rpartition(".")
        if not sep or not section or not key:
            raise ConfigError(f"override {item!r} is not section.key=value")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, key, value.strip())


def _num(x) -> str:
    return repr(x) if isinstance(x, float) else str(x)


def format_scenario(sc: Scenario) -> str:
    """Canonical config text; ``parse_text(format_scenario(sc)) == sc``."""
    cp = _parser()
    cp["scenario"] = {
        "n_subcarriers": _num(sc.n_subcarriers),
        "n_relays": _num(sc.n_relays),
        "bandwidth": _num(float(sc.bandwidth)),
        "sigma2": _num(float(sc.sigma2)),
        "plc": _num(float(sc.plc)),
        "trials": _num(sc.trials),
        "seed": _num(sc.seed),
        "schemes": ",".join(sc.schemes),
        "circuit_power": _num(float(sc.circuit_power)),
    }
    cp["channel"] = {"base_dist": sc.base_dist}
    cp["ga"] = {f.name: _num(getattr(sc.ga, f.name)) for f in fields(sc.ga) if f.name != "seed"}
    cp["mga"] = {f.name: _num(getattr(sc.mga, f.name)) for f in fields(sc.mga)}
    for i, s in enumerate(sc.services):
        if s.bursty is None:
            cp[f"service.{i}"] = {"rate_down": _num(float(s.rate_down)), "rate_up": _num(float(s.rate_up))}
        else:
            b = s.bursty
            sec = {"max_delay": _num(float(b.max_delay))}
            for d, traffic in (("down", b.downlink), ("up", b.uplink)):
                for k in DIRECTION_KEYS:
                    sec[f"{d}_{k}"] = _num(float(getattr(traffic, k)))
            cp[f"service.{i}"] = sec
    lines = []
    for section in cp.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in cp.items(section))
        lines.append("")
    return "\n".join(lines)


def scenario_hash(config_text: str) -> str:
    return hashlib.sha256(config_text.encode("utf-8")).hexdigest()[:12]


def with_seed(sc: Scenario, seed: int) -> Scenario:
    return replace(sc, seed=int(seed))
