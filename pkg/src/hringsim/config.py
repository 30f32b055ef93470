"""Experiment configuration: INI files with a strict schema.

Sections: [topology] [traffic] [guarantees] [run] [output]. Every key has
a default; unknown sections or keys are rejected with their location so a
typo can't silently fall back to a default.
"""

import configparser
import os
from dataclasses import dataclass, field, replace

from .topology import TopologyConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrafficConfig:
    pattern: str = "uniform_random"
    rate: float = 0.1
    packet_length: int = 1
    seed: int = 1


@dataclass(frozen=True)
class GuaranteeConfig:
    enabled: bool = True
    injection_threshold: int = 100
    observer_retry_threshold: int = 1
    throttle_signal_latency: int = 0


@dataclass(frozen=True)
class RunConfig:
    warmup_cycles: int = 10000
    measure_cycles: int = 100000
    max_cycles: int = 0             # 0: no cap below warmup + measure
    reassembly_slots: int = 16
    retransmit_transport: str = "oob"
    audit_interval: int = 0         # 0: periodic audits off


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "."


@dataclass(frozen=True)
class Experiment:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    guarantees: GuaranteeConfig = field(default_factory=GuaranteeConfig)
    run: RunConfig = field(default_factory=RunConfig)
    output: OutputConfig = field(default_factory=OutputConfig)


def _int(v, loc):
    try:
        return int(v)
    except ValueError:
        raise ConfigError("%s: expected an integer, got %r" % (loc, v))


def _float(v, loc):
    try:
        return float(v)
    except ValueError:
        raise ConfigError("%s: expected a number, got %r" % (loc, v))


def _bool(v, loc):
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError("%s: expected a boolean, got %r" % (loc, v))


def _int_tuple(v, loc):
    try:
        return tuple(int(x) for x in v.replace(" ", "").split(",") if x != "")
    except ValueError:
        raise ConfigError("%s: expected comma-separated integers, got %r"
                          % (loc, v))


def _choice(options):
    def conv(v, loc):
        s = v.strip()
        if s not in options:
            raise ConfigError("%s: expected one of %s, got %r"
                              % (loc, "/".join(sorted(options)), v))
        return s
    return conv


PATTERNS = ("uniform_random", "transpose", "bit_complement", "worst_case_abc")

_SCHEMA = {
    "topology": {
        "levels": _int,
        "nodes_per_local_ring": _int,
        "fanout_per_level": _int_tuple,
        "bridges_per_ring_pair": _int,
        "lanes_per_level": _int_tuple,
        "local_hop_latency": _int,
        "global_hop_latency": _int,
        "l2g_fifo_depth": _int,
        "g2l_fifo_depth": _int,
    },
    "traffic": {
        "pattern": _choice(PATTERNS),
        "rate": _float,
        "packet_length": _int,
        "seed": _int,
    },
    "guarantees": {
        "enabled": _bool,
        "injection_threshold": _int,
        "observer_retry_threshold": _int,
        "throttle_signal_latency": _int,
    },
    "run": {
        "warmup_cycles": _int,
        "measure_cycles": _int,
        "max_cycles": _int,
        "reassembly_slots": _int,
        "retransmit_transport": _choice(("oob", "in_network")),
        "audit_interval": _int,
    },
    "output": {
        "directory": lambda v, loc: v.strip(),
    },
}

_SECTION_TYPE = {
    "topology": TopologyConfig,
    "traffic": TrafficConfig,
    "guarantees": GuaranteeConfig,
    "run": RunConfig,
    "output": OutputConfig,
}


def _check(exp):
    t = exp.traffic
    if t.rate < 0:
        raise ConfigError("traffic.rate: must be >= 0, got %r" % t.rate)
    if t.packet_length < 1:
        raise ConfigError("traffic.packet_length: must be >= 1, got %d"
                          % t.packet_length)
    g = exp.guarantees
    if g.injection_threshold < 1:
        raise ConfigError("guarantees.injection_threshold: must be >= 1")
    if g.observer_retry_threshold < 1:
        raise ConfigError("guarantees.observer_retry_threshold: must be >= 1")
    if not 0 <= g.throttle_signal_latency <= 30:
        raise ConfigError("guarantees.throttle_signal_latency: must be in "
                          "0..30, got %d" % g.throttle_signal_latency)
    r = exp.run
    if r.warmup_cycles < 0 or r.measure_cycles < 1:
        raise ConfigError("run: warmup_cycles must be >= 0 and "
                          "measure_cycles >= 1")
    if r.reassembly_slots < 1:
        raise ConfigError("run.reassembly_slots: must be >= 1")
    if r.audit_interval < 0 or r.max_cycles < 0:
        raise ConfigError("run: audit_interval and max_cycles must be >= 0")
    return exp


def parse_experiment(path):
    if not os.path.exists(path):
        raise ConfigError("config file not found: %s" % path)
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError("%s: %s" % (path, e))
    kwargs = {}
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigError("%s: unknown section [%s]" % (path, section))
        schema = _SCHEMA[section]
        values = {}
        for key, raw in cp.items(section):
            if key not in schema:
                raise ConfigError("%s: unknown key %s.%s"
                                  % (path, section, key))
            values[key] = schema[key](raw, "%s.%s" % (section, key))
        kwargs[section] = _SECTION_TYPE[section](**values)
    exp = Experiment(**kwargs)
    return _check(exp)


def with_overrides(exp, rate=None, seed=None, pattern=None, guarantees=None,
                   warmup=None, measure=None, audit_interval=None):
    """Common CLI overrides, returning a new Experiment."""
    traffic = exp.traffic
    if rate is not None:
        traffic = replace(traffic, rate=rate)
    if seed is not None:
        traffic = replace(traffic, seed=seed)
    if pattern is not None:
        if pattern not in PATTERNS:
            raise ConfigError("pattern: expected one of %s, got %r"
                              % ("/".join(PATTERNS), pattern))
        traffic = replace(traffic, pattern=pattern)
    guar = exp.guarantees
    if guarantees is not None:
        guar = replace(guar, enabled=guarantees)
    run = exp.run
    if warmup is not None:
        run = replace(run, warmup_cycles=warmup)
    if measure is not None:
        run = replace(run, measure_cycles=measure)
    if audit_interval is not None:
        run = replace(run, audit_interval=audit_interval)
    return replace(exp, traffic=traffic, guarantees=guar, run=run)


def output_directory(exp):
    """[output] directory, overridable from the environment."""
    return os.environ.get("HRINGSIM_OUTPUT_DIR", exp.output.directory)
