"""Deterministic flit-level simulator for deflection-routed hierarchical
ring networks-on-chip: bufferless node routers, bridge routers with
transfer FIFOs and a swap rule, injection/transfer delivery guarantees,
and retransmit-once reassembly."""

from .config import (ConfigError, Experiment, GuaranteeConfig, OutputConfig,
                     RunConfig, TrafficConfig, parse_experiment)
from .engine import Engine, InvariantViolation, run_experiment
from .topology import TopologyConfig, TopologyError, build_topology

__all__ = [
    "ConfigError", "Engine", "Experiment", "GuaranteeConfig",
    "InvariantViolation", "OutputConfig", "RunConfig", "TopologyConfig",
    "TopologyError", "TrafficConfig", "build_topology", "parse_experiment",
    "run_experiment",
]

__version__ = "0.1.0"
