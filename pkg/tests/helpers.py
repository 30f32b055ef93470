"""Builders and probe drivers shared across test modules."""

from hringsim.config import (Experiment, GuaranteeConfig, RunConfig,
                             TrafficConfig)
from hringsim.engine import Engine
from hringsim.topology import TopologyConfig

# 3-level build: 4 local rings of 4 nodes under each of 4 middle rings.
HIER64 = TopologyConfig(levels=3, fanout_per_level=(4, 4),
                        lanes_per_level=(4, 2, 1))

# Flat 16-node ring with two lanes and single-cycle hops.
RING16 = TopologyConfig(levels=1, nodes_per_local_ring=16,
                        fanout_per_level=(), lanes_per_level=(2,),
                        local_hop_latency=1)


def quiet(topology=None, guarantees=True, **run_kw):
    """An experiment that generates no background traffic."""
    return Experiment(
        topology=TopologyConfig() if topology is None else topology,
        traffic=TrafficConfig(rate=0.0),
        guarantees=GuaranteeConfig(enabled=guarantees),
        run=RunConfig(**run_kw))


def quiet_engine(topology=None, **kw):
    return Engine(quiet(topology, **kw))


def transit(eng, src, dest, cap=4000):
    """Inject one probe and ride it to delivery.

    Returns the on-ring cycles (ring entry to ejection), which is what the
    zero-load analytics predict; the one-cycle source-queue step before
    entry is excluded.
    """
    rec = eng.send_probe(src, dest)
    while rec.delivered < 0:
        assert eng.cycle < cap, "probe %d->%d still in flight" % (src, dest)
        eng.step_cycle()
    return rec.delivered - rec.injected


def step_n(eng, n):
    for _ in range(n):
        eng.step_cycle()
