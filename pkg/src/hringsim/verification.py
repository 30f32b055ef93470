"""Self-checking routines shared by the CLI `verify` command and the test
suite: drain bounds from randomized reachable states, swap-rule progress
and the deadlock that appears without it, routing termination, and
bit-exact reproducibility.
"""

import random
from dataclasses import replace

from .config import Experiment, GuaranteeConfig, RunConfig, TrafficConfig
from .engine import Engine
from .flits import CW, CCW
from .topology import TopologyConfig


def _drain_bound(engine):
    """Flits on rings and in FIFOs each cross at most `levels` rings and
    wait at most one full circulation per crossing attempt round."""
    flits = engine.network_flits()
    max_lap = max(r.lap for r in engine.topo.rings)
    return flits * max_lap * engine.topo.cfg.levels


SMALL_TOPOLOGIES = (
    TopologyConfig(),                                   # 16-node two-level
    TopologyConfig(levels=3, nodes_per_local_ring=2,
                   fanout_per_level=(2, 2), lanes_per_level=(2, 2, 1)),
)


def drain_trial(seed, topo_choice=None):
    """Run random traffic for a random while, halt everything, and check
    the network drains within the analytic bound.

    Returns (ok, detail)."""
    rng = random.Random("drain:%d" % seed)
    tcfg = (SMALL_TOPOLOGIES[rng.randrange(len(SMALL_TOPOLOGIES))]
            if topo_choice is None else topo_choice)
    pattern = rng.choice(("uniform_random", "bit_complement", "transpose"))
    if pattern == "transpose":
        # needs a square node count
        n = tcfg.nodes_per_local_ring
        for f in tcfg.fanout_per_level:
            n *= f
        w = int(n ** 0.5)
        if w * w != n:
            pattern = "uniform_random"
    exp = Experiment(
        topology=tcfg,
        traffic=TrafficConfig(pattern=pattern,
                              rate=rng.choice((0.05, 0.15, 0.3, 0.6)),
                              packet_length=rng.choice((1, 4)),
                              seed=seed),
        guarantees=GuaranteeConfig(enabled=rng.random() < 0.8),
        run=RunConfig(warmup_cycles=0, measure_cycles=10),
    )
    eng = Engine(exp)
    warm = rng.randrange(50, 800)
    for _ in range(warm):
        eng.step_cycle()
    flits = eng.network_flits()
    bound = _drain_bound(eng)
    took = eng.drain(bound if bound > 0 else 1)
    if took is None:
        return False, ("seed %d: %d flits not drained within %d cycles"
                       % (seed, flits, bound))
    eng.audit()
    return True, ("seed %d: %d flits drained in %d cycles (bound %d)"
                  % (seed, flits, took, bound))


def drain_trials(n, progress=None):
    failures = []
    for seed in range(n):
        ok, detail = drain_trial(seed)
        if not ok:
            failures.append(detail)
        if progress is not None:
            progress(seed, ok, detail)
    return failures


# ----------------------------------------------------------------------
# swap rule: progress with it, deadlock without it

def _two_ring_experiment():
    tcfg = TopologyConfig(levels=2, nodes_per_local_ring=4,
                          fanout_per_level=(2,), lanes_per_level=(1, 1))
    return Experiment(
        topology=tcfg,
        traffic=TrafficConfig(rate=0.0),
        run=RunConfig(warmup_cycles=0, measure_cycles=10),
    )


def _build_gridlock(disable_swap):
    """A fully jammed parent/child ring pair.

    Ring (0,) is packed with flits that must go up; the parent ring is
    packed with flits that must come down into ring (0,); every transfer
    FIFO of ring (0,)'s two bridges is full in both directions. No register
    is ever free on either ring, so without the swap rule no transfer can
    happen in either direction.
    """
    eng = Engine(_two_ring_experiment(), disable_swap=disable_swap)
    topo = eng.topo
    ring_child = next(r for r in topo.rings if r.prefix == (0,))
    ring_other = next(r for r in topo.rings if r.prefix == (1,))
    root = next(r for r in topo.rings if r.prefix == ())
    child_nodes = list(range(*ring_child.node_span))
    other_nodes = list(range(*ring_other.node_span))
    rng = random.Random("gridlock")
    # child ring: every register in both directions holds an up-bound flit
    for d in (CW, CCW):
        arr = eng.arrays[ring_child.index][d][0]
        for i in range(arr.size):
            eng.place_flit(ring_child.index, d, 0, i,
                           rng.choice(child_nodes), rng.choice(other_nodes))
    # parent ring: every register holds a flit bound for the child ring
    for d in (CW, CCW):
        arr = eng.arrays[root.index][d][0]
        for i in range(arr.size):
            eng.place_flit(root.index, d, 0, i,
                           rng.choice(other_nodes), rng.choice(child_nodes))
    # both bridges of the child ring: all FIFO entries occupied
    for br in eng.bridge_routers:
        if br.child_ring != ring_child.index:
            continue
        for fifo in br.l2g:
            while len(fifo.q) < fifo.cap:
                eng.fill_fifo(fifo, rng.choice(child_nodes),
                              rng.choice(other_nodes))
        for fifo in br.g2l:
            while len(fifo.q) < fifo.cap:
                eng.fill_fifo(fifo, rng.choice(other_nodes),
                              rng.choice(child_nodes))
    return eng


def swap_rule_check():
    """Returns (ok, lines). Verifies the constructed gridlock is a true
    deadlock with the swap rule disabled (no transfers, no deliveries, no
    state change over three circulations) and that the identical state
    makes progress within one circulation and fully drains with it on."""
    lines = []
    ok = True

    eng = _build_gridlock(disable_swap=True)
    laps = 3 * max(r.lap for r in eng.topo.rings)
    before = eng.network_snapshot()
    flits0 = eng.network_flits()
    for _ in range(laps):
        eng.step_cycle()
    stuck = (eng.network_snapshot() == before
             and eng.metrics.swaps == 0
             and eng.metrics.delivered_flits_total == 0
             and eng.network_flits() == flits0)
    ok &= stuck
    lines.append("%s swap disabled: gridlock is static for %d cycles"
                 % ("PASS" if stuck else "FAIL", laps))

    eng = _build_gridlock(disable_swap=False)
    one_lap = max(r.lap for r in eng.topo.rings)
    for _ in range(one_lap):
        eng.step_cycle()
    progressed = eng.metrics.swaps > 0
    ok &= progressed
    lines.append("%s swap enabled: first transfer within one circulation "
                 "(%d swaps in %d cycles)"
                 % ("PASS" if progressed else "FAIL",
                    eng.metrics.swaps, one_lap))

    bound = _drain_bound(eng) + one_lap
    took = eng.drain(bound)
    drained = took is not None
    ok &= drained
    lines.append("%s swap enabled: gridlock fully drains (%s cycles)"
                 % ("PASS" if drained else "FAIL", took))
    return ok, lines


# ----------------------------------------------------------------------

def routing_termination_check(topo):
    """Every (src, dest) walk must reach the destination within
    2 * (levels - 1) ring crossings."""
    max_transfers = 2 * (topo.cfg.levels - 1)
    for s in range(topo.node_count):
        for d in range(topo.node_count):
            if s == d:
                continue
            node = topo.nodes[s]
            ring = topo.rings[node.ring]
            pos = node.position
            transfers = 0
            while True:
                direction = topo.choose_injection_direction(
                    ring.index, pos, d)
                obj, _h = topo._first_objective(ring.index, pos, d, direction)
                kind, idx = ring.members[obj]
                if kind == "node":
                    if idx != d:
                        return False, (s, d, "walk ended at node %d" % idx)
                    break
                transfers += 1
                if transfers > max_transfers:
                    return False, (s, d, "more than %d transfers"
                                   % max_transfers)
                br = topo.bridges[idx]
                if br.child_ring == ring.index:
                    ring = topo.rings[br.parent_ring]
                    pos = br.parent_pos
                else:
                    ring = topo.rings[br.child_ring]
                    pos = br.child_pos
    return True, None


def determinism_check(experiment):
    """Two independent engines over the same experiment must agree on the
    full state hash and the report."""
    a = Engine(experiment)
    ra = a.run()
    b = Engine(experiment)
    rb = b.run()
    same = (a.state_signature() == b.state_signature() and ra == rb)
    return same, (ra, rb)


def invariant_run(experiment, cycles, audit_interval=1):
    """Run with audits every `audit_interval` cycles; raises
    InvariantViolation on the first broken invariant."""
    exp = replace(experiment, run=replace(
        experiment.run, warmup_cycles=0, measure_cycles=cycles,
        audit_interval=audit_interval))
    eng = Engine(exp)
    eng.run()
    eng.audit()
    return eng
