"""Topology construction, placement, and static routing.

The default 16-node layout is frozen by hand below; any placement change
must be deliberate enough to update these tables.
"""

import pytest

from hringsim.topology import (TopologyConfig, TopologyError, build_topology,
                               Topology)
from hringsim.flits import CW, CCW

from helpers import HIER64, RING16
import oracles


@pytest.fixture(scope="module")
def topo16():
    return build_topology(TopologyConfig())


@pytest.fixture(scope="module")
def topo64():
    return build_topology(HIER64)


# ----------------------------------------------------------------------
# frozen default layout

def test_default_ring_inventory(topo16):
    assert len(topo16.rings) == 5
    assert topo16.node_count == 16
    assert len(topo16.bridges) == 8
    root = topo16.rings[0]
    assert root.prefix == ()
    assert root.positions == 8
    assert root.hop_latency == 3
    assert root.lanes == 2
    assert root.lap == 24
    for r in topo16.rings[1:]:
        assert r.positions == 6
        assert r.hop_latency == 2
        assert r.lanes == 1
        assert r.lap == 12


def test_default_spans_and_node_positions(topo16):
    spans = [r.node_span for r in topo16.rings]
    assert spans == [(0, 16), (0, 4), (4, 8), (8, 12), (12, 16)]
    # bridges at local positions 0 and 3, nodes fill 1, 2, 4, 5
    for r in topo16.rings[1:]:
        assert r.up_bridge_pos == (0, 3)
        lo = r.node_span[0]
        assert r.node_pos == {lo: 1, lo + 1: 2, lo + 2: 4, lo + 3: 5}


def test_default_bridge_pairing_on_root(topo16):
    # the two bridges of each local ring sit adjacent on the root ring
    root = topo16.rings[0]
    assert root.down_bridge_pos == {1: (0, 1), 2: (2, 3),
                                    3: (4, 5), 4: (6, 7)}
    for br in topo16.bridges:
        child = topo16.rings[br.child_ring]
        assert child.members[br.child_pos] == ("bridge", br.index)
        assert root.members[br.parent_pos] == ("bridge", br.index)


def test_node_addressing(topo16):
    for n in topo16.nodes:
        ring = topo16.rings[n.ring]
        assert ring.covers(n.index)
        assert ring.node_pos[n.index] == n.position
        assert n.address == ring.prefix + (n.index - ring.node_span[0],)


def test_three_level_inventory(topo64):
    assert topo64.node_count == 64
    assert len(topo64.rings) == 1 + 4 + 16
    assert len(topo64.bridges) == (4 + 16) * 2
    root = topo64.rings[0]
    assert root.positions == 8 and root.lanes == 4
    mids = [r for r in topo64.rings if r.level == 1]
    assert all(r.positions == 10 and r.lanes == 2 for r in mids)
    leaves = topo64.local_rings()
    assert len(leaves) == 16
    assert all(r.positions == 6 and r.lanes == 1 for r in leaves)
    # contiguous 4-wide spans in address order
    assert [r.node_span for r in leaves] == [(4 * i, 4 * i + 4)
                                             for i in range(16)]


def test_single_ring_topology():
    topo = build_topology(RING16)
    assert len(topo.rings) == 1
    assert not topo.bridges
    ring = topo.rings[0]
    assert ring.positions == 16
    assert ring.node_span == (0, 16)
    assert topo.zero_load_latency(0, 8) == 8    # hop latency 1, half ring
    assert topo.zero_load_latency(0, 15) == 1


# ----------------------------------------------------------------------
# validation

@pytest.mark.parametrize("cfg,constraint", [
    (TopologyConfig(levels=0, fanout_per_level=(), lanes_per_level=()),
     "levels"),
    (TopologyConfig(nodes_per_local_ring=1), "nodes_per_local_ring"),
    (TopologyConfig(fanout_per_level=(4, 4)), "fanout_per_level"),
    (TopologyConfig(lanes_per_level=(2,)), "lanes_per_level"),
    (TopologyConfig(lanes_per_level=(1, 2)), "lane_ratio"),
    (TopologyConfig(bridges_per_ring_pair=0), "bridges_per_ring_pair"),
    (TopologyConfig(local_hop_latency=0), "hop_latency"),
    (TopologyConfig(l2g_fifo_depth=0), "fifo_depth"),
    # 4 nodes + 3 bridges = 7 positions, not divisible by 3 bridges
    (TopologyConfig(bridges_per_ring_pair=3), "bridge_spacing"),
])
def test_rejects_named_constraint(cfg, constraint):
    with pytest.raises(TopologyError) as e:
        build_topology(cfg)
    assert e.value.constraint == constraint
    assert constraint in str(e.value)


# ----------------------------------------------------------------------
# static routing decisions

def test_route_decision_cases(topo16):
    # dest on this ring: eject at the node's position
    assert topo16.route_decision(1, 2) == ("eject", (4,))
    # dest below a child of this ring: down at that child's bridges
    assert topo16.route_decision(0, 9) == ("down", 3, (4, 5))
    # dest outside this ring's subtree: up at any bridge
    assert topo16.route_decision(1, 9) == ("up", (0, 3))


def test_route_decision_three_level(topo64):
    mid = next(r for r in topo64.rings if r.level == 1 and r.covers(0))
    # dest under this mid ring -> down into the covering leaf
    kind, child, positions = topo64.route_decision(mid.index, 9)
    assert kind == "down"
    assert topo64.rings[child].covers(9)
    # dest in another subtree -> up toward the root
    assert topo64.route_decision(mid.index, 40)[0] == "up"


def test_direction_ties_go_clockwise(topo16):
    # node 0 (position 1) to node 2 (position 4): 3 hops either way
    assert topo16.ring_distance(6, 1, 4, CW) == 3
    assert topo16.ring_distance(6, 1, 4, CCW) == 3
    assert topo16.choose_injection_direction(1, 1, 2) == CW


def test_direction_minimizes_total_path_not_first_leg(topo16):
    # 0 -> 4: the nearer bridge (1 hop CCW) leads to a 2-hop global leg;
    # the farther bridge (2 hops CW) needs only 1 global hop and wins.
    assert topo16.choose_injection_direction(1, 1, 4) == CW
    assert topo16.zero_load_latency(0, 4) == 9


def test_ring_distance_wraps():
    assert Topology.ring_distance(8, 6, 1, CW) == 3
    assert Topology.ring_distance(8, 6, 1, CCW) == 5
    assert Topology.ring_distance(8, 5, 5, CW) == 0


# ----------------------------------------------------------------------
# zero-load analytics vs the independent oracles

def test_hand_frozen_zero_load_values(topo16):
    for (s, d), want in oracles.HAND_ZERO_LOAD_16.items():
        assert topo16.zero_load_latency(s, d) == want


def test_zero_load_matches_dijkstra_16(topo16):
    for s in range(16):
        for d in range(16):
            if s == d:
                assert topo16.zero_load_latency(s, d) == 0
                continue
            want = oracles.oracle_latency(topo16, s, d)
            assert topo16.zero_load_latency(s, d) == want, (s, d)
            assert oracles.policy_latency(topo16, s, d) == want, (s, d)


def test_zero_load_dominates_policy_oracle_64(topo64):
    # On three levels the walk can't always match free bridge choice, but
    # it must never beat a relaxation of itself, and must match it whenever
    # both end up in the same rings.
    worse = 0
    for s in range(0, 64, 3):
        for d in range(64):
            if s == d:
                continue
            a = topo64.zero_load_latency(s, d)
            p = oracles.policy_latency(topo64, s, d)
            assert a >= p, (s, d, a, p)
            worse += a > p
    assert worse > 0     # the relaxation is strict somewhere


def test_mean_zero_load(topo16):
    pairs = [(0, 1), (0, 4), (0, 15)]
    vals = [topo16.zero_load_latency(s, d) for s, d in pairs]
    assert topo16.mean_zero_load_latency(pairs) == sum(vals) / 3.0
    assert topo16.mean_zero_load_latency([]) == 0.0
