"""Hierarchical ring topology: construction, placement and static routing.

The network is a tree of rings. Every node sits on exactly one local ring
(the leaves of the tree); rings are joined to their parent ring by bridge
routers. Addresses are digit tuples, most-global digit first, so a ring is
exactly an address prefix and the nodes below any ring form one contiguous
index interval. That interval is what routing tests against: a flit moves
up until the current ring's interval covers its destination, then down the
unique covering child each level.
"""

from dataclasses import dataclass

from .flits import CW, CCW


class TopologyError(ValueError):
    """Raised for configurations that violate a named constraint."""

    def __init__(self, constraint, message):
        self.constraint = constraint
        super().__init__("%s: %s" % (constraint, message))


@dataclass(frozen=True)
class TopologyConfig:
    levels: int = 2
    nodes_per_local_ring: int = 4
    fanout_per_level: tuple = (4,)
    bridges_per_ring_pair: int = 2
    lanes_per_level: tuple = (2, 1)
    local_hop_latency: int = 2
    global_hop_latency: int = 3
    l2g_fifo_depth: int = 1
    g2l_fifo_depth: int = 4


class Ring(object):
    """One ring: an ordered cycle of router positions.

    members[pos] is ("node", node_index) or ("bridge", bridge_index).
    node_span is the half-open interval [lo, hi) of node indices reachable
    below this ring.
    """

    __slots__ = ("index", "prefix", "level", "lanes", "hop_latency",
                 "positions", "members", "node_span", "node_pos",
                 "up_bridge_pos", "down_bridge_pos", "lap")

    def __init__(self, index, prefix, level, lanes, hop_latency, positions):
        self.index = index
        self.prefix = prefix
        self.level = level
        self.lanes = lanes
        self.hop_latency = hop_latency
        self.positions = positions
        self.members = [None] * positions
        self.node_span = (0, 0)
        self.node_pos = {}            # node index -> position (local rings)
        self.up_bridge_pos = ()       # positions of bridges to the parent
        self.down_bridge_pos = {}     # child ring index -> tuple of positions
        self.lap = positions * hop_latency   # cycles for one full circulation

    def covers(self, node):
        lo, hi = self.node_span
        return lo <= node < hi

    def __repr__(self):
        return "Ring(%d, prefix=%s, P=%d)" % (
            self.index, self.prefix, self.positions)


class NodeInfo(object):
    __slots__ = ("index", "address", "ring", "position")

    def __init__(self, index, address, ring, position):
        self.index = index
        self.address = address
        self.ring = ring
        self.position = position


class BridgeInfo(object):
    """Static placement of one bridge router between a parent and child ring."""

    __slots__ = ("index", "parent_ring", "child_ring", "parent_pos",
                 "child_pos")

    def __init__(self, index, parent_ring, child_ring):
        self.index = index
        self.parent_ring = parent_ring
        self.child_ring = child_ring
        self.parent_pos = -1
        self.child_pos = -1


def _validate(cfg):
    if cfg.levels < 1:
        raise TopologyError("levels", "levels must be >= 1, got %d" % cfg.levels)
    if cfg.nodes_per_local_ring < 2:
        raise TopologyError("nodes_per_local_ring",
                            "need at least 2 nodes per local ring, got %d"
                            % cfg.nodes_per_local_ring)
    fanout = tuple(cfg.fanout_per_level)
    if len(fanout) != cfg.levels - 1:
        raise TopologyError("fanout_per_level",
                            "expected %d entries for %d levels, got %d"
                            % (cfg.levels - 1, cfg.levels, len(fanout)))
    for f in fanout:
        if f < 1:
            raise TopologyError("fanout_per_level",
                                "fan-out entries must be >= 1, got %d" % f)
    lanes = tuple(cfg.lanes_per_level)
    if len(lanes) != cfg.levels:
        raise TopologyError("lanes_per_level",
                            "expected %d entries for %d levels, got %d"
                            % (cfg.levels, cfg.levels, len(lanes)))
    for l in lanes:
        if l < 1:
            raise TopologyError("lanes_per_level",
                                "lane counts must be >= 1, got %d" % l)
    # Wider (or equal) rings toward the root; a narrower parent would be a
    # structural bandwidth funnel the placement rules don't support.
    for i in range(cfg.levels - 1):
        if lanes[i] < lanes[i + 1]:
            raise TopologyError("lane_ratio",
                                "lanes_per_level must be non-decreasing "
                                "toward the root, got %s" % (lanes,))
    if cfg.levels > 1 and cfg.bridges_per_ring_pair < 1:
        raise TopologyError("bridges_per_ring_pair",
                            "need at least one bridge per ring pair")
    if cfg.local_hop_latency < 1 or cfg.global_hop_latency < 1:
        raise TopologyError("hop_latency", "hop latencies must be >= 1")
    if cfg.l2g_fifo_depth < 1 or cfg.g2l_fifo_depth < 1:
        raise TopologyError("fifo_depth", "transfer FIFO depths must be >= 1")


class Topology(object):
    """Built network: rings, nodes, bridges, and static routing queries."""

    def __init__(self, cfg):
        _validate(cfg)
        self.cfg = cfg
        self.rings = []
        self.nodes = []
        self.bridges = []
        self._build()
        self._tree_distances()
        self._route_cache = {}

    # ------------------------------------------------------------------
    # construction

    def _build(self):
        cfg = self.cfg
        levels = cfg.levels
        fanout = tuple(cfg.fanout_per_level)
        lanes = tuple(cfg.lanes_per_level)
        b = cfg.bridges_per_ring_pair
        radices = list(fanout) + [cfg.nodes_per_local_ring]

        # Rings in lexicographic prefix order; the root is the empty prefix.
        prefixes = [()]
        for depth in range(1, levels):
            ext = []
            for p in prefixes:
                if len(p) == depth - 1:
                    ext.extend(p + (d,) for d in range(radices[depth - 1]))
            prefixes.extend(ext)
        prefixes.sort()

        ring_of_prefix = {}
        for prefix in prefixes:
            level = len(prefix)
            local = (level == levels - 1)
            hop = cfg.local_hop_latency if local else cfg.global_hop_latency
            if local:
                positions = cfg.nodes_per_local_ring + (b if levels > 1 else 0)
            else:
                up = 0 if level == 0 else b
                positions = up + fanout[level] * b
            ring = Ring(len(self.rings), prefix, level, lanes[level], hop,
                        positions)
            ring_of_prefix[prefix] = ring
            self.rings.append(ring)

        # One group of b bridges joins each non-root ring to its parent.
        up_bridges = {}     # child ring index -> [BridgeInfo] in copy order
        for ring in self.rings:
            if ring.level == 0:
                continue
            parent = ring_of_prefix[ring.prefix[:-1]]
            group = []
            for _ in range(b):
                br = BridgeInfo(len(self.bridges), parent.index, ring.index)
                self.bridges.append(br)
                group.append(br)
            up_bridges[ring.index] = group

        # Nodes in address order: contiguous per local ring.
        suffix_weight = [1] * (levels + 1)
        for i in range(levels - 1, -1, -1):
            suffix_weight[i] = suffix_weight[i + 1] * radices[i]

        def place_spread(ring, count):
            # Evenly spread `count` special positions around the ring.
            if ring.positions % count != 0:
                raise TopologyError(
                    "bridge_spacing",
                    "ring %s has %d positions, not divisible by %d bridges"
                    % (ring.prefix, ring.positions, count))
            stride = ring.positions // count
            return [j * stride for j in range(count)]

        for ring in self.rings:
            local = (ring.level == levels - 1)
            taken = set()
            if local:
                if levels > 1:
                    spread = place_spread(ring, b)
                    for j, br in enumerate(up_bridges[ring.index]):
                        br.child_pos = spread[j]
                        ring.members[spread[j]] = ("bridge", br.index)
                        taken.add(spread[j])
                    ring.up_bridge_pos = tuple(spread)
                free = [p for p in range(ring.positions) if p not in taken]
                base = 0
                for i, digit in enumerate(ring.prefix):
                    base += digit * suffix_weight[i + 1]
                for k, pos in enumerate(free):
                    idx = base + k
                    node = NodeInfo(idx, ring.prefix + (k,), ring.index, pos)
                    ring.members[pos] = ("node", idx)
                    ring.node_pos[idx] = pos
                    self.nodes.append(node)
                ring.node_span = (base, base + cfg.nodes_per_local_ring)
            else:
                if ring.level > 0:
                    spread = place_spread(ring, b)
                    for j, br in enumerate(up_bridges[ring.index]):
                        br.child_pos = spread[j]
                        ring.members[spread[j]] = ("bridge", br.index)
                        taken.add(spread[j])
                    ring.up_bridge_pos = tuple(spread)
                # Down-bridges fill the remaining positions round-robin
                # over the children (copy order outermost), so a child's
                # bridges end up spread around the parent ring instead of
                # sitting side by side. Adjacent placement concentrates each
                # child's transfer traffic on one arc and leaves the
                # opposite rotation useless for it; interleaving keeps both
                # directions productive and shortens the typical walk to an
                # exit.
                free = [p for p in range(ring.positions) if p not in taken]
                children = [r for r in self.rings
                            if len(r.prefix) == ring.level + 1
                            and r.prefix[:-1] == ring.prefix]
                children.sort(key=lambda r: r.prefix)
                group_pos = {child.index: [] for child in children}
                fi = 0
                for copy in range(b):
                    for child in children:
                        br = up_bridges[child.index][copy]
                        pos = free[fi]
                        fi += 1
                        br.parent_pos = pos
                        ring.members[pos] = ("bridge", br.index)
                        group_pos[child.index].append(pos)
                for child in children:
                    ring.down_bridge_pos[child.index] = tuple(
                        group_pos[child.index])

        self.nodes.sort(key=lambda n: n.index)
        # Propagate spans up the tree (a parent covers all its children).
        for ring in reversed(self.rings):
            if ring.level < levels - 1:
                spans = [self.rings[c].node_span
                         for c in ring.down_bridge_pos]
                ring.node_span = (min(s[0] for s in spans),
                                  max(s[1] for s in spans))

    def _tree_distances(self):
        # All-pairs tree distance between rings (the tree is tiny).
        n = len(self.rings)
        adj = [[] for _ in range(n)]
        for br in self.bridges:
            adj[br.parent_ring].append(br.child_ring)
            adj[br.child_ring].append(br.parent_ring)
        dist = [[n] * n for _ in range(n)]
        for s in range(n):
            dist[s][s] = 0
            frontier = [s]
            while frontier:
                nxt = []
                for u in frontier:
                    for v in adj[u]:
                        if dist[s][v] > dist[s][u] + 1:
                            dist[s][v] = dist[s][u] + 1
                            nxt.append(v)
                frontier = nxt
        self.ring_tree_dist = dist

    # ------------------------------------------------------------------
    # queries

    @property
    def node_count(self):
        return len(self.nodes)

    def local_rings(self):
        return [r for r in self.rings if r.level == self.cfg.levels - 1]

    @staticmethod
    def ring_distance(positions, src, dst, direction):
        """Hops from src to dst moving only in `direction`."""
        if direction == CW:
            return (dst - src) % positions
        return (src - dst) % positions

    def route_decision(self, ring, dest):
        """What a flit bound for `dest` must do on `ring`.

        Returns ("eject", (pos,)) when dest is a node of this ring,
        ("down", child_ring_index, positions) when dest is below one of
        this ring's children, or ("up", positions) otherwise.
        """
        r = self.rings[ring]
        if dest in r.node_pos:
            return ("eject", (r.node_pos[dest],))
        if r.covers(dest):
            for child_idx, positions in r.down_bridge_pos.items():
                if self.rings[child_idx].covers(dest):
                    return ("down", child_idx, positions)
        return ("up", r.up_bridge_pos)

    def _objectives(self, ring, dest):
        d = self.route_decision(ring, dest)
        return d[-1]

    def _first_objective(self, ring, pos, dest, direction):
        """Nearest objective position in `direction` and the hop count."""
        objs = self._objectives(ring, dest)
        P = self.rings[ring].positions
        best = None
        best_h = None
        for o in objs:
            h = self.ring_distance(P, pos, o, direction)
            if best_h is None or h < best_h:
                best, best_h = o, h
        return best, best_h

    def _route_cost(self, ring, pos, dest):
        """Remaining zero-load cycles from `pos` on `ring` to ejection at
        `dest`, plus the direction that achieves them (ties go CW).

        A flit commits to one direction per ring and transfers at the
        first objective it meets, so the only routing freedom is the
        direction picked on each ring of the walk; both options are
        costed recursively. Greedy nearest-bridge would be wrong here:
        the closer bridge of a pair can land the flit a full parent-ring
        hop farther from where it needs to get off.

        Cached: the set of (ring, position, destination) triples actually
        exercised in a run is small and stable.
        """
        key = (ring, pos, dest)
        hit = self._route_cache.get(key)
        if hit is not None:
            return hit
        hop = self.rings[ring].hop_latency
        best = None
        for direction in (CW, CCW):
            obj, hops = self._first_objective(ring, pos, dest, direction)
            cost = hops * hop
            kind, idx = self.rings[ring].members[obj]
            if kind == "bridge":
                br = self.bridges[idx]
                if br.child_ring == ring:
                    nring, npos = br.parent_ring, br.parent_pos
                else:
                    nring, npos = br.child_ring, br.child_pos
                cost += self._route_cost(nring, npos, dest)[0]
            if best is None or cost < best[0]:
                best = (cost, direction)
        self._route_cache[key] = best
        return best

    def choose_injection_direction(self, ring, pos, dest):
        """Direction minimizing total remaining path latency; ties go CW."""
        return self._route_cost(ring, pos, dest)[1]

    def zero_load_latency(self, src, dest):
        """Cycles from ring entry at the source to ejection at `dest` on an
        otherwise empty network. Transfer FIFOs fall through in the same
        cycle, so only ring hops cost time."""
        if src == dest:
            return 0
        node = self.nodes[src]
        return self._route_cost(node.ring, node.position, dest)[0]

    def mean_zero_load_latency(self, pairs):
        if not pairs:
            return 0.0
        return sum(self.zero_load_latency(s, d) for s, d in pairs) / len(pairs)


def build_topology(cfg):
    """Validate `cfg` and construct the ring tree."""
    return Topology(cfg)
