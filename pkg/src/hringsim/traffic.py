"""Synthetic traffic generation.

Every node has an independent `random.Random` stream seeded with
"<seed>:<node>", so results are reproducible regardless of node update
order or process count. Packet arrivals are Bernoulli with probability
rate / packet_length per cycle, generated by sampling geometric gaps
instead of flipping a coin every cycle.

The adversarial pattern (worst_case_abc) gives the first three local rings
roles A, B and C: A nodes send only to C nodes, C nodes only to A nodes,
B nodes to anyone off B, all at full load; every other node is silent.
Full-load sources are modelled lazily: the injection queue is topped up to
a small backlog each cycle instead of materializing one packet per cycle.
"""

import math
import random


class TrafficError(ValueError):
    pass


def _uniform_fn(node, n):
    def pick(rng):
        d = rng.randrange(n - 1)
        if d >= node:
            d += 1
        return d
    return pick


def _fixed_fn(dest):
    def pick(_rng):
        return dest
    return pick


def _span_fn(lo, hi):
    def pick(rng):
        return rng.randrange(lo, hi)
    return pick


def _skip_span_fn(n, lo, hi):
    width = hi - lo
    def pick(rng):
        d = rng.randrange(n - width)
        if d >= lo:
            d += width
        return d
    return pick


def build_dest_fns(topo, pattern):
    """Destination generator per node; None for nodes that stay silent."""
    n = topo.node_count
    if pattern == "uniform_random":
        return [_uniform_fn(i, n) for i in range(n)], False
    if pattern == "transpose":
        w = math.isqrt(n)
        if w * w != n:
            raise TrafficError(
                "transpose needs a square node count, got %d" % n)
        fns = []
        for i in range(n):
            r, c = divmod(i, w)
            dest = c * w + r
            fns.append(None if dest == i else _fixed_fn(dest))
        return fns, False
    if pattern == "bit_complement":
        if n & (n - 1):
            raise TrafficError(
                "bit_complement needs a power-of-two node count, got %d" % n)
        return [_fixed_fn((n - 1) ^ i) for i in range(n)], False
    if pattern == "worst_case_abc":
        locals_ = topo.local_rings()
        if len(locals_) < 3:
            raise TrafficError(
                "worst_case_abc needs at least 3 local rings, got %d"
                % len(locals_))
        a, b, c = locals_[0], locals_[1], locals_[2]
        fns = [None] * n
        for i in range(*a.node_span):
            fns[i] = _span_fn(*c.node_span)
        for i in range(*c.node_span):
            fns[i] = _span_fn(*a.node_span)
        for i in range(*b.node_span):
            fns[i] = _skip_span_fn(n, *b.node_span)
        return fns, True
    raise TrafficError("unknown pattern %r" % pattern)


class TrafficSource(object):
    """Arrival process for one node."""

    __slots__ = ("node", "rng", "prob", "plen", "dest_fn", "next_at",
                 "lazy", "engine")

    BACKLOG = 8     # queued flits a full-load lazy source keeps available

    def __init__(self, node, seed, rate, plen, dest_fn, lazy, engine):
        self.node = node
        self.rng = random.Random("%s:%d" % (seed, node))
        self.plen = plen
        self.dest_fn = dest_fn
        self.engine = engine
        self.lazy = lazy and dest_fn is not None
        p = 0.0 if dest_fn is None else rate / plen
        self.prob = min(p, 1.0)
        if self.lazy or self.prob <= 0.0:
            self.next_at = -1 if self.lazy else None
        else:
            self.next_at = self._gap() - 1

    def _gap(self):
        p = self.prob
        if p >= 1.0:
            return 1
        u = self.rng.random()
        return int(math.log1p(-u) / math.log1p(-p)) + 1

    def tick(self, t):
        if self.engine.halt_sources or self.dest_fn is None:
            return
        if self.lazy:
            router = self.engine.node_routers[self.node]
            while router.queued_flits() < self.BACKLOG:
                self.engine.create_packet(self.node, self.dest_fn(self.rng),
                                          self.plen, t)
            return
        if self.next_at is None:
            return
        while self.next_at <= t:
            self.engine.create_packet(self.node, self.dest_fn(self.rng),
                                      self.plen, t)
            self.next_at += self._gap()


def build_sources(topo, traffic_cfg, engine):
    fns, lazy = build_dest_fns(topo, traffic_cfg.pattern)
    full_load = lazy and traffic_cfg.rate >= 1.0
    sources = []
    for i in range(topo.node_count):
        sources.append(TrafficSource(
            i, traffic_cfg.seed, traffic_cfg.rate, traffic_cfg.packet_length,
            fns[i], full_load, engine))
    return sources
