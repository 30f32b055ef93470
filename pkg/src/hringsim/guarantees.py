"""Delivery guarantees: injection starvation throttling and transfer
slot observers.

Injection guarantee: every injection point (one per node, one per transfer
FIFO) keeps a starvation counter that increments each cycle the point has a
flit waiting and injects nothing, and resets on success or when idle. When
a counter reaches the threshold, rings within a tree-distance radius of the
point's target ring are throttled; the radius grows by one for every extra
full threshold period the point stays starved. Throttling stops node
injections (new traffic) on the covered rings, except from nodes that are
themselves starved; transfer FIFOs keep injecting, because draining
in-flight traffic is how a congested ring recovers, and holding it would
let a throttle episode deadlock the very drainage it waits for. Throttle
maps can be delayed by a configurable signal latency.

Transfer guarantee: each bridge watches one rotating slot per ring register
array it touches (per ring side, direction and lane). The observer keeps
three values: the watched slot id, the flit seen there, and a sighting
count. If the same flit is still in the slot after full laps exceeding the
retry threshold, and the flit actually needs to transfer through this
bridge, the observer reserves a transfer FIFO entry for it, refusing other
admissions until the stuck flit gets in. When the watched flit is gone the
observer releases any reservation and moves to the slot that reaches the
bridge next cycle.
"""

from collections import deque


class SlotObserver(object):

    __slots__ = ("arr", "reg", "fifos", "lo", "hi", "invert", "retry",
                 "slot", "target", "count", "reserved")

    def __init__(self, arr, reg, fifos, lo, hi, invert, retry):
        self.arr = arr
        self.reg = reg
        self.fifos = fifos
        self.lo = lo
        self.hi = hi
        self.invert = invert    # True on the child side: stuck means up-bound
        self.retry = retry
        # watch whichever slot is under the bridge register on the first tick
        self.slot = (reg - arr.step) % arr.size
        self.target = None
        self.count = 0
        self.reserved = None

    def observer_tick(self, t):
        arr = self.arr
        if (self.reg - t * arr.step) % arr.size != self.slot:
            return
        f = arr.buf[self.slot]
        tgt = self.target
        if f is not None and f is tgt:
            self.count += 1
            if self.count > self.retry and self.reserved is None:
                d = f.dest
                if (self.lo <= d < self.hi) != self.invert:
                    for fifo in self.fifos:
                        if fifo.reserved_for is None:
                            fifo.reserved_for = f
                            self.reserved = fifo
                            break
            return
        if tgt is not None:
            # the watched flit left (transferred, ejected or swapped away)
            r = self.reserved
            if r is not None and r.reserved_for is tgt:
                r.reserved_for = None
            self.reserved = None
            self.target = None
            self.count = 0
            self.slot = (self.slot - arr.step) % arr.size
        elif f is None:
            self.slot = (self.slot - arr.step) % arr.size
        else:
            self.target = f
            self.count = 1


class TransferGuarantee(object):
    """All slot observers of the network, ticked after the routers."""

    def __init__(self, retry_threshold):
        self.retry = retry_threshold
        self.observers = []

    def attach_bridge(self, bridge):
        lo = bridge.lo
        hi = bridge.hi
        for arr, reg in bridge.child_taps:
            self.observers.append(SlotObserver(
                arr, reg, bridge.l2g, lo, hi, True, self.retry))
        for arr, reg, _lane in bridge.parent_taps:
            self.observers.append(SlotObserver(
                arr, reg, bridge.g2l, lo, hi, False, self.retry))

    def tick(self, t):
        for ob in self.observers:
            ob.observer_tick(t)


class InjectionGuarantee(object):
    """Starvation counters and ring throttling with signal latency."""

    def __init__(self, topo, threshold, signal_latency):
        self.threshold = threshold
        self.points = []
        self.counters = []
        nrings = len(topo.rings)
        dist = topo.ring_tree_dist
        diameter = max(max(row) for row in dist) if nrings > 1 else 0
        # cover[ring][radius] = bitmask of rings within tree distance radius
        self.cover = []
        for r in range(nrings):
            row = []
            for radius in range(diameter + 1):
                m = 0
                for other in range(nrings):
                    if dist[r][other] <= radius:
                        m |= 1 << other
                row.append(m)
            self.cover.append(tuple(row))
        self.max_radius = diameter
        # Only leaf rings host source nodes, and throttling gates sources,
        # so an assertion must reach at least one node-bearing ring to do
        # anything. Points that target a nodeless ring (transfer FIFOs into
        # upper levels) start their cover at the nearest radius that gates
        # somebody; escalation widens it from there.
        self.base_radius = []
        for r in range(nrings):
            base = 0
            for radius in range(diameter + 1):
                ok = False
                for other in range(nrings):
                    if dist[r][other] <= radius and topo.rings[other].node_pos:
                        ok = True
                        break
                if ok:
                    base = radius
                    break
            self.base_radius.append(base)
        self.history = deque([0], maxlen=signal_latency + 1)
        self.blocked = 0
        self.activations = 0
        self.activation_log = []

    def register(self, point):
        point.point = len(self.points)
        self.points.append(point)
        self.counters.append(0)

    def injection_monitor_tick(self):
        """Update starvation counters from this cycle's waiting/injected/
        gated flags and return the raw throttle mask. A node held by
        somebody else's throttle marks the cycle as gated, which freezes
        its counter: it is not starving for a slot, it is being
        administratively held with new traffic, and it will run its own
        episode once the current one resolves. Counting held cycles as
        starvation would push every point over the threshold during long
        episodes and dissolve throttling into a free-for-all of
        exemptions. Transfer FIFOs are never gated, so their counters
        track real slot starvation only."""
        mask = 0
        thr = self.threshold
        cs = self.counters
        mr = self.max_radius
        for i, p in enumerate(self.points):
            if p.injected:
                cs[i] = 0
            elif p.gated:
                pass
            elif p.waiting:
                c = cs[i] + 1
                cs[i] = c
                if c >= thr:
                    tr = p.target_ring
                    radius = self.base_radius[tr] + c // thr - 1
                    if radius > mr:
                        radius = mr
                    mask |= self.cover[tr][radius]
            else:
                cs[i] = 0
            p.injected = False
            p.waiting = False
            p.gated = False
        return mask

    def throttle_propagate(self, mask, t):
        """Shift the mask through the signal-latency delay line and log
        rising edges per ring."""
        self.history.append(mask)
        eff = self.history[0]
        rising = eff & ~self.blocked
        if rising:
            ring = 0
            while rising:
                if rising & 1:
                    self.activations += 1
                    self.activation_log.append((t, ring))
                rising >>= 1
                ring += 1
        self.blocked = eff

    def tick(self, t):
        self.throttle_propagate(self.injection_monitor_tick(), t)
