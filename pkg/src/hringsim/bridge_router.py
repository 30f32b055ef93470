"""Bridge router joining a child ring to its parent ring.

A bridge owns one register per (direction, lane) on each of the two rings
it touches, plus one local-to-global (L2G) and one global-to-local (G2L)
transfer FIFO per parent-ring lane. An arrival that must leave its ring
may enter any FIFO of its side that has space (lowest index first); tying
arrivals to the FIFO of their own lane wastes pooled buffer space and
shows up directly as extra circulations under load. Stage order within a
cycle:

  1. swap rule: exchange one qualifying child arrival with one qualifying
     parent arrival directly between ring registers, bypassing the FIFOs
  2. transfer_eject (child side): move up-bound arrivals into L2G FIFOs
  3. transfer_eject (parent side): move down-bound arrivals into G2L FIFOs
  4. transfer_inject (L2G): FIFO heads enter the parent ring
  5. transfer_inject (G2L): FIFO heads enter the child ring

FIFO state is live within the cycle, so a flit can enter and leave a FIFO
in the same cycle (zero-cycle fall-through); a depth-1 FIFO therefore
sustains one flit per cycle. An arrival denied FIFO space stays in its
register and circulates (a deflection). A FIFO head commits to the
direction with the lower total remaining path latency, then takes the
lowest-index lane of that direction with an empty register; with every
lane occupied it waits.
"""

from .flits import CW, CCW


class TransferFifo(object):
    """One transfer FIFO. Entries are [flit, entry_cycle, head_since]."""

    __slots__ = ("q", "cap", "reserved_for", "target_ring", "point",
                 "waiting", "injected", "gated", "label")

    def __init__(self, cap, target_ring, label):
        self.q = []
        self.cap = cap
        self.reserved_for = None    # slot-observer reservation
        self.target_ring = target_ring
        self.point = -1             # injection point id, set by the engine
        self.waiting = False
        self.injected = False
        self.gated = False
        self.label = label

    def admissible(self, f):
        if len(self.q) >= self.cap:
            return False
        r = self.reserved_for
        return r is None or r is f

    def push(self, f, t):
        if self.reserved_for is f:
            self.reserved_for = None
        self.q.append([f, t, t if not self.q else -1])

    def pop(self, t):
        e = self.q.pop(0)
        if self.q:
            self.q[0][2] = t    # successor becomes head now
        return e

    def __repr__(self):
        return "TransferFifo(%s, %d/%d)" % (self.label, len(self.q), self.cap)


class BridgeRouter(object):

    __slots__ = ("index", "child_ring", "parent_ring", "child_pos",
                 "parent_pos", "lo", "hi", "child_taps", "parent_taps",
                 "child_arrays", "parent_arrays", "child_reg", "parent_reg",
                 "l2g", "g2l", "engine", "topo")

    def __init__(self, info, topo, child_arrays, parent_arrays, engine,
                 l2g_depth, g2l_depth):
        self.index = info.index
        self.child_ring = info.child_ring
        self.parent_ring = info.parent_ring
        self.child_pos = info.child_pos
        self.parent_pos = info.parent_pos
        self.topo = topo
        self.engine = engine
        child = topo.rings[info.child_ring]
        parent = topo.rings[info.parent_ring]
        self.lo, self.hi = child.node_span
        self.child_arrays = child_arrays     # [dir][lane]
        self.parent_arrays = parent_arrays
        self.child_reg = info.child_pos * child.hop_latency
        self.parent_reg = info.parent_pos * parent.hop_latency
        # Arbitration scans are lane-major with CW before CCW inside a lane.
        self.child_taps = tuple(
            (child_arrays[d][l], self.child_reg)
            for l in range(child.lanes) for d in (CW, CCW))
        self.parent_taps = tuple(
            (parent_arrays[d][l], self.parent_reg, l)
            for l in range(parent.lanes) for d in (CW, CCW))
        self.l2g = tuple(
            TransferFifo(l2g_depth, info.parent_ring,
                         "b%d.l2g%d" % (info.index, l))
            for l in range(parent.lanes))
        self.g2l = tuple(
            TransferFifo(g2l_depth, info.child_ring,
                         "b%d.g2l%d" % (info.index, l))
            for l in range(parent.lanes))

    # ------------------------------------------------------------------

    def swap_rule(self, t):
        """Pair the first up-bound child arrival with the first down-bound
        parent arrival and exchange them register-for-register. At most one
        swap per bridge per cycle; it counts as a transfer, not a deflection.

        The swap is never throttled: it moves two already-admitted flits
        between rings without adding traffic, and together with the FIFO
        paths it forms the drain pipeline that ring throttling relies on.
        """
        lo = self.lo
        hi = self.hi
        cs = None
        for arr, reg in self.child_taps:
            idx = (reg - t * arr.step) % arr.size
            f = arr.buf[idx]
            if f is not None and not (lo <= f.dest < hi):
                cs = (arr, idx, f)
                break
        if cs is None:
            return
        for arr, reg, _lane in self.parent_taps:
            idx = (reg - t * arr.step) % arr.size
            f = arr.buf[idx]
            if f is not None and lo <= f.dest < hi:
                ca, ci, cf = cs
                ca.buf[ci] = f
                arr.buf[idx] = cf
                cf.transfers += 1
                f.transfers += 1
                self.engine.metrics.swaps += 1
                return

    def transfer_eject(self, t):
        """Move qualifying ring arrivals into transfer FIFOs (both sides).
        This is never throttled; denial only comes from FIFO space or an
        observer reservation, and costs the flit a deflection."""
        lo = self.lo
        hi = self.hi
        for arr, reg in self.child_taps:
            idx = (reg - t * arr.step) % arr.size
            f = arr.buf[idx]
            if f is not None and not (lo <= f.dest < hi):
                for fifo in self.l2g:
                    if fifo.admissible(f):
                        fifo.push(f, t)
                        arr.buf[idx] = None
                        arr.count -= 1
                        break
                else:
                    f.deflections += 1
        for arr, reg, _lane in self.parent_taps:
            idx = (reg - t * arr.step) % arr.size
            f = arr.buf[idx]
            if f is not None and lo <= f.dest < hi:
                for fifo in self.g2l:
                    if fifo.admissible(f):
                        fifo.push(f, t)
                        arr.buf[idx] = None
                        arr.count -= 1
                        break
                else:
                    f.deflections += 1

    def transfer_inject(self, t):
        """FIFO heads enter their target ring where a register is empty.
        Transfers are never held by ring throttling: a FIFO carries traffic
        that is already in the network, and moving it out is exactly what a
        throttled ring needs to recover. Throttling applies to node
        injections (new traffic) only; the FIFOs still report waiting/
        injected to the starvation monitor so a blocked transfer can raise
        a throttle of its own."""
        topo = self.topo
        metrics = self.engine.metrics
        for fifo in self.l2g:
            q = fifo.q
            if not q:
                continue
            fifo.waiting = True
            head = q[0][0]
            d = topo.choose_injection_direction(self.parent_ring,
                                                self.parent_pos, head.dest)
            # Lane select: lowest-index parent lane with an empty register
            # this cycle, so one hot lane can't stall the whole FIFO.
            for arr in self.parent_arrays[d]:
                idx = (self.parent_reg - t * arr.step) % arr.size
                if arr.buf[idx] is None:
                    e = fifo.pop(t)
                    metrics.fifo_wait(t - e[2], t - e[1])
                    head.transfers += 1
                    arr.buf[idx] = head
                    arr.count += 1
                    fifo.injected = True
                    break
        for fifo in self.g2l:
            q = fifo.q
            if not q:
                continue
            fifo.waiting = True
            head = q[0][0]
            d = topo.choose_injection_direction(self.child_ring,
                                                self.child_pos, head.dest)
            for arr in self.child_arrays[d]:
                idx = (self.child_reg - t * arr.step) % arr.size
                if arr.buf[idx] is None:
                    e = fifo.pop(t)
                    metrics.fifo_wait(t - e[2], t - e[1])
                    head.transfers += 1
                    arr.buf[idx] = head
                    arr.count += 1
                    fifo.injected = True
                    break

    def step(self, t, blocked, counters, threshold):
        if self.engine.swap_enabled:
            self.swap_rule(t)
        self.transfer_eject(t)
        self.transfer_inject(t)
