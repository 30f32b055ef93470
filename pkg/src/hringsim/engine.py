"""Cycle-accurate simulation engine.

Each (ring, direction, lane) is a circular array of registers, one register
per position times the per-hop latency. Advancing every ring by one
register per cycle is free: the content of register r at cycle t lives at
buf[(r - t * step) % size] with step +1 for CW and -1 for CCW, so a cycle
is just t += 1. Router positions are disjoint, therefore every register is
touched by at most one router per cycle and the per-cycle router order
cannot change behavior; it is still fixed (rings in prefix order,
positions ascending, bridges stepped at their child-ring position) so runs
are reproducible by construction.

Cycle order: advance rings, step routers (node: eject then inject; bridge:
swap, transfer_eject, transfer_inject), tick guarantees (slot observers,
starvation counters, throttle map), generate traffic and apply retransmit
grants, then optional invariant audits.
"""

import hashlib

from .bridge_router import BridgeRouter
from .config import Experiment
from .flits import CW, CCW, Flit, PacketRecord
from .guarantees import InjectionGuarantee, TransferGuarantee
from .metrics import MetricsLedger, build_report
from .node_router import NodeRouter
from .reassembly import ReassemblyBuffer
from .topology import build_topology
from .traffic import build_sources


class InvariantViolation(RuntimeError):

    def __init__(self, cycle, detail):
        self.cycle = cycle
        self.detail = detail
        super().__init__("cycle %d: %s" % (cycle, detail))


class SlotArray(object):
    """Register file of one (ring, direction, lane)."""

    __slots__ = ("buf", "size", "step", "count")

    def __init__(self, size, step):
        self.buf = [None] * size
        self.size = size
        self.step = step
        self.count = 0

    def at(self, reg, t):
        """Flit visible at register `reg` during cycle t."""
        return self.buf[(reg - t * self.step) % self.size]


class Engine(object):

    def __init__(self, experiment=None, disable_swap=False):
        exp = experiment if experiment is not None else Experiment()
        self.experiment = exp
        self.topo = build_topology(exp.topology)
        self.traffic_cfg = exp.traffic
        self.run_cfg = exp.run
        self.guarantees_enabled = exp.guarantees.enabled
        self.retransmit_transport = exp.run.retransmit_transport
        self.audit_interval = exp.run.audit_interval
        self.swap_enabled = not disable_swap
        self.cycle = 0
        self.halt_sources = False
        self.halt_injection = False
        topo = self.topo

        # ring register arrays, indexed [ring][direction][lane]
        self.arrays = []
        for ring in topo.rings:
            size = ring.positions * ring.hop_latency
            self.arrays.append((
                [SlotArray(size, 1) for _ in range(ring.lanes)],
                [SlotArray(size, -1) for _ in range(ring.lanes)],
            ))

        self.metrics = MetricsLedger(len(topo.rings))
        self.packets = {}
        self.pid_next = 0
        self.outstanding = 0
        self._retx_now = []
        self._ctrl_now = []
        self.node_ring = [topo.nodes[i].ring for i in range(topo.node_count)]

        self.node_routers = []
        for n in topo.nodes:
            ring = topo.rings[n.ring]
            reg = n.position * ring.hop_latency
            taps = tuple(
                tuple((self.arrays[n.ring][d][l], reg)
                      for l in range(ring.lanes))
                for d in (CW, CCW))
            self.node_routers.append(
                NodeRouter(n.index, n.ring, n.position, taps, self))

        self.bridge_routers = []
        for info in topo.bridges:
            self.bridge_routers.append(BridgeRouter(
                info, topo, self.arrays[info.child_ring],
                self.arrays[info.parent_ring], self,
                exp.topology.l2g_fifo_depth, exp.topology.g2l_fifo_depth))

        # fixed update order: rings in prefix order, positions ascending,
        # bridges stepped once, at their child-ring position
        self.router_order = []
        for ring in topo.rings:
            for pos in range(ring.positions):
                kind, idx = ring.members[pos]
                if kind == "node":
                    self.router_order.append(self.node_routers[idx])
                elif topo.bridges[idx].child_ring == ring.index:
                    self.router_order.append(self.bridge_routers[idx])

        self.reassembly = [
            ReassemblyBuffer(i, exp.run.reassembly_slots)
            for i in range(topo.node_count)]

        self.guard = InjectionGuarantee(
            topo, exp.guarantees.injection_threshold,
            exp.guarantees.throttle_signal_latency)
        for r in self.node_routers:
            self.guard.register(r)
        for br in self.bridge_routers:
            for fifo in br.l2g:
                self.guard.register(fifo)
            for fifo in br.g2l:
                self.guard.register(fifo)

        self.transfer_guard = TransferGuarantee(
            exp.guarantees.observer_retry_threshold)
        for br in self.bridge_routers:
            self.transfer_guard.attach_bridge(br)

        self.sources = build_sources(topo, exp.traffic, self)
        self._zl = None

    # ------------------------------------------------------------------
    # packet plumbing

    def create_packet(self, src, dest, length, t, ctrl=None, created=None):
        pid = self.pid_next
        self.pid_next += 1
        rec = PacketRecord(pid, src, dest, length,
                           t if created is None else created,
                           is_ctrl=ctrl is not None)
        self.packets[pid] = rec
        self.outstanding += 1
        self.metrics.created_packets += 1
        self._enqueue_flits(rec, False, ctrl)
        return rec

    def _enqueue_flits(self, rec, is_retransmit, ctrl=None):
        node = self.node_routers[rec.src]
        d = self.topo.choose_injection_direction(
            node.ring_index, node.position, rec.dest)
        q = node.queues[d]
        for seq in range(rec.length):
            q.append(Flit(rec, seq, is_retransmit, ctrl))
        self.metrics.created_flits += rec.length

    def re_enqueue(self, pid):
        rec = self.packets[pid]
        rec.retransmits += 1
        self.metrics.retransmissions += 1
        self._enqueue_flits(rec, True)

    def send_probe(self, src, dest, length=1):
        """Inject one measurement packet outside any traffic pattern."""
        return self.create_packet(src, dest, length, self.cycle)

    def deliver(self, f, t):
        """A flit ejected at its destination node."""
        m = self.metrics
        m.deflections(f.deflections)
        if f.ctrl is not None:
            # retransmit request reached the original source
            m.ctrl_consumed += 1
            rec = f.rec
            if rec.delivered < 0:
                rec.delivered = t
                self.outstanding -= 1
            self._retx_now.append(f.ctrl)
            return
        buf = self.reassembly[f.dest]
        status = buf.receive_flit(f, t)
        if status == "completed":
            rec = f.rec
            rec.delivered = t
            self.outstanding -= 1
            m.packet_delivered(rec, t, self.node_ring[rec.src])
            for requester_src, pid in buf.grant_retransmit(self.packets):
                if self.retransmit_transport == "oob":
                    self._retx_now.append(pid)
                else:
                    self._ctrl_now.append((f.dest, requester_src, pid))
        elif status == "dropped":
            m.drops += 1
        elif status == "dup":
            m.dups += 1

    # ------------------------------------------------------------------
    # cycle loop

    def step_cycle(self):
        t = self.cycle + 1
        self.cycle = t
        enabled = self.guarantees_enabled
        g = self.guard
        blocked = g.blocked if enabled else 0
        counters = g.counters
        thr = g.threshold
        for r in self.router_order:
            r.step(t, blocked, counters, thr)
        if enabled:
            self.transfer_guard.tick(t)
            g.tick(t)
        self._traffic_phase(t)
        if self.audit_interval and t % self.audit_interval == 0:
            self.audit()
        return t

    def _traffic_phase(self, t):
        for s in self.sources:
            s.tick(t)
        if self._retx_now:
            pending = self._retx_now
            self._retx_now = []
            for pid in pending:
                if self.packets[pid].delivered < 0:
                    self.re_enqueue(pid)
        if self._ctrl_now:
            pending = self._ctrl_now
            self._ctrl_now = []
            for requester, src, pid in pending:
                self.create_packet(requester, src, 1, t, ctrl=pid)

    def run(self):
        """Warmup plus measurement windows; returns the metrics report."""
        rc = self.run_cfg
        total = rc.warmup_cycles + rc.measure_cycles
        cap = total if rc.max_cycles == 0 else min(total, rc.max_cycles)
        m = self.metrics
        m.win_lo = rc.warmup_cycles + 1
        m.win_hi = rc.warmup_cycles + rc.measure_cycles
        checkpoints = ()
        if rc.measure_cycles >= 8:
            stride = rc.measure_cycles // 8
            checkpoints = frozenset(
                rc.warmup_cycles + k * stride for k in range(1, 9))
        while self.cycle < cap:
            t = self.step_cycle()
            if t in checkpoints:
                m.backlog_curve.append(self.total_backlog())
        self.flush_censored()
        measured = max(0, min(self.cycle, m.win_hi) - rc.warmup_cycles)
        return build_report(m, self.topo, measured, self.cycle,
                            self.zero_load(), self.guard.activations,
                            cap < total)

    def flush_censored(self):
        """Fold still-accruing FIFO waits and the deflection counts of flits
        still in flight into the stats (censored samples)."""
        t = self.cycle
        m = self.metrics
        for br in self.bridge_routers:
            for fifo in br.l2g + br.g2l:
                q = fifo.q
                if q:
                    m.fifo_wait(t - q[0][2], t - q[0][1])
                    for e in q[1:]:
                        m.fifo_q_n += 1
                        m.fifo_q_sum += t - e[1]
                for e in q:
                    m.deflections(e[0].deflections)
        for ring_arrays in self.arrays:
            for d in (CW, CCW):
                for arr in ring_arrays[d]:
                    for f in arr.buf:
                        if f is not None:
                            m.deflections(f.deflections)

    def zero_load(self):
        """Pattern-weighted analytic zero-load latency (nan when the
        pattern has no fixed pair population)."""
        if self._zl is None:
            pat = self.traffic_cfg.pattern
            n = self.topo.node_count
            if pat == "uniform_random":
                pairs = [(s, d) for s in range(n) for d in range(n) if s != d]
            elif pat == "transpose":
                w = int(n ** 0.5)
                pairs = [(i, (i % w) * w + i // w) for i in range(n)
                         if (i % w) * w + i // w != i]
            elif pat == "bit_complement":
                pairs = [(i, (n - 1) ^ i) for i in range(n)]
            else:
                self._zl = float("nan")
                return self._zl
            self._zl = self.topo.mean_zero_load_latency(pairs)
        return self._zl

    # ------------------------------------------------------------------
    # draining and accounting

    def network_flits(self):
        """Flits in ring registers and transfer FIFOs."""
        total = 0
        for ring_arrays in self.arrays:
            for d in (CW, CCW):
                for arr in ring_arrays[d]:
                    total += arr.count
        for br in self.bridge_routers:
            for fifo in br.l2g:
                total += len(fifo.q)
            for fifo in br.g2l:
                total += len(fifo.q)
        return total

    def total_backlog(self):
        return sum(r.queued_flits() for r in self.node_routers)

    def drain(self, cap):
        """Freeze all injection and run until the network itself is empty.
        Returns the cycles taken, or None if `cap` was not enough."""
        self.halt_sources = True
        self.halt_injection = True
        cycles = 0
        while self.network_flits() > 0:
            if cycles >= cap:
                return None
            self.step_cycle()
            cycles += 1
        return cycles

    def flush(self, cap):
        """Stop creating new traffic and run until every packet created so
        far has been delivered and the network and queues are empty."""
        self.halt_sources = True
        cycles = 0
        while not (self.outstanding == 0 and self.network_flits() == 0
                   and self.total_backlog() == 0):
            if cycles >= cap:
                return None
            self.step_cycle()
            cycles += 1
        return cycles

    def audit(self):
        """Invariant sweep: register exclusivity, occupancy counters, FIFO
        bounds, reassembly slot accounting, flit conservation."""
        t = self.cycle
        seen = set()
        inflight = 0
        for ri, ring_arrays in enumerate(self.arrays):
            for d in (CW, CCW):
                for arr in ring_arrays[d]:
                    c = 0
                    for f in arr.buf:
                        if f is not None:
                            c += 1
                            if id(f) in seen:
                                raise InvariantViolation(
                                    t, "flit %r present twice" % f)
                            seen.add(id(f))
                    if c != arr.count:
                        raise InvariantViolation(
                            t, "occupancy counter drift on ring %d" % ri)
                    inflight += c
        for br in self.bridge_routers:
            for fifo in br.l2g + br.g2l:
                if len(fifo.q) > fifo.cap:
                    raise InvariantViolation(
                        t, "FIFO %s above capacity" % fifo.label)
                for e in fifo.q:
                    if id(e[0]) in seen:
                        raise InvariantViolation(
                            t, "flit %r present twice" % e[0])
                    seen.add(id(e[0]))
                    inflight += 1
        queued = 0
        for r in self.node_routers:
            for q in r.queues:
                for f in q:
                    if id(f) in seen:
                        raise InvariantViolation(
                            t, "flit %r present twice" % f)
                    seen.add(id(f))
                queued += len(q)
        stored = 0
        for buf in self.reassembly:
            if not buf.check():
                raise InvariantViolation(
                    t, "reassembly accounting broken at node %d" % buf.node)
            stored += buf.stored_flits()
        m = self.metrics
        consumed = (m.delivered_flits_total + m.drops + m.dups
                    + m.ctrl_consumed)
        if m.created_flits != queued + inflight + stored + consumed:
            raise InvariantViolation(
                t, "flit conservation: created=%d queued=%d inflight=%d "
                   "stored=%d consumed=%d"
                   % (m.created_flits, queued, inflight, stored, consumed))

    # ------------------------------------------------------------------
    # test and verification seams

    def place_flit(self, ring, direction, lane, buf_index, src, dest):
        """Drop a fresh single-flit packet directly into a ring register
        (verification helper; keeps the packet ledger consistent)."""
        rec = PacketRecord(self.pid_next, src, dest, 1, self.cycle)
        self.pid_next += 1
        self.packets[rec.pid] = rec
        self.outstanding += 1
        self.metrics.created_packets += 1
        self.metrics.created_flits += 1
        f = Flit(rec, 0)
        f.injected = self.cycle
        rec.injected = self.cycle
        arr = self.arrays[ring][direction][lane]
        if arr.buf[buf_index] is not None:
            raise InvariantViolation(self.cycle, "place_flit on occupied slot")
        arr.buf[buf_index] = f
        arr.count += 1
        return f

    def fill_fifo(self, fifo, src, dest):
        """Push a fresh single-flit packet into a transfer FIFO
        (verification helper)."""
        rec = PacketRecord(self.pid_next, src, dest, 1, self.cycle)
        self.pid_next += 1
        self.packets[rec.pid] = rec
        self.outstanding += 1
        self.metrics.created_packets += 1
        self.metrics.created_flits += 1
        f = Flit(rec, 0)
        f.injected = self.cycle
        rec.injected = self.cycle
        fifo.push(f, self.cycle)
        return f

    def network_snapshot(self):
        """Canonical picture of ring and FIFO contents (ignores guarantee
        bookkeeping), for stasis checks."""
        parts = []
        for ri, ring_arrays in enumerate(self.arrays):
            for d in (CW, CCW):
                for li, arr in enumerate(ring_arrays[d]):
                    for i, f in enumerate(arr.buf):
                        if f is not None:
                            parts.append((ri, d, li, i, f.rec.pid, f.seq))
        for br in self.bridge_routers:
            for fifo in br.l2g + br.g2l:
                parts.append((br.index, fifo.label,
                              tuple((e[0].rec.pid, e[0].seq)
                                    for e in fifo.q)))
        return tuple(parts)

    def state_signature(self):
        """Hash of the complete simulation state, for bit-exact
        reproducibility checks."""
        h = hashlib.sha256()
        h.update(repr(self.network_snapshot()).encode())
        h.update(repr([(r.index,
                        [ (f.rec.pid, f.seq) for f in r.queues[CW] ],
                        [ (f.rec.pid, f.seq) for f in r.queues[CCW] ])
                       for r in self.node_routers]).encode())
        h.update(repr(self.guard.counters).encode())
        h.update(repr(self.guard.blocked).encode())
        for buf in self.reassembly:
            h.update(repr((buf.node, sorted(
                (pid, e[0], e[1]) for pid, e in buf.slots.items()),
                sorted(buf.reserved), buf.retx_queue)).encode())
        m = self.metrics
        h.update(repr((self.cycle, self.pid_next, self.outstanding,
                       m.created_flits, m.delivered_flits_total, m.drops,
                       m.dups, m.swaps, m.ctrl_consumed)).encode())
        for s in self.sources:
            h.update(repr(s.rng.getstate()).encode())
        return h.hexdigest()


def run_experiment(experiment):
    """Build an engine for `experiment`, run it, return the report."""
    return Engine(experiment).run()
