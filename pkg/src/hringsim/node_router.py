"""Bufferless node router.

A node owns one register per (direction, lane) on its local ring. Each
cycle it may eject at most one arriving flit per direction (two ejectors)
and inject at most one queued flit per direction (two injection FIFOs).
There is no in-ring buffering: a flit that cannot eject keeps circulating
and retries a full lap later.
"""

from collections import deque

from .flits import CW, CCW


class NodeRouter(object):

    __slots__ = ("index", "ring_index", "position", "taps", "queues",
                 "engine", "target_ring", "point", "waiting", "injected",
                 "gated")

    def __init__(self, index, ring_index, position, taps, engine):
        self.index = index
        self.ring_index = ring_index
        self.target_ring = ring_index   # injection point attribute
        self.position = position
        self.taps = taps                # taps[dir] = [(array, register), ...]
        self.queues = (deque(), deque())
        self.engine = engine
        self.point = -1                 # assigned by the engine
        self.waiting = False
        self.injected = False
        self.gated = False

    def queued_flits(self):
        return len(self.queues[CW]) + len(self.queues[CCW])

    def eject_stage(self, t):
        me = self.index
        deliver = self.engine.deliver
        for taps in self.taps:
            got = False
            for arr, reg in taps:
                idx = (reg - t * arr.step) % arr.size
                f = arr.buf[idx]
                if f is not None and f.dest == me:
                    if got:
                        # one ejector per direction; the loser circulates
                        f.deflections += 1
                    else:
                        arr.buf[idx] = None
                        arr.count -= 1
                        got = True
                        deliver(f, t)

    def inject_stage(self, t, allowed):
        wait = False
        inj = False
        for d in (CW, CCW):
            q = self.queues[d]
            if not q:
                continue
            wait = True
            if not allowed:
                continue
            for arr, reg in self.taps[d]:
                idx = (reg - t * arr.step) % arr.size
                if arr.buf[idx] is None:
                    f = q.popleft()
                    f.injected = t
                    rec = f.rec
                    if rec.injected < 0:
                        rec.injected = t
                    arr.buf[idx] = f
                    arr.count += 1
                    inj = True
                    break
        self.waiting = wait
        self.injected = inj

    def step(self, t, blocked, counters, threshold):
        # Eject first: a register freed by our own ejection is reusable for
        # injection in the same cycle.
        self.eject_stage(t)
        if self.engine.halt_injection:
            self.waiting = False
            self.injected = False
            return
        allowed = True
        if (blocked >> self.ring_index) & 1:
            # a throttled ring still serves the point that asserted the
            # throttle; everyone else is held and marks the cycle as gated
            # (administrative hold, not starvation)
            allowed = counters[self.point] >= threshold
        self.inject_stage(t, allowed)
        if self.waiting and not allowed:
            self.gated = True
