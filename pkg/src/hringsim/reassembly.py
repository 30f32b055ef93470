"""Per-node reassembly buffer with retransmit-once recovery.

Each node has a fixed number of reassembly slots. A payload flit arriving
for a packet that has a slot (or a reservation) is stored; if a free slot
exists one is allocated; otherwise the flit is dropped and the (source,
packet) pair is marked exactly once in the retransmit queue. Whenever a
slot frees up, the oldest marked pair is granted: a slot is reserved for
the packet and a retransmit request is sent to the source, which re-enqueues
the whole packet with its original id and creation time. Flits of packets
that already completed are consumed and ignored, so a retransmission that
raced the original stragglers cannot re-occupy a slot.
"""


class ReassemblyBuffer(object):

    __slots__ = ("node", "capacity", "slots", "reserved", "marked",
                 "retx_queue", "drops", "dups")

    def __init__(self, node, capacity):
        self.node = node
        self.capacity = capacity
        self.slots = {}        # pid -> [bitmap, got, first_cycle]
        self.reserved = set()  # pids with a slot held for retransmission
        self.marked = set()    # pids sitting in retx_queue
        self.retx_queue = []   # (src, pid) in mark order
        self.drops = 0
        self.dups = 0

    def free_slots(self):
        return self.capacity - len(self.slots) - len(self.reserved)

    def receive_flit(self, f, t):
        """Returns "completed", "stored", "dropped" or "dup"."""
        rec = f.rec
        if rec.delivered >= 0:
            self.dups += 1
            return "dup"
        pid = rec.pid
        e = self.slots.get(pid)
        if e is None:
            if pid in self.reserved:
                self.reserved.discard(pid)
            elif len(self.slots) + len(self.reserved) >= self.capacity:
                self.drops += 1
                if pid not in self.marked:
                    self.marked.add(pid)
                    self.retx_queue.append((rec.src, pid))
                return "dropped"
            e = [0, 0, t]
            self.slots[pid] = e
        bit = 1 << f.seq
        if e[0] & bit:
            self.dups += 1
            return "dup"
        e[0] |= bit
        e[1] += 1
        if e[1] == rec.length:
            del self.slots[pid]
            return "completed"
        return "stored"

    def grant_retransmit(self, packets):
        """Called after a slot frees. Grants the oldest marked packets a
        reserved slot each, one per free slot, and returns the list of
        (src, pid) requests to deliver to the sources."""
        grants = []
        while self.retx_queue and self.free_slots() > 0:
            src, pid = self.retx_queue.pop(0)
            self.marked.discard(pid)
            rec = packets.get(pid)
            if rec is None or rec.delivered >= 0:
                continue    # stale: completed some other way meanwhile
            if pid not in self.slots:
                self.reserved.add(pid)
            grants.append((src, pid))
        return grants

    def stored_flits(self):
        return sum(e[1] for e in self.slots.values())

    def check(self):
        """Slot accounting invariant."""
        occupied = len(self.slots)
        reserved = len(self.reserved)
        ok = (occupied + reserved <= self.capacity
              and occupied + reserved + self.free_slots() == self.capacity
              and len(self.marked) == len(self.retx_queue))
        return ok
