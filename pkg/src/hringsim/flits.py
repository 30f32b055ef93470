"""Flit and packet bookkeeping records.

A packet is split into `length` single-register flits at injection time.
Flits carry enough routing state to be self-describing on the ring: the
destination node, their sequence number inside the packet, and counters
that the metrics layer reads back at delivery time.
"""

# Ring directions. CW flits move toward increasing register index,
# CCW flits toward decreasing index.
CW = 0
CCW = 1
DIRS = (CW, CCW)

DIR_NAMES = {CW: "cw", CCW: "ccw"}


class PacketRecord(object):
    """Per-packet ledger entry, shared by all flits of the packet."""

    __slots__ = ("pid", "src", "dest", "length", "created", "injected",
                 "delivered", "retransmits", "is_ctrl")

    def __init__(self, pid, src, dest, length, created, is_ctrl=False):
        self.pid = pid
        self.src = src
        self.dest = dest
        self.length = length
        self.created = created
        self.injected = -1      # cycle the first flit entered a ring
        self.delivered = -1     # cycle the packet completed reassembly
        self.retransmits = 0
        self.is_ctrl = is_ctrl

    def __repr__(self):
        return ("PacketRecord(pid=%d, %d->%d, len=%d, created=%d)"
                % (self.pid, self.src, self.dest, self.length, self.created))


class Flit(object):
    """One register worth of payload in flight."""

    __slots__ = ("rec", "seq", "src", "dest", "created", "injected",
                 "deflections", "transfers", "is_retransmit", "ctrl")

    def __init__(self, rec, seq, is_retransmit=False, ctrl=None):
        self.rec = rec
        self.seq = seq
        self.src = rec.src
        self.dest = rec.dest
        self.created = rec.created
        self.injected = -1
        self.deflections = 0    # denied transfers / denied ejects (extra laps)
        self.transfers = 0      # ring crossings completed
        self.is_retransmit = is_retransmit
        # ctrl is None for payload flits; for an in-network retransmit
        # request it holds the packet id being requested.
        self.ctrl = ctrl

    @property
    def pid(self):
        return self.rec.pid

    def __repr__(self):
        return ("Flit(pid=%d, seq=%d, %d->%d)"
                % (self.rec.pid, self.seq, self.src, self.dest))
