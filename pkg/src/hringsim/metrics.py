"""Run statistics: what gets counted where, and the final report.

Latency is measured from packet creation to reassembly completion and
sampled for packets completing inside the measurement window. Throughput
is delivered flits per node per measured cycle; per-ring throughput
attributes a delivery to the *source* ring. Transfer FIFO wait is the
head-of-queue wait sampled at each FIFO pop; waits still accruing at run
end are flushed as censored samples, as are the deflection counts of flits
still circulating.
"""

import math
from dataclasses import dataclass, field


class MetricsLedger(object):

    def __init__(self, nrings):
        self.win_lo = 1
        self.win_hi = float("inf")
        self.latencies = []
        self.delivered_flits_window = 0
        self.delivered_packets_window = 0
        self.delivered_flits_total = 0
        self.ring_flits = [0] * nrings
        self.fifo_head_n = 0
        self.fifo_head_sum = 0
        self.fifo_head_max = 0
        self.fifo_q_n = 0
        self.fifo_q_sum = 0
        self.fifo_q_max = 0
        self.deflect_n = 0
        self.deflect_sum = 0
        self.deflect_max = 0
        self.swaps = 0
        self.drops = 0
        self.dups = 0
        self.ctrl_consumed = 0
        self.retransmissions = 0
        self.created_flits = 0
        self.created_packets = 0
        self.backlog_curve = []

    def fifo_wait(self, head_wait, queued_wait):
        self.fifo_head_n += 1
        self.fifo_head_sum += head_wait
        if head_wait > self.fifo_head_max:
            self.fifo_head_max = head_wait
        self.fifo_q_n += 1
        self.fifo_q_sum += queued_wait
        if queued_wait > self.fifo_q_max:
            self.fifo_q_max = queued_wait

    def deflections(self, count):
        self.deflect_n += 1
        self.deflect_sum += count
        if count > self.deflect_max:
            self.deflect_max = count

    def packet_delivered(self, rec, t, src_ring):
        self.delivered_flits_total += rec.length
        if self.win_lo <= t <= self.win_hi:
            self.delivered_flits_window += rec.length
            self.delivered_packets_window += 1
            self.latencies.append(t - rec.created)
            self.ring_flits[src_ring] += rec.length


def _p95(samples):
    if not samples:
        return float("nan")
    s = sorted(samples)
    idx = math.ceil(0.95 * len(s)) - 1
    return float(s[max(idx, 0)])


@dataclass
class MetricsReport:
    cycles: int = 0
    measured_cycles: int = 0
    avg_latency: float = float("nan")
    p95_latency: float = float("nan")
    max_latency: float = float("nan")
    throughput: float = 0.0
    ring_throughput: dict = field(default_factory=dict)
    deflect_avg: float = 0.0
    deflect_max: int = 0
    fifo_wait_avg: float = 0.0
    fifo_wait_max: int = 0
    fifo_queued_avg: float = 0.0
    fifo_queued_max: int = 0
    swaps: int = 0
    drops: int = 0
    dups: int = 0
    retransmissions: int = 0
    throttle_activations: int = 0
    created_flits: int = 0
    delivered_flits: int = 0
    zero_load_latency: float = float("nan")
    saturated: bool = False
    incomplete: bool = False
    backlog_curve: tuple = ()

    def row(self, rate):
        """The canonical CSV row shared by `run` and `sweep`."""
        return [
            "%.6f" % rate,
            "%.6f" % self.avg_latency,
            "%.6f" % self.p95_latency,
            "%.6f" % self.max_latency,
            "%.6f" % self.throughput,
            "%.6f" % self.deflect_avg,
            "%d" % self.deflect_max,
            "%.6f" % self.fifo_wait_avg,
            "%d" % self.fifo_wait_max,
            "%d" % int(self.saturated),
        ]


CSV_HEADER = ["rate", "avg_latency", "p95_latency", "max_latency",
              "throughput", "deflect_avg", "deflect_max", "fifo_wait_avg",
              "fifo_wait_max", "saturated"]


def build_report(ledger, topo, measured_cycles, cycles, zero_load,
                 throttle_activations, incomplete):
    rep = MetricsReport()
    rep.cycles = cycles
    rep.measured_cycles = measured_cycles
    lat = ledger.latencies
    if lat:
        rep.avg_latency = sum(lat) / len(lat)
        rep.p95_latency = _p95(lat)
        rep.max_latency = float(max(lat))
    n = topo.node_count
    if measured_cycles > 0:
        rep.throughput = ledger.delivered_flits_window / (n * measured_cycles)
        for ring in topo.local_rings():
            nodes = ring.node_span[1] - ring.node_span[0]
            rep.ring_throughput[ring.index] = (
                ledger.ring_flits[ring.index] / (nodes * measured_cycles))
    if ledger.deflect_n:
        rep.deflect_avg = ledger.deflect_sum / ledger.deflect_n
        rep.deflect_max = ledger.deflect_max
    if ledger.fifo_head_n:
        rep.fifo_wait_avg = ledger.fifo_head_sum / ledger.fifo_head_n
        rep.fifo_wait_max = ledger.fifo_head_max
        rep.fifo_queued_avg = ledger.fifo_q_sum / ledger.fifo_q_n
        rep.fifo_queued_max = ledger.fifo_q_max
    rep.swaps = ledger.swaps
    rep.drops = ledger.drops
    rep.dups = ledger.dups
    rep.retransmissions = ledger.retransmissions
    rep.throttle_activations = throttle_activations
    rep.created_flits = ledger.created_flits
    rep.delivered_flits = ledger.delivered_flits_total
    rep.zero_load_latency = zero_load
    rep.incomplete = incomplete
    rep.backlog_curve = tuple(ledger.backlog_curve)
    # Saturation: latency blown past 3x zero load, or source backlog
    # strictly climbing through the whole measurement window.
    sat = False
    if not math.isnan(zero_load) and lat and rep.avg_latency > 3.0 * zero_load:
        sat = True
    curve = rep.backlog_curve
    if not sat and len(curve) >= 3:
        sat = all(curve[i] < curve[i + 1] for i in range(len(curve) - 1))
    rep.saturated = sat
    return rep
