"""Metrics ledger, report assembly, saturation detection, CSV schema."""

import math

from hringsim.flits import PacketRecord
from hringsim.metrics import (CSV_HEADER, MetricsLedger, MetricsReport,
                              _p95, build_report)
from hringsim.topology import TopologyConfig, build_topology


def test_p95_indexing():
    assert _p95(list(range(1, 101))) == 95.0
    assert _p95([7]) == 7.0
    assert _p95([1, 2]) == 2.0
    assert math.isnan(_p95([]))


def test_window_filtering():
    led = MetricsLedger(5)
    led.win_lo, led.win_hi = 100, 200
    led.packet_delivered(PacketRecord(0, 0, 9, 4, created=80), 99, 1)
    led.packet_delivered(PacketRecord(1, 0, 9, 4, created=90), 150, 1)
    led.packet_delivered(PacketRecord(2, 4, 9, 4, created=140), 201, 2)
    assert led.delivered_flits_total == 12
    assert led.delivered_flits_window == 4
    assert led.latencies == [60]
    assert led.ring_flits[1] == 4 and led.ring_flits[2] == 0


def test_wait_and_deflection_extremes():
    led = MetricsLedger(1)
    led.fifo_wait(0, 3)
    led.fifo_wait(9, 12)
    led.deflections(0)
    led.deflections(5)
    assert led.fifo_head_max == 9
    assert led.fifo_q_max == 12
    assert led.deflect_max == 5
    assert led.fifo_head_sum / led.fifo_head_n == 4.5


def _report(**kw):
    topo = build_topology(TopologyConfig())
    led = MetricsLedger(len(topo.rings))
    led.win_lo, led.win_hi = 1, 1000
    for t, lat in ((10, 12), (20, 20), (30, 16)):
        led.packet_delivered(
            PacketRecord(t, 0, 9, 2, created=t - lat), t, 1)
    args = dict(ledger=led, topo=topo, measured_cycles=1000, cycles=1000,
                zero_load=10.0, throttle_activations=0, incomplete=False)
    args.update(kw)
    return build_report(**args), led


def test_report_throughput_math():
    rep, led = _report()
    assert rep.avg_latency == 16.0
    assert rep.throughput == 6 / (16 * 1000.0)
    assert rep.ring_throughput[1] == 6 / (4 * 1000.0)
    assert rep.ring_throughput[3] == 0.0
    assert not rep.saturated


def test_saturation_by_latency_blowup():
    topo = build_topology(TopologyConfig())
    led = MetricsLedger(len(topo.rings))
    led.win_lo, led.win_hi = 1, 100
    led.packet_delivered(PacketRecord(0, 0, 9, 1, created=0), 50, 1)
    rep = build_report(led, topo, 100, 100, zero_load=10.0,
                       throttle_activations=0, incomplete=False)
    assert rep.avg_latency == 50.0
    assert rep.saturated


def test_saturation_by_monotone_backlog():
    rep, led = _report()
    assert not rep.saturated
    led.backlog_curve = [3, 5, 8, 13, 21, 34, 55, 89]
    rep2, _ = _report(ledger=led)
    assert rep2.saturated
    led.backlog_curve = [3, 5, 8, 8, 21, 34, 55, 89]    # one flat step
    rep3, _ = _report(ledger=led)
    assert not rep3.saturated


def test_nan_zero_load_cannot_saturate_by_latency():
    rep, _ = _report(zero_load=float("nan"))
    assert not rep.saturated
    assert math.isnan(rep.zero_load_latency)


def test_csv_row_schema():
    rep = MetricsReport(avg_latency=12.5, p95_latency=20.0, max_latency=33.0,
                        throughput=0.25, deflect_avg=0.5, deflect_max=3,
                        fifo_wait_avg=0.1, fifo_wait_max=2, saturated=True)
    row = rep.row(0.125)
    assert len(row) == len(CSV_HEADER) == 10
    assert row[0] == "0.125000"
    assert row[6] == "3"
    assert row[9] == "1"
