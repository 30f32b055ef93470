"""Reassembly buffers and retransmit-once recovery."""

from hringsim.config import Experiment, RunConfig, TrafficConfig
from hringsim.engine import Engine
from hringsim.flits import Flit, PacketRecord
from hringsim.reassembly import ReassemblyBuffer

from helpers import step_n


def _packet(pid, src=1, length=2):
    return PacketRecord(pid, src, 0, length, created=0)


def test_store_and_complete():
    buf = ReassemblyBuffer(0, capacity=2)
    rec = _packet(0)
    assert buf.receive_flit(Flit(rec, 0), 5) == "stored"
    assert buf.stored_flits() == 1
    assert buf.receive_flit(Flit(rec, 1), 7) == "completed"
    assert not buf.slots
    assert buf.check()


def test_out_of_order_and_duplicate_flits():
    buf = ReassemblyBuffer(0, capacity=2)
    rec = _packet(0, length=3)
    assert buf.receive_flit(Flit(rec, 2), 1) == "stored"
    assert buf.receive_flit(Flit(rec, 2), 2) == "dup"
    assert buf.receive_flit(Flit(rec, 0), 3) == "stored"
    assert buf.receive_flit(Flit(rec, 1), 4) == "completed"
    assert buf.dups == 1


def test_overflow_drops_and_marks_exactly_once():
    buf = ReassemblyBuffer(0, capacity=1)
    first, second = _packet(0), _packet(1, src=2)
    assert buf.receive_flit(Flit(first, 0), 1) == "stored"
    assert buf.receive_flit(Flit(second, 0), 2) == "dropped"
    assert buf.receive_flit(Flit(second, 1), 3) == "dropped"
    assert buf.retx_queue == [(2, 1)]       # one mark despite two drops
    assert buf.drops == 2
    assert buf.check()


def test_grant_reserves_slot_and_reports_requester():
    buf = ReassemblyBuffer(0, capacity=1)
    first, second = _packet(0), _packet(1, src=2)
    buf.receive_flit(Flit(first, 0), 1)
    buf.receive_flit(Flit(second, 0), 2)
    buf.receive_flit(Flit(first, 1), 3)     # completes, slot frees
    grants = buf.grant_retransmit({0: first, 1: second})
    assert grants == [(2, 1)]
    assert 1 in buf.reserved
    assert buf.free_slots() == 0
    # the retransmitted flits use the reservation, not a fresh slot
    assert buf.receive_flit(Flit(second, 0), 9) == "stored"
    assert not buf.reserved
    assert buf.receive_flit(Flit(second, 1), 10) == "completed"


def test_stale_grant_skipped():
    buf = ReassemblyBuffer(0, capacity=1)
    first, second = _packet(0), _packet(1, src=2)
    buf.receive_flit(Flit(first, 0), 1)
    buf.receive_flit(Flit(second, 0), 2)
    second.delivered = 5        # completed some other way meanwhile
    buf.receive_flit(Flit(first, 1), 6)
    assert buf.grant_retransmit({0: first, 1: second}) == []
    assert not buf.reserved


def test_flits_of_delivered_packets_are_consumed():
    buf = ReassemblyBuffer(0, capacity=1)
    rec = _packet(0)
    rec.delivered = 4
    assert buf.receive_flit(Flit(rec, 0), 9) == "dup"
    assert not buf.slots and buf.dups == 1


# ----------------------------------------------------------------------
# end to end through the engine

def _congested(transport, slots=1, seed=2):
    # everyone fires multi-flit packets at full tilt into 16 nodes with one
    # reassembly slot each: drops and retransmissions are guaranteed
    return Experiment(
        traffic=TrafficConfig(rate=0.9, packet_length=4, seed=seed),
        run=RunConfig(warmup_cycles=0, measure_cycles=300,
                      reassembly_slots=slots,
                      retransmit_transport=transport))


def test_retransmit_recovers_all_packets_oob():
    eng = Engine(_congested("oob"))
    step_n(eng, 300)
    m = eng.metrics
    assert m.drops > 0
    assert m.retransmissions > 0
    assert eng.flush(300000) is not None
    for rec in eng.packets.values():
        assert rec.delivered >= 0
    eng.audit()


def test_retransmit_recovers_all_packets_in_network():
    eng = Engine(_congested("in_network"))
    step_n(eng, 300)
    assert eng.flush(300000) is not None
    m = eng.metrics
    assert m.drops > 0
    assert m.retransmissions > 0
    assert m.ctrl_consumed > 0      # requests traveled as network traffic
    for rec in eng.packets.values():
        if not rec.is_ctrl:
            assert rec.delivered >= 0
    eng.audit()


def test_retransmit_keeps_original_creation_time():
    eng = Engine(_congested("oob"))
    step_n(eng, 300)
    eng.flush(300000)
    retried = [r for r in eng.packets.values() if r.retransmits > 0]
    assert retried
    for rec in retried:
        assert rec.delivered - rec.created > 0
        assert rec.created <= 300
