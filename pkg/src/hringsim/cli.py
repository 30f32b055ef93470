"""Command line interface.

Subcommands:
  run        one simulation, one CSV row (same schema as sweep)
  sweep      rate sweep, optionally parallel across processes
  worstcase  adversarial A/B/C run, per-ring throughput CSV
  verify     self-checks (drain bounds, swap rule, routing, determinism)
  topo       print the built topology of a config

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 invariant violation, 4 usage. Errors are emitted as one JSON object per
line on stderr so harnesses can parse them.
"""

import argparse
import csv
import json
import multiprocessing
import os
import sys

from .config import (ConfigError, output_directory, parse_experiment,
                     with_overrides)
from .engine import Engine, InvariantViolation
from .metrics import CSV_HEADER
from .topology import TopologyConfig, TopologyError, build_topology
from .traffic import TrafficError
from . import verification

WORSTCASE_HEADER = ["guarantees", "ringA_throughput", "ringB_throughput",
                    "ringC_throughput", "fifo_wait_avg", "fifo_wait_max",
                    "deflect_avg", "deflect_max", "throttle_activations"]


def _fail(kind, detail, code):
    sys.stderr.write(json.dumps({"error": kind, "detail": str(detail)}) + "\n")
    return code


def _open_out(exp, out):
    if out is None or out == "-":
        return sys.stdout, False
    if not os.path.isabs(out):
        base = output_directory(exp)
        os.makedirs(base, exist_ok=True)
        out = os.path.join(base, out)
    return open(out, "w", newline=""), True


def _common_overrides(parser):
    parser.add_argument("--rate", type=float, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--pattern", default=None)
    parser.add_argument("--guarantees", choices=("on", "off"), default=None)
    parser.add_argument("--warmup", type=int, default=None)
    parser.add_argument("--measure", type=int, default=None)
    parser.add_argument("--audit-interval", type=int, default=None)


def _apply_overrides(exp, args):
    guar = None
    if args.guarantees is not None:
        guar = args.guarantees == "on"
    return with_overrides(exp, rate=args.rate, seed=args.seed,
                          pattern=args.pattern, guarantees=guar,
                          warmup=args.warmup, measure=args.measure,
                          audit_interval=args.audit_interval)


def _parse_rates(spec):
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ConfigError("--rates: expected start:stop:step, got %r"
                              % spec)
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise ConfigError("--rates: expected numbers, got %r" % spec)
        if step <= 0 or stop < start:
            raise ConfigError("--rates: need step > 0 and stop >= start")
        rates = []
        k = 0
        while True:
            r = round(start + k * step, 10)
            if r > stop + 1e-9:
                break
            rates.append(r)
            k += 1
        return rates
    try:
        return [float(p) for p in spec.split(",") if p]
    except ValueError:
        raise ConfigError("--rates: expected numbers, got %r" % spec)


def _sweep_point(job):
    path, args_dict, rate = job
    exp = parse_experiment(path)
    ns = argparse.Namespace(**args_dict)
    exp = _apply_overrides(exp, ns)
    exp = with_overrides(exp, rate=rate)
    rep = Engine(exp).run()
    return rate, rep.row(rate)


def cmd_run(args):
    exp = _apply_overrides(parse_experiment(args.config), args)
    rep = Engine(exp).run()
    fh, close = _open_out(exp, args.out)
    w = csv.writer(fh)
    w.writerow(CSV_HEADER)
    w.writerow(rep.row(exp.traffic.rate))
    if close:
        fh.close()
    if rep.incomplete:
        sys.stderr.write(json.dumps(
            {"warning": "incomplete",
             "detail": "max_cycles reached before the measurement window "
                       "completed"}) + "\n")
    return 0


def cmd_sweep(args):
    exp = _apply_overrides(parse_experiment(args.config), args)
    rates = _parse_rates(args.rates)
    args_dict = dict(vars(args))
    for drop in ("func", "config", "rates", "jobs", "out"):
        args_dict.pop(drop, None)
    jobs = [(args.config, args_dict, r) for r in rates]
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            rows = pool.map(_sweep_point, jobs)
    else:
        rows = [_sweep_point(j) for j in jobs]
    rows.sort(key=lambda x: x[0])
    fh, close = _open_out(exp, args.out)
    w = csv.writer(fh)
    w.writerow(CSV_HEADER)
    for _rate, row in rows:
        w.writerow(row)
    if close:
        fh.close()
    return 0


def cmd_worstcase(args):
    exp = _apply_overrides(parse_experiment(args.config), args)
    exp = with_overrides(exp, pattern="worst_case_abc")
    rep = Engine(exp).run()
    topo = build_topology(exp.topology)
    locals_ = topo.local_rings()
    fh, close = _open_out(exp, args.out)
    w = csv.writer(fh)
    w.writerow(WORSTCASE_HEADER)
    w.writerow([
        "on" if exp.guarantees.enabled else "off",
        "%.3f" % rep.ring_throughput[locals_[0].index],
        "%.3f" % rep.ring_throughput[locals_[1].index],
        "%.3f" % rep.ring_throughput[locals_[2].index],
        "%.6f" % rep.fifo_wait_avg,
        "%d" % rep.fifo_wait_max,
        "%.6f" % rep.deflect_avg,
        "%d" % rep.deflect_max,
        "%d" % rep.throttle_activations,
    ])
    if close:
        fh.close()
    return 0


def cmd_verify(args):
    ok = True
    lines = []

    def emit(line):
        lines.append(line)
        print(line)

    failures = verification.drain_trials(args.trials)
    if failures:
        ok = False
        for f in failures[:10]:
            emit("FAIL drain: %s" % f)
    emit("%s drain: %d randomized states drained within bound"
         % ("PASS" if not failures else "FAIL", args.trials))

    sok, slines = verification.swap_rule_check()
    ok &= sok
    for line in slines:
        emit(line)

    exp = parse_experiment(args.config) if args.config else None
    topo = build_topology(exp.topology if exp else TopologyConfig())
    rok, rdetail = verification.routing_termination_check(topo)
    ok &= rok
    emit("%s routing: all pairs terminate within the transfer bound%s"
         % ("PASS" if rok else "FAIL",
            "" if rok else " (%s)" % (rdetail,)))

    if exp is not None:
        quick = with_overrides(exp, warmup=200, measure=2000)
        dok, _reps = verification.determinism_check(quick)
        ok &= dok
        emit("%s determinism: identical state hash over two runs"
             % ("PASS" if dok else "FAIL"))
        verification.invariant_run(quick, 2000, audit_interval=50)
        emit("PASS invariants: audited run completed")

    return 0 if ok else 1


def cmd_topo(args):
    exp = parse_experiment(args.config)
    topo = build_topology(exp.topology)
    print("rings=%d nodes=%d bridges=%d"
          % (len(topo.rings), topo.node_count, len(topo.bridges)))
    for r in topo.rings:
        kinds = []
        for pos in range(r.positions):
            kind, idx = r.members[pos]
            kinds.append("%s%d" % ("n" if kind == "node" else "b", idx))
        print("ring %d prefix=%s level=%d lanes=%d hop=%d span=%s [%s]"
              % (r.index, r.prefix, r.level, r.lanes, r.hop_latency,
                 r.node_span, " ".join(kinds)))
    return 0


def build_parser():
    p = argparse.ArgumentParser(
        prog="hringsim",
        description="Deterministic flit-level simulator for deflection-"
                    "routed hierarchical ring networks-on-chip.")
    sub = p.add_subparsers(dest="cmd", required=True)

    pr = sub.add_parser("run", help="single run, CSV row on stdout or --out")
    pr.add_argument("config")
    pr.add_argument("--out", default=None)
    _common_overrides(pr)
    pr.set_defaults(func=cmd_run)

    ps = sub.add_parser("sweep", help="injection rate sweep")
    ps.add_argument("config")
    ps.add_argument("--rates", required=True,
                    help="start:stop:step or comma list")
    ps.add_argument("--jobs", type=int, default=1)
    ps.add_argument("--out", default=None)
    _common_overrides(ps)
    ps.set_defaults(func=cmd_sweep)

    pw = sub.add_parser("worstcase",
                        help="adversarial A/B/C run, per-ring throughput")
    pw.add_argument("config")
    pw.add_argument("--out", default=None)
    _common_overrides(pw)
    pw.set_defaults(func=cmd_worstcase)

    pv = sub.add_parser("verify", help="self checks")
    pv.add_argument("--config", default=None,
                    help="also verify determinism/invariants of this config")
    pv.add_argument("--trials", type=int, default=200,
                    help="randomized drain states to test")
    pv.set_defaults(func=cmd_verify)

    pt = sub.add_parser("topo", help="print the built topology")
    pt.add_argument("config")
    pt.set_defaults(func=cmd_topo)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 4 if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, TopologyError, TrafficError) as e:
        return _fail("config", e, 2)
    except InvariantViolation as e:
        return _fail("invariant", e, 3)


if __name__ == "__main__":
    sys.exit(main())
