"""Command-line entry point.

Exit codes: 0 success, 2 invalid arguments, 3 internal invariant violation.
Machine formats (json, csv) are a pure function of the flags and the seed.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .audit import full_audit
from .circuits import BranchState, BranchTreeResult, Convention, Meter, Path, branch_input, build, step_exact
from .errors import InvariantViolation
from .outcomes import OutcomeDistribution
from .protocol import Mode, SessionConfig, error_bound, estimate_error_rate, run_session
from .qcore import MAX_QUBITS, GateKind, StateVector, apply_cnot, apply_single, format_ket
from .rng import Purpose, keyed_rng

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 2, 3
FORMATS = ("json", "csv", "text")


class UsageError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("QSIG_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"QSIG_SEED={raw!r} is not an integer") from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dist_text(dist: OutcomeDistribution) -> str:
    return "{" + ", ".join(f"({','.join(k)}): {p:.6g}" for k, p in dist.items()) + "}"


# --- trace --------------------------------------------------------------------

def _op_label(op) -> str:
    if isinstance(op, Meter):
        return f"METER({op.wire},{op.basis.value},{op.label})"
    if hasattr(op, "control"):
        return f"CNOT({op.control},{op.target})"
    return f"{op.kind.value}({op.wire})"


def _path_dict(p: Path) -> dict:
    amps = p.state.amplitudes
    n = p.state.num_qubits
    nz = np.flatnonzero(np.abs(amps) > 1e-12)
    return {
        "outcomes": p.outcomes,
        "probability": p.probability,
        "state": format_ket(p.state),
        "amplitudes": {format(int(i), f"0{n}b"): [float(amps[i].real), float(amps[i].imag)] for i in nz},
    }


def cmd_trace(args) -> str:
    conv = Convention(args.convention.upper())
    circuit = build(args.circuit, conv)
    branch = BranchState(args.branch)
    paths = [Path({}, 1.0, branch_input(branch, circuit.width))]
    steps = []
    for op in circuit.ops:
        paths = step_exact(paths, op)
        steps.append((op, list(paths)))
    final = _final_distribution(circuit, paths)
    if args.format == "json":
        return _dump_json({
            "version": __version__,
            "circuit": args.circuit,
            "convention": conv.value,
            "branch": branch.value,
            "input": format_ket(branch_input(branch, circuit.width)),
            "steps": [{"op": op.to_text(), "paths": [_path_dict(p) for p in ps]} for op, ps in steps],
            "final": final.to_dict(),
        })
    if args.format == "csv":
        rows = []
        for i, (op, ps) in enumerate(steps):
            for p in ps:
                outs = ";".join(f"{k}={v}" for k, v in p.outcomes.items())
                rows.append([i, op.to_text(), outs, repr(p.probability), format_ket(p.state)])
        for k, p in final.items():
            rows.append(["final", "", ",".join(k), repr(p), ""])
        return _dump_csv(["step", "op", "outcomes", "probability", "state"], rows)
    lines = [f"{args.circuit} / {conv.value} / {branch.value}",
             f"input: {format_ket(branch_input(branch, circuit.width))}"]
    for op, ps in steps:
        for p in ps:
            tag = ""
            if p.outcomes:
                outs = ",".join(f"{k}={v}" for k, v in p.outcomes.items())
                tag = f" [{outs} p={p.probability:.6g}]"
            lines.append(f"after {_op_label(op)}{tag}: {format_ket(p.state)}")
    lines.append(f"final: {_dist_text(final)}")
    return "\n".join(lines) + "\n"


def _final_distribution(circuit, paths) -> OutcomeDistribution:
    return BranchTreeResult(circuit, paths).distribution()


# --- audit --------------------------------------------------------------------

def cmd_audit(args):
    if args.shots < 0:
        raise UsageError("--shots must be >= 0")
    report = full_audit(args.shots, args.seed, args.threads, args.k_max)
    if args.format == "json":
        return _dump_json(report)
    if args.format == "csv":
        rows = []
        for t in report["branch_tables"]:
            for b, dist in t["branches"].items():
                for o, p in dist.items():
                    rows.append(["branch_table", t["circuit"], t["convention"], b, o, repr(p)])
        for m in report["match_reports"]:
            for r in m["rows"]:
                rows.append(["match", m["circuit"], m["convention"], r["branch"], "verdict", r["verdict"]])
        for s in report["signaling"]:
            item = f"k={s['k']}"
            rows.append(["signaling", s["circuit"], s["convention"], item, "tv_exact", repr(s["tv_exact"])])
            rows.append(["signaling", s["circuit"], s["convention"], item, "mi_exact", repr(s["mi_exact"])])
            if s["empirical"]:
                rows.append(["signaling", s["circuit"], s["convention"], item, "tv_empirical",
                             repr(s["empirical"]["tv"])])
        rows.append(["reduced_states", "", "", "", "max_abs_diff", repr(report["reduced_states"]["max_abs_diff"])])
        return _dump_csv(["section", "circuit", "convention", "item", "key", "value"], rows)
    lines = [f"audit (shots={args.shots}, seed={args.seed}); claims are {report['claims']['provenance']}"]
    for m in report["match_reports"]:
        verdicts = "  ".join(f"{r['branch']}:{r['verdict']}" for r in m["rows"])
        lines.append(f"  {m['circuit']:<9} {m['convention']:<5} {verdicts}")
    lines.append("signaling (sent=0 vs sent=1):")
    for s in report["signaling"]:
        emp = ""
        if s["empirical"]:
            e = s["empirical"]
            emp = f"  empirical tv={e['tv']:.4g} (5 sigma {5 * e['tv_sigma']:.4g})"
        lines.append(f"  {s['circuit']:<9} {s['convention']:<5} k={s['k']}  tv={s['tv_exact']:.3g}  "
                     f"mi={s['mi_exact']:.3g} bits{emp}")
    lines.append(f"reduced states: max |rho(S1) - rho(S2)| = {report['reduced_states']['max_abs_diff']:.3g}")
    return "\n".join(lines) + "\n"


# --- protocol -----------------------------------------------------------------

def _parse_bits(raw: str) -> list[int]:
    if not raw or any(c not in "01" for c in raw):
        raise UsageError(f"--bits must be a nonempty string over 0/1, got {raw!r}")
    return [int(c) for c in raw]


def cmd_protocol(args):
    bits = _parse_bits(args.bits)
    if args.k < 1:
        raise UsageError("--k must be >= 1")
    if args.trials < 0:
        raise UsageError("--trials must be >= 0")
    config = SessionConfig(k=args.k, convention=Convention(args.convention.upper()),
                           mode=Mode(args.mode), seed=args.seed, threads=args.threads)
    if args.trials:
        results = []
        for sent in sorted(set(bits)):
            est = estimate_error_rate(config, args.decoder, sent, args.trials)
            entry = {"sent": sent, "trials": est.trials, "errors": est.errors, "error_rate": est.rate}
            if args.decoder == 1 and sent == 1:
                bound = error_bound(args.k)
                entry["bound"] = bound
                entry["sigma_at_bound"] = est.sigma(bound)
            results.append(entry)
        payload = {"version": __version__, "config": {**config.to_dict(), "decoder": args.decoder},
                   "trials": results}
        if args.format == "json":
            return _dump_json(payload)
        if args.format == "csv":
            return _dump_csv(["sent", "trials", "errors", "error_rate"],
                             [[r["sent"], r["trials"], r["errors"], repr(r["error_rate"])] for r in results])
        return "".join(f"sent={r['sent']} trials={r['trials']} errors={r['errors']} "
                       f"rate={r['error_rate']:.6g}\n" for r in results)

    transcript = run_session(config, bits, args.decoder)
    payload = {"version": __version__, **transcript.to_dict()}
    if args.format == "json":
        return _dump_json(payload)
    if args.format == "csv":
        rows = []
        for rec in transcript.records:
            for j, p in enumerate(rec.pairs):
                outs = ";".join(f"{k}={v}" for k, v in p.outcomes.items())
                rows.append([rec.index, rec.sent, j, p.alice, p.branch, outs, rec.decoded])
        return _dump_csv(["bit", "sent", "pair", "alice", "branch", "outcomes", "decoded"], rows)
    return (f"sent    {payload['sent']}\ndecoded {payload['decoded']}\n"
            f"errors  {payload['errors']}\n")


# --- bench --------------------------------------------------------------------

def _random_state(n: int, rng) -> StateVector:
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector(v / np.linalg.norm(v))


def _time(fn, reps: int) -> float:
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def cmd_bench(args):
    n = args.qubits
    if not 1 <= n <= MAX_QUBITS:
        raise UsageError(f"--qubits must be in 1..{MAX_QUBITS}")
    if args.repetitions < 1:
        raise UsageError("--repetitions must be >= 1")
    rng = keyed_rng(args.seed, Purpose.BENCH, n)
    state = _random_state(n, rng)
    timings = {}
    for w in sorted({0, n // 2, n - 1}):
        timings[f"H[{w}]"] = _time(lambda: apply_single(state, GateKind.H, w), args.repetitions)
    if n >= 2:
        timings[f"CNOT[0,{n - 1}]"] = _time(lambda: apply_cnot(state, 0, n - 1), args.repetitions)
        timings[f"CNOT[{n - 1},0]"] = _time(lambda: apply_cnot(state, n - 1, 0), args.repetitions)

    s = state
    kinds = [GateKind.H, GateKind.X, GateKind.Z]
    for _ in range(args.gates):
        if n >= 2 and rng.random() < 0.3:
            c, t = rng.choice(n, size=2, replace=False)
            s = apply_cnot(s, int(c), int(t))
        else:
            s = apply_single(s, kinds[int(rng.integers(3))], int(rng.integers(n)))
    drift = abs(s.norm() - 1.0)
    if drift >= 1e-9:
        raise InvariantViolation("norm_drift", f"{drift:.3e} after {args.gates} gates")

    dim = 1 << n
    payload = {
        "version": __version__,
        "qubits": n,
        "amplitudes": dim,
        "repetitions": args.repetitions,
        "kernels": {k: {"seconds": t, "amplitudes_per_second": dim / t if t > 0 else None}
                    for k, t in timings.items()},
        "random_gates": args.gates,
        "norm_drift": drift,
    }
    if args.format == "json":
        return _dump_json(payload)
    if args.format == "csv":
        return _dump_csv(["kernel", "seconds", "amplitudes_per_second"],
                         [[k, repr(v["seconds"]), repr(v["amplitudes_per_second"])]
                          for k, v in payload["kernels"].items()])
    lines = [f"{n} qubits ({dim} amplitudes), best of {args.repetitions}"]
    for k, v in payload["kernels"].items():
        lines.append(f"  {k:<12} {v['seconds'] * 1e3:9.3f} ms  {v['amplitudes_per_second']:.3e} amp/s")
    lines.append(f"norm drift after {args.gates} random gates: {drift:.3e}")
    return "\n".join(lines) + "\n"


# --- circuit dump ------------------------------------------------------------

def cmd_circuit(args):
    return build(args.circuit, Convention(args.convention.upper())).to_text()


def _common(default_format: str) -> argparse.ArgumentParser:
    # a fresh parent per subcommand: argparse shares parent actions, so
    # set_defaults on one subparser would leak into the others
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=FORMATS, default=default_format)
    common.add_argument("--seed", type=int, default=None,
                        help="RNG seed (default: $QSIG_SEED or 0)")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads; never changes output")
    return common


def build_parser() -> argparse.ArgumentParser:

    p = argparse.ArgumentParser(prog="qsig", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    circuits = ["decoder1", "decoder2"]
    conventions = [c.value.lower() for c in Convention]

    t = sub.add_parser("trace", parents=[_common("text")], help="op-by-op exact trace of one branch")
    t.add_argument("--circuit", choices=circuits, required=True)
    t.add_argument("--branch", choices=[b.value for b in BranchState], required=True)
    t.add_argument("--convention", choices=conventions, default="gh")
    t.set_defaults(func=cmd_trace)

    a = sub.add_parser("audit", parents=[_common("json")], help="branch tables, claim verdicts, signaling metrics")
    a.add_argument("--shots", type=int, default=0, help="0 = exact only")
    a.add_argument("--k-max", type=int, default=4)
    a.set_defaults(func=cmd_audit)

    pr = sub.add_parser("protocol", parents=[_common("json")], help="run a protocol session")
    pr.add_argument("--bits", required=True)
    pr.add_argument("--k", type=int, default=1)
    pr.add_argument("--decoder", type=int, choices=[1, 2], default=1)
    pr.add_argument("--convention", choices=conventions, default="gh")
    pr.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.PHYSICAL.value)
    pr.add_argument("--trials", type=int, default=0,
                    help="estimate error rates over this many sends of each distinct bit")
    pr.set_defaults(func=cmd_protocol)

    b = sub.add_parser("bench", parents=[_common("text")], help="gate kernel timings")
    b.add_argument("--qubits", type=int, default=20)
    b.add_argument("--repetitions", type=int, default=5)
    b.add_argument("--gates", type=int, default=1000)
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("circuit", help="dump a circuit in the line format")
    c.add_argument("--circuit", choices=circuits, required=True)
    c.add_argument("--convention", choices=conventions, default="gh")
    c.set_defaults(func=cmd_circuit)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse: 2 on bad flags, 0 on --help
        return int(e.code or 0)
    try:
        if getattr(args, "seed", 0) is None:
            args.seed = _default_seed()
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be >= 1")
        if getattr(args, "seed", 0) < 0:
            raise UsageError("--seed must be >= 0")
        out = args.func(args)
    except UsageError as e:
        print(f"qsig: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as e:
        print(f"qsig: invariant violated: {e.name}: {e}", file=sys.stderr)
        return EXIT_INVARIANT
    sys.stdout.write(out)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
