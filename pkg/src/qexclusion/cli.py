"""Command-line front end.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 indeterminate
verdict, 4 counterexample found by ``scan``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import os
import sys

import numpy as np

from . import antidist, codes, experiments, protocols
from .numerics import RngStream

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_INDETERMINATE = 3
EXIT_COUNTEREXAMPLE = 4

SEED_ENV = "ANTIDIST_SEED"


class CliError(Exception):
    pass


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                   help=f"64-bit seed (default: ${SEED_ENV} or 0)")
    g.add_argument("--out", default=argparse.SUPPRESS, help="output path (default: stdout)")
    g.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS,
                   help="output format (default: json; csv for scan)")
    g.add_argument("--tolerance", action="append", metavar="KEY=VALUE", default=argparse.SUPPRESS,
                   help="override an SDP tolerance, e.g. primal_threshold=1e-7 (repeatable)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="qexclusion", parents=[common],
                                     description="Antidistinguishability, spherical codes and exclusion protocols.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p_codes = sub.add_parser("codes", help="generate or analyze spherical codes")
    csub = p_codes.add_subparsers(dest="kind", required=True, metavar="KIND")
    csub.add_parser("sic3", parents=[common], help="nine-vector SIC in d=3")
    p = csub.add_parser("mub", parents=[common], help="union of d+1 MUBs, d prime")
    p.add_argument("d", type=int)
    p = csub.add_parser("missing-basis", parents=[common], help="d states each missing one basis vector")
    p.add_argument("d", type=int)
    p = csub.add_parser("rademacher", parents=[common], help="greedy random sign-vector code")
    p.add_argument("d", type=int)
    p.add_argument("n", type=int)
    p.add_argument("delta", type=float)
    p.add_argument("--max-attempts", type=int, default=None)
    p = csub.add_parser("haar", parents=[common], help="n Haar-random states")
    p.add_argument("d", type=int)
    p.add_argument("n", type=int)
    p = csub.add_parser("analyze", parents=[common], help="coherence and Welch bound of a code file")
    p.add_argument("file")

    p_ad = sub.add_parser("antidist", help="antidistinguishability checks")
    asub = p_ad.add_subparsers(dest="action", required=True, metavar="ACTION")
    p = asub.add_parser("check", parents=[common], help="run the exclusion SDP on states of a code file")
    p.add_argument("file")
    sel = p.add_mutually_exclusive_group(required=True)
    sel.add_argument("--indices", help="comma-separated 1-based indices")
    sel.add_argument("--all-triples", action="store_true", help="one verdict per triple")
    p.add_argument("--certificates", action="store_true", help="include POVM and dual matrices")

    p = sub.add_parser("protocol", parents=[common], help="simulate a protocol for the exclusion relation")
    p.add_argument("kind", choices=["quantum", "two-way", "bounded"])
    p.add_argument("target", help="code file, or |S| for classical protocols")
    p.add_argument("--i", type=int, default=None, help="Alice's input")
    p.add_argument("--triple", default=None, help="Bob's input, e.g. 1,2,3")
    p.add_argument("--trials", type=int, default=None,
                   help="random instances (or shared-randomness draws for bounded)")
    p.add_argument("--K", type=int, default=4, help="number of blocks for the bounded protocol")
    p.add_argument("--exhaustive", action="store_true", help="sweep every input pair")

    p = sub.add_parser("bounds", parents=[common], help="communication bounds")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--size", type=int, default=None)

    p = sub.add_parser("scan", parents=[common], help="Haar-random threshold scan")
    p.add_argument("--dims", default="2,3,4,5")
    p.add_argument("--trials", type=int, default=experiments.DEFAULT_TRIALS)
    p.add_argument("--workers", type=int, default=1)
    return parser


def _resolve_globals(args, parser):
    if not hasattr(args, "seed"):
        env = os.environ.get(SEED_ENV)
        try:
            args.seed = int(env) if env else 0
        except ValueError:
            parser.error(f"${SEED_ENV} must be an integer, got {env!r}")
    if not 0 <= args.seed < 2**64:
        parser.error("--seed must be a 64-bit unsigned integer")
    args.out = getattr(args, "out", None)
    args.format = getattr(args, "format", None)
    overrides = {}
    fields = {f.name: f.type for f in dataclasses.fields(antidist.Tolerances)}
    for item in getattr(args, "tolerance", []) or []:
        key, sep, val = item.partition("=")
        if not sep or key not in fields:
            parser.error(f"--tolerance expects KEY=VALUE with KEY in {sorted(fields)}")
        try:
            overrides[key] = int(val) if key == "max_iterations" else float(val)
        except ValueError:
            parser.error(f"bad tolerance value {val!r}")
    args.tolerances = dataclasses.replace(antidist.DEFAULT_TOLERANCES, **overrides)


def _emit(args, text: str):
    if not text.endswith("\n"):
        text += "\n"
    if args.out:
        experiments.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)


def _parse_ints(text: str, what: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise CliError(f"{what} must be comma-separated integers, got {text!r}")


def _load(path) -> codes.SphericalCode:
    try:
        return codes.load_code(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}")


def cmd_codes(args) -> int:
    rng = RngStream(args.seed)
    if args.kind == "analyze":
        report = codes.analyze(_load(args.file))
        return _write_table(args, [report.to_dict()])
    if args.kind == "sic3":
        code = codes.sic3()
    elif args.kind == "mub":
        code = codes.mub_union(args.d)
    elif args.kind == "missing-basis":
        code = codes.missing_basis_family(args.d)
    elif args.kind == "rademacher":
        code = codes.random_rademacher_code(args.d, args.n, args.delta, rng, args.max_attempts)
    else:
        code = codes.haar_random_set(args.d, args.n, rng)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "component", "re", "im"])
        for i, v in enumerate(code.vectors, 1):
            for c, z in enumerate(v, 1):
                w.writerow([i, c, repr(float(z.real)), repr(float(z.imag))])
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(code.to_dict()))
    return EXIT_OK


def _write_table(args, rows: list) -> int:
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _emit(args, buf.getvalue())
    else:
        _emit(args, json.dumps(rows[0] if len(rows) == 1 else rows, indent=1))
    return EXIT_OK


def cmd_antidist(args) -> int:
    code = _load(args.file)
    tol = args.tolerances
    if args.all_triples:
        selections = list(itertools.combinations(range(1, len(code) + 1), 3))
    else:
        idx = _parse_ints(args.indices, "--indices")
        if len(idx) < 2 or len(set(idx)) != len(idx):
            raise CliError("--indices needs at least two distinct indices")
        for i in idx:
            if not 1 <= i <= len(code):
                raise CliError(f"index {i} outside [1, {len(code)}]")
        selections = [tuple(idx)]
    rows = []
    indeterminate = False
    for sel in selections:
        res = antidist.exclusion_sdp(code.states(sel), tol)
        indeterminate |= res.status is antidist.Status.INDETERMINATE
        row = {"indices": list(sel)}
        row.update(res.to_dict(certificates=args.certificates))
        rows.append(row)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["indices", "status", "primal_value", "dual_value", "duality_gap"])
        for r in rows:
            w.writerow([" ".join(map(str, r["indices"])), r["status"], repr(r["primal_value"]),
                        repr(r["dual_value"]), repr(r["duality_gap"])])
        _emit(args, buf.getvalue())
    elif args.all_triples:
        _emit(args, "\n".join(json.dumps(r) for r in rows))
    else:
        _emit(args, json.dumps(rows[0], indent=1))
    return EXIT_INDETERMINATE if indeterminate else EXIT_OK


def _protocol_inputs(args, size: int, rng):
    gen = rng.generator()
    if args.exhaustive:
        return protocols.all_instances(size)
    if args.i is not None or args.triple is not None:
        if args.i is None or args.triple is None:
            raise CliError("--i and --triple must be given together")
        return [protocols.RelationInstance(size, args.i, tuple(_parse_ints(args.triple, "--triple")))]
    n = args.trials if args.trials is not None else 100
    out = []
    for _ in range(n):
        triple = tuple(int(x) + 1 for x in gen.choice(size, size=3, replace=False))
        out.append(protocols.RelationInstance(size, int(gen.integers(1, size + 1)), triple))
    return out


def _size_of(target: str) -> tuple:
    try:
        return int(target), None
    except ValueError:
        code = _load(target)
        return len(code), code


def cmd_protocol(args) -> int:
    rng = RngStream(args.seed)
    size, code = _size_of(args.target)
    if size < 3:
        raise CliError("|S| must be at least 3")
    transcripts = []
    summary = {"protocol": args.kind, "size": size}
    if args.kind == "quantum":
        if code is None:
            raise CliError("the quantum protocol needs a code file")
        cache = protocols.PovmCache(args.tolerances)
        worst = 0.0
        violations = 0
        count = 0
        for t, inst in enumerate(_protocol_inputs(args, size, rng.child(0))):
            inst = protocols.RelationInstance.on_code(code, inst.alice_input, inst.bob_input)
            probs = protocols.quantum_one_way_exact(inst, cache)
            p_alice = probs.get(inst.alice_input, 0.0)
            worst = max(worst, p_alice)
            violations += p_alice > protocols.ZERO_ERROR_TOL
            count += 1
            if not args.exhaustive:
                transcripts.append(protocols.quantum_one_way_sample(inst, rng.child(1).child(t), cache))
        summary.update(instances=count, violations=int(violations), max_alice_probability=worst,
                       bits=protocols.qubit_cost(code.dimension), unit="qubits")
    elif args.kind == "two-way":
        bits = protocols.two_way_bits(size)
        errors = count = worst_bits = 0
        for inst in _protocol_inputs(args, size, rng.child(0)):
            tr = protocols.two_way_protocol(inst)
            errors += not tr.relation_satisfied
            worst_bits = max(worst_bits, tr.total_bits)
            count += 1
            if not args.exhaustive:
                transcripts.append(tr)
        summary.update(instances=count, errors=errors, error_rate=errors / count,
                       bits=worst_bits, predicted_bits=bits, unit="bits")
    else:
        K = args.K
        if args.exhaustive:
            pairs = [(i, t) for t in itertools.combinations(range(1, size + 1), 3) for i in t]
            draws = args.trials if args.trials is not None else 1000
            rates = protocols.bounded_error_rates(size, K, pairs, draws, rng.child(2))
            k = int(np.argmax(rates))
            summary.update(pairs=len(pairs), draws=draws, worst_case_error=float(rates[k]),
                           worst_pair={"i": pairs[k][0], "triple": list(pairs[k][1])},
                           reference=1 / K**2)
        else:
            errors = count = 0
            for t, inst in enumerate(_protocol_inputs(args, size, rng.child(0))):
                tr = protocols.bounded_error_one_way(inst, K, rng.child(2).child(t))
                errors += not tr.relation_satisfied
                count += 1
                transcripts.append(tr)
            summary.update(instances=count, errors=errors, error_rate=errors / count)
        summary.update(bits=int(np.ceil(np.log2(K))), unit="bits", K=K)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["protocol", "i", "triple", "output", "total_bits", "relation_satisfied"])
        for tr in transcripts:
            w.writerow([tr.protocol.value, tr.inputs.alice_input, " ".join(map(str, tr.inputs.bob_input)),
                        tr.output, tr.total_bits, tr.relation_satisfied])
        _emit(args, buf.getvalue())
        sys.stderr.write(json.dumps(summary) + "\n")
    else:
        _emit(args, json.dumps({"summary": summary, "transcripts": [t.to_dict() for t in transcripts]}, indent=1))
    return EXIT_OK


def cmd_bounds(args) -> int:
    if args.dim is None and args.size is None:
        raise argparse.ArgumentTypeError("bounds needs --dim and/or --size")
    out = {}
    if args.dim is not None:
        if args.dim < 1:
            raise CliError("--dim must be positive")
        out["dim"] = args.dim
        out["cap_bound_size"] = codes.cap_bound_size(args.dim)
        out["cap_lower_bound_bits"] = protocols.cap_lower_bound_bits(args.dim)
        out["quantum_qubits"] = protocols.qubit_cost(args.dim)
    size = args.size if args.size is not None else out.get("cap_bound_size")
    if size is not None and size >= 2:
        out["size"] = size
        out["one_way_lower_bound_bits"] = protocols.one_way_lower_bound_bits(size)
        out["min_message_values"] = -(-size // 2)
        if args.dim is not None:
            out["welch_rhs"] = codes.welch_rhs(size, args.dim)
    elif args.size is not None:
        raise CliError("--size must be at least 2")
    return _write_table(args, [out])


def cmd_scan(args) -> int:
    dims = _parse_ints(args.dims, "--dims")
    cfg = experiments.ScanConfig(dims=tuple(dims), trials_per_dim=args.trials, seed=args.seed,
                                 tolerances=args.tolerances)
    records = experiments.conjecture_scan(cfg, workers=max(1, args.workers))
    fmt = args.format or "csv"
    if args.out and fmt == "csv":
        experiments.emit_records(records, args.out)
    elif fmt == "csv":
        _emit(args, experiments.records_to_csv(records))
    else:
        _emit(args, json.dumps([r.to_dict() for r in records], indent=1))
    found = sum(len(r.counterexamples) for r in records)
    if found:
        sys.stderr.write(f"{found} counterexample(s) found\n")
        return EXIT_COUNTEREXAMPLE
    return EXIT_OK


COMMANDS = {
    "codes": cmd_codes,
    "antidist": cmd_antidist,
    "protocol": cmd_protocol,
    "bounds": cmd_bounds,
    "scan": cmd_scan,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _resolve_globals(args, parser)
    try:
        return COMMANDS[args.command](args)
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"qexclusion: error: {exc}\n")
        return EXIT_USAGE
    except (CliError, codes.CodeError, protocols.ProtocolError, ValueError, OSError) as exc:
        sys.stderr.write(f"qexclusion: {exc}\n")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
