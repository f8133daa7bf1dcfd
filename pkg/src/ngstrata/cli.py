"""Command-line interface.

Exit codes: 0 success, 1 semantic failure (cycle, strict-mode rejection,
conflict), 2 usage or parse error.  ``-o`` defaults to standard output and
a ``-`` input reads standard input.
"""

from __future__ import annotations

import argparse
import sys

from . import algebra, reason, stratify, syntax
from .model import NGFamily, iri
from .stratify import CycleError, DuplicateNameError, UnknownNameError, format_cycle
from .syntax import DeleteOp, InsertOp, ParseError, SerializationError

_POLICIES = {
    "left": algebra.ConflictPolicy.KEEP_LEFT,
    "right": algebra.ConflictPolicy.KEEP_RIGHT,
    "drop": algebra.ConflictPolicy.DROP_BOTH,
    "rename": algebra.ConflictPolicy.RENAME_BOTH,
}


def _read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    with open(path, "rb") as f:
        return f.read()


def _write_bytes(path: str | None, data: bytes) -> None:
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as f:
            f.write(data)


def _load_family(path: str) -> NGFamily:
    return syntax.parse_quads(_read_bytes(path))


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ngstrata",
        description="Quad-store families with coherence checking, level "
        "inference, slicing, merging, and rule reasoning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="verify that a document is free of reference cycles")
    p.add_argument("file")

    p = sub.add_parser("levels", help="infer levels and emit an annotated document")
    p.add_argument("file")
    p.add_argument("-o", "--output")

    p = sub.add_parser("slice", help="keep assignments at or below a level")
    p.add_argument("file")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("-o", "--output")

    p = sub.add_parser("merge", help="total merge of two documents under a conflict policy")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--policy", choices=sorted(_POLICIES), required=True)
    p.add_argument("-o", "--output")

    p = sub.add_parser("meet", help="intersection of two documents")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("-o", "--output")

    p = sub.add_parser("reason", help="apply rules, with optional tracking and usage inference")
    p.add_argument("file")
    p.add_argument("--rules", help="rules file")
    p.add_argument("--builtin", action="store_true", help="add the built-in closure rules")
    p.add_argument("--track", metavar="ID", help="record changes under this reasoner IRI")
    p.add_argument("--infer-uses", action="store_true", help="derive reasoner-usage links")
    p.add_argument("-o", "--output")

    p = sub.add_parser("apply", help="replay an operations log against a document")
    p.add_argument("file")
    p.add_argument("opslog")
    p.add_argument("--strict", action="store_true", help="abort on the first rejected operation")
    p.add_argument("-o", "--output")

    p = sub.add_parser("canon", help="canonical serialisation of a document")
    p.add_argument("file")
    p.add_argument("-o", "--output")

    return parser


def _cmd_check(args) -> int:
    report = stratify.check_batch(_load_family(args.file))
    if report.ok:
        print("ok")
        return 0
    print(f"cycle: {format_cycle(report.cycle)}")
    return 1


def _cmd_levels(args) -> int:
    n = _load_family(args.file)
    try:
        levels = stratify.infer_levels(n)
    except CycleError as e:
        print(f"cycle: {format_cycle(e.cycle)}", file=sys.stderr)
        return 1
    _write_bytes(args.output, syntax.serialize_quads(n, levels))
    return 0


def _cmd_slice(args) -> int:
    n = _load_family(args.file)
    try:
        levels = stratify.infer_levels(n)
    except CycleError as e:
        print(f"cycle: {format_cycle(e.cycle)}", file=sys.stderr)
        return 1
    kept = {name: t for name, t in n.items() if levels[name] <= args.level}
    _write_bytes(args.output, syntax.serialize_quads(NGFamily._wrap(kept)))
    return 0


def _cmd_merge(args) -> int:
    merged = algebra.merge(_load_family(args.left), _load_family(args.right), _POLICIES[args.policy])
    _write_bytes(args.output, syntax.serialize_quads(merged))
    return 0


def _cmd_meet(args) -> int:
    result = algebra.meet([_load_family(args.left), _load_family(args.right)])
    _write_bytes(args.output, syntax.serialize_quads(result))
    return 0


def _cmd_reason(args) -> int:
    n = _load_family(args.file)
    rules = []
    if args.rules:
        rules.extend(syntax.parse_rules(_read_bytes(args.rules)))
    if args.builtin:
        rules.extend(reason.builtin_closure_rules())

    track_id = reason.ReasonerId(iri(args.track)) if args.track else None

    def gamma(fam: NGFamily) -> NGFamily:
        return reason.apply(rules, fam, reasoner=track_id)

    if track_id is not None:
        out = reason.with_tracking(track_id, gamma, n)
    else:
        out = gamma(n)
    if args.infer_uses:
        out = reason.infer_uses(out)

    report = stratify.check_batch(out)
    if not report.ok:
        print(f"cycle: {format_cycle(report.cycle)}", file=sys.stderr)
        return 1
    _write_bytes(args.output, syntax.serialize_quads(out))
    return 0


def _cmd_apply(args) -> int:
    n = _load_family(args.file)
    ops = syntax.parse_ops(_read_bytes(args.opslog))
    try:
        store = stratify.order_init(n)
    except CycleError as e:
        print(f"cycle: {format_cycle(e.cycle)}", file=sys.stderr)
        return 1
    for op in ops:
        if isinstance(op, InsertOp):
            try:
                outcome = store.try_insert(op.name, op.triple)
            except DuplicateNameError:
                msg = f"rejected insert {op.name.lexical}: precondition: name already assigned"
                print(msg, file=sys.stderr)
                if args.strict:
                    return 1
                continue
            if not outcome.accepted:
                msg = (
                    f"rejected insert {op.name.lexical}: case (a): "
                    f"cycle: {format_cycle(outcome.cycle)}"
                )
                print(msg, file=sys.stderr)
                if args.strict:
                    return 1
        elif isinstance(op, DeleteOp):
            try:
                store.remove(op.name)
            except UnknownNameError:
                print(f"rejected delete {op.name.lexical}: precondition: unknown name", file=sys.stderr)
                if args.strict:
                    return 1
    _write_bytes(args.output, syntax.serialize_quads(store.family))
    return 0


def _cmd_canon(args) -> int:
    from .model import canonicalize

    _write_bytes(args.output, syntax.serialize_quads(canonicalize(_load_family(args.file))))
    return 0


_COMMANDS = {
    "check": _cmd_check,
    "levels": _cmd_levels,
    "slice": _cmd_slice,
    "merge": _cmd_merge,
    "meet": _cmd_meet,
    "reason": _cmd_reason,
    "apply": _cmd_apply,
    "canon": _cmd_canon,
}


def run_cli(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, SerializationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except algebra.ConflictError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))
