"""End-to-end command-line behaviour and exit codes."""

import io
import sys

import pytest

from ngstrata import Iri, parse_quads, support
from ngstrata.cli import run_cli

REIFIED = "<y> <b> <c> <x> .\n<a> <b> <c> <y> .\n"
CIRCULAR = "<y> <type> <statement> <x> .\n<x> <type> <statement> <y> .\n"


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def run(capsys, argv):
    code = run_cli(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCheck:
    def test_ok(self, tmp_path, capsys):
        code, out, _ = run(capsys, ["check", write(tmp_path, "f.nq", REIFIED)])
        assert code == 0 and out.strip() == "ok"

    def test_circular_document(self, tmp_path, capsys):
        code, out, _ = run(capsys, ["check", write(tmp_path, "f.nq", CIRCULAR)])
        assert code == 1
        assert out.strip() == "cycle: x -> y -> x"

    def test_parse_error_is_usage_class(self, tmp_path, capsys):
        code, _, err = run(capsys, ["check", write(tmp_path, "f.nq", "garbage\n")])
        assert code == 2 and "line 1" in err

    def test_missing_file(self, capsys):
        code, _, err = run(capsys, ["check", "/nonexistent/file.nq"])
        assert code == 2 and err

    def test_usage_error(self, capsys):
        code, _, _ = run(capsys, ["frobnicate"])
        assert code == 2


class TestLevels:
    def test_annotated_output(self, tmp_path, capsys):
        out_path = tmp_path / "out.nq"
        code, _, _ = run(capsys, ["levels", write(tmp_path, "f.nq", REIFIED), "-o", str(out_path)])
        assert code == 0
        lines = out_path.read_text().splitlines()
        assert lines[0] == "# levels: a=0; b=0; c=0; x=2; y=1"
        assert parse_quads(out_path.read_bytes()) == parse_quads(REIFIED.encode())

    def test_stdout_default(self, tmp_path, capsys):
        code, out, _ = run(capsys, ["levels", write(tmp_path, "f.nq", REIFIED)])
        assert code == 0 and out.startswith("# levels: ")

    def test_cycle_exit_1(self, tmp_path, capsys):
        code, _, err = run(capsys, ["levels", write(tmp_path, "f.nq", CIRCULAR)])
        assert code == 1 and "cycle:" in err


class TestSlice:
    DOC = (
        "<t1> <p> <t2> <d1> .\n"
        "<t2> <p> <t3> <d2> .\n"
        "<d1> <about> <t1> <m1> .\n"
        "<m1> <about> <d1> <mm1> .\n"
    )

    def test_ground_stratum(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, ["slice", write(tmp_path, "f.nq", self.DOC), "--level", "1"]
        )
        assert code == 0
        kept = support(parse_quads(out.encode()))
        assert kept == {Iri("d1"), Iri("d2")}

    def test_level_two(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, ["slice", write(tmp_path, "f.nq", self.DOC), "--level", "2"]
        )
        assert code == 0
        assert support(parse_quads(out.encode())) == {Iri("d1"), Iri("d2"), Iri("m1")}

    def test_cycle_exit_1(self, tmp_path, capsys):
        code, _, err = run(
            capsys, ["slice", write(tmp_path, "f.nq", CIRCULAR), "--level", "1"]
        )
        assert code == 1 and "cycle:" in err

    def test_ground_slice_strips_tracking_tags(self, tmp_path, capsys):
        # Run a tracked reasoner to add tag meta-data, then slice the result
        # down to the ground stratum: tags gone, data kept.
        doc = write(tmp_path, "f.nq", "<a> <b> <c> <n1> .\n<c> <b> <d> <n2> .\n"
                    "<b> <predicate> <transitive> <n3> .\n")
        tracked = tmp_path / "tracked.nq"
        code, _, _ = run(
            capsys,
            ["reason", doc, "--builtin", "--track", "urn:r:closure", "-o", str(tracked)],
        )
        assert code == 0
        tagged = parse_quads(tracked.read_bytes())
        assert any(t.s == Iri("urn:r:closure") for t in tagged.triples())
        code, out, _ = run(capsys, ["slice", str(tracked), "--level", "1"])
        assert code == 0
        ground = parse_quads(out.encode())
        assert {Iri("n1"), Iri("n2"), Iri("n3")} <= support(ground)
        assert not any(t.s == Iri("urn:r:closure") for t in ground.triples())


class TestMergeMeet:
    LEFT = '<a> <b> <c> <u> .\n<d> <e> <f> <v> .\n'
    RIGHT = '<a2> <b> <c> <u> .\n<d> <e> <f> <v> .\n'

    def test_policy_left(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            ["merge", write(tmp_path, "l.nq", self.LEFT), write(tmp_path, "r.nq", self.RIGHT), "--policy", "left"],
        )
        assert code == 0
        assert "<a> <b> <c> <u> ." in out and "<a2>" not in out

    def test_policy_drop(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            ["merge", write(tmp_path, "l.nq", self.LEFT), write(tmp_path, "r.nq", self.RIGHT), "--policy", "drop"],
        )
        assert code == 0
        kept = support(parse_quads(out.encode()))
        assert kept == {Iri("v")}

    def test_policy_rename_doubles_conflicts(self, tmp_path, capsys):
        code, out, _ = run(
            capsys,
            ["merge", write(tmp_path, "l.nq", self.LEFT), write(tmp_path, "r.nq", self.RIGHT), "--policy", "rename"],
        )
        assert code == 0
        kept = support(parse_quads(out.encode()))
        assert Iri("u#~1") in kept and Iri("u#~2") in kept and Iri("u") not in kept

    def test_meet(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, ["meet", write(tmp_path, "l.nq", self.LEFT), write(tmp_path, "r.nq", self.RIGHT)]
        )
        assert code == 0
        assert support(parse_quads(out.encode())) == {Iri("v")}


class TestReason:
    def test_builtin_transitive_closure(self, tmp_path, capsys):
        doc = (
            "<a> <b> <c> <n1> .\n"
            "<c> <b> <d> <n2> .\n"
            "<b> <predicate> <transitive> <n3> .\n"
        )
        code, out, _ = run(capsys, ["reason", write(tmp_path, "f.nq", doc), "--builtin"])
        assert code == 0
        assert "<a> <b> <d>" in out

    def test_rules_file(self, tmp_path, capsys):
        doc = "<a> <knows> <c> <n1> .\n"
        rules = "(?a,<knows>,?c) => (?c,<known-by>,?a)\n"
        code, out, _ = run(
            capsys,
            ["reason", write(tmp_path, "f.nq", doc), "--rules", write(tmp_path, "r.rules", rules)],
        )
        assert code == 0 and "<c> <known-by> <a>" in out

    def test_track_and_infer_uses(self, tmp_path, capsys):
        doc = "<a> <b> <c> <n1> .\n<c> <b> <d> <n2> .\n<b> <predicate> <transitive> <n3> .\n"
        code, out, _ = run(
            capsys,
            [
                "reason",
                write(tmp_path, "f.nq", doc),
                "--builtin",
                "--track",
                "urn:reasoner:closure",
                "--infer-uses",
            ],
        )
        assert code == 0
        assert "<urn:reasoner:closure> <new>" in out

    def test_cyclic_input_exit_1(self, tmp_path, capsys):
        code, _, err = run(capsys, ["reason", write(tmp_path, "f.nq", CIRCULAR), "--builtin"])
        assert code == 1 and "cycle" in err

    def test_bad_rules_exit_2(self, tmp_path, capsys):
        doc = "<a> <b> <c> <n1> .\n"
        code, _, err = run(
            capsys,
            [
                "reason",
                write(tmp_path, "f.nq", doc),
                "--rules",
                write(tmp_path, "r.rules", "(?a,?b,?c) => (?x,?b,?c)\n"),
            ],
        )
        assert code == 2 and "unbound" in err


class TestApply:
    BASE = "<a> <b> <c> <x> .\n"

    def test_replay_inserts(self, tmp_path, capsys):
        ops = "+ <y> <x> <b> <c> .\n"
        code, out, _ = run(
            capsys,
            ["apply", write(tmp_path, "f.nq", self.BASE), write(tmp_path, "ops.log", ops)],
        )
        assert code == 0
        assert support(parse_quads(out.encode())) == {Iri("x"), Iri("y")}

    def test_rejected_insert_reported_and_skipped(self, tmp_path, capsys):
        ops = "+ <a> <x> <p> <q> .\n+ <z> <a> <b> <c> .\n"
        code, out, err = run(
            capsys,
            ["apply", write(tmp_path, "f.nq", self.BASE), write(tmp_path, "ops.log", ops)],
        )
        assert code == 0
        assert "rejected insert a: case (a): cycle: a -> x -> a" in err
        assert support(parse_quads(out.encode())) == {Iri("x"), Iri("z")}

    def test_strict_aborts(self, tmp_path, capsys):
        ops = "+ <a> <x> <p> <q> .\n"
        code, _, err = run(
            capsys,
            ["apply", write(tmp_path, "f.nq", self.BASE), write(tmp_path, "ops.log", ops), "--strict"],
        )
        assert code == 1 and "case (a)" in err

    def test_duplicate_precondition(self, tmp_path, capsys):
        ops = "+ <x> <a> <b> <c> .\n"
        code, _, err = run(
            capsys,
            ["apply", write(tmp_path, "f.nq", self.BASE), write(tmp_path, "ops.log", ops)],
        )
        assert code == 0 and "precondition" in err

    def test_deletes_and_unknown_delete(self, tmp_path, capsys):
        ops = "- <x> .\n- <nope> .\n"
        code, out, err = run(
            capsys,
            ["apply", write(tmp_path, "f.nq", self.BASE), write(tmp_path, "ops.log", ops)],
        )
        assert code == 0
        assert "unknown name" in err
        assert parse_quads(out.encode()) == parse_quads(b"")

    def test_cyclic_base_document(self, tmp_path, capsys):
        code, _, err = run(
            capsys,
            ["apply", write(tmp_path, "f.nq", CIRCULAR), write(tmp_path, "ops.log", "")],
        )
        assert code == 1 and "cycle" in err


class TestStrictAgreesWithFinalCheck:
    def test_strict_success_iff_final_document_checks(self, tmp_path, capsys):
        # For deletion-free logs, replaying strictly succeeds exactly when
        # the naively assembled final document passes the batch check.
        import random

        rng = random.Random(17)
        agree = 0
        for case in range(40):
            names = [f"n{i}" for i in range(8)]
            terms = names + ["t0", "t1"]
            base_lines = ["<t0> <p> <t1> <n0> ."]
            ops_lines = []
            final_lines = list(base_lines)
            used = {"n0"}
            for _ in range(6):
                name = rng.choice(names)
                if name in used:
                    continue
                used.add(name)
                s, o = rng.choice(terms), rng.choice(terms)
                ops_lines.append(f"+ <{name}> <{s}> <p> <{o}> .")
                final_lines.append(f"<{s}> <p> <{o}> <{name}> .")
            doc = write(tmp_path, f"f{case}.nq", base_lines[0] + "\n")
            log = write(tmp_path, f"ops{case}.log", "\n".join(ops_lines) + "\n")
            final = write(tmp_path, f"final{case}.nq", "\n".join(final_lines) + "\n")
            apply_code = run_cli(["apply", doc, log, "--strict", "-o", str(tmp_path / "out.nq")])
            check_code = run_cli(["check", final])
            capsys.readouterr()
            assert (apply_code == 0) == (check_code == 0)
            agree += 1
        assert agree == 40


class TestCanon:
    def test_sorted_deterministic(self, tmp_path, capsys):
        doc = "<d> <e> <f> <z> .\n<a> <b> <c> <m> .\n"
        code, out, _ = run(capsys, ["canon", write(tmp_path, "f.nq", doc)])
        assert code == 0
        assert out.splitlines() == ["<a> <b> <c> <m> .", "<d> <e> <f> <z> ."]


class TestStdinStdout:
    def test_dash_reads_stdin(self, capsys, monkeypatch):
        stdin = io.TextIOWrapper(io.BytesIO(REIFIED.encode()), encoding="utf-8")
        monkeypatch.setattr(sys, "stdin", stdin)
        code = run_cli(["check", "-"])
        captured = capsys.readouterr()
        assert code == 0 and captured.out.strip() == "ok"
