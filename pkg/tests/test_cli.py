import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from agmine import corpus
from agmine.cli import main, read_inputs, write_inputs
from agmine.grammar import parse_grammar

from conftest import REFERENCE_AG, WITNESSES

GOLDEN = Path(__file__).parent / "golden"


def src(name, kind):
    return str(corpus.path(name, kind))


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


@pytest.fixture
def witness_file(tmp_path):
    p = tmp_path / "inputs.txt"
    write_inputs(WITNESSES, p, "lines")
    return str(p)


def test_derive_golden():
    code, out = run("derive", src("number", "ebnf"), "-78", "--program", src("number", "prog"))
    assert code == 0
    parts = out.rstrip("\n").split("\n\n")
    assert [p + "\n" for p in parts] == [(GOLDEN / f).read_text() for f in
                                         ("minus78_derivation.txt", "minus78_parse.txt",
                                          "minus78_mapping.txt")]


def test_fuzz_full_coverage(tmp_path):
    code, out = run("fuzz", src("number", "ebnf"), "--out", str(tmp_path / "in"))
    assert code == 0
    assert "covered=18/18" in out
    assert len(list((tmp_path / "in").iterdir())) >= 1


def test_fuzz_zero_budget():
    code, out = run("fuzz", src("number", "ebnf"), "--max-inputs", "0")
    assert code == 2 and "inputs=0" in out


def test_fuzz_bad_grammar(tmp_path):
    bad = tmp_path / "bad.ebnf"
    bad.write_text("S = 'a'")
    assert run("fuzz", str(bad))[0] == 1


def test_mine_reference_ag(tmp_path, witness_file):
    ag = tmp_path / "number.ag"
    code, out = run("mine", src("number", "ebnf"), src("number", "prog"),
                    "--inputs", witness_file, "--out", str(ag))
    assert code == 0
    assert parse_grammar(ag.read_text()) == parse_grammar(REFERENCE_AG)


def test_mine_skips_rejected_input(tmp_path):
    p = tmp_path / "in.txt"
    write_inputs(WITNESSES + ["x"], p, "lines")
    code, out = run("mine", src("number", "ebnf"), src("number", "prog"),
                    "--inputs", str(p), "--format", "json-lines")
    lines = [json.loads(x) for x in out.splitlines()[:4]]
    assert code == 0
    assert [r["status"] for r in lines] == ["ok", "ok", "ok", "trace-exception"]


def test_mine_mapping_failure_exit_3(tmp_path):
    ag = tmp_path / "list.ag"
    code, out = run("mine", src("list_recursive", "ebnf"), src("list_recursive", "prog"),
                    "--auto-fuzz", "--out", str(ag))
    assert code == 3
    assert "mapping-failed" in out
    assert not ag.exists()


def test_mine_without_inputs():
    assert run("mine", src("number", "ebnf"), src("number", "prog"))[0] == 1


def test_mine_all_inputs_rejected(tmp_path):
    p = tmp_path / "in.txt"
    write_inputs(["x", "-"], p, "lines")
    assert run("mine", src("number", "ebnf"), src("number", "prog"), "--inputs", str(p))[0] == 1


def test_run_program_and_ag(tmp_path):
    ag = tmp_path / "reference.ag"
    ag.write_text(REFERENCE_AG)
    assert run("run-program", src("number", "prog"), "-78") == (0, "-78\n")
    assert run("run-ag", str(ag), "-78") == (0, "-78\n")
    code, out = run("run-ag", str(ag), "x")
    assert code == 1 and out.startswith("!error:")


def test_eval_accuracy(tmp_path):
    ag = tmp_path / "reference.ag"
    ag.write_text(REFERENCE_AG)
    code, out = run("eval", src("number", "ebnf"), src("number", "prog"), str(ag),
                    "--count", "10", "--seed", "3")
    assert code == 0
    assert "accuracy=1.0000" in out


def test_eval_detects_deleted_block(tmp_path):
    ag = tmp_path / "broken.ag"
    ag.write_text(REFERENCE_AG.replace("sem sign = -1 endsem", ""))
    p = tmp_path / "in.txt"
    write_inputs(["-5", "12"], p, "lines")
    code, out = run("eval", src("number", "ebnf"), src("number", "prog"), str(ag),
                    "--inputs", str(p), "--format", "json-lines")
    rows = [json.loads(x) for x in out.splitlines()]
    assert code == 4
    assert rows[-1]["accuracy"] == 0.5
    assert rows[0]["match"] is False and rows[0]["actual"] == "5"


def test_inputs_roundtrip(tmp_path):
    texts = ["a\nb", "", '"q"', "plain"]
    write_inputs(texts, tmp_path / "f.txt", "lines")
    assert read_inputs(tmp_path / "f.txt") == texts
    write_inputs(texts, tmp_path / "d", "files")
    assert read_inputs(tmp_path / "d") == texts


def test_deterministic_mining(tmp_path):
    outs = []
    for k in range(2):
        ag = tmp_path / f"{k}.ag"
        run("mine", src("xml", "ebnf"), src("xml", "prog"), "--auto-fuzz", "--seed", "9",
            "--out", str(ag))
        outs.append(ag.read_bytes())
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "agmine", "run-program",
                           src("number", "prog"), "0686"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "686\n"


def test_usage_error():
    assert run("frobnicate")[0] == 1
