from __future__ import annotations

import json
import os
import subprocess
import sys

from koko.cli import main
from koko.engine import run_query
from koko.parser import parse_query

from .conftest import data_path

EX31 = data_path("corpus", "ex31.tsv")
EX21 = data_path("queries", "ex21.koko")


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cmd_index_and_query(tmp_path, capsys):
    idx = str(tmp_path / "idx")
    code, out, err = run_cli(["index", "--corpus", EX31, "--out", idx], capsys)
    assert code == 0
    assert "pl nodes" in out
    assert os.path.exists(os.path.join(idx, "manifest.json"))
    code, out, err = run_cli(
        ["query", "--query", EX21, "--corpus", EX31, "--index", idx], capsys
    )
    assert code == 0
    rows = [json.loads(line) for line in out.strip().splitlines()]
    assert rows[0]["values"]["e"] == "chocolate ice cream"
    assert rows[0]["values"]["d"] == "a chocolate ice cream, which was delicious"


def test_cmd_query_builds_index_on_the_fly(capsys):
    code, out, _ = run_cli(["query", "--query", EX21, "--corpus", EX31], capsys)
    assert code == 0 and "chocolate ice cream" in out


def test_query_output_deterministic_across_jobs(capsys):
    _, out1, _ = run_cli(["query", "--query", EX21, "--corpus", EX31, "--jobs", "1"], capsys)
    _, out4, _ = run_cli(["query", "--query", EX21, "--corpus", EX31, "--jobs", "4"], capsys)
    assert out1 == out4


def test_query_tsv_format(capsys):
    code, out, _ = run_cli(
        ["query", "--query", EX21, "--corpus", EX31, "--format", "tsv"], capsys
    )
    assert code == 0
    header = out.splitlines()[0].split("\t")
    assert header == ["sid", "e", "d"]


def test_malformed_corpus_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.tsv"
    bad.write_text("0\t0\tonly\tfour\tcols\n")
    code, _, err = run_cli(["index", "--corpus", str(bad), "--out", str(tmp_path / "i")], capsys)
    assert code == 2 and "columns" in err


def test_bad_query_exits_3(tmp_path, capsys):
    q = tmp_path / "bad.koko"
    q.write_text('extract v:Str from "x" if (/ROOT:{ v = //verb )')
    code, _, err = run_cli(["query", "--query", str(q), "--corpus", EX31], capsys)
    assert code == 3 and "error" in err


def test_missing_dictionary_exits_3(tmp_path, capsys):
    q = tmp_path / "d.koko"
    q.write_text(
        'extract e:Entity from "x" if ()\n'
        'satisfying e (str(e) in dict("Nowhere") {1}) with threshold 0\n'
    )
    code, _, err = run_cli(["query", "--query", str(q), "--corpus", EX31], capsys)
    assert code == 3 and "Nowhere" in err


def test_stale_index_fingerprint_exits_2(tmp_path, capsys):
    idx = str(tmp_path / "idx")
    assert run_cli(["index", "--corpus", EX31, "--out", idx], capsys)[0] == 0
    other = tmp_path / "other.tsv"
    other.write_text("0\t0\thi\tintj\troot\t-1\tO\n")
    code, _, err = run_cli(
        ["query", "--query", EX21, "--corpus", str(other), "--index", idx], capsys
    )
    assert code == 2 and "fingerprint" in err


def test_explain_normalize_golden(capsys):
    code, out, _ = run_cli(
        ["explain", "--query", EX21, "--corpus", EX31, "--stage", "normalize"], capsys
    )
    assert code == 0
    assert out == (
        "variables:\n"
        "  e: entity Entity\n"
        "  a: node //verb\n"
        "  b: node //verb/dobj\n"
        '  c: node //verb/dobj//"delicious"\n'
        "  d: subtree(b)\n"
        "constraints:\n"
        "  (a parentOf b)\n"
        "  (b ancestorOf c)\n"
        "  (b) in (e)\n"
        "horizontal:\n"
        "  (none)\n"
    )


def test_explain_dpli_prints_patterns(capsys):
    q = data_path("queries", "ex41.koko")
    code, out, _ = run_cli(["explain", "--query", q, "--corpus", EX31, "--stage", "dpli"], capsys)
    assert code == 0
    assert "//*/dobj//*" in out
    assert "//verb/*//*" in out
    assert '//"ate"/*//"delicious"' in out


def test_explain_gsp_prints_costs_and_counts(capsys):
    q = data_path("queries", "ex41.koko")
    code, out, _ = run_cli(["explain", "--query", q, "--corpus", EX31, "--stage", "gsp"], capsys)
    assert code == 0
    assert "loop iterations:" in out


def test_explain_satisfy_prints_evidence(tmp_path, capsys):
    q = tmp_path / "s.koko"
    q.write_text(
        'extract e:Entity from "x" if ()\n'
        'satisfying e (str(e) contains "cheesecake" {1}) with threshold 0.5\n'
    )
    code, out, _ = run_cli(
        ["explain", "--query", str(q), "--corpus", EX31, "--stage", "satisfy",
         "--value", "cheesecake"],
        capsys,
    )
    assert code == 0
    assert "total 1" in out and "pass" in out


def test_verify_ok(capsys):
    code, out, _ = run_cli(["verify", "--query", EX21, "--corpus", EX31], capsys)
    assert code == 0 and "agree" in out


def test_verify_all_fixture_queries(capsys):
    from .conftest import QUERY_FIXTURES

    for name in QUERY_FIXTURES:
        if name == "fig9_cafes":
            continue  # needs the Location dictionary, exercised below
        q = data_path("queries", f"{name}.koko")
        code, out, _ = run_cli(["verify", "--query", q, "--corpus", EX31], capsys)
        assert code == 0, name


def test_verify_fig9_with_dictionary(tmp_path, capsys):
    loc = tmp_path / "loc.txt"
    loc.write_text("Portland\n")
    q = data_path("queries", "fig9_cafes.koko")
    code, out, _ = run_cli(
        ["verify", "--query", q, "--corpus", EX31, "--dict", f"Location={loc}"], capsys
    )
    assert code == 0


def test_bench_report(tmp_path, capsys):
    report = tmp_path / "report.json"
    code, out, _ = run_cli(
        ["bench", "--suite", "span", "--seed", "5", "--corpus", EX31,
         "--report", str(report), "--limit", "6"],
        capsys,
    )
    assert code == 0
    payload = json.loads(report.read_text())
    assert payload["suite"] == "span" and len(payload["queries"]) == 6
    for row in payload["queries"]:
        assert row["complete"] is True


def test_resources_manifest_env(tmp_path, capsys, monkeypatch):
    loc = tmp_path / "loc.txt"
    loc.write_text("cheesecake\n")
    manifest = tmp_path / "resources.json"
    manifest.write_text(json.dumps({"dicts": {"Food": str(loc)}}))
    monkeypatch.setenv("KOKO_RESOURCES", str(manifest))
    q = tmp_path / "d.koko"
    q.write_text(
        'extract e:Entity from "x" if ()\n'
        'satisfying e (str(e) in dict("Food") {1}) with threshold 0.5\n'
    )
    code, out, _ = run_cli(["query", "--query", str(q), "--corpus", EX31], capsys)
    assert code == 0
    rows = [json.loads(line) for line in out.strip().splitlines()]
    assert [r["values"]["e"] for r in rows] == ["cheesecake"]


def test_file_decomposer_flag(tmp_path, capsys):
    clauses = tmp_path / "clauses.jsonl"
    lines = [
        json.dumps({"sid": sid, "clauses": [{"tokens": list(range(3)), "score": 1.0}]})
        for sid in range(2)
    ]
    clauses.write_text("\n".join(lines) + "\n")
    q = tmp_path / "d.koko"
    q.write_text(
        'extract e:Entity from "x" if ()\n'
        'satisfying e (e [["that she"]] {1}) with threshold 0.5\n'
    )
    code, out, _ = run_cli(
        ["query", "--query", str(q), "--corpus", EX31,
         "--decomposer", f"file:{clauses}"],
        capsys,
    )
    # Clause files restrict evidence to tokens 0..2, which never follow an
    # entity mention, so nothing passes.
    assert code == 0 and out.strip() == ""


def test_console_entrypoint_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "koko", "query", "--query", EX21, "--corpus", EX31],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "chocolate ice cream" in proc.stdout


def test_keep_failed_rows_expose_pass_fail(ex31_corpus, ex31_bundle):
    q = parse_query(
        'extract e:Entity from "x" if ()\n'
        'satisfying e (str(e) contains "cheesecake" {1}) with threshold 0.5\n'
    )
    rows = run_query(q, ex31_corpus, ex31_bundle, keep_failed=True).rows
    flags = {r.values["e"]: r.passed for r in rows}
    assert flags == {
        "cheesecake": True,
        "chocolate ice cream": False,
        "grocery store": False,
    }


def test_manifest_decomposer_honored_when_flag_absent(tmp_path, capsys, monkeypatch):
    manifest = tmp_path / "resources.json"
    manifest.write_text(json.dumps({"decomposer": "clauses"}))
    monkeypatch.setenv("KOKO_RESOURCES", str(manifest))
    from koko.cli import _load_resources, build_parser

    args = build_parser().parse_args(["query", "--query", EX21, "--corpus", EX31])
    res = _load_resources(args)
    assert res.decomposer == "clauses"
    args = build_parser().parse_args(
        ["query", "--query", EX21, "--corpus", EX31, "--decomposer", "identity"]
    )
    assert _load_resources(args).decomposer == "identity"


def test_verify_mismatch_exits_1(capsys, monkeypatch):
    import koko.cli as cli_mod

    monkeypatch.setattr(cli_mod, "oracle_evaluate", lambda *a, **kw: [])
    code, out, _ = run_cli(["verify", "--query", EX21, "--corpus", EX31], capsys)
    assert code == 1 and "mismatch" in out


def test_index_empty_corpus_warns(tmp_path, capsys):
    empty = tmp_path / "empty.tsv"
    empty.write_text("")
    code, out, err = run_cli(
        ["index", "--corpus", str(empty), "--out", str(tmp_path / "idx")], capsys
    )
    assert code == 0 and "empty" in err


def test_no_gsp_flag_gives_identical_rows(capsys):
    _, with_gsp, _ = run_cli(["query", "--query", EX21, "--corpus", EX31], capsys)
    _, without, _ = run_cli(["query", "--query", EX21, "--corpus", EX31, "--no-gsp"], capsys)
    assert with_gsp == without


def test_missing_files_map_to_exit_codes(tmp_path, capsys):
    code, _, err = run_cli(
        ["index", "--corpus", str(tmp_path / "nope.tsv"), "--out", str(tmp_path / "i")], capsys
    )
    assert code == 2 and "cannot read corpus" in err
    code, _, err = run_cli(
        ["query", "--query", EX21, "--corpus", EX31,
         "--dict", f"Location={tmp_path / 'nope.txt'}"],
        capsys,
    )
    assert code == 3 and "dictionary" in err
    code, _, err = run_cli(
        ["query", "--query", EX21, "--corpus", EX31, "--vectors", str(tmp_path / "no.vec")],
        capsys,
    )
    assert code == 3 and "vectors" in err
