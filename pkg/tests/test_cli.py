"""Tests for the command-line pipeline."""

from __future__ import annotations

import json
import os

from bpmn2pddl.cli import main
from conftest import CORPUS_DIR, fixture

CREDIT = str(CORPUS_DIR / "credit_scoring.bpmn")


def test_translate_writes_files(tmp_path, capsys):
    code = main(["translate", CREDIT, "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "credit_scoring.domain.pddl").exists()
    assert (tmp_path / "credit_scoring.all_starts.problem.pddl").exists()
    assert (tmp_path / "credit_scoring.prestarted_frontend.problem.pddl").exists()
    out = capsys.readouterr().out
    assert "nodes=" in out and "elapsed_ms=" in out


def test_translate_unreadable_path(tmp_path, capsys):
    code = main(["translate", str(tmp_path / "missing.bpmn"), "--out", str(tmp_path)])
    assert code == 1
    assert "missing.bpmn" in capsys.readouterr().err


def test_translate_invalid_file(tmp_path, capsys):
    bad = tmp_path / "bad.bpmn"
    bad.write_text("<definitely-not-bpmn/>")
    code = main(["translate", str(bad), "--out", str(tmp_path)])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_translate_deterministic(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    assert main(["translate", CREDIT, "--out", str(out1)]) == 0
    assert main(["translate", CREDIT, "--out", str(out2)]) == 0
    for name in os.listdir(out1):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_check_linear_solvable(tmp_path, capsys):
    code = main(["check", str(fixture("loop_retry.bpmn")), "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "strong=no" in out
    assert "strong_cyclic=yes" in out
    assert "deadlocks=0" in out


def test_check_pathology_reports_deadlocks(tmp_path, capsys):
    code = main(["check", str(fixture("xor_and_deadlock.bpmn")), "--out", str(tmp_path)])
    assert code == 2
    out = capsys.readouterr().out
    assert "deadlocks=2" in out
    assert "strong=no" in out


def test_check_writes_policy_dot_and_traces(tmp_path):
    code = main(
        ["check", CREDIT, "--out", str(tmp_path), "--dot", "--traces", "--solve", "cyclic"]
    )
    assert code == 0
    dot = tmp_path / "credit_scoring.prestarted_frontend.policy.dot"
    assert dot.exists()
    assert dot.read_text().startswith("digraph policy {")
    graph_dot = tmp_path / "credit_scoring.graph.dot"
    assert graph_dot.exists()
    traces = tmp_path / "credit_scoring.prestarted_frontend.traces.json"
    payload = json.loads(traces.read_text())
    assert isinstance(payload, list)
    assert all(t["terminal"] == "goal" for t in payload)


def test_check_max_states_env(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("BPMN2PDDL_MAX_STATES", "2")
    code = main(["check", CREDIT, "--out", str(tmp_path), "--solve", "cyclic"])
    assert code == 2
    assert "limit exceeded" in capsys.readouterr().err


def test_corpus_all_files(tmp_path, capsys):
    code = main(["corpus", str(CORPUS_DIR), "--out", str(tmp_path), "--solve", "cyclic"])
    assert code == 0
    tsv = (tmp_path / "corpus_summary.tsv").read_text().splitlines()
    assert tsv[0].startswith("file\tnodes")
    assert len(tsv) == 1 + 8
    assert all("\tyes" in row for row in tsv[1:])  # strong_cyclic column


def test_corpus_empty_dir(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    code = main(["corpus", str(empty), "--out", str(tmp_path / "out")])
    assert code == 0
    tsv = (tmp_path / "out" / "corpus_summary.tsv").read_text().splitlines()
    assert len(tsv) == 1


def test_corpus_with_corrupt_file(tmp_path, capsys):
    src = tmp_path / "diagrams"
    src.mkdir()
    (src / "good.bpmn").write_bytes(fixture("loop_retry.bpmn").read_bytes())
    (src / "corrupt.bpmn").write_text("not xml at all <<<")
    code = main(["corpus", str(src), "--out", str(tmp_path / "out"), "--solve", "cyclic"])
    assert code == 1
    rows = (tmp_path / "out" / "corpus_summary.tsv").read_text().splitlines()[1:]
    assert len(rows) == 2
    assert any("ERROR" in row for row in rows)
    assert any(row.startswith("good.bpmn") and "yes" in row for row in rows)


def test_warnings_as_errors(tmp_path, capsys):
    code = main(
        [
            "translate",
            str(fixture("xor_and_deadlock.bpmn")),
            "--out",
            str(tmp_path),
            "--warnings-as-errors",
        ]
    )
    assert code == 2
    assert "PotentialDeadlock" in capsys.readouterr().err


def test_fig4_compat_flag(tmp_path):
    code = main(["translate", CREDIT, "--out", str(tmp_path), "--fig4-compat", "--msg-strategy", "ignore"])
    assert code == 0
    text = (tmp_path / "credit_scoring.domain.pddl").read_text()
    assert "(:requirements :strips :typing)" in text


def test_allow_spontaneous_start(tmp_path):
    code = main(
        ["translate", CREDIT, "--out", str(tmp_path), "--allow-spontaneous-start"]
    )
    assert code == 0
    assert (tmp_path / "credit_scoring.empty.problem.pddl").exists()
    text = (tmp_path / "credit_scoring.domain.pddl").read_text()
    assert "start_StartEvent_1els7eb" in text
