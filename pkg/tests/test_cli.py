"""Command-line behavior: exit codes, stdout/stderr, flag and env layering."""

import json
from pathlib import Path

import pytest

from risingstars.cli import main

TINY = """\
paths:
  corpus: data/corpus.jsonl
  workdir: data/workdir
synth:
  n_authors: 60
  n_venues: 4
  first_year: 2000
  last_year: 2007
  refs_per_paper: 3
  vocab_size: 60
  n_topics: 3
  cohort_year: 2003
  seed: 3
cohort:
  t: 2005
  t_1st: 2003
  delta_t: 2
topics:
  n_topics: 3
  top_m: 2
  iterations: 60
eval:
  min_group: 2
"""


@pytest.fixture
def tiny(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "tiny.yaml").write_text(TINY, encoding="utf-8")
    return tmp_path


def test_synth_run_report_roundtrip(tiny, capsys):
    assert main(["synth", "--config", "tiny.yaml"]) == 0
    assert main(["run", "--config", "tiny.yaml"]) == 0
    assert main(["report", "--config", "tiny.yaml"]) == 0
    out = capsys.readouterr().out
    assert "wrote data/corpus.jsonl" in out
    assert "completed stages: graphs, topics" in out
    assert "iirl" in out
    assert (tiny / "data/workdir/reports/report.txt").exists()


def test_error_exits_nonzero_with_stderr_line(tiny, capsys):
    assert main(["synth", "--config", "tiny.yaml"]) == 0
    code = main(["run", "--config", "tiny.yaml", "--stages", "features"])
    captured = capsys.readouterr()
    assert code == 1
    assert "error:" in captured.err
    assert "run stage: graphs" in captured.err


def test_missing_corpus_reported(tiny, capsys):
    code = main(["run", "--config", "tiny.yaml"])
    assert code == 1
    assert "corpus" in capsys.readouterr().err


def test_stages_flag_runs_subset(tiny, capsys):
    main(["synth", "--config", "tiny.yaml"])
    assert main(["run", "--config", "tiny.yaml", "--stages", "graphs"]) == 0
    assert "completed stages: graphs\n" in capsys.readouterr().out
    assert (tiny / "data/workdir/graphs/acn_edges.csv").exists()
    assert not (tiny / "data/workdir/topics").exists()


def test_empty_stages_flag_rejected(tiny, capsys):
    assert main(["run", "--config", "tiny.yaml", "--stages", " , "]) == 1
    assert "--stages is empty" in capsys.readouterr().err


def test_seed_flag_is_deterministic_and_sensitive(tiny):
    corpus = tiny / "data/corpus.jsonl"
    main(["synth", "--config", "tiny.yaml", "--seed", "5"])
    first = corpus.read_bytes()
    main(["synth", "--config", "tiny.yaml", "--seed", "5"])
    assert corpus.read_bytes() == first
    main(["synth", "--config", "tiny.yaml", "--seed", "6"])
    assert corpus.read_bytes() != first


def test_workdir_flag_overrides_config(tiny, capsys):
    main(["synth", "--config", "tiny.yaml"])
    assert main(["run", "--config", "tiny.yaml", "--workdir", "elsewhere"]) == 0
    assert (tiny / "elsewhere/provenance.json").exists()
    assert not (tiny / "data/workdir").exists()


def test_env_override_reaches_pipeline(tiny, monkeypatch, capsys):
    monkeypatch.setenv("RISINGSTARS_PATHS__WORKDIR", "envdir")
    main(["synth", "--config", "tiny.yaml"])
    assert main(["run", "--config", "tiny.yaml"]) == 0
    assert (tiny / "envdir/provenance.json").exists()


def test_env_type_error_reported(tiny, monkeypatch, capsys):
    monkeypatch.setenv("RISINGSTARS_COHORT__T", "soon")
    assert main(["run", "--config", "tiny.yaml"]) == 1
    assert "expects int" in capsys.readouterr().err


def test_config_parse_error_exits_nonzero(tiny, capsys):
    (tiny / "bad.yaml").write_text("cohrot:\n  t: 2011\n", encoding="utf-8")
    assert main(["run", "--config", "bad.yaml"]) == 1
    assert "unknown key: cohrot" in capsys.readouterr().err


def test_report_before_evaluate_fails(tiny, capsys):
    assert main(["report", "--config", "tiny.yaml"]) == 1
    assert "run stage: evaluate" in capsys.readouterr().err


def test_report_json_mirrors_stdout_sections(tiny, capsys):
    main(["synth", "--config", "tiny.yaml"])
    main(["run", "--config", "tiny.yaml"])
    main(["report", "--config", "tiny.yaml"])
    out = capsys.readouterr().out
    payload = json.loads((tiny / "data/workdir/reports/report.json").read_text())
    for method in payload["methods"]:
        assert method["method"] in out
    assert payload["config_hash"] in out
