import json

import pytest
from click.testing import CliRunner

from refaas.cli import bench_main, main
from refaas.model import read_package

from conftest import REPLAYS, corpus_dir, needs_go


@pytest.fixture
def runner():
    return CliRunner()


def test_version_and_pipelines(runner):
    assert runner.invoke(main, ["--version"]).output.startswith("refaas")
    out = runner.invoke(main, ["pipelines"]).output
    assert "cot: budget 20, temperature 0.1" in out
    assert "creative-cot" in out and "single-shot" in out


def test_translate_needs_a_backend(runner):
    d = corpus_dir("f02")
    result = runner.invoke(main, ["translate", str(d / "original"), "--tests", str(d / "tests")])
    assert result.exit_code == 2
    assert "--replay or --backend-url" in result.output


def test_translate_unknown_target(runner):
    d = corpus_dir("f02")
    result = runner.invoke(
        main,
        ["translate", str(d / "original"), "--tests", str(d / "tests"), "--target", "cobol",
         "--replay", str(REPLAYS / "fix_loop.replay.json")],
    )
    assert result.exit_code == 2
    assert "UnknownLanguage" in result.output


@needs_go
def test_translate_with_replay(runner, tmp_path):
    d = corpus_dir("f02")
    out, report = tmp_path / "fn.zip", tmp_path / "report.json"
    result = runner.invoke(
        main,
        ["translate", str(d / "original"), "--tests", str(d / "tests"), "--replay", str(REPLAYS / "fix_loop.replay.json"),
         "--invocations", "300", "--repetitions", "1", "--out", str(out), "--report", str(report)],
    )
    assert result.exit_code == 0, result.output
    assert "verdict: translated" in result.output
    assert read_package(out).language == "go"
    doc = json.loads(report.read_text())
    assert doc["verdict"] == "translated"
    assert doc["conversion"]["energy_by_probe"]["service-host"] > 0


@needs_go
def test_translate_keeps_original(runner, tmp_path):
    d = corpus_dir("f02")
    out = tmp_path / "fn.zip"
    result = runner.invoke(
        main,
        ["translate", str(d / "original"), "--tests", str(d / "tests"), "--pipeline", "single-shot",
         "--replay", str(REPLAYS / "never_compiles.replay.json"), "--out", str(out)],
    )
    assert result.exit_code == 1
    assert read_package(out) == read_package(d / "original")
    assert json.loads(result.stdout[result.stdout.index("{"):])["verdict"] == "original-kept"


@needs_go
def test_bench_run(runner, tmp_path):
    d = corpus_dir("f06")
    out, csv_path = tmp_path / "bench.json", tmp_path / "bench.csv"
    result = runner.invoke(
        main,
        ["bench", "run", "--original", str(d / "original"), "--translated", str(d / "reference"),
         "--tests", str(d / "tests"), "--invocations", "50", "--repetitions", "2", "--warmup", "5",
         "--probe", "process", "--out", str(out), "--csv", str(csv_path)],
    )
    assert result.exit_code == 0, result.output
    doc = json.loads(out.read_text())
    assert doc["original"]["repetitions"] == 2
    assert doc["savings"]["saving_per_invocation"] == pytest.approx(
        doc["original"]["aggregate"]["joules_per_invocation"]["mean"]
        - doc["translated"]["aggregate"]["joules_per_invocation"]["mean"]
    )
    assert len(csv_path.read_text().splitlines()) == 1 + 4
    assert "saving" in result.output


def test_bench_entry_point(monkeypatch, capsys):
    monkeypatch.setattr("sys.argv", ["refaas-bench", "run", "--help"])
    with pytest.raises(SystemExit) as exit:
        bench_main()
    assert exit.value.code == 0
    assert "--invocations" in capsys.readouterr().out
