"""Command-line interface: verbs, exit codes, and output routing."""

from __future__ import annotations

import json

import pytest

from tagsim.cli import EXIT_IO, EXIT_OK, EXIT_PARSE, main

GOOD = """\
name = clidemo
seed = 3
architecture = airtag
duration = 40

[devices]
tracker t1 lat=35.0 lon=-80.0 threshold=10
owner o1 tracker=t1 lat=36.0 lon=-81.0
helper h1 lat=35.0001 lon=-80.0
"""

BAD = GOOD.replace("seed = 3", "seed = banana")


@pytest.fixture()
def scenario_file(tmp_path):
    path = tmp_path / "clidemo.scenario"
    path.write_text(GOOD)
    return str(path)


@pytest.fixture(autouse=True)
def no_ambient_out(monkeypatch):
    monkeypatch.delenv("TAGSIM_OUT", raising=False)


def test_run_stdout_json(scenario_file, capsys):
    assert main(["run", scenario_file]) == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["scenario"]["name"] == "clidemo"
    assert report["counters"]["delivers"] > 0


def test_run_format_csv_and_text(scenario_file, capsys):
    assert main(["run", scenario_file, "--format", "csv"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith("t,owner,tracker,")

    assert main(["run", scenario_file, "--format", "text"]) == EXIT_OK
    assert "scenario clidemo" in capsys.readouterr().out


def test_run_out_dir(scenario_file, tmp_path, capsys):
    dest = tmp_path / "reports"
    assert main(["run", scenario_file, "--out", str(dest)]) == EXIT_OK
    printed = capsys.readouterr().out.strip()
    assert printed == str(dest / "clidemo.json")
    report = json.loads((dest / "clidemo.json").read_text())
    assert report["scenario"]["seed"] == "3"


def test_run_env_out(scenario_file, tmp_path, monkeypatch, capsys):
    dest = tmp_path / "envout"
    monkeypatch.setenv("TAGSIM_OUT", str(dest))
    assert main(["run", scenario_file, "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == str(dest / "clidemo.csv")
    assert (dest / "clidemo.csv").read_text().startswith("t,owner,")


def test_run_seed_override_changes_digest(scenario_file, capsys):
    main(["run", scenario_file])
    base = json.loads(capsys.readouterr().out)
    main(["run", scenario_file, "--seed", "99"])
    reseeded = json.loads(capsys.readouterr().out)
    assert base["scenario"]["seed"] == "3"
    assert reseeded["scenario"]["seed"] == "99"
    assert base["trace_digest"] != reseeded["trace_digest"]


def test_run_deterministic_across_invocations(scenario_file, capsys):
    main(["run", scenario_file])
    first = capsys.readouterr().out
    main(["run", scenario_file])
    assert capsys.readouterr().out == first


def test_validate_ok(scenario_file, capsys):
    assert main(["validate", scenario_file]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.startswith(f"{scenario_file}: ok ")
    assert "devices=3" in out


def test_parse_errors_reported_per_line(tmp_path, capsys):
    path = tmp_path / "bad.scenario"
    path.write_text(BAD)
    assert main(["validate", str(path)]) == EXIT_PARSE
    err = capsys.readouterr().err
    assert f"{path}: line 2: seed:" in err

    assert main(["run", str(path)]) == EXIT_PARSE


def test_missing_file_is_io_error(tmp_path, capsys):
    ghost = str(tmp_path / "nope.scenario")
    assert main(["run", ghost]) == EXIT_IO
    assert "cannot read" in capsys.readouterr().err


def test_trace_emits_event_log(scenario_file, tmp_path, capsys):
    dest = tmp_path / "traces"
    assert main(["trace", scenario_file, "--out", str(dest)]) == EXIT_OK
    capsys.readouterr()
    lines = (dest / "clidemo.trace").read_text().splitlines()
    assert lines[0].startswith("0000000000 scenario clidemo ")
    assert all(len(line.split(" ", 3)) == 4 for line in lines)
    times = [int(line.split()[0]) for line in lines]
    assert times == sorted(times)


def test_bench_lists_backends(capsys):
    assert main(["bench", "--ops", "50"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "pure" in out
