"""Command-line front-end, config documents and report files."""

import csv
import json
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from carrierforge import carrier, cli, suites
from carrierforge.config import ExperimentConfig, config_schema, load_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def run_cmd(command, config, out, *extra):
    argv = [command, "--out", str(out), *extra]
    if config is not None:
        argv += ["--config", str(CONFIGS / config if isinstance(config, str) else config)]
    return cli.run(argv)


def report(out):
    return json.loads((Path(out) / "report.json").read_text())


def read_trace(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


@pytest.fixture(scope="module")
def verify_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("verify")
    return run_cmd("verify", None, out), report(out)


# ---------------------------------------------------------------------------
# config documents

@pytest.mark.parametrize("name", sorted(p.name for p in CONFIGS.glob("*.json")))
def test_shipped_configs_round_trip(name):
    cfg = load_config(CONFIGS / name)
    again = ExperimentConfig.model_validate(json.loads(json.dumps(cfg.to_document())))
    assert again == cfg
    assert again.to_document() == cfg.to_document()


@given(
    seed=st.integers(0, 2**64 - 1),
    word_len=st.integers(1, 64),
    max_iter=st.integers(0, 10_000),
    radius=st.floats(1e-3, 5.0, allow_nan=False),
)
def test_round_trip_property(seed, word_len, max_iter, radius):
    doc = {
        "group": {"fixture": "schottky"},
        "seed": seed,
        "params": {"max_word_len": word_len},
        "optimizer": {"max_iterations": max_iter},
        "contract": {"radius": radius},
        "normalizer": {"inner": [1, -2]},
    }
    cfg = ExperimentConfig.model_validate(doc)
    assert ExperimentConfig.model_validate(cfg.to_document()) == cfg


def test_schema_file_is_current():
    shipped = json.loads((ROOT / "docs" / "config.schema.json").read_text())
    assert shipped == config_schema()


# ---------------------------------------------------------------------------
# commands

def test_optimize_tripod(tmp_path):
    assert run_cmd("optimize", "tripod.json", tmp_path) == 0
    rep = report(tmp_path)
    assert rep["command"] == "optimize" and rep["prng"] == "splitmix64"
    assert rep["termination_reason"] == "converged"
    run = rep["runs"][0]
    assert run["certificate"]["angle_deviation"] <= 1e-4
    header, rows = read_trace(tmp_path / run["trace"])
    assert header == ["iteration", "length", "gradientNorm"]
    assert len(rows) == run["iterations"] + 1
    lengths = [float(r[1]) for r in rows]
    assert all(b <= a + 1e-12 for a, b in zip(lengths, lengths[1:]))
    assert float(rows[-1][1]) == run["final_length"]


def test_reingest_reproduces_certificate(tmp_path):
    assert run_cmd("optimize", "schottky_theta.json", tmp_path) == 0
    rep = report(tmp_path)
    run = rep["runs"][-1]
    cg = cli.reingest(rep, run["final_graph"])
    cert = carrier.validate(cg)
    assert abs(cert.total_length - run["certificate"]["total_length"]) <= 1e-9
    assert abs(cert.angle_deviation - run["certificate"]["angle_deviation"]) <= 1e-9
    assert carrier.surjectivity_status(cg) == run["surjectivity"] == "verified"


def test_contract(tmp_path):
    assert run_cmd("contract", "schottky_contract.json", tmp_path) == 0
    rep = report(tmp_path)
    for e in rep["edges"]:
        assert e["broken_length"] <= e["bound"] + 1e-9
        assert e["straightened_length"] <= e["broken_length"] + 1e-9
    assert isinstance(rep["strict_decrease"], bool)


def test_orbit(tmp_path):
    assert run_cmd("orbit", "schottky_orbit.json", tmp_path) == 0
    rep = report(tmp_path)
    assert rep["orbit_size"] == 2
    assert rep["image_equivalent_to_base"] is False
    assert rep["length_spread"] <= 1e-9


def test_enumerate2_is_deterministic(tmp_path, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cmd("enumerate2", "figure8_enumerate2.json", a) == 0
    monkeypatch.setenv("CARRIERFORGE_THREADS", "3")
    assert run_cmd("enumerate2", "figure8_enumerate2.json", b) == 0
    files_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    files_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert files_a == files_b and len(files_a) > 2
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel
    rep = report(a)
    d = rep["dedup"]
    assert d["distinct"] == len(rep["entries"])
    assert d["candidates"] == d["optimized"] + d["skipped"]
    assert (a / "table.md").read_text().startswith("|")


def test_enumerate2_needs_rank_two(tmp_path):
    assert run_cmd("enumerate2", "tripod.json", tmp_path) == 1


def test_verify(verify_run):
    code, rep = verify_run
    assert code == 0 and rep["passed"] is True
    assert rep["sizes"] == dict(suites.DEFAULT_SIZES)
    assert {r["suite"] for r in rep["suites"]} == set(suites.SUITES)


# ---------------------------------------------------------------------------
# exit codes

def test_usage_errors(tmp_path, capsys):
    bad_json = tmp_path / "bad.json"
    bad_json.write_text('{"seed": 1,,}')
    bad_field = tmp_path / "field.json"
    bad_field.write_text('{"seed": -3, "colour": "red"}')
    bad_graph = tmp_path / "graph.json"
    bad_graph.write_text(json.dumps({
        "group": {"fixture": "schottky"},
        "graph": {"vertices": 2, "edges": [[0, 5]], "labels": [[1]]},
    }))
    out = tmp_path / "out"
    assert run_cmd("optimize", bad_json, out) == 1
    assert "bad.json:1:" in capsys.readouterr().err
    assert run_cmd("optimize", bad_field, out) == 1
    err = capsys.readouterr().err
    assert "seed" in err and "colour" in err
    assert run_cmd("optimize", bad_graph, out) == 1
    assert run_cmd("optimize", None, out) == 1
    assert run_cmd("optimize", tmp_path / "missing.json", out) == 1
    assert cli.run(["frobnicate", "--out", str(out)]) == 1
    assert cli.run(["optimize", "--config", str(CONFIGS / "tripod.json")]) == 1
    assert run_cmd("optimize", "tripod.json", out, "--word-len", "0") == 1
    assert run_cmd("orbit", "tripod.json", out) == 1


def test_internal_error_exits_two(tmp_path, monkeypatch):
    def boom(*_):
        raise AssertionError("invariant")

    monkeypatch.setitem(cli.HANDLERS, "optimize", boom)
    assert run_cmd("optimize", "tripod.json", tmp_path) == 2


def test_failing_suite_exits_two(tmp_path, monkeypatch):
    failing = suites.Check("forced", 1, 1.0, 0.0, "max")
    monkeypatch.setattr(suites, "run_all", lambda seed=0: [("metric", [failing], 0.0)])
    assert run_cmd("verify", None, tmp_path) == 2
    assert report(tmp_path)["passed"] is False


def test_console_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "carrierforge", "optimize", "--config", str(CONFIGS / "tripod.json"),
         "--out", str(tmp_path), "--max-iter", "3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert report(tmp_path)["config"]["optimizer"]["max_iterations"] == 3


def test_zero_letter_rejected():
    with pytest.raises(ValueError, match="0 is not a generator symbol"):
        ExperimentConfig.model_validate({"normalizer": {"inner": [1, 0]}})
