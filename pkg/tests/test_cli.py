import json

import numpy as np
import pytest

from tradeoffs import (
    CacheCostParams,
    EmpiricalHitRate,
    ExponentialSaturation,
    GeneratorConfig,
    SimConfig,
    curve_to_csv,
    expected_compute,
    generate_trace,
    load_trace,
    marginal_benefit,
    replay,
    save_trace,
    sweep,
    write_curve_csv,
)
from tradeoffs.cli import main, parse_bytes

E720 = 80_000_000


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------------------
# flag parsing
# ---------------------------------------------------------------------------


def test_parse_bytes_suffixes():
    assert parse_bytes("123") == 123
    assert parse_bytes("1GB") == 10**9
    assert parse_bytes("2.5TB") == 2_500_000_000_000
    assert parse_bytes("500MB") == 500_000_000
    assert parse_bytes("1.5e2KB") == 150_000
    assert parse_bytes(" 4 GB ") == 4 * 10**9
    for bad in ("1GiB", "abc", "-1GB"):
        with pytest.raises(ValueError):
            parse_bytes(bad)


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# golden agreement with the library
# ---------------------------------------------------------------------------


def test_deficit_matches_library(capsys):
    code, out, _ = run(capsys, "deficit", "--total", "400", "--devices", "2",
                       "--per-device", "100", "--k", "0.5")
    assert code == 0
    doc = json.loads(out)
    assert doc == {"deficit_gb": 200.0, "comm_gb": 100.0}


def test_expected_compute_matches_library(capsys):
    code, out, _ = run(capsys, "expected-compute", "--steps", "50",
                       "--step-cost", "1e9", "--reuse", "20", "--hit", "0.6",
                       "--capacity", "10", "--entry-size", "2")
    assert code == 0
    doc = json.loads(out)
    econ = expected_compute(
        CacheCostParams(50, 1e9, 20, 2.0), EmpiricalHitRate(((0.0, 0.6),)), 10.0)
    assert doc["expected_saved_flops"] == econ.expected_saved_flops == 1.2e10
    assert doc["expected_cost_flops"] == econ.expected_cost_flops
    assert doc["entry_count"] == econ.entry_count
    assert doc["saved_flops_per_gb"] == econ.saved_flops_per_gb


def test_marginal_matches_library(capsys):
    code, out, _ = run(capsys, "marginal", "--reuse", "20", "--capacity", "3",
                       "--model", "exp", "--beta", "0.5", "--entry-size", "2")
    assert code == 0
    expect = marginal_benefit(
        CacheCostParams(50, 1e9, 20, 2.0), ExponentialSaturation(0.5, 2.0), 3.0)
    assert json.loads(out)["marginal_flops_per_gb"] == expect


def test_frontier_subcommand(tmp_path, capsys):
    samples = tmp_path / "s.csv"
    samples.write_text(
        "bandwidth_bpp,compute_flops,quality\n"
        "0.15,1e9,0.9\n0.075,1.4e10,0.9\n0.0375,1e11,0.9\n")
    code, out, _ = run(capsys, "frontier", "--samples", str(samples),
                       "--quality", "0.9", "--budget", "1.4e10")
    assert code == 0
    doc = json.loads(out)
    assert doc["bandwidth_bpp"] == 0.075 and doc["sample_index"] == 1


def test_frontier_infeasible_exit_code(tmp_path, capsys):
    samples = tmp_path / "s.csv"
    samples.write_text("bandwidth_bpp,compute_flops,quality\n0.15,1e9,0.9\n")
    code, out, err = run(capsys, "frontier", "--samples", str(samples),
                         "--quality", "0.9", "--budget", "1e8")
    assert code == 1 and out == ""
    assert json.loads(err)["error"] == "Infeasible"


def test_frontier_bad_csv_is_domain_error(tmp_path, capsys):
    samples = tmp_path / "s.csv"
    samples.write_text("wrong,header,names\n1,2,3\n")
    code, _, err = run(capsys, "frontier", "--samples", str(samples),
                       "--quality", "0.9", "--budget", "1e9")
    assert code == 1
    assert json.loads(err)["error"] == "ParseError"


def test_missing_file_is_domain_error(capsys):
    code, _, err = run(capsys, "replay", "--trace", "no-such.jsonl",
                       "--capacity", "1GB")
    assert code == 1
    assert json.loads(err)["error"] == "IOError"


def test_bad_flag_value_is_usage_error(capsys):
    code, _, err = run(capsys, "expected-compute", "--reuse", "20",
                       "--hit", "1.5")
    assert code == 2 and "error:" in err


# ---------------------------------------------------------------------------
# file-producing subcommands
# ---------------------------------------------------------------------------


def test_gen_writes_trace_and_manifest(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    code, stdout, _ = run(capsys, "gen", "--out", str(out), "--n", "40",
                          "--clusters", "4", "--dim", "8", "--seed", "6")
    assert code == 0
    assert json.loads(stdout)["requests"] == 40
    trace = load_trace(out)
    assert trace == generate_trace(
        GeneratorConfig(num_requests=40, num_clusters=4, dimension=8, seed=6))
    manifest = json.loads((tmp_path / "t.jsonl.manifest.json").read_text())
    assert manifest["subcommand"] == "gen" and manifest["seed"] == 6


def test_trinity_seed_env_overrides_flag(tmp_path, capsys, monkeypatch):
    out_env = tmp_path / "env.jsonl"
    monkeypatch.setenv("TRINITY_SEED", "99")
    run(capsys, "gen", "--out", str(out_env), "--n", "20", "--clusters", "2",
        "--dim", "8", "--seed", "1")
    monkeypatch.delenv("TRINITY_SEED")
    out_flag = tmp_path / "flag.jsonl"
    run(capsys, "gen", "--out", str(out_flag), "--n", "20", "--clusters", "2",
        "--dim", "8", "--seed", "99")
    assert out_env.read_bytes() == out_flag.read_bytes()


def test_replay_outputs_and_records(tmp_path, capsys):
    trace = generate_trace(GeneratorConfig(num_requests=60, num_clusters=5,
                                           dimension=8, noise_sigma=0.01, seed=2))
    trace_path = tmp_path / "t.jsonl"
    save_trace(trace, trace_path)
    out = tmp_path / "rep.json"
    recs = tmp_path / "recs.jsonl"
    code, _, _ = run(capsys, "replay", "--trace", str(trace_path),
                     "--capacity", "160MB", "--out", str(out),
                     "--records", str(recs))
    assert code == 0
    expect = replay(trace, SimConfig(capacity_bytes=160_000_000))
    doc = json.loads(out.read_text())
    assert doc["summary"] == expect.summary.to_dict()
    lines = [json.loads(ln) for ln in recs.read_text().splitlines()]
    assert lines == [r.to_dict() for r in expect.per_request]
    manifest = json.loads((tmp_path / "rep.json.manifest.json").read_text())
    assert str(trace_path) in manifest["inputs"]


def test_sweep_csv_matches_library(tmp_path, capsys):
    trace = generate_trace(GeneratorConfig(num_requests=80, num_clusters=4,
                                           dimension=8, noise_sigma=0.01, seed=3))
    trace_path = tmp_path / "t.jsonl"
    save_trace(trace, trace_path)
    out = tmp_path / "curve.csv"
    code, stdout, _ = run(capsys, "sweep", "--trace", str(trace_path),
                          "--capacities", "80MB,160MB,320MB",
                          "--jobs", "1", "--out", str(out))
    assert code == 0
    curve = sweep(trace, SimConfig(capacity_bytes=0),
                  [80_000_000, 160_000_000, 320_000_000])
    assert out.read_text() == curve_to_csv(curve)
    rows = json.loads(stdout)
    assert [r["hit_rate"] for r in rows] == [p.hit_rate for p in curve]


def test_fit_recovers_from_csv(tmp_path, capsys):
    from tradeoffs import CurvePoint

    model = ExponentialSaturation(beta=0.7, entry_size_gb=0.08)
    curve = [CurvePoint(int(k * E720), model.hit_rate(k * 0.08), 0.0, 0.0)
             for k in (1, 2, 4, 8, 16)]
    path = tmp_path / "curve.csv"
    write_curve_csv(curve, path)
    code, out, _ = run(capsys, "fit", "--curve", str(path), "--family", "exp",
                       "--entry-size", "0.08")
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["beta"] == pytest.approx(0.7, rel=1e-6)
    assert doc["residual"] < 1e-9
