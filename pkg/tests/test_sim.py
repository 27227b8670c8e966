import io

import numpy as np
import pytest

from tradeoffs import (
    DegeneratePoints,
    CurvePoint,
    ExponentialSaturation,
    GeneratorConfig,
    PowerLaw,
    ReuseDepthPolicy,
    SimConfig,
    Trace,
    curve_to_csv,
    fit_curve,
    generate_trace,
    read_curve_csv,
    replay,
    sweep,
)

E720 = 80_000_000


def identical_trace(n, dim=16):
    v = np.zeros(dim)
    v[0] = 1.0
    return Trace(list(range(n)), [f"q{i}" for i in range(n)], ["720p"] * n,
                 np.stack([v] * n))


def orthogonal_trace(ids, dim=16):
    emb = np.stack([np.eye(dim)[i] for i in ids])
    return Trace(list(range(len(ids))), [f"q{i}" for i in range(len(ids))],
                 ["720p"] * len(ids), emb)


# ---------------------------------------------------------------------------
# config validation
# ---------------------------------------------------------------------------


def test_config_rejects_policy_depth_outside_stored():
    with pytest.raises(ValueError):
        SimConfig(capacity_bytes=0, policy=ReuseDepthPolicy(bands=((0.9, 12),)))


def test_config_rejects_depth_beyond_total_steps():
    with pytest.raises(ValueError):
        SimConfig(capacity_bytes=0, total_steps=20)  # default depths reach 25


def test_config_rejects_bad_costs():
    with pytest.raises(ValueError):
        SimConfig(capacity_bytes=0, step_cost_by_resolution={"720p": 0.0})
    with pytest.raises(ValueError):
        SimConfig(capacity_bytes=-1)


# ---------------------------------------------------------------------------
# replay
# ---------------------------------------------------------------------------


def test_replay_three_identical_requests():
    rep = replay(identical_trace(3), SimConfig(capacity_bytes=E720))
    outcomes = [r.outcome for r in rep.per_request]
    assert outcomes == ["miss", "hit", "hit"]
    s = rep.summary
    assert s.hit_rate == pytest.approx(2 / 3)
    assert s.total_saved_flops == 2 * 25 * 1e9
    assert s.mean_depth_over_hits == 25.0
    assert s.total_full_flops == 3 * 50 * 1e9
    assert s.expected_cost_flops == s.total_full_flops - s.total_saved_flops


def test_replay_zero_capacity_all_too_large():
    rep = replay(identical_trace(3), SimConfig(capacity_bytes=0))
    assert [r.outcome for r in rep.per_request] == ["too_large"] * 3
    assert rep.summary.hit_rate == 0.0
    assert rep.summary.total_saved_flops == 0.0
    assert rep.summary.peak_occupied_bytes == 0


def test_replay_cyclic_thrash():
    # A,B,C,D cycled twice through a 3-entry cache: LRU evicts each
    # entry right before its reuse, so the second pass misses entirely.
    trace = orthogonal_trace([0, 1, 2, 3, 0, 1, 2, 3])
    rep = replay(trace, SimConfig(capacity_bytes=3 * E720))
    assert all(r.outcome == "miss" for r in rep.per_request)
    assert rep.summary.evictions == 5


def test_replay_summary_consistent_with_records():
    cfg = GeneratorConfig(num_requests=600, num_clusters=12, dimension=32,
                          noise_sigma=0.05, zipf_exponent=0.9, seed=41,
                          resolution_mix={"720p": 0.6, "1080p": 0.4})
    rep = replay(generate_trace(cfg), SimConfig(capacity_bytes=5 * E720))
    s = rep.summary
    hits = [r for r in rep.per_request if r.outcome == "hit"]
    assert s.requests == len(rep.per_request)
    assert s.hits == len(hits)
    assert s.hit_rate == pytest.approx(len(hits) / len(rep.per_request))
    assert s.total_saved_flops == pytest.approx(sum(r.saved_flops for r in rep.per_request))
    assert s.evictions == sum(len(r.evicted) for r in rep.per_request)
    if hits:
        assert s.mean_depth_over_hits == pytest.approx(
            sum(r.depth for r in hits) / len(hits))


def test_replay_step_cost_by_resolution():
    v = np.zeros(8)
    v[0] = 1.0
    trace = Trace([0, 1], ["a", "b"], ["2k", "2k"], np.stack([v, v]))
    config = SimConfig(capacity_bytes=10**9,
                       step_cost_by_resolution={"720p": 1e9, "1080p": 2e9, "2k": 4e9})
    rep = replay(trace, config)
    assert rep.summary.total_saved_flops == 25 * 4e9
    assert rep.summary.total_full_flops == 2 * 50 * 4e9


def test_replay_insert_on_hit_duplicates_entries():
    rep = replay(identical_trace(3), SimConfig(capacity_bytes=E720, insert_on_hit=True))
    assert [r.outcome for r in rep.per_request] == ["miss", "hit", "hit"]
    # Each hit re-inserts a copy, evicting the previous occupant.
    assert rep.summary.evictions == 2


def test_replay_never_manufactures_hits():
    # Top band only and mutually orthogonal queries: nothing can match.
    policy = ReuseDepthPolicy(bands=((0.95, 25),))
    trace = orthogonal_trace(list(range(8)))
    rep = replay(trace, SimConfig(capacity_bytes=100 * E720, policy=policy))
    assert rep.summary.hits == 0


def test_saved_flops_bounded():
    cfg = GeneratorConfig(num_requests=300, num_clusters=3, dimension=16,
                          noise_sigma=0.1, seed=8)
    rep = replay(generate_trace(cfg), SimConfig(capacity_bytes=10 * E720))
    bound = rep.summary.requests * 25 * 1e9
    assert rep.summary.total_saved_flops <= bound


def test_report_json_round_trip():
    import json

    rep = replay(identical_trace(3), SimConfig(capacity_bytes=E720))
    doc = json.loads(rep.to_json())
    assert doc["summary"]["hits"] == 2
    assert len(doc["per_request"]) == 3
    slim = json.loads(rep.to_json(include_records=False))
    assert "per_request" not in slim


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_single_cluster_saturates_at_one_entry():
    cfg = GeneratorConfig(num_requests=50, num_clusters=1, dimension=16,
                          noise_sigma=0.0, seed=7)
    trace = generate_trace(cfg)
    curve = sweep(trace, SimConfig(capacity_bytes=0), [E720, 2 * E720])
    assert [p.hit_rate for p in curve] == [49 / 50, 49 / 50]


def test_sweep_orders_rows_by_capacity():
    trace = identical_trace(10)
    curve = sweep(trace, SimConfig(capacity_bytes=0), [4 * E720, E720, 2 * E720])
    assert [p.capacity_bytes for p in curve] == [E720, 2 * E720, 4 * E720]


def test_sweep_validation():
    trace = identical_trace(2)
    with pytest.raises(ValueError):
        sweep(trace, SimConfig(capacity_bytes=0), [])
    with pytest.raises(ValueError):
        sweep(trace, SimConfig(capacity_bytes=0), [E720, E720])


def test_sweep_parallel_matches_sequential():
    cfg = GeneratorConfig(num_requests=400, num_clusters=10, dimension=16,
                          noise_sigma=0.02, seed=19)
    trace = generate_trace(cfg)
    caps = [E720 * k for k in (1, 2, 4, 8)]
    seq = sweep(trace, SimConfig(capacity_bytes=0), caps)
    par = sweep(trace, SimConfig(capacity_bytes=0), caps, jobs=4)
    assert seq == par


# ---------------------------------------------------------------------------
# curve CSV and fitting
# ---------------------------------------------------------------------------


def test_curve_csv_round_trip():
    curve = [
        CurvePoint(80_000_000, 0.125, 1.5e11, 8.5e11),
        CurvePoint(160_000_000, 0.25, 3.0e11, 7.0e11),
    ]
    text = curve_to_csv(curve)
    assert text.splitlines()[0] == "capacity_gb,hit_rate,saved_flops,expected_cost_flops"
    assert read_curve_csv(io.StringIO(text)) == curve


def test_curve_csv_rejects_wrong_header():
    with pytest.raises(ValueError):
        read_curve_csv(io.StringIO("a,b,c\n1,2,3\n"))


def test_fit_curve_heavy_tail_prefers_power_law():
    cfg = GeneratorConfig(num_requests=20_000, num_clusters=2000, dimension=64,
                          zipf_exponent=1.3, noise_sigma=0.02, seed=21)
    trace = generate_trace(cfg)
    curve = sweep(trace, SimConfig(capacity_bytes=0),
                  [2 * E720 * 2**i for i in range(7)])
    fe = fit_curve(curve, ExponentialSaturation, entry_size_gb=0.08)
    fp = fit_curve(curve, PowerLaw)
    assert fp.residual < fe.residual


def test_fit_curve_light_tail_prefers_exponential():
    # Few clusters and quick saturation: the exponential family is the
    # best fit; the power family can only approach it in the kappa->0
    # limit, so its residual stays at or above the exponential's.
    cfg = GeneratorConfig(num_requests=20_000, num_clusters=50, dimension=64,
                          zipf_exponent=0.8, noise_sigma=0.02, seed=11)
    trace = generate_trace(cfg)
    curve = sweep(trace, SimConfig(capacity_bytes=0),
                  [2 * E720 * 2**i for i in range(7)])
    fe = fit_curve(curve, ExponentialSaturation, entry_size_gb=0.08)
    fp = fit_curve(curve, PowerLaw)
    assert fe.residual <= fp.residual


def test_fit_curve_forwards_degenerate_points():
    curve = [CurvePoint(E720 * k, 0.0, 0.0, 5e10) for k in (1, 2, 4)]
    with pytest.raises(DegeneratePoints):
        fit_curve(curve, ExponentialSaturation, entry_size_gb=0.08)
