#!/usr/bin/env python3
"""Replay a synthetic request stream through the approximate cache.

Generates a clustered workload, replays it at a fixed capacity, and dumps
the first dozen per-request outcomes plus the aggregate report.
"""

from tradeoffs import GeneratorConfig, SimConfig, generate_trace, replay

cfg = GeneratorConfig(
    num_requests=2_000,
    num_clusters=40,
    dimension=64,
    zipf_exponent=1.0,
    noise_sigma=0.03,
    resolution_mix={"720p": 0.7, "1080p": 0.3},
    seed=7,
)
trace = generate_trace(cfg)

sim = SimConfig(capacity_bytes=1_600_000_000)  # room for ~14 mixed entries
report = replay(trace, sim)

print("first 12 requests:")
for rec in report.per_request[:12]:
    extra = ""
    if rec.outcome == "hit":
        extra = f" entry={rec.matched_id} sim={rec.similarity:.3f} depth={rec.depth}"
    if rec.evicted:
        extra += f" evicted={list(rec.evicted)}"
    print(f"  {rec.request_id:>6} {rec.outcome:<9}{extra}")

s = report.summary
print(f"\n{s.requests} requests, {s.hits} hits ({s.hit_rate:.1%})")
print(f"mean depth over hits : {s.mean_depth_over_hits:.2f}")
print(f"saved FLOPs          : {s.total_saved_flops:.3g} of {s.total_full_flops:.3g}")
print(f"expected cost        : {s.expected_cost_flops:.3g}")
print(f"peak occupancy       : {s.peak_occupied_bytes / 1e9:.2f} GB")
print(f"evictions            : {s.evictions}")
