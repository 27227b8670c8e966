#!/usr/bin/env python3
"""Minimum bandwidth needed to hit a quality target under a compute cap.

Builds a small grid of (bandwidth, compute, quality) operating points for
a hypothetical codec: heavier decode compute lets you get away with fewer
bits, better models raise quality at the same rate. Then asks, for each
compute budget, how low the bitrate can go.
"""

from tradeoffs import Infeasible, RateComputeSample, frontier_min_bandwidth

# Three model tiers; each tier halves bitrate at ~10-70x the decode cost.
SAMPLES = [
    RateComputeSample(bandwidth_bpp=0.30, compute_flops=5e8, quality=0.86),
    RateComputeSample(bandwidth_bpp=0.15, compute_flops=1e9, quality=0.90),
    RateComputeSample(bandwidth_bpp=0.15, compute_flops=8e8, quality=0.84),
    RateComputeSample(bandwidth_bpp=0.075, compute_flops=1.4e10, quality=0.90),
    RateComputeSample(bandwidth_bpp=0.075, compute_flops=9e9, quality=0.87),
    RateComputeSample(bandwidth_bpp=0.0375, compute_flops=1e11, quality=0.90),
]

for target in (0.84, 0.87, 0.90):
    print(f"quality target {target}:")
    for budget in (6e8, 1e9, 1e10, 1.4e10, 1e11):
        try:
            r = frontier_min_bandwidth(SAMPLES, target, budget)
            print(f"  budget {budget:8.1e} FLOPs -> {r.bandwidth_bpp:g} bpp "
                  f"(sample {r.sample_index}, quality {r.sample.quality})")
        except Infeasible:
            print(f"  budget {budget:8.1e} FLOPs -> infeasible")
    print()
