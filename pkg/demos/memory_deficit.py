#!/usr/bin/env python3
"""How model state that spills past device memory turns into traffic.

Sweeps device count for a fixed model footprint and prints the spill
(deficit) plus the resulting per-step communication volume.
"""

from tradeoffs import DeficitParams, comm_cost, memory_deficit

TOTAL_GB = 400.0     # optimizer + weights + activations, all-in
PER_DEVICE_GB = 100.0
SPILL_FACTOR = 0.5   # GB moved per GB short, per step

print(f"model footprint {TOTAL_GB:g} GB, {PER_DEVICE_GB:g} GB per device\n")
print(f"{'devices':>8} {'deficit GB':>11} {'comm GB/step':>13}")
for n in (1, 2, 3, 4, 5, 6, 8):
    p = DeficitParams(
        total_memory_gb=TOTAL_GB,
        device_count=n,
        device_memory_gb=PER_DEVICE_GB,
        deficit_bandwidth_factor=SPILL_FACTOR,
    )
    print(f"{n:>8} {memory_deficit(p):>11.1f} {comm_cost(p):>13.1f}")

# Adding sync overhead: each step also moves allreduce_factor * state_volume
# regardless of spill, so the floor never reaches zero.
print("\nwith gradient sync (2x over 10 GB of gradients):")
print(f"{'devices':>8} {'comm GB/step':>13}")
for n in (2, 4, 8):
    p = DeficitParams(
        total_memory_gb=TOTAL_GB,
        device_count=n,
        device_memory_gb=PER_DEVICE_GB,
        allreduce_factor=2.0,
        state_volume_gb=10.0,
        deficit_bandwidth_factor=SPILL_FACTOR,
    )
    print(f"{n:>8} {comm_cost(p):>13.1f}")
