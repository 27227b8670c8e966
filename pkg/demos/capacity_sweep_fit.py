#!/usr/bin/env python3
"""Sweep cache capacity, then fit both saturation families to the curve.

Usage:
    python3 demos/capacity_sweep_fit.py
    python3 demos/capacity_sweep_fit.py --n 50000 --clusters 500 --out curve.csv
"""

import argparse

from tradeoffs import (
    ExponentialSaturation,
    GeneratorConfig,
    PowerLaw,
    SimConfig,
    curve_to_csv,
    fit_curve,
    generate_trace,
    sweep,
)

ENTRY = 80_000_000  # one 720p entry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20_000)
    ap.add_argument("--clusters", type=int, default=300)
    ap.add_argument("--zipf", type=float, default=1.1)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--out", help="also write the curve as CSV")
    args = ap.parse_args()

    cfg = GeneratorConfig(num_requests=args.n, num_clusters=args.clusters,
                          dimension=64, zipf_exponent=args.zipf,
                          noise_sigma=0.05, seed=args.seed)
    trace = generate_trace(cfg)
    caps = [ENTRY * 2**i for i in range(9)]

    print(f"{args.n} requests over {args.clusters} clusters, zipf {args.zipf}")
    curve = sweep(trace, SimConfig(capacity_bytes=0), caps)
    for p in curve:
        bar = "#" * int(round(p.hit_rate * 40))
        print(f"  {p.capacity_gb:6.2f} GB  {p.hit_rate:6.3f}  {bar}")

    if args.out:
        with open(args.out, "w") as f:
            f.write(curve_to_csv(curve))
        print(f"wrote {args.out}")

    r_exp = fit_curve(curve, ExponentialSaturation, entry_size_gb=ENTRY / 1e9)
    r_pow = fit_curve(curve, PowerLaw)
    print(f"\nexp   beta={r_exp.model.beta:.4f}            residual {r_exp.residual:.4g}")
    print(f"power kappa={r_pow.model.kappa:.4f} gamma={r_pow.model.gamma:.4f} "
          f"residual {r_pow.residual:.4g}")
    winner = "exponential" if r_exp.residual <= r_pow.residual else "power law"
    print(f"better fit: {winner}")


if __name__ == "__main__":
    main()
