"""Compare simulated limit marginals with the closed-form extremal CDF and the quadrature CF.

    python scripts/limit_selfcheck.py --draws 100000
"""

import argparse
import time

from m1lab.harness import ecf_distance, ks_statistic
from m1lab.limits import build_spec, sample_limit_batch, scaled_extremal_cdf, scaled_levy_cf

CASES = [(0.5, 1.0), (0.7, 1.0), (0.7, 0.4), (1.0, 0.5), (1.3, 0.8), (1.5, 0.7), (1.8, 0.5)]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--draws", type=int, default=10**5)
    ap.add_argument("--trunc-K", type=int)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    print(f"{'alpha':>5} {'p':>4} {'KS W(1)':>9} {'CF V(1)':>9} {'KS W(.5)':>9} {'CF V(.5)':>9} {'sec':>6}")
    for alpha, p in CASES:
        t0 = time.perf_counter()
        spec = build_spec(alpha, p, 1, 1.0, 1.0)
        V, W, _ = sample_limit_batch(spec, [0.5, 1.0], args.trunc_K, args.draws, args.seed)
        row = []
        for k, t in ((1, 1.0), (0, 0.5)):
            row.append(ks_statistic(W[:, k], scaled_extremal_cdf(spec, t)))
            row.append(ecf_distance(V[:, k], scaled_levy_cf(spec, t), (0.5, 1.0, 2.0)))
        print(f"{alpha:5.2f} {p:4.1f} " + " ".join(f"{v:9.4f}" for v in row) + f" {time.perf_counter() - t0:6.1f}")


if __name__ == "__main__":
    main()
