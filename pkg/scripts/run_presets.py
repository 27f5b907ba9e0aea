"""Run shipped presets through the convergence harness and print the statistics table.

    python scripts/run_presets.py ma2_positive geometric_negative --workers 4 --outdir results
"""

import argparse
from pathlib import Path

from m1lab.cli import PRESETS, Resolved, atomic_write, build_parser, resolve_config, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("presets", nargs="*", default=list(PRESETS))
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    for name in args.presets:
        argv = ["converge", "--preset", name, "--workers", str(args.workers)]
        if args.seed is not None:
            argv += ["--seed", str(args.seed)]
        rep = run_experiment(Resolved(resolve_config(build_parser().parse_args(argv))))
        atomic_write(out / f"{name}.json", rep.to_json())
        atomic_write(out / f"{name}.csv", rep.to_csv())
        print(f"== {name}: {'passed' if rep.passed else 'FAILED'}"
              f" ({sum(rep.header['runtimes'].values()):.1f}s)")
        for n, t, comp, stat, value in rep.rows():
            print(f"  n={n:<6} t={'' if t is None else t!s:<4} {comp:<6} {stat:<15} {value:.4f}")
        for a in rep.body["assertions"]:
            print(f"  {'ok  ' if a['passed'] else 'FAIL'} {a['name']}: {a['value']:.4g} <= {a['threshold']:.4g}")


if __name__ == "__main__":
    main()
