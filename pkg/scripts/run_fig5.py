"""Final gaps of T-MWM, MWM and CTO for T=4, N=1..10."""

import argparse

from dcswitch.experiments import reproduce


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="results")
    p.add_argument("--horizon", type=int, help="override the default slot count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    a = p.parse_args()
    manifest = reproduce("fig5", a.out, horizon=a.horizon, seed=a.seed, workers=a.workers)
    print(f"wrote {', '.join(manifest['files'])} to {a.out} in {manifest['wall_clock_seconds']} s")


if __name__ == "__main__":
    main()
