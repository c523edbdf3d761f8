"""Run every reproduction recipe and print one pass/fail line each.

    python3 scripts/reproduce_all.py [--out out] [--seeds 1,2,3,4,5] [--only mg,ks]
"""

import argparse
import sys

from rffrc.recipes import RECIPES, run_recipe


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="out")
    ap.add_argument("--seeds", default="1,2,3,4,5")
    ap.add_argument("--only", default=",".join(RECIPES))
    ap.add_argument("--full-scale", action="store_true")
    args = ap.parse_args()
    seeds = [int(s) for s in args.seeds.split(",")]
    failed = 0
    for name in args.only.split(","):
        opts = {"full_scale": True} if args.full_scale and name == "ks" else {}
        res = run_recipe(name, f"{args.out}/{name}", seeds, **opts)
        print(f"{res.summary()}  [{res.wall_clock_s:.0f}s]", flush=True)
        failed += not res.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
