"""Two crossing objects seen by two nodes, with the clustering forced to swap
them at the crossing step. Prints how often a global label ends up on the
wrong object for a range of w_max values.

    python3 scripts/forced_swap.py --runs 50
"""

import argparse

from dmotlab.experiments import label_switch_rate


def main():
    ap = argparse.ArgumentParser(description="forced association error at a crossing")
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--w-max", default="0,1,2,3,5,8")
    args = ap.parse_args()
    print(f"{'w_max':>6s} {'switch':>8s} {'relabel':>8s}")
    for w in (int(v) for v in args.w_max.split(",")):
        s, r = label_switch_rate(w, args.runs, args.seed)
        print(f"{w:6d} {s:8.0%} {r:8.0%}")


if __name__ == "__main__":
    main()
