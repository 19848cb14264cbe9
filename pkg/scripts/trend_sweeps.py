"""Node-count, DBSCAN epsilon and w_max sweeps, printed as tables and saved as CSV.

    python3 scripts/trend_sweeps.py --out results/trends
    python3 scripts/trend_sweeps.py --which nodes --runs 5
"""

import argparse
import csv
from pathlib import Path

from dmotlab.experiments import linear_r2, relative_drop, sweep
from dmotlab.scenario import preset
from dmotlab.simulation import with_overrides

COLUMNS = ("mean_ospa", "mean_ospa2", "mean_card_error", "mean_fuse_ms", "mean_bytes")


def table(title, rows):
    print(f"\n{title}")
    print(f"{'value':>10s} " + " ".join(f"{c[5:]:>11s}" for c in COLUMNS))
    for v, row in rows.items():
        print(f"{v!s:>10s} " + " ".join(f"{row[c]:11.3f}" for c in COLUMNS))


def save(path, param, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([param, "runs", *COLUMNS])
        for v, row in rows.items():
            w.writerow([v, row["runs"], *(repr(row[c]) for c in COLUMNS)])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/trends")
    ap.add_argument("--runs", type=int, default=20)
    ap.add_argument("--which", choices=["nodes", "epsilon", "w_max", "all"], default="all")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    small = with_overrides(preset("hetero-small"), mc_runs=args.runs)

    if args.which in ("nodes", "all"):
        rows = sweep(small, "nodes", [1, 5, 10, 25], args.threads)
        table("hetero-small, CDP-WGL, connected nodes", rows)
        n = list(rows)
        print("OSPA drops:", ", ".join(f"{relative_drop(rows[a]['mean_ospa'], rows[b]['mean_ospa']):.1%}"
                                       for a, b in zip(n, n[1:])))
        print(f"fuse_ms linear fit R2 = {linear_r2(n, [rows[k]['mean_fuse_ms'] for k in n]):.3f}")
        save(out / "nodes.csv", "nodes", rows)

    if args.which in ("epsilon", "all"):
        rows = sweep(with_overrides(small, fusion="dbscan-wgl"), "epsilon", [2.5, 10.0, 30.0, 100.0, 250.0], args.threads)
        table("hetero-small, DBSCAN-WGL, epsilon [m]", rows)
        save(out / "epsilon.csv", "epsilon", rows)
        rows = sweep(with_overrides(small, fusion="meanshift-wgl"), "bandwidth", [10.0, 50.0, 250.0], args.threads)
        table("hetero-small, MeanShift-WGL, bandwidth [m]", rows)
        save(out / "bandwidth.csv", "bandwidth", rows)
        rows = sweep(small, "method", ["cdp-wgl", "cdp-unweighted"], args.threads)
        table("hetero-small, CDP", rows)
        save(out / "cdp.csv", "method", rows)

    if args.which in ("w_max", "all"):
        crossing = with_overrides(preset("crossing"), mc_runs=args.runs)
        rows = sweep(crossing, "w_max", [0, 1, 3, 5, 8], args.threads)
        table("crossing, CDP-WGL, w_max", rows)
        save(out / "w_max.csv", "w_max", rows)


if __name__ == "__main__":
    main()
