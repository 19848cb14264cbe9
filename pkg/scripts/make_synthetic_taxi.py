"""Generate a taxi-style trajectory CSV (time,track_id,x,y) on a Manhattan street grid.

Vehicles drive along streets spaced 250 m apart, turning at random
intersections, and report a GPS fix every 15 s with a few metres of noise.
"""

import argparse
import csv

import numpy as np


def drive(rng, t_start, t_end, half_w, half_h, block=250.0, dt=15.0):
    pos = np.array([rng.choice(np.arange(-half_w + block, half_w, block)),
                    rng.choice(np.arange(-half_h + block, half_h, block))], float)
    heading = np.array(rng.choice([(1, 0), (-1, 0), (0, 1), (0, -1)]), float)
    speed = rng.uniform(1.0, 2.0)
    out = []
    t = t_start
    while t <= t_end:
        out.append((t, *pos))
        step = speed * dt
        while step > 1e-9:
            along = pos @ heading
            nxt = (np.floor(along / block + 1e-9) + 1) * block
            run = min(step, nxt - along)
            pos = pos + heading * run
            step -= run
            if step > 1e-9 or abs(run - (nxt - along)) < 1e-9:
                if rng.uniform() < 0.3:
                    heading = np.array([-heading[1], heading[0]]) * rng.choice([-1, 1])
                if abs(pos[0]) > half_w - block or abs(pos[1]) > half_h - block:
                    inward = -np.sign(pos) * (np.abs(pos) > np.array([half_w, half_h]) - block)
                    if np.any(inward):
                        heading = inward / np.linalg.norm(inward)
        t += dt
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="src/dmotlab/data/synthetic_taxi.csv")
    ap.add_argument("--vehicles", type=int, default=12)
    ap.add_argument("--duration", type=float, default=600.0)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    rows = []
    for vid in range(args.vehicles):
        start = float(rng.choice(np.arange(0.0, args.duration / 3, 15.0)))
        end = float(min(args.duration, start + rng.uniform(0.5, 1.0) * args.duration))
        for t, x, y in drive(rng, start, end, 1500.0, 1000.0):
            rows.append((t, f"taxi{vid:02d}", x + rng.normal(0, 3.0), y + rng.normal(0, 3.0)))
    rows.sort()
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time", "track_id", "x", "y"])
        for t, tid, x, y in rows:
            w.writerow([f"{t:.1f}", tid, f"{x:.2f}", f"{y:.2f}"])
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
