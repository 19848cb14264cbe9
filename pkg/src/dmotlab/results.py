"""CSV/JSON emission of Monte-Carlo records."""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from dmotlab.simulation import RunRecord

METRIC_COLUMNS = ("run", "step", "ospa", "ospa_loc", "ospa_card", "ospa2", "n_truth", "n_est", "fuse_ms",
                  "node", "method", "bytes")
TRACK_COLUMNS = ("run", "step", "label_s", "label_alpha", "label_n", "x", "y", "method")
AVERAGED = ("ospa", "ospa_loc", "ospa_card", "ospa2", "fuse_ms", "bytes")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def per_run_means(records: Sequence[RunRecord]) -> dict[tuple[str, int], dict[str, float]]:
    """Per (method, run): the mean of each averaged field over steps, plus cardinality error."""
    groups: dict[tuple[str, int], list[RunRecord]] = defaultdict(list)
    for r in records:
        groups[(r.method, r.run)].append(r)
    out = {}
    for key, recs in sorted(groups.items()):
        row = {f: float(np.mean([getattr(r, f) for r in recs])) for f in AVERAGED}
        row["card_error"] = float(np.mean([abs(r.n_est - r.n_truth) for r in recs]))
        row["steps"] = len(recs)
        out[key] = row
    return out


def summarize(records: Sequence[RunRecord]) -> dict:
    """Per-method means of the per-run means."""
    runs = per_run_means(records)
    methods: dict[str, list[dict]] = defaultdict(list)
    for (method, run), row in runs.items():
        methods[method].append({"run": run, **row})
    summary = {}
    for method, rows in methods.items():
        agg = {f"mean_{f}": float(np.mean([r[f] for r in rows])) for f in (*AVERAGED, "card_error")}
        summary[method] = {"runs": len(rows), **agg, "per_run": rows}
    return summary


def emit_results(records: Sequence[RunRecord], out_dir) -> dict[str, Path]:
    """Write metrics.csv, tracks.csv and summary.json into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {name: out / name for name in ("metrics.csv", "tracks.csv", "summary.json")}
        with open(paths["metrics.csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(METRIC_COLUMNS)
            for r in records:
                w.writerow([_fmt(getattr(r, c)) for c in METRIC_COLUMNS])
        with open(paths["tracks.csv"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRACK_COLUMNS)
            for r in records:
                for lab, x, y in r.estimates:
                    w.writerow([r.run, r.step, lab.s, lab.alpha, lab.node, _fmt(x), _fmt(y), r.method])
        paths["summary.json"].write_text(json.dumps(summarize(records), indent=2, sort_keys=True))
    except OSError as exc:
        raise OSError(f"cannot write results to {out}: {exc}") from exc
    return paths
