"""Time-series export and run summaries.

One CSV row per (step, node) plus a per-step aggregate row, every numeric
field printed with enough digits to survive a parse round trip unchanged.
Identical runs therefore export byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .simulation import SimulationRecord

CSV_COLUMNS = (
    "k", "node", "p_D", "p_d", "delta_pG", "p_G",
    "p_F_net", "p_net", "p_e", "coord_iters", "gen_iters", "flow_iters",
)

TIMESERIES_FILENAME = "timeseries.csv"
SUMMARY_FILENAME = "summary.txt"


def _fmt(x: float) -> str:
    # 17 significant digits: parses back to the exact same float.
    return format(float(x), ".17g")


def write_timeseries_csv(record: SimulationRecord, path) -> None:
    """Write the per-step, per-node series with a trailing aggregate row per step."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for k in range(record.horizon):
            iters = (
                str(int(record.coord_iters[k])),
                str(int(record.gen_iters[k])),
                str(int(record.flow_iters[k])),
            )
            p_D = _fmt(record.p_D[k])
            for i in range(record.n):
                writer.writerow((
                    str(k + 1), str(i + 1), p_D,
                    _fmt(record.p_d[k, i]), _fmt(record.delta[k, i]),
                    _fmt(record.p_G[k, i]), _fmt(record.p_F_net[k, i]),
                    _fmt(record.p[k, i]), _fmt(record.p_e[k, i]),
                    *iters,
                ))
            writer.writerow((
                str(k + 1), "total", p_D,
                _fmt(record.p_d[k].sum()), _fmt(record.delta[k].sum()),
                _fmt(record.p_G[k].sum()), _fmt(record.p_F_net[k].sum()),
                _fmt(record.p[k].sum()), _fmt(record.p_e[k].sum()),
                *iters,
            ))


def summarize(record: SimulationRecord) -> str:
    """Human-readable run summary: worst-case errors, balance, and rounds."""
    failed = [a.step for a in record.audits if not a.passed]
    lines = [
        f"mode:                 {record.mode}",
        f"steps:                {record.horizon}",
        f"nodes:                {record.n}",
        f"max |error|:          {record.max_abs_error:.6e}",
        f"max balance residual: {record.max_balance_residual:.6e}",
        f"max flow magnitude:   {float(np.max(np.abs(record.p_F_net), initial=0.0)):.6e}",
        f"max consensus rounds: {record.max_iters_used}"
        f" (coordination {int(record.coord_iters.max(initial=0))},"
        f" generation {int(record.gen_iters.max(initial=0))},"
        f" flow {int(record.flow_iters.max(initial=0))})",
    ]
    if failed:
        lines.append(f"audits:               FAILED at steps {failed}")
    else:
        lines.append(f"audits:               all {record.horizon} steps passed")
    return "\n".join(lines) + "\n"


def export_record(record: SimulationRecord, out_dir) -> tuple[Path, Path]:
    """Write timeseries.csv and summary.txt under out_dir; returns their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / TIMESERIES_FILENAME
    summary_path = out / SUMMARY_FILENAME
    write_timeseries_csv(record, csv_path)
    summary_path.write_text(summarize(record), encoding="utf-8")
    return csv_path, summary_path
