"""
Metrics Service – per-run metrics from traces, across-seed aggregation.

Every number in a report is derived from three trace tables, so a report
recomputed from the persisted CSVs equals the in-memory one:
    sinr.csv       serving-link SINR samples
    packets.csv    per (window, vehicle) packet counters
    handovers.csv  handover events
"""
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from app.models.metrics import ECHO_FIELDS, METRIC_FIELDS, AggregateReport, MetricSummary, MetricsReport
from app.utils.errors import AggregationError
from app.utils.helpers import read_csv, write_csv, write_frame

logger = logging.getLogger(__name__)

SINR_TRACE_COLUMNS = ["t", "vehicle_id", "tower_id", "sinr_db"]
SUMMARY_COLUMNS = ["metric", "policy", "density", "mean", "ci95", "n"]
RUN_META_FILE = "run.json"


@dataclass
class RunTraces:
    """Everything a report needs from one finished run."""
    sinr: pd.DataFrame
    packets: pd.DataFrame
    handovers: pd.DataFrame
    echo: Dict[str, object]
    duration_s: float
    n_vehicles: int


def _blank(value) -> bool:
    if value is None:
        return True
    if isinstance(value, str):
        return value == ""
    return isinstance(value, float) and math.isnan(value)


# ─── per run ──────────────────────────────────────────────────────────────────

def per_run_report(traces: RunTraces) -> MetricsReport:
    """The evaluation metrics of one run."""
    packets = traces.packets
    generated = int(packets["generated"].sum()) if len(packets) else 0
    delivered = int(packets["delivered"].sum()) if len(packets) else 0
    lost = generated - delivered
    empty = generated == 0 and len(traces.sinr) == 0 and len(traces.handovers) == 0

    avg_sinr = float(traces.sinr["sinr_db"].mean()) if len(traces.sinr) else 0.0

    flows_time = traces.duration_s * traces.n_vehicles
    if len(packets) and flows_time > 0:
        in_run = packets["delivered_in_run"].astype(float)
        size = packets["size_bytes"].astype(float)
        avg_throughput = float((8.0 * size * in_run).sum() / flows_time)
        ptr_pps = float(in_run.sum() / flows_time)
        ok = packets["delivered"] > 0
        if ok.any():
            rate = 8.0 * size[ok] / packets.loc[ok, "latency_s"].astype(float)
            ptr_bps = float((rate * packets.loc[ok, "delivered"].astype(float)).sum() / float(delivered))
        else:
            ptr_bps = 0.0
    else:
        avg_throughput = ptr_pps = ptr_bps = 0.0

    handover_count = pingpong_count = 0
    for frm, to, pp in zip(traces.handovers.get("from", []), traces.handovers.get("to", []),
                           traces.handovers.get("is_pingpong", [])):
        if not _blank(frm) and not _blank(to):
            handover_count += 1
            pingpong_count += int(pp)

    return MetricsReport(
        avg_sinr_db=avg_sinr,
        avg_throughput_bps=avg_throughput,
        ptr_pps=ptr_pps,
        ptr_bps=ptr_bps,
        packet_loss_ratio=lost / generated if generated else 0.0,
        packet_delivery_ratio=delivered / generated if generated else 0.0,
        handover_count=handover_count,
        pingpong_count=pingpong_count,
        generated_packets=generated,
        delivered_packets=delivered,
        lost_packets=lost,
        sinr_samples=int(len(traces.sinr)),
        empty_run=empty,
        **{k: traces.echo[k] for k in ECHO_FIELDS},
    )


def write_run_meta(directory: os.PathLike, traces: RunTraces) -> Path:
    path = Path(directory) / RUN_META_FILE
    meta = {"echo": traces.echo, "duration_s": traces.duration_s, "n_vehicles": traces.n_vehicles}
    path.write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def load_traces(directory: os.PathLike) -> RunTraces:
    """Read a run directory back into RunTraces."""
    from app.services.handover_logic import HANDOVER_TRACE_COLUMNS
    from app.services.traffic_service import PACKET_TRACE_COLUMNS

    directory = Path(directory)
    meta = json.loads((directory / RUN_META_FILE).read_text(encoding="utf-8"))
    return RunTraces(
        sinr=read_csv(directory / "sinr.csv", SINR_TRACE_COLUMNS),
        packets=read_csv(directory / "packets.csv", PACKET_TRACE_COLUMNS),
        handovers=read_csv(directory / "handovers.csv", HANDOVER_TRACE_COLUMNS),
        echo=meta["echo"],
        duration_s=float(meta["duration_s"]),
        n_vehicles=int(meta["n_vehicles"]),
    )


def report_from_dir(directory: os.PathLike) -> MetricsReport:
    return per_run_report(load_traces(directory))


def report_row(report: MetricsReport) -> dict:
    return report.model_dump()


REPORT_COLUMNS = list(MetricsReport.model_fields.keys())


def write_report(directory: os.PathLike, report: MetricsReport) -> Path:
    return write_csv(Path(directory) / "report.csv", [report_row(report)], REPORT_COLUMNS)


def write_runs(output_dir: os.PathLike, reports: Sequence[MetricsReport]) -> Path:
    """runs.csv: one row per run, ordered by (policy, density, seed)."""
    ordered = sorted(reports, key=lambda r: (r.policy, r.density, r.seed))
    return write_csv(Path(output_dir) / "runs.csv", [report_row(r) for r in ordered], REPORT_COLUMNS)


def read_report(path: os.PathLike) -> MetricsReport:
    frame = pd.read_csv(path, float_precision="round_trip")
    row = frame.iloc[0].to_dict()
    return MetricsReport.model_validate({k: (v.item() if hasattr(v, "item") else v) for k, v in row.items()})


# ─── aggregation ──────────────────────────────────────────────────────────────

def t_quantile(n: int, confidence: float = 0.95) -> float:
    """Two-sided Student-t critical value for n samples (n-1 dof)."""
    return float(stats.t.ppf(0.5 + confidence / 2.0, n - 1))


def mean_ci(values: Sequence[float], confidence: float = 0.95):
    """(mean, half-width). Half-width is None for fewer than two values."""
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, None
    sd = float(arr.std(ddof=1))
    return mean, t_quantile(arr.size, confidence) * sd / math.sqrt(arr.size)


def aggregate(reports: Sequence[MetricsReport]) -> AggregateReport:
    """Mean and 95% CI per metric over runs that differ only by seed."""
    if not reports:
        raise ValueError("nothing to aggregate")
    reference = reports[0].config_key()
    for other in reports[1:]:
        key = other.config_key()
        diff = {k: (reference[k], key[k]) for k in reference if reference[k] != key[k]}
        if diff:
            raise AggregationError(diff)
    if len(reports) < 2:
        logger.warning("Aggregating a single report: no confidence interval")

    metrics = {}
    for name in METRIC_FIELDS:
        mean, half = mean_ci([getattr(r, name) for r in reports])
        metrics[name] = MetricSummary(mean=mean, ci95=half)
    return AggregateReport(
        policy=reports[0].policy,
        density=reports[0].density,
        n_seeds=len(reports),
        metrics=metrics,
        config=reference,
    )


def summary_rows(aggregates: Sequence[AggregateReport]) -> List[dict]:
    rows = []
    for agg in sorted(aggregates, key=lambda a: (a.policy, a.density)):
        for name in METRIC_FIELDS:
            m = agg.metrics[name]
            rows.append({"metric": name, "policy": agg.policy, "density": agg.density, "mean": m.mean,
                         "ci95": m.ci95 if m.ci95 is not None else float("nan"), "n": agg.n_seeds})
    return rows


def write_summary(output_dir: os.PathLike, aggregates: Sequence[AggregateReport]) -> Path:
    return write_csv(Path(output_dir) / "summary.csv", summary_rows(aggregates), SUMMARY_COLUMNS)


def write_plot_data(output_dir: os.PathLike, aggregates: Sequence[AggregateReport]) -> List[Path]:
    """plot_<metric>.csv: density rows, <policy>_mean / <policy>_ci95 columns."""
    frame = pd.DataFrame(summary_rows(aggregates), columns=SUMMARY_COLUMNS)
    paths = []
    out = Path(output_dir) / "plots"
    out.mkdir(parents=True, exist_ok=True)
    for name in METRIC_FIELDS:
        part = frame[frame["metric"] == name]
        wide = part.pivot(index="density", columns="policy", values=["mean", "ci95"])
        wide.columns = [f"{policy}_{stat}" for stat, policy in wide.columns]
        wide = wide.reset_index().sort_values("density")
        wide = wide[["density"] + sorted(c for c in wide.columns if c != "density")]
        paths.append(write_frame(out / f"plot_{name}.csv", wide))
    return paths
