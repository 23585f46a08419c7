"""
Sweep Service – densities × seeds × policies, then per-(policy, density)
aggregation into summary.csv and plot data.

Runs are independent: each one owns output_dir/<policy>/<density>/<seed>/ and
its own random streams, so `jobs > 1` only changes wall-clock time.
"""
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from app.config.scenario import override
from app.config.settings import settings
from app.models.metrics import AggregateReport, MetricsReport
from app.models.plan import RunPlan
from app.models.scenario import ScenarioConfig
from app.services import metrics_service
from app.services.simulation_service import simulate
from app.utils.helpers import ensure_writable_dir, run_dir

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class RunKey:
    policy: str
    density: int
    seed: int


@dataclass
class RunOutcome:
    key: RunKey
    report: Optional[MetricsReport] = None
    error: Optional[str] = None
    resumed: bool = False

    @property
    def ok(self) -> bool:
        return self.report is not None


@dataclass
class SweepResult:
    outcomes: List[RunOutcome] = field(default_factory=list)
    aggregates: List[AggregateReport] = field(default_factory=list)
    runs_path: Optional[Path] = None
    summary_path: Optional[Path] = None
    plot_paths: List[Path] = field(default_factory=list)

    @property
    def failures(self) -> List[RunOutcome]:
        return [o for o in self.outcomes if not o.ok]

    @property
    def simulated(self) -> int:
        return sum(1 for o in self.outcomes if o.ok and not o.resumed)


def plan_runs(plan: RunPlan) -> List[RunKey]:
    return [RunKey(p, d, s) for d in plan.densities for s in plan.seeds for p in plan.policies]


def _existing_report(output_dir: Path, key: RunKey) -> Optional[MetricsReport]:
    path = run_dir(output_dir, key.policy, key.density, key.seed) / "report.csv"
    if not path.exists():
        return None
    try:
        return metrics_service.read_report(path)
    except Exception as exc:
        logger.warning("Ignoring unreadable %s: %s", path, exc)
        return None


def _run_one(config_data: dict, key: RunKey, output_dir: str) -> Tuple[RunKey, Optional[dict], Optional[str]]:
    """Worker entry point; takes and returns plain data so it pickles."""
    try:
        config = override(ScenarioConfig.model_validate(config_data), n_vehicles=key.density)
        result = simulate(config, seed=key.seed, policy=key.policy, output_dir=output_dir)
        return key, result.report.model_dump(), None
    except Exception as exc:
        logger.exception("Run %s failed", key)
        return key, None, f"{type(exc).__name__}: {exc}"


def _aggregate(outcomes: List[RunOutcome]) -> List[AggregateReport]:
    groups: Dict[Tuple[str, int], List[MetricsReport]] = {}
    for outcome in sorted(outcomes, key=lambda o: o.key):
        if outcome.ok:
            groups.setdefault((outcome.key.policy, outcome.key.density), []).append(outcome.report)
    return [metrics_service.aggregate(reports) for _, reports in sorted(groups.items())]


def sweep(plan: RunPlan, config: ScenarioConfig, output_dir: os.PathLike = None, resume: bool = False,
          jobs: int = 1) -> SweepResult:
    """Run every planned (density, seed, policy), then aggregate.

    A failing run is recorded and the sweep carries on. With `resume`, runs
    whose report.csv already exists are read back instead of simulated.
    """
    out = ensure_writable_dir(output_dir or plan.output_dir or settings.OUTPUT_DIR)
    keys = plan_runs(plan)
    outcomes: List[RunOutcome] = []
    pending: List[RunKey] = []
    for key in keys:
        existing = _existing_report(out, key) if resume else None
        if existing is not None:
            outcomes.append(RunOutcome(key, report=existing, resumed=True))
        else:
            pending.append(key)

    logger.info("🔄 Sweep: %d runs planned, %d to simulate (%d resumed), jobs=%d",
                len(keys), len(pending), len(keys) - len(pending), jobs)

    config_data = config.model_dump()
    with tqdm(total=len(pending), desc="Sweep", unit="run", disable=not pending) as bar:
        if jobs <= 1:
            for key in pending:
                outcomes.append(_outcome(*_run_one(config_data, key, str(out))))
                bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_one, config_data, key, str(out)) for key in pending]
                for future in as_completed(futures):
                    outcomes.append(_outcome(*future.result()))
                    bar.update(1)

    outcomes.sort(key=lambda o: o.key)
    for failed in (o for o in outcomes if not o.ok):
        logger.error("❌ Run policy=%s density=%d seed=%d failed: %s",
                     failed.key.policy, failed.key.density, failed.key.seed, failed.error)

    aggregates = _aggregate(outcomes)
    result = SweepResult(outcomes=outcomes, aggregates=aggregates)
    reports = [o.report for o in outcomes if o.ok]
    if reports:
        result.runs_path = metrics_service.write_runs(out, reports)
    if aggregates:
        result.summary_path = metrics_service.write_summary(out, aggregates)
        result.plot_paths = metrics_service.write_plot_data(out, aggregates)
    logger.info("✅ Sweep finished: %d simulated, %d resumed, %d failed, %d aggregate rows",
                result.simulated, sum(o.resumed for o in outcomes), len(result.failures), len(aggregates))
    return result


def _outcome(key: RunKey, report: Optional[dict], error: Optional[str]) -> RunOutcome:
    if report is None:
        return RunOutcome(key, error=error)
    return RunOutcome(key, report=MetricsReport.model_validate(report))
