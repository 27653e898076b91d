"""
Cross-checks the analysis against the simulator: every observed response
must stay within the analysed worst-case bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from joblib import Parallel, delayed
from tqdm import tqdm

from src.analysis import AnalysisReport, analyze_system
from src.model import SystemModel, natural_key
from src.sim import JitterMode, Phasing, SimConfig, simulate, worst_responses


@dataclass(frozen=True)
class Counterexample:
    action: str
    q: int
    observed: int
    bound: int
    seed: int
    run: int

    def __str__(self):
        return (
            f"{self.action} q={self.q}: observed {self.observed} > bound {self.bound} "
            f"(run {self.run}, seed {self.seed})"
        )


@dataclass(frozen=True)
class CheckResult:
    report: AnalysisReport
    bounds: dict[str, int | None]
    observed: dict[str, int] = field(default_factory=dict)
    counterexamples: tuple[Counterexample, ...] = ()
    runs: int = 0

    @property
    def passed(self) -> bool:
        return not self.counterexamples


def default_duration(model: SystemModel) -> int:
    return 10 * max((t.arrival.outer_period for t in model.transactions), default=0) or 1


def run_configs(runs: int, duration: int, seed: int) -> list[SimConfig]:
    """Run 1 is the critical instant with maximal jitter; the rest are randomly phased."""
    cfgs = [SimConfig(duration, seed, Phasing.CRITICAL, JitterMode.MAX)]
    for r in range(1, runs):
        cfgs.append(SimConfig(duration, seed + r, Phasing.RANDOM, JitterMode.RANDOM))
    return cfgs


def _observe(model: SystemModel, cfg: SimConfig) -> dict[str, tuple[int, int]]:
    return {a: (rec.q, rec.response) for a, rec in worst_responses(simulate(model, cfg)).items()}


def check_model(
    model: SystemModel,
    runs: int = 20,
    duration: int | None = None,
    seed: int = 0,
    jobs: int = 1,
    inject_fault: bool = False,
    progress: bool = False,
) -> CheckResult:
    if runs < 1:
        raise ValueError(f"runs must be >= 1, got {runs}")

    report = analyze_system(model, jobs=1)
    bounds = {r.action_id: r.wcrt for r in report.results}
    if inject_fault:
        bounds = {a: (None if b is None else b - 1) for a, b in bounds.items()}

    cfgs = run_configs(runs, duration or default_duration(model), seed)
    pending = tqdm(cfgs, desc="🔎 simulating", unit="run", disable=not progress)
    if jobs == 1:
        per_run = [_observe(model, cfg) for cfg in pending]
    else:
        per_run = Parallel(n_jobs=jobs)(delayed(_observe)(model, cfg) for cfg in pending)

    observed: dict[str, int] = {}
    found: list[Counterexample] = []
    for run, (cfg, worst) in enumerate(zip(cfgs, per_run), start=1):
        for action, (q, value) in worst.items():
            observed[action] = max(observed.get(action, value), value)
            bound = bounds.get(action)
            # an unbounded result cannot be violated
            if bound is not None and value > bound:
                found.append(Counterexample(action, q, value, bound, cfg.seed, run))

    found.sort(key=lambda c: (c.run, natural_key(c.action)))
    return CheckResult(
        report=report,
        bounds=bounds,
        observed=dict(sorted(observed.items(), key=lambda kv: natural_key(kv[0]))),
        counterexamples=tuple(found),
        runs=len(cfgs),
    )
