"""
Discrete-event simulator for a uni-processor, single-thread runtime:
non-preemptive fixed-priority dispatch of run-to-completion synchronous sets.
Used as an independent oracle for the response-time analysis.
"""
from __future__ import annotations

import heapq
import zlib
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd

from src.analysis import arrival_time
from src.errors import NoObservations, ValidationFailed
from src.model import ArrivalPattern, LinkKind, SystemModel, natural_key, sync_set_cost, validate


class Phasing(str, Enum):
    CRITICAL = "critical_instant"
    RANDOM = "random_offsets"


class JitterMode(str, Enum):
    MAX = "max_always"
    RANDOM = "random_per_release"


@dataclass(frozen=True)
class SimConfig:
    duration: int
    seed: int = 0
    phasing: Phasing = Phasing.CRITICAL
    jitter_mode: JitterMode = JitterMode.MAX

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


class RecordKind(str, Enum):
    ARRIVAL = "arrival"
    START = "start"
    FINISH = "finish"
    RESPONSE = "response"


@dataclass(frozen=True)
class TraceRecord:
    kind: RecordKind
    action: str
    q: int
    time: int
    nominal: int | None = None
    response: int | None = None


@dataclass(frozen=True)
class SimTrace:
    records: tuple[TraceRecord, ...] = ()

    def responses(self, action_id: str | None = None) -> list[TraceRecord]:
        return [
            r for r in self.records
            if r.kind == RecordKind.RESPONSE and (action_id is None or r.action == action_id)
        ]


TRACE_COLUMNS = ["kind", "action", "q", "time", "nominal", "response"]


# ===========================
# ARRIVALS
# ===========================
def transaction_stream(seed: int, transaction_id: str) -> np.random.Generator:
    """Independent stream per transaction; adding a transaction leaves the others' draws unchanged."""
    return np.random.default_rng([seed, zlib.crc32(transaction_id.encode("utf-8"))])


def generate_arrivals(
    pattern: ArrivalPattern,
    cfg: SimConfig,
    rng: np.random.Generator,
    phase: int = 0,
) -> list[tuple[int, int]]:
    """(nominal, released) pairs for every nominal arrival in [0, duration]."""
    if cfg.phasing == Phasing.RANDOM:
        phase = int(rng.integers(0, pattern.outer_period))

    out: list[tuple[int, int]] = []
    q = 1
    last_release = None
    while True:
        nominal = phase + arrival_time(q, pattern)
        if nominal > cfg.duration:
            break

        if cfg.jitter_mode == JitterMode.MAX:
            delay = pattern.jitter
        else:
            delay = int(rng.integers(0, pattern.jitter + 1))

        released = nominal + delay
        # events of one transaction are delivered in order
        if last_release is not None and released < last_release:
            released = last_release
        out.append((nominal, released))
        last_release = released
        q += 1
    return out


def critical_phases(model: SystemModel) -> dict[str, int]:
    """
    Phases that align every release (under max jitter) at one instant, with the
    costliest lower-priority root released one tick earlier so it blocks.
    """
    if not model.transactions:
        return {}

    max_jitter = max(t.arrival.jitter for t in model.transactions)
    roots = {t.id: model.action(t.root_action_id) for t in model.transactions}
    top = max(r.priority for r in roots.values())

    lower = [t for t in model.transactions if roots[t.id].priority < top]
    blocker = None
    if lower:
        blocker = min(
            lower,
            key=lambda t: (-sync_set_cost(model, t.root_action_id), roots[t.id].priority, natural_key(t.id)),
        ).id

    base = max_jitter + (1 if blocker else 0)
    phases = {t.id: base - t.arrival.jitter for t in model.transactions}
    if blocker:
        phases[blocker] -= 1
    return phases


# ===========================
# SIMULATION
# ===========================
class _Runner:
    def __init__(self, model: SystemModel):
        self.model = model
        self.queue: list = []
        self.records: list[TraceRecord] = []
        self._seq = 0

    def enqueue(self, action_id: str, q: int, nominal: int, released: int):
        act = self.model.action(action_id)
        self.records.append(TraceRecord(RecordKind.ARRIVAL, action_id, q, released, nominal=nominal))
        key = (-act.priority, released, natural_key(act.transaction_id), q, natural_key(action_id), self._seq)
        self._seq += 1
        heapq.heappush(self.queue, (key, action_id, q, nominal))

    def execute(self, action_id: str, q: int, nominal: int, t: int) -> int:
        act = self.model.action(action_id)
        self.records.append(TraceRecord(RecordKind.START, action_id, q, t))

        for sub in act.sub_actions:
            t += sub.exec_time
            if sub.generates is None:
                continue
            if sub.generates.kind == LinkKind.CALL:
                callee = sub.generates.target
                self.records.append(TraceRecord(RecordKind.ARRIVAL, callee, q, t, nominal=nominal))
                t = self.execute(callee, q, nominal, t)
            else:
                self.enqueue(sub.generates.target, q, nominal, t)

        self.records.append(TraceRecord(RecordKind.FINISH, action_id, q, t))
        self.records.append(TraceRecord(RecordKind.RESPONSE, action_id, q, t, nominal=nominal, response=t - nominal))
        return t


def simulate(model: SystemModel, cfg: SimConfig) -> SimTrace:
    violations = validate(model)
    if violations:
        raise ValidationFailed(violations)

    phases = critical_phases(model) if cfg.phasing == Phasing.CRITICAL else {}

    releases = []
    for tx in model.transactions:
        rng = transaction_stream(cfg.seed, tx.id)
        for q, (nominal, released) in enumerate(
            generate_arrivals(tx.arrival, cfg, rng, phase=phases.get(tx.id, 0)), start=1
        ):
            releases.append((released, natural_key(tx.id), q, nominal, tx.root_action_id))
    releases.sort()

    runner = _Runner(model)
    t = 0
    nxt = 0
    while True:
        while nxt < len(releases) and releases[nxt][0] <= t:
            released, _, q, nominal, root = releases[nxt]
            runner.enqueue(root, q, nominal, released)
            nxt += 1

        if not runner.queue:
            if nxt >= len(releases):
                break
            t = releases[nxt][0]
            continue

        _, action_id, q, nominal = heapq.heappop(runner.queue)
        t = runner.execute(action_id, q, nominal, t)

    return SimTrace(tuple(runner.records))


# ===========================
# OBSERVATIONS
# ===========================
def max_observed(trace: SimTrace, action_id: str) -> int:
    values = [r.response for r in trace.responses(action_id)]
    if not values:
        raise NoObservations(action_id)
    return max(values)


def worst_responses(trace: SimTrace) -> dict[str, TraceRecord]:
    """Per action, the response record with the largest value (earliest on ties)."""
    worst: dict[str, TraceRecord] = {}
    for r in trace.responses():
        if r.action not in worst or r.response > worst[r.action].response:
            worst[r.action] = r
    return worst


def trace_frame(trace: SimTrace) -> pd.DataFrame:
    rows = [
        {
            "kind": r.kind.value,
            "action": r.action,
            "q": r.q,
            "time": r.time,
            "nominal": r.nominal,
            "response": r.response,
        }
        for r in trace.records
    ]
    df = pd.DataFrame(rows, columns=TRACE_COLUMNS)
    for col in ["nominal", "response"]:
        df[col] = df[col].astype("Int64")
    return df


def observed_table(trace: SimTrace) -> pd.DataFrame:
    df = trace_frame(trace)
    df = df[df["kind"] == RecordKind.RESPONSE.value]
    if df.empty:
        return pd.DataFrame(columns=["action", "responses", "max_observed"])

    table = (
        df.groupby("action", as_index=False)
        .agg(
            responses=("response", "count"),
            max_observed=("response", "max"),
        )
    )
    order = sorted(table["action"], key=natural_key)
    return table.set_index("action").loc[order].reset_index()
