"""
Worst-case response-time analysis for non-preemptive, run-to-completion
fixed-priority dispatch with release jitter and sporadically periodic
(bursty) external events.

Time 0 is the critical instant: every transaction releases together and the
largest lower-priority synchronous set has just started. Instance q of the
analysed transaction is charged its q-1 predecessors in full; later
instances and other transactions are counted over the closed window [0, W].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from joblib import Parallel, delayed

from src.config import WINDOW_CAP
from src.errors import AnalysisOverflow, BusyPeriodOverflow, ValidationFailed, WindowOverflow
from src.model import (
    ArrivalPattern,
    SystemModel,
    Transaction,
    TriggerKind,
    async_root,
    causes,
    natural_key,
    partial_chain_cost,
    sync_set_cost,
    validate,
)


# ===========================
# TYPES
# ===========================
@dataclass(frozen=True)
class BurstPosition:
    outer: int  # M: completed outer periods
    inner: int  # m: inner-period offset inside the burst


@dataclass(frozen=True)
class InstanceTiming:
    q: int
    start: int
    finish: int
    response: int


@dataclass(frozen=True)
class ActionResult:
    action_id: str
    transaction_id: str
    priority: int
    deadline: int
    wcrt: int | None
    instances_examined: int
    per_instance: tuple[InstanceTiming, ...]
    feasible: bool
    blocking: int = 0
    busy_period: int | None = None
    diagnostics: tuple[str, ...] = ()

    @property
    def slack(self) -> int | None:
        return None if self.wcrt is None else self.deadline - self.wcrt


@dataclass(frozen=True)
class AnalysisReport:
    results: tuple[ActionResult, ...] = ()
    system_feasible: bool = True
    diagnostics: tuple[str, ...] = ()

    def result(self, action_id: str) -> ActionResult:
        for r in self.results:
            if r.action_id == action_id:
                return r
        raise KeyError(action_id)


# ===========================
# ARRIVALS
# ===========================
def burst_index(q: int, pattern: ArrivalPattern) -> BurstPosition:
    if q < 1:
        raise ValueError(f"instance index must be >= 1, got {q}")
    outer = (q - 1) // pattern.burst_count
    return BurstPosition(outer, (q - 1) - outer * pattern.burst_count)


def arrival_time(q: int, pattern: ArrivalPattern) -> int:
    pos = burst_index(q, pattern)
    return pos.outer * pattern.outer_period + pos.inner * pattern.inner_period


def releases_in(pattern: ArrivalPattern, window: int) -> int:
    """Releases that can fall in the closed window [0, window] under the pattern's jitter."""
    if window < 0:
        return 0
    span = pattern.jitter + window
    bursts = span // pattern.outer_period
    in_burst = (span - bursts * pattern.outer_period) // pattern.inner_period + 1
    return min(pattern.burst_count, in_burst) + bursts * pattern.burst_count


def interference_count_other(k: Transaction | ArrivalPattern, W: int) -> int:
    pattern = k.arrival if isinstance(k, Transaction) else k
    return releases_in(pattern, W)


def hyperperiod(model: SystemModel) -> int:
    periods = [t.arrival.outer_period for t in model.transactions]
    return math.lcm(*periods) if periods else 1


def transaction_cost(model: SystemModel, transaction_id: str) -> int:
    return sum(a.exec_time for a in model.actions_of(transaction_id))


def utilisation(model: SystemModel) -> Fraction:
    return sum(
        (Fraction(t.arrival.burst_count * transaction_cost(model, t.id), t.arrival.outer_period)
         for t in model.transactions),
        Fraction(0),
    )


def default_max_window(model: SystemModel) -> int:
    """
    Window guard used when the model does not set one.

    Below full utilisation every fixed point stays under
    (B + C_max + Σ n·C·(1 + ⌈J/T⌉)) / (1 − U). At or above it no such
    bound exists and the hyperperiod plus the largest jitter and
    synchronous set is used instead.
    """
    max_set = max((sync_set_cost(model, a.id) for a in model.actions), default=0)
    U = utilisation(model)
    if U < 1:
        costs = {t.id: transaction_cost(model, t.id) for t in model.transactions}
        load = sum(
            t.arrival.burst_count * costs[t.id] * (1 + -(-t.arrival.jitter // t.arrival.outer_period))
            for t in model.transactions
        )
        bound = math.ceil((max_set + max(costs.values(), default=0) + load) / (1 - U))
        return min(WINDOW_CAP, max(1, bound))

    max_jitter = max((t.arrival.jitter for t in model.transactions), default=0)
    return min(WINDOW_CAP, hyperperiod(model) + max_jitter + max_set)


def window_limit(model: SystemModel) -> int:
    return model.config.max_window or default_max_window(model)


# ===========================
# PRIORITY SUMS
# ===========================
def hep_cost(model: SystemModel, transaction_id: str, priority: int) -> int:
    """Execution per release of transaction `transaction_id` at priority >= `priority`."""
    return sum(a.exec_time for a in model.actions_of(transaction_id) if a.priority >= priority)


def not_caused_cost(model: SystemModel, i: str, priority: int) -> int:
    """Same-transaction execution at priority >= `priority` from actions that i does not cause."""
    tid = model.action(i).transaction_id
    return sum(
        a.exec_time for a in model.actions_of(tid)
        if a.priority >= priority and not causes(model, i, a.id)
    )


# ===========================
# BLOCKING + INTERFERENCE
# ===========================
def blocking(model: SystemModel, i: str) -> int:
    prio = model.action(i).priority
    return max(
        (sync_set_cost(model, k.id) for k in model.actions if k.id != i and k.priority < prio),
        default=0,
    )


def interference_other(model: SystemModel, i: str, k: str, W: int) -> int:
    act = model.action(i)
    if k == act.transaction_id:
        raise ValueError(f"{k} is the transaction of {i}; use the same-transaction terms")
    tx = model.transaction(k)
    return interference_count_other(tx, W) * hep_cost(model, k, act.priority)


def interference_same_past(model: SystemModel, i: str, q: int) -> int:
    act = model.action(i)
    pattern = model.transaction(act.transaction_id).arrival
    pos = burst_index(q, pattern)
    return (pos.outer * pattern.burst_count + pos.inner) * hep_cost(model, act.transaction_id, act.priority)


def _own_count(pattern: ArrivalPattern, W: int, with_jitter: bool) -> int:
    if not with_jitter:
        pattern = replace(pattern, jitter=0)
    return releases_in(pattern, W)


def interference_same_future(model: SystemModel, i: str, q: int, W: int) -> int:
    act = model.action(i)
    pattern = model.transaction(act.transaction_id).arrival
    pos = burst_index(q, pattern)
    count = _own_count(pattern, W, model.config.own_jitter_window) - (pos.outer * pattern.burst_count + pos.inner)
    return max(0, count) * not_caused_cost(model, i, act.priority)


# ===========================
# FIXED POINTS
# ===========================
@dataclass(frozen=True)
class _Terms:
    """Per-anchor constants of the start-time equations (anchor = async root)."""
    anchor: str
    pattern: ArrivalPattern
    blocking: int
    hep_same: int
    not_caused: int
    others: tuple[tuple[ArrivalPattern, int], ...]
    own_jitter: bool
    limit: int

    @classmethod
    def build(cls, model: SystemModel, anchor: str) -> _Terms:
        act = model.action(anchor)
        others = tuple(
            (t.arrival, hep_cost(model, t.id, act.priority))
            for t in model.transactions if t.id != act.transaction_id
        )
        return cls(
            anchor=anchor,
            pattern=model.transaction(act.transaction_id).arrival,
            blocking=blocking(model, anchor),
            hep_same=hep_cost(model, act.transaction_id, act.priority),
            not_caused=not_caused_cost(model, anchor, act.priority),
            others=tuple(o for o in others if o[1] > 0),
            own_jitter=model.config.own_jitter_window,
            limit=window_limit(model),
        )

    def other(self, W: int) -> int:
        return sum(releases_in(p, W) * c for p, c in self.others)

    def past_count(self, q: int) -> int:
        pos = burst_index(q, self.pattern)
        return pos.outer * self.pattern.burst_count + pos.inner

    def future_count(self, q: int, W: int) -> int:
        return _own_count(self.pattern, W, self.own_jitter) - self.past_count(q)


def _least_fixed_point(f, seed: int, limit: int, action_id: str, q: int | None = None) -> int:
    W = seed
    while True:
        if W > limit:
            raise WindowOverflow(action_id, limit, q)
        nxt = f(W)
        if nxt == W:
            return W
        W = nxt


def _start_async(terms: _Terms, q: int, action_id: str) -> int:
    past = terms.past_count(q) * terms.hep_same

    def rhs(W: int) -> int:
        return terms.blocking + terms.other(W) + past + max(0, terms.future_count(q, W)) * terms.not_caused

    return _least_fixed_point(rhs, terms.blocking + past, terms.limit, action_id, q)


def _start_sync(terms: _Terms, q: int, action_id: str, chain: int) -> int:
    past = terms.past_count(q) * terms.hep_same

    def rhs(W: int) -> int:
        later = max(0, terms.future_count(q, W) - 1)
        return (
            terms.blocking + terms.other(W) + past
            + chain + terms.not_caused + later * terms.not_caused
        )

    return _least_fixed_point(rhs, terms.blocking + past, terms.limit, action_id, q)


def start_time_async(model: SystemModel, i: str, q: int) -> int:
    if model.action(i).trigger.kind == TriggerKind.CALL:
        raise ValueError(f"{i} is synchronously called; use start_time_sync")
    return _start_async(_Terms.build(model, i), q, i)


def start_time_sync(model: SystemModel, i: str, q: int) -> int:
    if model.action(i).trigger.kind != TriggerKind.CALL:
        raise ValueError(f"{i} is not synchronously called; use start_time_async")
    g = async_root(model, i)
    return _start_sync(_Terms.build(model, g), q, i, partial_chain_cost(model, g, i))


def finish_time(model: SystemModel, i: str, q: int, S: int) -> int:
    return S + sync_set_cost(model, i)


def busy_period(model: SystemModel, i: str) -> int:
    """
    Length of the level-π(i) busy period opened at the critical instant:
    blocking plus all work at priority >= π(i) released in [0, L).
    """
    terms = _Terms.build(model, async_root(model, i))
    own = terms.pattern if terms.own_jitter else replace(terms.pattern, jitter=0)
    loads = terms.others + ((own, terms.hep_same),)

    def rhs(L: int) -> int:
        # releases in [0, L) == releases in [0, L-1] on integer ticks
        return max(1, terms.blocking + sum(releases_in(p, L - 1) * c for p, c in loads))

    return _least_fixed_point(rhs, 1, terms.limit, i)


# ===========================
# DRIVER
# ===========================
def analyze_action(model: SystemModel, i: str) -> ActionResult:
    act = model.action(i)
    pattern = model.transaction(act.transaction_id).arrival
    jitter = pattern.jitter
    cost = sync_set_cost(model, i)
    anchor = async_root(model, i)
    terms = _Terms.build(model, anchor)
    chain = partial_chain_cost(model, anchor, i) if anchor != i else None

    base = dict(
        action_id=i,
        transaction_id=act.transaction_id,
        priority=act.priority,
        deadline=act.deadline,
        blocking=terms.blocking,
    )

    timings: list[InstanceTiming] = []
    L = None
    try:
        L = busy_period(model, i)
        q = 1
        while True:
            if q > model.config.max_busy_instances:
                raise BusyPeriodOverflow(i, model.config.max_busy_instances)

            S = _start_async(terms, q, i) if chain is None else _start_sync(terms, q, i, chain)
            F = S + cost
            timings.append(InstanceTiming(q, S, F, F + jitter - arrival_time(q, pattern)))

            next_release = arrival_time(q + 1, pattern) - jitter
            if F <= next_release and next_release >= L:
                break
            q += 1

    except AnalysisOverflow as e:
        return ActionResult(
            **base,
            wcrt=None,
            instances_examined=len(timings),
            per_instance=tuple(timings),
            feasible=False,
            busy_period=L,
            diagnostics=(str(e),),
        )

    wcrt = max(t.response for t in timings)
    return ActionResult(
        **base,
        wcrt=wcrt,
        instances_examined=len(timings),
        per_instance=tuple(timings),
        feasible=wcrt <= act.deadline,
        busy_period=L,
    )


def analyze_system(model: SystemModel, jobs: int = 1) -> AnalysisReport:
    violations = validate(model)
    if violations:
        raise ValidationFailed(violations)

    order = sorted(model.actions, key=lambda a: (natural_key(a.transaction_id), natural_key(a.id)))
    if jobs == 1 or len(order) < 2:
        results = [analyze_action(model, a.id) for a in order]
    else:
        results = Parallel(n_jobs=jobs)(delayed(analyze_action)(model, a.id) for a in order)

    diagnostics = tuple(d for r in results for d in r.diagnostics)
    return AnalysisReport(
        results=tuple(results),
        system_feasible=all(r.feasible for r in results),
        diagnostics=diagnostics,
    )
