"""
Domain model for event-driven real-time control designs.

A transaction is the causal chain started by one external event. Each event
is handled by one run-to-completion action made of ordered sub-actions; a
sub-action may send an asynchronous signal or make a synchronous call to
another action of the same transaction. All times are integer ticks.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property

from src.config import MAX_BUSY_INSTANCES
from src.errors import ChainError, UnknownAction


# ===========================
# TYPES
# ===========================
class ArrivalKind(str, Enum):
    PERIODIC = "periodic"
    APERIODIC = "aperiodic"
    SPORADIC = "sporadically_periodic"


class LinkKind(str, Enum):
    SEND = "send_async"
    CALL = "call_sync"


class TriggerKind(str, Enum):
    EXTERNAL = "external"
    SIGNAL = "async_signal"
    CALL = "sync_call"


@dataclass(frozen=True)
class ArrivalPattern:
    outer_period: int
    inner_period: int
    burst_count: int = 1
    jitter: int = 0
    kind: ArrivalKind = ArrivalKind.PERIODIC

    @classmethod
    def periodic(cls, period: int, jitter: int = 0, kind: ArrivalKind = ArrivalKind.PERIODIC) -> ArrivalPattern:
        return cls(period, period, 1, jitter, kind)


@dataclass(frozen=True)
class Link:
    target: str
    kind: LinkKind


@dataclass(frozen=True)
class SubAction:
    exec_time: int
    generates: Link | None = None


@dataclass(frozen=True)
class Trigger:
    kind: TriggerKind
    source: str | None = None
    # 0-based position of the generating sub-action inside `source`
    sub_index: int | None = None

    @classmethod
    def external(cls) -> Trigger:
        return cls(TriggerKind.EXTERNAL)

    @classmethod
    def signal(cls, source: str, sub_index: int) -> Trigger:
        return cls(TriggerKind.SIGNAL, source, sub_index)

    @classmethod
    def call(cls, source: str, sub_index: int) -> Trigger:
        return cls(TriggerKind.CALL, source, sub_index)


@dataclass(frozen=True)
class Action:
    id: str
    transaction_id: str
    priority: int
    deadline: int
    trigger: Trigger
    sub_actions: tuple[SubAction, ...] = ()
    owner: str | None = None

    @property
    def exec_time(self) -> int:
        return sum(s.exec_time for s in self.sub_actions)


@dataclass(frozen=True)
class Transaction:
    id: str
    arrival: ArrivalPattern
    root_action_id: str


@dataclass(frozen=True)
class AnalysisConfig:
    max_busy_instances: int = MAX_BUSY_INSTANCES
    # None means "derive from the model" (see analysis.default_max_window)
    max_window: int | None = None
    own_jitter_window: bool = True


@dataclass(frozen=True)
class SystemModel:
    transactions: tuple[Transaction, ...] = ()
    actions: tuple[Action, ...] = ()
    config: AnalysisConfig = field(default_factory=AnalysisConfig)

    @cached_property
    def _actions_by_id(self) -> dict[str, Action]:
        return {a.id: a for a in self.actions}

    @cached_property
    def _transactions_by_id(self) -> dict[str, Transaction]:
        return {t.id: t for t in self.transactions}

    @cached_property
    def _calls(self) -> dict[str, tuple[str, ...]]:
        out = {}
        for a in self.actions:
            out[a.id] = tuple(
                s.generates.target for s in a.sub_actions
                if s.generates is not None and s.generates.kind == LinkKind.CALL
            )
        return out

    @cached_property
    def _successors(self) -> dict[str, tuple[str, ...]]:
        return {
            a.id: tuple(s.generates.target for s in a.sub_actions if s.generates is not None)
            for a in self.actions
        }

    def action(self, action_id: str) -> Action:
        try:
            return self._actions_by_id[action_id]
        except KeyError:
            raise UnknownAction(action_id) from None

    def transaction(self, transaction_id: str) -> Transaction:
        try:
            return self._transactions_by_id[transaction_id]
        except KeyError:
            raise KeyError(f"unknown transaction id: {transaction_id!r}") from None

    def actions_of(self, transaction_id: str) -> list[Action]:
        return [a for a in self.actions if a.transaction_id == transaction_id]

    def transaction_of(self, action_id: str) -> Transaction:
        return self.transaction(self.action(action_id).transaction_id)


def natural_key(ident: str):
    """Sort key that orders A2 before A10."""
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", str(ident))]


# ===========================
# VALIDATION
# ===========================
class ViolationKind(str, Enum):
    DUPLICATE_ACTION = "DuplicateActionId"
    DUPLICATE_TRANSACTION = "DuplicateTransactionId"
    INVALID_TIME = "InvalidTime"
    BURST_EXCEEDS_PERIOD = "BurstExceedsOuterPeriod"
    BURST_ON_NON_SPORADIC = "BurstOnNonSporadicPattern"
    UNKNOWN_TRANSACTION = "UnknownTransaction"
    UNRESOLVED_TARGET = "UnresolvedTarget"
    CROSS_TRANSACTION = "CrossTransactionEvent"
    MULTIPLE_TRIGGERS = "MultipleTriggers"
    TRIGGER_MISMATCH = "TriggerMismatch"
    MISSING_ROOT = "MissingRoot"
    ROOT_MISMATCH = "RootMismatch"
    NON_ROOT_EXTERNAL = "NonRootExternal"
    SYNC_PRIORITY = "PrioritiesDifferOnSyncCall"
    SIGNAL_RAISES_PRIORITY = "SignalRaisesPriority"
    CYCLE = "CyclicEventGraph"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    subject: str
    detail: str

    def __str__(self):
        return f"{self.kind.value} [{self.subject}]: {self.detail}"


def _check_pattern(t: Transaction) -> list[Violation]:
    out = []
    p = t.arrival
    if p.outer_period <= 0 or p.inner_period <= 0 or p.burst_count < 1 or p.jitter < 0:
        out.append(Violation(
            ViolationKind.INVALID_TIME, t.id,
            f"need T>0, t>0, n>=1, J>=0 (got T={p.outer_period}, t={p.inner_period}, "
            f"n={p.burst_count}, J={p.jitter})",
        ))
        return out

    if p.burst_count * p.inner_period > p.outer_period:
        out.append(Violation(
            ViolationKind.BURST_EXCEEDS_PERIOD, t.id,
            f"{p.burst_count}·{p.inner_period} = {p.burst_count * p.inner_period} > T = {p.outer_period}",
        ))

    if p.kind != ArrivalKind.SPORADIC and (p.burst_count != 1 or p.inner_period != p.outer_period):
        out.append(Violation(
            ViolationKind.BURST_ON_NON_SPORADIC, t.id,
            f"{p.kind.value} pattern needs n=1 and t=T (got n={p.burst_count}, t={p.inner_period}, T={p.outer_period})",
        ))
    return out


def _find_cycle(model: SystemModel) -> list[str] | None:
    succ = {a: [b for b in bs if b in model._actions_by_id] for a, bs in model._successors.items()}
    WHITE, GREY, BLACK = 0, 1, 2
    color = {a: WHITE for a in succ}

    for start in sorted(succ, key=natural_key):
        if color[start] != WHITE:
            continue
        stack = [(start, iter(succ[start]))]
        path = [start]
        color[start] = GREY
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[node] = BLACK
                stack.pop()
                path.pop()
                continue
            if color.get(nxt) == GREY:
                return path[path.index(nxt):] + [nxt]
            if color.get(nxt) == WHITE:
                color[nxt] = GREY
                stack.append((nxt, iter(succ[nxt])))
                path.append(nxt)
    return None


def validate(model: SystemModel) -> list[Violation]:
    """Return every structural rule the model breaks (empty list = valid)."""
    out: list[Violation] = []

    # ---- ids ----
    seen: set[str] = set()
    for a in model.actions:
        if a.id in seen:
            out.append(Violation(ViolationKind.DUPLICATE_ACTION, a.id, "action id used more than once"))
        seen.add(a.id)

    seen_t: set[str] = set()
    for t in model.transactions:
        if t.id in seen_t:
            out.append(Violation(ViolationKind.DUPLICATE_TRANSACTION, t.id, "transaction id used more than once"))
        seen_t.add(t.id)
        out.extend(_check_pattern(t))

    by_id = model._actions_by_id
    tx_by_id = model._transactions_by_id

    # ---- per-action timing + membership ----
    for a in model.actions:
        if a.priority < 1 or a.deadline < 0 or any(s.exec_time < 0 for s in a.sub_actions):
            out.append(Violation(
                ViolationKind.INVALID_TIME, a.id,
                "priority must be >= 1, deadline and execution times >= 0",
            ))
        if a.transaction_id not in tx_by_id:
            out.append(Violation(
                ViolationKind.UNKNOWN_TRANSACTION, a.id,
                f"transaction {a.transaction_id!r} does not exist",
            ))

    # ---- generated events ----
    generated_by: dict[str, list[tuple[str, int, LinkKind]]] = {}
    for a in model.actions:
        for j, s in enumerate(a.sub_actions):
            if s.generates is None:
                continue
            tgt = s.generates.target
            if tgt not in by_id:
                out.append(Violation(
                    ViolationKind.UNRESOLVED_TARGET, a.id,
                    f"sub-action {j + 1} targets unknown action {tgt!r}",
                ))
                continue
            generated_by.setdefault(tgt, []).append((a.id, j, s.generates.kind))

            target = by_id[tgt]
            if target.transaction_id != a.transaction_id:
                out.append(Violation(
                    ViolationKind.CROSS_TRANSACTION, a.id,
                    f"sub-action {j + 1} targets {tgt} of transaction {target.transaction_id}",
                ))
            if s.generates.kind == LinkKind.CALL and target.priority != a.priority:
                out.append(Violation(
                    ViolationKind.SYNC_PRIORITY, tgt,
                    f"called by {a.id} (π={a.priority}) but has π={target.priority}",
                ))
            if s.generates.kind == LinkKind.SEND and target.priority > a.priority:
                out.append(Violation(
                    ViolationKind.SIGNAL_RAISES_PRIORITY, tgt,
                    f"signalled by {a.id} (π={a.priority}) but has higher π={target.priority}",
                ))

    # ---- triggers ----
    expected_kind = {LinkKind.SEND: TriggerKind.SIGNAL, LinkKind.CALL: TriggerKind.CALL}
    for a in model.actions:
        sources = generated_by.get(a.id, [])
        if len(sources) + (a.trigger.kind == TriggerKind.EXTERNAL) > 1:
            names = [f"{src}.{j + 1}" for src, j, _ in sources]
            if a.trigger.kind == TriggerKind.EXTERNAL:
                names.insert(0, "external")
            out.append(Violation(
                ViolationKind.MULTIPLE_TRIGGERS, a.id,
                f"triggered by {', '.join(names)}",
            ))
            continue

        if a.trigger.kind == TriggerKind.EXTERNAL:
            continue

        if not sources:
            out.append(Violation(
                ViolationKind.TRIGGER_MISMATCH, a.id,
                f"declares {a.trigger.kind.value} from {a.trigger.source}.{(a.trigger.sub_index or 0) + 1} "
                "but no sub-action generates it",
            ))
            continue

        src, j, kind = sources[0]
        if (a.trigger.source, a.trigger.sub_index, a.trigger.kind) != (src, j, expected_kind[kind]):
            out.append(Violation(
                ViolationKind.TRIGGER_MISMATCH, a.id,
                f"generated by {src}.{j + 1} ({kind.value}) but declares "
                f"{a.trigger.kind.value} from {a.trigger.source}.{(a.trigger.sub_index or 0) + 1}",
            ))

    # ---- roots ----
    for t in model.transactions:
        externals = [a for a in model.actions if a.transaction_id == t.id and a.trigger.kind == TriggerKind.EXTERNAL]
        if not externals:
            out.append(Violation(ViolationKind.MISSING_ROOT, t.id, "no externally-triggered action"))
        for a in externals:
            if a.id != t.root_action_id:
                out.append(Violation(
                    ViolationKind.NON_ROOT_EXTERNAL, a.id,
                    f"external trigger but root of {t.id} is {t.root_action_id!r}",
                ))
        root = by_id.get(t.root_action_id)
        if root is None or root.transaction_id != t.id or root.trigger.kind != TriggerKind.EXTERNAL:
            out.append(Violation(
                ViolationKind.ROOT_MISMATCH, t.id,
                f"root {t.root_action_id!r} is not an external action of this transaction",
            ))

    # ---- acyclicity ----
    cycle = _find_cycle(model)
    if cycle:
        out.append(Violation(ViolationKind.CYCLE, cycle[0], " -> ".join(cycle)))

    return out


# ===========================
# RELATIONS
# ===========================
def causes(model: SystemModel, a: str, b: str) -> bool:
    """True iff a == b or b is reachable from a through generated events."""
    model.action(a)
    model.action(b)
    if a == b:
        return True

    stack = [a]
    seen = {a}
    while stack:
        node = stack.pop()
        for nxt in model._successors.get(node, ()):
            if nxt == b:
                return True
            if nxt not in seen and nxt in model._actions_by_id:
                seen.add(nxt)
                stack.append(nxt)
    return False


def synchronous_set(model: SystemModel, a: str) -> frozenset[str]:
    model.action(a)
    members = {a}
    stack = [a]
    while stack:
        for callee in model._calls.get(stack.pop(), ()):
            if callee not in members:
                members.add(callee)
                stack.append(callee)
    return frozenset(members)


def sync_set_cost(model: SystemModel, a: str) -> int:
    return sum(model.action(x).exec_time for x in synchronous_set(model, a))


def async_root(model: SystemModel, i: str) -> str:
    """The non-call-triggered action whose synchronous set contains i."""
    act = model.action(i)
    hops = 0
    while act.trigger.kind == TriggerKind.CALL:
        act = model.action(act.trigger.source)
        hops += 1
        if hops > len(model.actions):
            raise ChainError(f"call chain above {i} does not terminate")
    return act.id


def _call_chain(model: SystemModel, g: str, i: str) -> list[str]:
    chain = [i]
    act = model.action(i)
    while act.id != g:
        if act.trigger.kind != TriggerKind.CALL:
            raise ChainError(f"{i} is not synchronously reachable from {g}")
        act = model.action(act.trigger.source)
        chain.append(act.id)
        if len(chain) > len(model.actions) + 1:
            raise ChainError(f"call chain above {i} does not terminate")
    return chain[::-1]


def partial_chain_cost(model: SystemModel, g: str, i: str) -> int:
    """
    Execution done inside Υ(g) strictly before i starts: along the call chain
    g → … → i, every sub-action up to and including the one issuing the next
    call, plus the complete synchronous sets of calls issued earlier.
    """
    model.action(g)
    if g == i:
        raise ChainError(f"{i} is the root of its own chain")

    chain = _call_chain(model, g, i)
    total = 0
    for caller_id, callee_id in zip(chain, chain[1:]):
        caller = model.action(caller_id)
        h = model.action(callee_id).trigger.sub_index
        for j, sub in enumerate(caller.sub_actions[: h + 1]):
            total += sub.exec_time
            if j < h and sub.generates is not None and sub.generates.kind == LinkKind.CALL:
                total += sync_set_cost(model, sub.generates.target)
    return total


# ===========================
# WHAT-IF
# ===========================
def with_priority(model: SystemModel, action_id: str, priority: int) -> SystemModel:
    """Copy of the model with the action's whole synchronous group moved to `priority`."""
    group = set(synchronous_set(model, async_root(model, action_id)))
    actions = tuple(
        replace(a, priority=priority) if a.id in group else a
        for a in model.actions
    )
    return replace(model, actions=actions)
