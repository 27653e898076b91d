"""
JSON model files <-> SystemModel.

    {
      "transactions": [
        {
          "id": "tau1",
          "arrival": {"T": 60, "t": 60, "n": 1, "J": 3, "kind": "periodic"},
          "actions": [
            {"id": "A1", "priority": 10, "deadline": 60, "trigger": "external",
             "sub_actions": [{"C": 5, "calls": "A4"}, {"C": 1, "sends": "A5"}]},
            {"id": "A4", "priority": 10, "deadline": 60, "trigger": {"call_from": ["A1", 1]},
             "sub_actions": [{"C": 5}, {"C": 1}]}
          ]
        }
      ],
      "config": {"max_busy_instances": 4096, "max_window": null, "own_jitter_window": true}
    }

Sub-action indices in triggers are 1-based in the file. Unknown and repeated keys
are rejected.
"""
from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Any, BinaryIO

from src.errors import ModelSyntaxError, SchemaError, ValidationFailed
from src.model import (
    Action,
    AnalysisConfig,
    ArrivalKind,
    ArrivalPattern,
    Link,
    LinkKind,
    SubAction,
    SystemModel,
    Transaction,
    Trigger,
    TriggerKind,
    validate,
)

_TOP_KEYS = {"transactions", "config"}
_TX_KEYS = {"id", "arrival", "actions"}
_ARRIVAL_KEYS = {"T", "t", "n", "J", "kind"}
_ACTION_KEYS = {"id", "priority", "deadline", "trigger", "sub_actions", "owner"}
_SUB_KEYS = {"C", "sends", "calls"}
_CONFIG_KEYS = {"max_busy_instances", "max_window", "own_jitter_window"}


# ===========================
# FIELD HELPERS
# ===========================
def _object(value: Any, path: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(path, f"expected an object, got {type(value).__name__}")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected a list, got {type(value).__name__}")
    return value


def _keys(obj: dict, allowed: set[str], required: set[str], path: str):
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", "unknown field")
    missing = sorted(required - set(obj))
    if missing:
        raise SchemaError(f"{path}.{missing[0]}", "missing required field")


def _int(value: Any, path: str) -> int:
    # bool is an int subclass; true/false are never valid times
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {json.dumps(value)}")
    return value


def _str(value: Any, path: str) -> str:
    if not isinstance(value, str) or not value:
        raise SchemaError(path, f"expected a non-empty string, got {json.dumps(value)}")
    return value


def _unique_fields(pairs: list[tuple[str, Any]]) -> dict:
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise SchemaError(key, "field appears more than once")
        obj[key] = value
    return obj


# ===========================
# DECODE
# ===========================
def _arrival(raw: Any, path: str) -> ArrivalPattern:
    obj = _object(raw, path)
    _keys(obj, _ARRIVAL_KEYS, {"T"}, path)

    T = _int(obj["T"], f"{path}.T")
    kind_raw = obj.get("kind", ArrivalKind.PERIODIC.value)
    try:
        kind = ArrivalKind(kind_raw)
    except ValueError:
        choices = ", ".join(k.value for k in ArrivalKind)
        raise SchemaError(f"{path}.kind", f"expected one of {choices}, got {json.dumps(kind_raw)}") from None

    return ArrivalPattern(
        outer_period=T,
        inner_period=_int(obj.get("t", T), f"{path}.t"),
        burst_count=_int(obj.get("n", 1), f"{path}.n"),
        jitter=_int(obj.get("J", 0), f"{path}.J"),
        kind=kind,
    )


def _trigger(raw: Any, path: str) -> Trigger:
    if raw == "external":
        return Trigger.external()

    obj = _object(raw, path)
    if len(obj) != 1 or next(iter(obj)) not in {"signal_from", "call_from"}:
        raise SchemaError(path, 'expected "external", {"signal_from": [id, n]} or {"call_from": [id, n]}')

    key, ref = next(iter(obj.items()))
    ref = _list(ref, f"{path}.{key}")
    if len(ref) != 2:
        raise SchemaError(f"{path}.{key}", "expected [action id, sub-action number]")
    source = _str(ref[0], f"{path}.{key}[0]")
    number = _int(ref[1], f"{path}.{key}[1]")
    if number < 1:
        raise SchemaError(f"{path}.{key}[1]", "sub-action numbers start at 1")

    if key == "signal_from":
        return Trigger.signal(source, number - 1)
    return Trigger.call(source, number - 1)


def _sub_action(raw: Any, path: str) -> SubAction:
    obj = _object(raw, path)
    _keys(obj, _SUB_KEYS, {"C"}, path)
    if "sends" in obj and "calls" in obj:
        raise SchemaError(path, "a sub-action generates at most one event (sends or calls)")

    generates = None
    if "sends" in obj:
        generates = Link(_str(obj["sends"], f"{path}.sends"), LinkKind.SEND)
    elif "calls" in obj:
        generates = Link(_str(obj["calls"], f"{path}.calls"), LinkKind.CALL)
    return SubAction(_int(obj["C"], f"{path}.C"), generates)


def _action(raw: Any, tid: str, path: str) -> Action:
    obj = _object(raw, path)
    if isinstance(obj.get("id"), str) and obj["id"]:
        path = f"{path.rsplit('[', 1)[0]}[{obj['id']}]"
    _keys(obj, _ACTION_KEYS, _ACTION_KEYS - {"owner"}, path)

    subs = _list(obj["sub_actions"], f"{path}.sub_actions")
    owner = obj.get("owner")
    return Action(
        id=_str(obj["id"], f"{path}.id"),
        transaction_id=tid,
        priority=_int(obj["priority"], f"{path}.priority"),
        deadline=_int(obj["deadline"], f"{path}.deadline"),
        trigger=_trigger(obj["trigger"], f"{path}.trigger"),
        sub_actions=tuple(_sub_action(s, f"{path}.sub_actions[{j + 1}]") for j, s in enumerate(subs)),
        owner=None if owner is None else _str(owner, f"{path}.owner"),
    )


def _config(raw: Any, path: str = "config") -> AnalysisConfig:
    obj = _object(raw, path)
    _keys(obj, _CONFIG_KEYS, set(), path)

    defaults = AnalysisConfig()
    max_window = obj.get("max_window")
    own_jitter = obj.get("own_jitter_window", defaults.own_jitter_window)
    if not isinstance(own_jitter, bool):
        raise SchemaError(f"{path}.own_jitter_window", f"expected true or false, got {json.dumps(own_jitter)}")

    cfg = AnalysisConfig(
        max_busy_instances=_int(obj.get("max_busy_instances", defaults.max_busy_instances), f"{path}.max_busy_instances"),
        max_window=None if max_window is None else _int(max_window, f"{path}.max_window"),
        own_jitter_window=own_jitter,
    )
    if cfg.max_busy_instances < 1:
        raise SchemaError(f"{path}.max_busy_instances", "must be positive")
    if cfg.max_window is not None and cfg.max_window < 1:
        raise SchemaError(f"{path}.max_window", "must be positive")
    return cfg


def model_from_dict(doc: Any) -> SystemModel:
    """Build (without validating) a SystemModel from a decoded document."""
    obj = _object(doc, "$")
    _keys(obj, _TOP_KEYS, {"transactions"}, "$")

    transactions: list[Transaction] = []
    actions: list[Action] = []
    for n, raw_tx in enumerate(_list(obj["transactions"], "transactions")):
        path = f"transactions[{n}]"
        tx = _object(raw_tx, path)
        if isinstance(tx.get("id"), str) and tx["id"]:
            path = f"transactions[{tx['id']}]"
        _keys(tx, _TX_KEYS, _TX_KEYS, path)

        tid = _str(tx["id"], f"{path}.id")
        own = [
            _action(a, tid, f"{path}.actions[{j}]")
            for j, a in enumerate(_list(tx["actions"], f"{path}.actions"))
        ]
        externals = [a.id for a in own if a.trigger.kind == TriggerKind.EXTERNAL]
        transactions.append(Transaction(
            id=tid,
            arrival=_arrival(tx["arrival"], f"{path}.arrival"),
            # an empty root is reported by validate() as MissingRoot
            root_action_id=externals[0] if externals else "",
        ))
        actions.extend(own)

    config = _config(obj["config"]) if "config" in obj else AnalysisConfig()
    return SystemModel(tuple(transactions), tuple(actions), config)


def loads_model(text: str) -> SystemModel:
    try:
        doc = json.loads(text, object_pairs_hook=_unique_fields)
    except json.JSONDecodeError as e:
        raise ModelSyntaxError(e.msg, e.lineno, e.colno) from None

    model = model_from_dict(doc)
    violations = validate(model)
    if violations:
        raise ValidationFailed(violations)
    return model


def parse_model(source: str | Path | bytes | BinaryIO | io.TextIOBase) -> SystemModel:
    """Read and validate a model from a path, raw bytes or an open file."""
    if isinstance(source, (str, Path)):
        raw = Path(source).read_bytes()
    elif isinstance(source, (bytes, bytearray)):
        raw = bytes(source)
    else:
        raw = source.read()

    if isinstance(raw, bytes):
        try:
            raw = raw.decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise ModelSyntaxError(f"not UTF-8 text: {e.reason}") from None
    return loads_model(raw)


# ===========================
# ENCODE
# ===========================
def _trigger_doc(trigger: Trigger):
    if trigger.kind == TriggerKind.EXTERNAL:
        return "external"
    key = "signal_from" if trigger.kind == TriggerKind.SIGNAL else "call_from"
    return {key: [trigger.source, trigger.sub_index + 1]}


def _sub_doc(sub: SubAction) -> dict:
    doc = {"C": sub.exec_time}
    if sub.generates is not None:
        doc["calls" if sub.generates.kind == LinkKind.CALL else "sends"] = sub.generates.target
    return doc


def _action_doc(a: Action) -> dict:
    doc = {
        "id": a.id,
        "priority": a.priority,
        "deadline": a.deadline,
        "trigger": _trigger_doc(a.trigger),
        "sub_actions": [_sub_doc(s) for s in a.sub_actions],
    }
    if a.owner is not None:
        doc["owner"] = a.owner
    return doc


def serialize_model(model: SystemModel) -> dict:
    transactions = []
    for t in model.transactions:
        p = t.arrival
        transactions.append({
            "id": t.id,
            "arrival": {"T": p.outer_period, "t": p.inner_period, "n": p.burst_count, "J": p.jitter, "kind": p.kind.value},
            "actions": [_action_doc(a) for a in model.actions_of(t.id)],
        })

    cfg = model.config
    return {
        "transactions": transactions,
        "config": {
            "max_busy_instances": cfg.max_busy_instances,
            "max_window": cfg.max_window,
            "own_jitter_window": cfg.own_jitter_window,
        },
    }


def dump_model(model: SystemModel, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(serialize_model(model), f, indent=2, ensure_ascii=False)
        f.write("\n")
    return path
