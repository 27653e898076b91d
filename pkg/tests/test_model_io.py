import io
import json

import pytest

from src.config import CASE_STUDY_JSON, CASE_STUDY_PRIO_JSON
from src.errors import ModelSyntaxError, SchemaError, ValidationFailed
from src.model import ArrivalKind, LinkKind, TriggerKind, ViolationKind
from src.model_io import dump_model, loads_model, model_from_dict, parse_model, serialize_model


def case_study_doc():
    return json.loads(CASE_STUDY_JSON.read_text(encoding="utf-8"))


def find_action(doc, action_id):
    for tx in doc["transactions"]:
        for a in tx["actions"]:
            if a["id"] == action_id:
                return a
    raise KeyError(action_id)


def test_case_study_shape(agc):
    assert [t.id for t in agc.transactions] == ["tau1", "tau2", "tau3"]
    assert len(agc.actions) == 12

    tau3 = agc.transaction("tau3")
    assert tau3.root_action_id == "A3"
    assert (tau3.arrival.outer_period, tau3.arrival.inner_period, tau3.arrival.burst_count) == (900, 300, 3)
    assert tau3.arrival.kind == ArrivalKind.SPORADIC
    assert agc.transaction("tau2").arrival.kind == ArrivalKind.APERIODIC

    a4 = agc.action("A4")
    assert a4.trigger.kind == TriggerKind.CALL
    assert (a4.trigger.source, a4.trigger.sub_index) == ("A1", 0)
    assert agc.action("A1").sub_actions[1].generates.kind == LinkKind.SEND


def test_parse_from_bytes_and_stream(agc):
    raw = CASE_STUDY_JSON.read_bytes()
    assert parse_model(raw) == agc
    assert parse_model(io.BytesIO(raw)) == agc
    assert parse_model(io.StringIO(raw.decode("utf-8"))) == agc
    assert parse_model(str(CASE_STUDY_JSON)) == agc


def test_round_trip(agc, agc_prio, tmp_path):
    for model in (agc, agc_prio):
        assert model_from_dict(serialize_model(model)) == model

        path = dump_model(model, tmp_path / "model.json")
        assert parse_model(path) == model
        assert serialize_model(parse_model(path)) == serialize_model(model)


def test_dump_is_stable(agc, tmp_path):
    a = dump_model(agc, tmp_path / "a.json").read_bytes()
    b = dump_model(parse_model(tmp_path / "a.json"), tmp_path / "b.json").read_bytes()
    assert a == b


def test_defaults_for_optional_arrival_fields():
    doc = {"transactions": [{
        "id": "T1",
        "arrival": {"T": 50},
        "actions": [{"id": "A1", "priority": 1, "deadline": 50, "trigger": "external", "sub_actions": [{"C": 2}]}],
    }]}
    model = loads_model(json.dumps(doc))
    p = model.transaction("T1").arrival
    assert (p.inner_period, p.burst_count, p.jitter, p.kind) == (50, 1, 0, ArrivalKind.PERIODIC)
    assert model.config.own_jitter_window is True


def test_config_block():
    doc = case_study_doc()
    doc["config"] = {"max_busy_instances": 10, "max_window": 5000, "own_jitter_window": False}
    model = loads_model(json.dumps(doc))
    assert model.config.max_busy_instances == 10
    assert model.config.max_window == 5000
    assert model.config.own_jitter_window is False


# ===========================
# ERRORS
# ===========================
def test_malformed_json_has_position():
    with pytest.raises(ModelSyntaxError) as e:
        loads_model('{"transactions": [\n  {"id": }\n]}')
    assert e.value.line == 2


def test_missing_priority_names_the_action():
    doc = case_study_doc()
    del find_action(doc, "A7")["priority"]
    with pytest.raises(SchemaError) as e:
        loads_model(json.dumps(doc))
    assert "A7" in e.value.path
    assert e.value.path.endswith("priority")


def test_unknown_key_rejected():
    doc = case_study_doc()
    find_action(doc, "A2")["prio"] = 3
    with pytest.raises(SchemaError) as e:
        loads_model(json.dumps(doc))
    assert e.value.path.endswith("A2].prio")


def test_repeated_key_rejected():
    text = CASE_STUDY_JSON.read_text(encoding="utf-8").replace(
        '"priority": 9,', '"priority": 9, "priority": 1,', 1,
    )
    with pytest.raises(SchemaError) as e:
        loads_model(text)
    assert e.value.path == "priority"
    assert "more than once" in str(e.value)


@pytest.mark.parametrize("value", [True, "10", 1.5, None])
def test_non_integer_times_rejected(value):
    doc = case_study_doc()
    find_action(doc, "A1")["sub_actions"][0]["C"] = value
    with pytest.raises(SchemaError):
        loads_model(json.dumps(doc))


def test_sends_and_calls_together_rejected():
    doc = case_study_doc()
    find_action(doc, "A1")["sub_actions"][0]["sends"] = "A5"
    with pytest.raises(SchemaError):
        loads_model(json.dumps(doc))


def test_bad_trigger_shape():
    doc = case_study_doc()
    find_action(doc, "A4")["trigger"] = {"call_from": ["A1", 0]}
    with pytest.raises(SchemaError):
        loads_model(json.dumps(doc))

    doc["transactions"][0]["actions"][1]["trigger"] = {"from": ["A1", 1]}
    with pytest.raises(SchemaError):
        loads_model(json.dumps(doc))


def test_unknown_arrival_kind():
    doc = case_study_doc()
    doc["transactions"][0]["arrival"]["kind"] = "bursty"
    with pytest.raises(SchemaError) as e:
        loads_model(json.dumps(doc))
    assert e.value.path == "transactions[tau1].arrival.kind"


def test_burst_violation_surfaces_as_validation_failure():
    doc = case_study_doc()
    doc["transactions"][2]["arrival"]["n"] = 4
    with pytest.raises(ValidationFailed) as e:
        loads_model(json.dumps(doc))
    assert [v.kind for v in e.value.violations] == [ViolationKind.BURST_EXCEEDS_PERIOD]


def test_transaction_without_external_action():
    doc = case_study_doc()
    find_action(doc, "A1")["trigger"] = {"signal_from": ["A5", 1]}
    with pytest.raises(ValidationFailed) as e:
        loads_model(json.dumps(doc))
    found = {v.kind for v in e.value.violations}
    assert ViolationKind.MISSING_ROOT in found


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        parse_model(CASE_STUDY_PRIO_JSON.with_name("missing.json"))


def test_not_utf8():
    with pytest.raises(ModelSyntaxError):
        parse_model(b"\xff\xfe\x00{")
