from __future__ import annotations

import json
from pathlib import Path

import pandas as pd

from src.analysis import AnalysisReport
from src.oracle import CheckResult
from src.sim import SimTrace, trace_frame

REPORT_COLUMNS = [
    "transaction", "action", "priority", "deadline", "wcrt", "feasible", "instances", "diagnostics",
]
FORMATS = ("text", "csv", "json")


# ===========================
# ANALYSIS REPORT
# ===========================
def report_frame(report: AnalysisReport) -> pd.DataFrame:
    rows = [
        {
            "transaction": r.transaction_id,
            "action": r.action_id,
            "priority": r.priority,
            "deadline": r.deadline,
            "wcrt": r.wcrt,
            "feasible": r.feasible,
            "instances": r.instances_examined,
            "diagnostics": "; ".join(r.diagnostics),
        }
        for r in report.results
    ]
    df = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    df["wcrt"] = df["wcrt"].astype("Int64")
    return df


def report_dict(report: AnalysisReport) -> dict:
    return {
        "system_feasible": report.system_feasible,
        "actions": [
            {
                "transaction": r.transaction_id,
                "action": r.action_id,
                "priority": r.priority,
                "deadline": r.deadline,
                "wcrt": r.wcrt,
                "slack": r.slack,
                "feasible": r.feasible,
                "instances": r.instances_examined,
                "blocking": r.blocking,
                "busy_period": r.busy_period,
                "per_instance": [
                    {"q": t.q, "start": t.start, "finish": t.finish, "response": t.response}
                    for t in r.per_instance
                ],
                "diagnostics": list(r.diagnostics),
            }
            for r in report.results
        ],
        "diagnostics": list(report.diagnostics),
    }


def _text(report: AnalysisReport) -> str:
    if not report.results:
        return "no actions\n"

    # per-action diagnostics are listed under the table
    df = report_frame(report).drop(columns="diagnostics")
    df["wcrt"] = df["wcrt"].map(lambda v: "unbounded" if pd.isna(v) else str(v))
    df["feasible"] = df["feasible"].map({True: "yes", False: "NO"})

    lines = [df.to_string(index=False), ""]
    verdict = "feasible" if report.system_feasible else "NOT feasible"
    lines.append(f"system: {verdict}")
    lines.extend(f"diagnostic: {d}" for d in report.diagnostics)
    return "\n".join(lines) + "\n"


def render_report(report: AnalysisReport, fmt: str = "text") -> str:
    if fmt == "text":
        return _text(report)
    if fmt == "csv":
        return report_frame(report).to_csv(index=False, lineterminator="\n")
    if fmt == "json":
        return json.dumps(report_dict(report), indent=2, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown report format {fmt!r} (choose from {', '.join(FORMATS)})")


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


# ===========================
# SIMULATION + CHECK
# ===========================
def write_trace_csv(trace: SimTrace, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(trace).to_csv(path, index=False, lineterminator="\n")
    return path


def check_frame(result: CheckResult) -> pd.DataFrame:
    rows = []
    for r in result.report.results:
        bound = result.bounds.get(r.action_id)
        observed = result.observed.get(r.action_id)
        rows.append({
            "action": r.action_id,
            "bound": bound,
            "observed": observed,
            "margin": None if bound is None or observed is None else bound - observed,
        })
    df = pd.DataFrame(rows, columns=["action", "bound", "observed", "margin"])
    for col in ["bound", "observed", "margin"]:
        df[col] = df[col].astype("Int64")
    return df
