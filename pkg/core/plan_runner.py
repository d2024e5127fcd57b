from __future__ import annotations
import time, yaml
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

from .errors import MalformedInput
from .logging_io import RunLog, write_rows

RESULT_COLUMNS = ("id", "group", "check", "passed", "seconds", "detail")


@dataclass
class Outcome:
    passed: bool
    detail: str = ""


@dataclass
class Criterion:
    id: str
    group: str
    check: str
    params: dict = field(default_factory=dict)


Check = Callable[[dict, RunLog], Outcome]


def load_plan(plan_path: str) -> list[Criterion]:
    """Criteria of a YAML plan; per-criterion keys override the plan's `defaults:`."""
    try:
        with open(plan_path, "r") as f:
            plan = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise MalformedInput(f"{plan_path}: {e}")
    if not isinstance(plan, dict):
        raise MalformedInput(f"{plan_path}: plan must be a mapping")
    defaults = plan.get("defaults", {}) or {}
    out = []
    for idx, item in enumerate(plan.get("criteria", []) or []):
        if not isinstance(item, dict) or "check" not in item:
            raise MalformedInput(f"{plan_path}: criterion {idx} needs a `check` key")
        params = dict(defaults)
        params.update({k: v for k, v in item.items() if k not in ("id", "group", "check")})
        out.append(Criterion(id=str(item.get("id", f"criterion-{idx + 1}")),
                             group=str(item.get("group", "misc")),
                             check=str(item["check"]), params=params))
    return out


def run_plan(plan_path: str, checks: Mapping[str, Check], out_path: Optional[str] = None,
             group: Optional[str] = None, log: Optional[RunLog] = None) -> list[dict]:
    """Run every criterion (or one group), print PASS/FAIL lines, optionally write the table."""
    log = log or RunLog()
    criteria = load_plan(plan_path)
    if group:
        criteria = [c for c in criteria if c.group == group]
    rows: list[dict] = []
    for crit in criteria:
        fn = checks.get(crit.check)
        t0 = time.time()
        if fn is None:
            outcome = Outcome(False, f"unknown check {crit.check!r}")
        else:
            try:
                outcome = fn(crit.params, log.child(crit.id))
            except Exception as e:
                outcome = Outcome(False, f"{type(e).__name__}: {e}")
                log.log("error", {"id": crit.id, "type": type(e).__name__, "error": str(e)})
        rec = {"id": crit.id, "group": crit.group, "check": crit.check, "passed": bool(outcome.passed),
               "seconds": round(time.time() - t0, 3), "detail": outcome.detail}
        rows.append(rec)
        log.log("criterion", rec)
        print(f"{'PASS' if outcome.passed else 'FAIL'}  {crit.id:<28} {outcome.detail}")
    passed = sum(r["passed"] for r in rows)
    print(f"{passed}/{len(rows)} criteria passed")
    if out_path:
        write_rows(rows, RESULT_COLUMNS, out_path)
    return rows
