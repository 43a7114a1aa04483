"""File formats, payload validation, and the scenario store.

Three persistent shapes live here:

* the experimental roster CSV, one row per employee, with a fixed header;
* projection payloads exchanged with the HTTP service, monetary amounts as
  integer cents so no currency value ever rides on a float;
* the scenario store, an append-only JSON-lines file guarded by an advisory
  file lock, one canonical-JSON record per line.

Validation is by hand and exhaustive: validators walk the whole payload and
return every (field path, message) pair rather than stopping at the first
problem, so API clients can show all mistakes at once. Computed results are
stored as floats next to their integer-cent inputs; a stored record must
reproduce its results from its inputs to within 1e-9 relative error or the
store is treated as corrupt.

Roster cleaning mirrors the administrative reality that contribution rates
below the plan minimum are bookkeeping artifacts: such rates are raised to
the minimum and reported, never errors. Structural problems (bad types,
impossible combinations like an outcome on an unassigned row) are collected
as row errors; the load aborts only when more than max_errors rows fail.
"""

from __future__ import annotations

import csv
import datetime as _dt
import fcntl
import io
import json
import math
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (
    NotFound,
    RowError,
    SchemaError,
    StoreCorrupt,
    ValidationError,
)
from .experiment import ARMS, MIN_RATE, EmployeeRecord
from .projection import (
    Assumptions,
    EmployeeProfile,
    IncomeProjection,
    project_retirement_income,
    round_currency,
    round_replacement,
)

ROSTER_COLUMNS = (
    "id",
    "age",
    "gender",
    "disadvantaged",
    "tenure",
    "pre_rate",
    "post_rate",
    "treatment",
    "clicked",
    "attrited",
)

RECOMPUTE_RTOL = 1e-9


@dataclass
class CleaningReport:
    """What the roster loader changed or rejected."""

    n_rows: int = 0
    n_loaded: int = 0
    n_pending: int = 0  # assigned rows still awaiting an outcome
    floored: list[tuple[str, str]] = field(default_factory=list)  # (id, column)
    errors: list[RowError] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "rows": self.n_rows,
            "loaded": self.n_loaded,
            "pending": self.n_pending,
            "floored": [{"id": i, "column": c} for i, c in self.floored],
            "errors": [{"line": e.line, "message": e.message} for e in self.errors],
        }


def _parse_bool(raw: str, column: str) -> bool:
    if raw == "0":
        return False
    if raw == "1":
        return True
    raise ValueError(f"{column} must be 0 or 1, got {raw!r}")


def _parse_row(
    line_no: int, row: list[str], seen_ids: set, report: CleaningReport
) -> EmployeeRecord:
    if len(row) != len(ROSTER_COLUMNS):
        raise RowError(line_no, f"expected {len(ROSTER_COLUMNS)} fields, got {len(row)}")
    vals = dict(zip(ROSTER_COLUMNS, (v.strip() for v in row)))
    try:
        rec_id = vals["id"]
        if not rec_id:
            raise ValueError("id must be nonempty")
        if rec_id in seen_ids:
            raise ValueError(f"duplicate id {rec_id!r}")
        age = int(vals["age"])
        if not 16 <= age <= 80:
            raise ValueError(f"age {age} outside [16, 80]")
        gender = vals["gender"]
        if gender not in ("M", "F"):
            raise ValueError(f"gender must be M or F, got {gender!r}")
        disadvantaged = _parse_bool(vals["disadvantaged"], "disadvantaged")
        tenure = float(vals["tenure"])
        if tenure < 0 or not math.isfinite(tenure):
            raise ValueError(f"tenure {vals['tenure']!r} must be finite and nonnegative")
        pre_rate = float(vals["pre_rate"])
        if pre_rate <= 0 or not math.isfinite(pre_rate):
            raise ValueError(f"pre_rate {vals['pre_rate']!r} must be finite and positive")
        if pre_rate < MIN_RATE:
            report.floored.append((rec_id, "pre_rate"))
            pre_rate = MIN_RATE
        post_raw = vals["post_rate"]
        post_rate = None
        if post_raw != "":
            post_rate = float(post_raw)
            if post_rate <= 0 or not math.isfinite(post_rate):
                raise ValueError(f"post_rate {post_raw!r} must be finite and positive")
            if post_rate < MIN_RATE:
                report.floored.append((rec_id, "post_rate"))
                post_rate = MIN_RATE
        treatment = vals["treatment"]
        if treatment and treatment not in ARMS:
            raise ValueError(f"treatment must be empty or one of {ARMS}")
        clicked = _parse_bool(vals["clicked"], "clicked")
        attrited = _parse_bool(vals["attrited"], "attrited")
        if not treatment:
            if post_rate is not None or clicked or attrited:
                raise ValueError("unassigned row must not carry outcomes")
        else:
            # Assigned rows may still await outcomes (post empty, attrited 0);
            # estimators skip them. An attrited row must not carry an outcome.
            if attrited and post_rate is not None:
                raise ValueError("attrited row must have empty post_rate")
            if clicked and treatment == "control":
                raise ValueError("control records cannot click")
            if post_rate is None and not attrited:
                report.n_pending += 1
    except ValueError as exc:
        raise RowError(line_no, str(exc)) from None
    seen_ids.add(rec_id)
    return EmployeeRecord(
        id=rec_id,
        age=age,
        gender=gender,
        disadvantaged=disadvantaged,
        tenure=tenure,
        pre_rate=pre_rate,
        post_rate=post_rate,
        treatment=treatment,
        clicked=clicked,
        attrited=attrited,
    )


def load_roster_text(
    text: str, max_errors: int = 25
) -> tuple[list[EmployeeRecord], CleaningReport]:
    """Parse a roster from CSV text. See load_roster."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("empty roster file") from None
    if tuple(h.strip() for h in header) != ROSTER_COLUMNS:
        raise SchemaError(
            f"bad roster header: expected {','.join(ROSTER_COLUMNS)}"
        )
    report = CleaningReport()
    records: list[EmployeeRecord] = []
    seen: set = set()
    for line_no, row in enumerate(reader, start=2):
        if not row or all(v.strip() == "" for v in row):
            continue
        report.n_rows += 1
        try:
            records.append(_parse_row(line_no, row, seen, report))
        except RowError as err:
            report.errors.append(err)
            if len(report.errors) > max_errors:
                raise SchemaError(
                    f"more than {max_errors} bad rows; first: {report.errors[0]}"
                ) from None
    report.n_loaded = len(records)
    return records, report


def load_roster(
    path: str | Path, max_errors: int = 25
) -> tuple[list[EmployeeRecord], CleaningReport]:
    """Load and clean a roster CSV.

    Returns (records, report). Sub-minimum rates are floored and reported;
    structurally bad rows are skipped and reported, and the load fails with
    SchemaError when the header is wrong or more than max_errors rows fail.
    """
    return load_roster_text(Path(path).read_text(), max_errors)


def save_roster(records: list[EmployeeRecord], path: str | Path) -> None:
    """Write a roster CSV that load_roster reads back identically.

    Floats use repr formatting (shortest exact round trip), so a simulated
    outcome survives a save/load cycle bit for bit.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROSTER_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.id,
                    r.age,
                    r.gender,
                    int(r.disadvantaged),
                    repr(float(r.tenure)),
                    repr(float(r.pre_rate)),
                    "" if r.post_rate is None else repr(float(r.post_rate)),
                    r.treatment,
                    int(r.clicked),
                    int(r.attrited),
                ]
            )


# ---------------------------------------------------------------------------
# Payload validation.
# ---------------------------------------------------------------------------


def _get_int(obj, key, errs, lo=None, hi=None, required=True, default=None):
    if key not in obj or obj[key] is None:
        if required:
            errs.append((key, "is required"))
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        errs.append((key, "must be an integer"))
        return default
    if lo is not None and v < lo:
        errs.append((key, f"must be at least {lo}"))
        return default
    if hi is not None and v > hi:
        errs.append((key, f"must be at most {hi}"))
        return default
    return v


def _get_number(obj, key, errs, lo=None, hi=None, required=True, default=None):
    if key not in obj or obj[key] is None:
        if required:
            errs.append((key, "is required"))
        return default
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        errs.append((key, "must be a finite number"))
        return default
    if lo is not None and v < lo:
        errs.append((key, f"must be at least {lo}"))
        return default
    if hi is not None and v > hi:
        errs.append((key, f"must be at most {hi}"))
        return default
    return float(v)


def _get_bool(obj, key, errs, default=False):
    if key not in obj or obj[key] is None:
        return default
    v = obj[key]
    if not isinstance(v, bool):
        errs.append((key, "must be a boolean"))
        return default
    return v


def _get_choice(obj, key, errs, choices, required=True, default=None):
    if key not in obj or obj[key] is None:
        if required:
            errs.append((key, "is required"))
        return default
    v = obj[key]
    if v not in choices:
        errs.append((key, f"must be one of {sorted(choices)}"))
        return default
    return v


def validate_projection_inputs(obj: dict):
    """Parse a projection payload into (profile, assumptions, monthly).

    Raises ValidationError carrying every offending field.
    """
    if not isinstance(obj, dict):
        raise ValidationError([("", "body must be a JSON object")])
    errs: list[tuple[str, str]] = []
    age = _get_int(obj, "age", errs, lo=16, hi=80)
    ret = _get_int(obj, "retirement_age", errs, lo=17, hi=100)
    salary_cents = _get_int(obj, "salary_cents", errs, lo=1)
    balance_cents = _get_int(obj, "balance_cents", errs, lo=0, required=False, default=0)
    rate = _get_number(obj, "rate", errs, lo=0.0, hi=1.0, required=False, default=None)
    gender = _get_choice(obj, "gender", errs, ("M", "F"), required=False, default="M")
    inflation = _get_number(
        obj, "inflation", errs, lo=-0.99, hi=1.0, required=False, default=None
    )
    nominal_low = _get_number(
        obj, "nominal_low", errs, lo=-0.99, hi=1.0, required=False, default=None
    )
    nominal_high = _get_number(
        obj, "nominal_high", errs, lo=-0.99, hi=1.0, required=False, default=None
    )
    salary_growth = _get_number(
        obj, "salary_growth", errs, lo=-0.99, hi=1.0, required=False, default=None
    )
    monthly = _get_bool(obj, "monthly", errs)
    if age is not None and ret is not None and ret <= age:
        errs.append(("retirement_age", "must exceed age"))
    defaults = Assumptions()
    lo = nominal_low if nominal_low is not None else defaults.nominal_low
    hi = nominal_high if nominal_high is not None else defaults.nominal_high
    if hi < lo:
        errs.append(("nominal_high", "must be at least nominal_low"))
    if errs:
        raise ValidationError(errs)
    profile = EmployeeProfile(
        age=age,
        retirement_age=ret,
        salary=salary_cents / 100.0,
        balance=balance_cents / 100.0,
        rate=rate if rate is not None else EmployeeProfile.__dataclass_fields__["rate"].default,
        gender=gender,
    )
    assumptions = Assumptions(
        inflation=inflation if inflation is not None else defaults.inflation,
        nominal_low=lo,
        nominal_high=hi,
        salary_growth=salary_growth,
    )
    return profile, assumptions, monthly


def validate_required_rate_inputs(obj: dict) -> dict:
    """Parse a required-rate payload into keyword arguments."""
    if not isinstance(obj, dict):
        raise ValidationError([("", "body must be a JSON object")])
    errs: list[tuple[str, str]] = []
    replacement = _get_number(obj, "replacement", errs, lo=0.0, hi=2.0)
    drawdown = _get_number(obj, "drawdown", errs, lo=1e-6, hi=1.0)
    annual_return = _get_number(obj, "annual_return", errs, lo=-0.99, hi=1.0)
    years = _get_number(obj, "years", errs, lo=1e-9, hi=100.0)
    salary_cents = _get_int(obj, "salary_cents", errs, lo=1, required=False)
    balance_cents = _get_int(obj, "balance_cents", errs, lo=0, required=False)
    if balance_cents is not None and salary_cents is None:
        errs.append(("salary_cents", "is required when balance_cents is given"))
    if errs:
        raise ValidationError(errs)
    out = {
        "replacement": replacement,
        "drawdown": drawdown,
        "annual_return": annual_return,
        "years": years,
    }
    if salary_cents is not None:
        out["salary"] = salary_cents / 100.0
        out["balance"] = (balance_cents or 0) / 100.0
    return out


def validate_whatif_inputs(obj: dict):
    """Parse a what-if payload into (profile, assumptions, monthly, changes)."""
    if not isinstance(obj, dict):
        raise ValidationError([("", "body must be a JSON object")])
    changes_obj = obj.get("changes")
    base_obj = {k: v for k, v in obj.items() if k != "changes"}
    errs: list[tuple[str, str]] = []
    profile = assumptions = monthly = None
    try:
        profile, assumptions, monthly = validate_projection_inputs(base_obj)
    except ValidationError as exc:
        errs.extend(exc.field_errors)
    changes: dict = {}
    if changes_obj is None:
        errs.append(("changes", "is required"))
    elif not isinstance(changes_obj, dict):
        errs.append(("changes", "must be an object"))
    else:
        sub: list[tuple[str, str]] = []
        rate = _get_number(changes_obj, "rate", sub, lo=0.0, hi=1.0, required=False)
        ret = _get_int(changes_obj, "retirement_age", sub, lo=17, hi=100, required=False)
        errs.extend((f"changes.{p}", m) for p, m in sub)
        if rate is None and ret is None and not sub:
            errs.append(("changes", "must set rate or retirement_age"))
        if (
            ret is not None
            and profile is not None
            and ret <= profile.age
        ):
            errs.append(("changes.retirement_age", "must exceed age"))
        changes = {"rate": rate, "retirement_age": ret}
    if errs:
        raise ValidationError(errs)
    return profile, assumptions, monthly, changes


def validate_scenario_payload(obj: dict):
    """Parse a scenario-save payload into (name, inputs dict)."""
    if not isinstance(obj, dict):
        raise ValidationError([("", "body must be a JSON object")])
    errs: list[tuple[str, str]] = []
    name = obj.get("name")
    if name is None:
        errs.append(("name", "is required"))
    elif not isinstance(name, str) or not name.strip():
        errs.append(("name", "must be a nonempty string"))
    elif len(name) > 200:
        errs.append(("name", "must be at most 200 characters"))
    inputs = obj.get("inputs")
    if inputs is None:
        errs.append(("inputs", "is required"))
    elif not isinstance(inputs, dict):
        errs.append(("inputs", "must be an object"))
    else:
        try:
            validate_projection_inputs(inputs)
        except ValidationError as exc:
            errs.extend((f"inputs.{p}", m) for p, m in exc.field_errors)
    if errs:
        raise ValidationError(errs)
    return name.strip(), inputs


# ---------------------------------------------------------------------------
# Canonical JSON and the scenario store.
# ---------------------------------------------------------------------------


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, no whitespace, float repr."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def projection_to_json(proj: IncomeProjection) -> dict:
    return {
        "fund_low": proj.fund_low,
        "fund_high": proj.fund_high,
        "income_low": proj.income_low,
        "income_high": proj.income_high,
        "replacement_low": proj.replacement_low,
        "replacement_high": proj.replacement_high,
        "drawdown": proj.drawdown,
        "final_salary": proj.final_salary,
    }


def display_block(proj: IncomeProjection) -> dict:
    """Rounded figures the way they are quoted to members."""
    return {
        "income_low": round_currency(proj.income_low),
        "income_high": round_currency(proj.income_high),
        "monthly_low": round_currency(proj.income_low / 12.0, 100),
        "monthly_high": round_currency(proj.income_high / 12.0, 100),
        "replacement_low_pct": round_replacement(proj.replacement_low),
        "replacement_high_pct": round_replacement(proj.replacement_high),
    }


def _scenario_inputs_canonical(inputs: dict) -> dict:
    """Normalized input block actually persisted for a scenario."""
    profile, assumptions, monthly = validate_projection_inputs(inputs)
    return {
        "age": profile.age,
        "retirement_age": profile.retirement_age,
        "salary_cents": round(profile.salary * 100),
        "balance_cents": round(profile.balance * 100),
        "rate": profile.rate,
        "gender": profile.gender,
        "inflation": assumptions.inflation,
        "nominal_low": assumptions.nominal_low,
        "nominal_high": assumptions.nominal_high,
        "salary_growth": assumptions.salary_growth,
        "monthly": monthly,
    }


def _project_from_inputs(inputs: dict) -> IncomeProjection:
    profile, assumptions, monthly = validate_projection_inputs(inputs)
    return project_retirement_income(profile, assumptions, monthly=monthly)


def _results_match(stored: dict, fresh: dict) -> bool:
    for key, want in fresh.items():
        got = stored.get(key)
        if not isinstance(got, (int, float)):
            return False
        if not math.isclose(got, want, rel_tol=RECOMPUTE_RTOL, abs_tol=1e-12):
            return False
    return True


def _utc_now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


class ScenarioStore:
    """Append-only JSON-lines store of saved projections.

    Writes take an exclusive advisory lock on the file, reads a shared one,
    so concurrent processes never interleave partial lines. Every record is
    revalidated on read: its inputs must reproduce its stored results.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)

    def save(self, name: str, inputs: dict) -> dict:
        name, _ = validate_scenario_payload({"name": name, "inputs": inputs})
        record = {
            "id": str(uuid.uuid4()),
            "name": name,
            "created_at": _utc_now(),
            "inputs": _scenario_inputs_canonical(inputs),
        }
        proj = _project_from_inputs(record["inputs"])
        record["results"] = projection_to_json(proj)
        line = canonical_json(record)
        with open(self.path, "a") as fh:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX)
            try:
                fh.write(line + "\n")
                fh.flush()
            finally:
                fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
        return record

    def _read_all(self) -> list[dict]:
        if not self.path.exists():
            return []
        with open(self.path) as fh:
            fcntl.flock(fh.fileno(), fcntl.LOCK_SH)
            try:
                lines = fh.read().splitlines()
            finally:
                fcntl.flock(fh.fileno(), fcntl.LOCK_UN)
        records = []
        for i, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreCorrupt(f"line {i}: not valid JSON ({exc})") from None
            if not isinstance(rec, dict) or not {
                "id",
                "name",
                "created_at",
                "inputs",
                "results",
            } <= set(rec):
                raise StoreCorrupt(f"line {i}: missing required keys")
            try:
                fresh = projection_to_json(_project_from_inputs(rec["inputs"]))
            except ValidationError as exc:
                raise StoreCorrupt(f"line {i}: bad inputs ({exc})") from None
            if not _results_match(rec["results"], fresh):
                raise StoreCorrupt(
                    f"line {i}: stored results do not reproduce from inputs"
                )
            records.append(rec)
        return records

    def get(self, scenario_id: str) -> dict:
        for rec in self._read_all():
            if rec["id"] == scenario_id:
                return rec
        raise NotFound(f"scenario {scenario_id!r} not found")

    def list(self) -> list[dict]:
        return [
            {"id": r["id"], "name": r["name"], "created_at": r["created_at"]}
            for r in self._read_all()
        ]
