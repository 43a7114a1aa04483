"""HTTP service exposing projections, scenarios, and roster analysis.

All endpoints live under /api/v1 and speak JSON. Request bodies are parsed
and validated by hand (see dataio) so an invalid payload reports every bad
field in one response, in a fixed error envelope:

    {"error": {"code": "validation" | "not_found" | "internal",
               "message": "...",
               "field_errors": [{"path": "...", "message": "..."}]}}

Validation problems map to 422 (413 for oversized bodies), missing scenarios
to 404, anything unexpected to 500. Each request is logged to stderr as one
JSON line. Configuration comes from an optional KEY=VALUE file overridden by
RETIRELAB_* environment variables.
"""

from __future__ import annotations

import json
import logging
import os
import sys
import time
import warnings
from dataclasses import dataclass, replace

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import __version__
from .dataio import (
    ScenarioStore,
    display_block,
    load_roster_text,
    projection_to_json,
    validate_projection_inputs,
    validate_required_rate_inputs,
    validate_scenario_payload,
    validate_whatif_inputs,
)
from .errors import (
    NotFound,
    RankDeficient,
    RetirelabError,
    SchemaError,
    StoreCorrupt,
    ValidationError,
    ZeroDrawdown,
)
from .estimators import arm_outcomes, bootstrap_mean_diff, het_effects, itt, late
from .experiment import ARMS
from .projection import (
    TAX_DEDUCTIBLE_CAP,
    EmployeeProfile,
    project_retirement_income,
    required_contribution_rate,
    required_rate_with_balance,
    whatif,
)

CONFIG_KEYS = ("HOST", "PORT", "SCENARIO_STORE", "CORS_ORIGINS", "MAX_UPLOAD_BYTES")
ESTIMATORS = ("itt", "late", "het", "bootstrap")
PLAIN_BODY_LIMIT = 1 << 20  # non-upload endpoints

log = logging.getLogger("retirelab.service")


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    scenario_store: str = "scenarios.jsonl"
    cors_origins: tuple[str, ...] = ("*",)
    max_upload_bytes: int = 10 * 1024 * 1024


def load_config(path: str | None = None, env=None) -> ServiceConfig:
    """Read a KEY=VALUE config file, then apply RETIRELAB_* overrides."""
    env = os.environ if env is None else env
    raw: dict[str, str] = {}
    if path is not None:
        for line_no, line in enumerate(open(path).read().splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise SchemaError(f"config line {line_no}: expected KEY=VALUE")
            key, _, value = stripped.partition("=")
            key = key.strip()
            if key not in CONFIG_KEYS:
                raise SchemaError(f"config line {line_no}: unknown key {key!r}")
            raw[key] = value.strip()
    for key in CONFIG_KEYS:
        env_val = env.get(f"RETIRELAB_{key}")
        if env_val is not None:
            raw[key] = env_val
    cfg = ServiceConfig()
    if "HOST" in raw:
        cfg = replace(cfg, host=raw["HOST"])
    if "PORT" in raw:
        try:
            cfg = replace(cfg, port=int(raw["PORT"]))
        except ValueError:
            raise SchemaError(f"PORT must be an integer, got {raw['PORT']!r}") from None
    if "SCENARIO_STORE" in raw:
        cfg = replace(cfg, scenario_store=raw["SCENARIO_STORE"])
    if "CORS_ORIGINS" in raw:
        origins = tuple(o.strip() for o in raw["CORS_ORIGINS"].split(",") if o.strip())
        cfg = replace(cfg, cors_origins=origins or ("*",))
    if "MAX_UPLOAD_BYTES" in raw:
        try:
            cfg = replace(cfg, max_upload_bytes=int(raw["MAX_UPLOAD_BYTES"]))
        except ValueError:
            raise SchemaError(
                f"MAX_UPLOAD_BYTES must be an integer, got {raw['MAX_UPLOAD_BYTES']!r}"
            ) from None
    return cfg


class _TooLarge(RetirelabError):
    pass


def _envelope(code: str, message: str, field_errors=()) -> dict:
    return {
        "error": {
            "code": code,
            "message": message,
            "field_errors": [{"path": p, "message": m} for p, m in field_errors],
        }
    }


async def _json_body(request: Request, limit: int) -> dict:
    raw = await request.body()
    if len(raw) > limit:
        raise _TooLarge(f"body exceeds {limit} bytes")
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        raise ValidationError([("", "body must be valid JSON")]) from None


def _projection_block(profile, assumptions, monthly) -> dict:
    proj = project_retirement_income(profile, assumptions, monthly=monthly)
    return {"results": projection_to_json(proj), "display": display_block(proj)}


def _validation_from(exc: Exception, path: str) -> ValidationError:
    return ValidationError([(path, str(exc))])


def _run_analysis(body: dict) -> dict:
    errs: list[tuple[str, str]] = []
    csv_text = body.get("csv")
    if not isinstance(csv_text, str) or not csv_text.strip():
        errs.append(("csv", "must be a nonempty CSV string"))
    estimator = body.get("estimator")
    if estimator not in ESTIMATORS:
        errs.append(("estimator", f"must be one of {list(ESTIMATORS)}"))
    outcome = body.get("outcome", "change")
    if outcome not in ("change", "post"):
        errs.append(("outcome", "must be 'change' or 'post'"))
    group = body.get("group")
    if estimator == "het" and group is None:
        errs.append(("group", "is required for the het estimator"))
    seed = body.get("seed")
    if estimator == "bootstrap":
        if seed is None or isinstance(seed, bool) or not isinstance(seed, int):
            errs.append(("seed", "an integer seed is required for bootstrap"))
    draws = body.get("draws", 5000)
    if isinstance(draws, bool) or not isinstance(draws, int) or draws < 1000:
        errs.append(("draws", "must be an integer of at least 1000"))
    if errs:
        raise ValidationError(errs)
    try:
        records, report = load_roster_text(csv_text)
    except (SchemaError, ValueError) as exc:
        raise _validation_from(exc, "csv") from None
    result: dict
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            if estimator == "itt":
                result = itt(records, outcome=outcome).to_json()
            elif estimator == "late":
                result = late(records, outcome=outcome).to_json()
            elif estimator == "het":
                result = het_effects(records, group=group, outcome=outcome).to_json()
            else:
                ctrl = arm_outcomes(records, "control", outcome=outcome)
                result = {}
                present = {r.treatment for r in records}
                for arm in ARMS[1:]:
                    if arm in present:
                        result[arm] = bootstrap_mean_diff(
                            arm_outcomes(records, arm, outcome=outcome),
                            ctrl,
                            seed=seed,
                            draws=draws,
                        ).to_json()
        except (RankDeficient, ValueError) as exc:
            raise _validation_from(exc, "csv") from None
    return {
        "estimator": estimator,
        "result": result,
        "cleaning": report.to_json(),
        "warnings": [str(w.message) for w in caught],
    }


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="retirelab", version=__version__, docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = ScenarioStore(config.scenario_store)

    if not log.handlers:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter("%(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
        log.propagate = False

    @app.middleware("http")
    async def _log_requests(request: Request, call_next):
        t0 = time.perf_counter()
        response = await call_next(request)
        log.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "status": response.status_code,
                    "ms": round((time.perf_counter() - t0) * 1000.0, 2),
                }
            )
        )
        return response

    @app.exception_handler(ValidationError)
    async def _on_validation(request, exc: ValidationError):
        return JSONResponse(
            status_code=422,
            content=_envelope("validation", "invalid request", exc.field_errors),
        )

    @app.exception_handler(_TooLarge)
    async def _on_too_large(request, exc: _TooLarge):
        return JSONResponse(
            status_code=413, content=_envelope("validation", str(exc))
        )

    @app.exception_handler(NotFound)
    async def _on_not_found(request, exc: NotFound):
        return JSONResponse(
            status_code=404, content=_envelope("not_found", str(exc))
        )

    @app.exception_handler(RetirelabError)
    async def _on_internal(request, exc: RetirelabError):
        return JSONResponse(
            status_code=500, content=_envelope("internal", str(exc))
        )

    @app.get("/api/v1/health")
    async def health():
        return {"status": "ok", "version": __version__}

    @app.post("/api/v1/projection")
    async def projection(request: Request):
        body = await _json_body(request, PLAIN_BODY_LIMIT)
        profile, assumptions, monthly = validate_projection_inputs(body)
        return _projection_block(profile, assumptions, monthly)

    @app.post("/api/v1/required-rate")
    async def required_rate(request: Request):
        body = await _json_body(request, PLAIN_BODY_LIMIT)
        kw = validate_required_rate_inputs(body)
        try:
            if "salary" in kw:
                rate = required_rate_with_balance(**kw)
            else:
                rate = required_contribution_rate(**kw)
        except (ZeroDrawdown, ValueError) as exc:
            raise _validation_from(exc, "") from None
        return {
            "rate": rate,
            "rate_pct": rate * 100.0,
            "capped": rate > TAX_DEDUCTIBLE_CAP,
        }

    @app.post("/api/v1/whatif")
    async def whatif_endpoint(request: Request):
        body = await _json_body(request, PLAIN_BODY_LIMIT)
        profile, assumptions, monthly, changes = validate_whatif_inputs(body)
        base, alt = whatif(
            profile,
            assumptions,
            rate=changes.get("rate"),
            retirement_age=changes.get("retirement_age"),
            monthly=monthly,
        )
        return {
            "base": {"results": projection_to_json(base), "display": display_block(base)},
            "alt": {"results": projection_to_json(alt), "display": display_block(alt)},
        }

    @app.post("/api/v1/scenarios", status_code=201)
    async def save_scenario(request: Request):
        body = await _json_body(request, PLAIN_BODY_LIMIT)
        name, inputs = validate_scenario_payload(body)
        return store.save(name, inputs)

    @app.get("/api/v1/scenarios")
    async def list_scenarios():
        return {"scenarios": store.list()}

    @app.get("/api/v1/scenarios/{scenario_id}")
    async def get_scenario(scenario_id: str):
        return store.get(scenario_id)

    @app.post("/api/v1/analyze")
    async def analyze(request: Request):
        body = await _json_body(request, config.max_upload_bytes)
        if not isinstance(body, dict):
            raise ValidationError([("", "body must be a JSON object")])
        return _run_analysis(body)

    return app


def serve(config: ServiceConfig | None = None) -> None:
    """Run the service under uvicorn; blocks until interrupted."""
    import uvicorn

    config = config or ServiceConfig()
    uvicorn.run(create_app(config), host=config.host, port=config.port)
