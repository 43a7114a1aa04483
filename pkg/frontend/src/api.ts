/**
 * Typed client for the retirelab JSON API. All math happens server-side;
 * this module only moves payloads and unwraps the error envelope.
 */

import type {
  ErrorEnvelope,
  FieldError,
  ProjectionPayload,
  ProjectionResponse,
  RequiredRateResponse,
  ScenarioRecord,
  ScenarioSummary,
  WhatifChanges,
  WhatifResponse,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly fieldErrors: FieldError[] = [],
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base: string, fetchFn?: FetchLike) {
    this.base = base.replace(/\/+$/, "");
    // Bind so a bare window.fetch keeps its receiver.
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: {} };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.base + path, init);
    if (resp.ok) {
      return (await resp.json()) as T;
    }
    let envelope: ErrorEnvelope | null = null;
    try {
      envelope = (await resp.json()) as ErrorEnvelope;
    } catch {
      // Non-JSON error body, fall through to the generic error below.
    }
    if (envelope && envelope.error && typeof envelope.error.code === "string") {
      throw new ApiError(
        resp.status,
        envelope.error.code,
        envelope.error.message,
        envelope.error.field_errors ?? [],
      );
    }
    throw new ApiError(resp.status, "internal", `HTTP ${resp.status}`);
  }

  health(): Promise<{ status: string; version: string }> {
    return this.request("GET", "/api/v1/health");
  }

  projection(payload: ProjectionPayload): Promise<ProjectionResponse> {
    return this.request("POST", "/api/v1/projection", payload);
  }

  requiredRate(payload: {
    replacement: number;
    drawdown: number;
    annual_return: number;
    years: number;
    salary_cents?: number;
    balance_cents?: number;
  }): Promise<RequiredRateResponse> {
    return this.request("POST", "/api/v1/required-rate", payload);
  }

  whatif(payload: ProjectionPayload, changes: WhatifChanges): Promise<WhatifResponse> {
    return this.request("POST", "/api/v1/whatif", { ...payload, changes });
  }

  saveScenario(name: string, inputs: ProjectionPayload): Promise<ScenarioRecord> {
    return this.request("POST", "/api/v1/scenarios", { name, inputs });
  }

  listScenarios(): Promise<{ scenarios: ScenarioSummary[] }> {
    return this.request("GET", "/api/v1/scenarios");
  }

  getScenario(id: string): Promise<ScenarioRecord> {
    return this.request("GET", `/api/v1/scenarios/${encodeURIComponent(id)}`);
  }
}
