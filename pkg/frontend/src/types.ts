/**
 * Wire types for the retirelab HTTP service. Field names match the JSON
 * the server sends and accepts; nothing here is recomputed client-side.
 */

export interface ProjectionResults {
  fund_low: number;
  fund_high: number;
  income_low: number;
  income_high: number;
  replacement_low: number;
  replacement_high: number;
  drawdown: number;
  final_salary: number;
}

/** Rounded figures the way the server quotes them to members. */
export interface DisplayBlock {
  income_low: number;
  income_high: number;
  monthly_low: number;
  monthly_high: number;
  replacement_low_pct: number;
  replacement_high_pct: number;
}

export interface ProjectionResponse {
  results: ProjectionResults;
  display: DisplayBlock;
}

export interface WhatifResponse {
  base: ProjectionResponse;
  alt: ProjectionResponse;
}

export interface RequiredRateResponse {
  rate: number;
  rate_pct: number;
  capped: boolean;
}

export interface FieldError {
  path: string;
  message: string;
}

export interface ErrorEnvelope {
  error: {
    code: string;
    message: string;
    field_errors: FieldError[];
  };
}

/** Projection request body. Optional fields fall back to server defaults. */
export interface ProjectionPayload {
  age: number;
  retirement_age: number;
  salary_cents: number;
  balance_cents?: number;
  rate?: number;
  gender?: "M" | "F";
  inflation?: number | null;
  nominal_low?: number | null;
  nominal_high?: number | null;
  salary_growth?: number | null;
  monthly?: boolean;
}

export interface WhatifChanges {
  rate?: number;
  retirement_age?: number;
}

export interface ScenarioSummary {
  id: string;
  name: string;
  created_at: string;
}

/** The canonical input block the server persists for a scenario. */
export interface ScenarioInputs {
  age: number;
  retirement_age: number;
  salary_cents: number;
  balance_cents: number;
  rate: number;
  gender: "M" | "F";
  inflation: number;
  nominal_low: number;
  nominal_high: number;
  salary_growth: number | null;
  monthly: boolean;
}

export interface ScenarioRecord extends ScenarioSummary {
  inputs: ScenarioInputs;
  results: ProjectionResults;
}
