/**
 * Client-side form state and validation.
 *
 * The rules and messages mirror the server's field validation one for one,
 * so an error looks the same whether it was caught before the request or
 * returned in a 422 envelope. Paths use the server's field names
 * (salary_cents, not salary) for the same reason.
 */

import type { FieldError, ProjectionPayload, ScenarioInputs } from "./types.js";

/** Raw form fields as the user typed them. Money in rand, rates in percent. */
export interface FormState {
  age: string;
  retirementAge: string;
  salary: string;
  balance: string;
  ratePct: string;
  gender: "M" | "F";
  // Assumptions drawer, blank means server default.
  inflationPct: string;
  nominalLowPct: string;
  nominalHighPct: string;
  salaryGrowthPct: string;
  drawerOpen: boolean;
}

export const EMPTY_FORM: FormState = {
  age: "",
  retirementAge: "",
  salary: "",
  balance: "",
  ratePct: "",
  gender: "M",
  inflationPct: "",
  nominalLowPct: "",
  nominalHighPct: "",
  salaryGrowthPct: "",
  drawerOpen: false,
};

/** Where-to-find-it hint per input, keyed by form field. */
export const FIELD_HINTS: Record<string, string> = {
  age: "Your current age in whole years.",
  retirement_age: "The age your plan pays out; 65 for most members.",
  salary_cents: "Annual salary before deductions, in rand.",
  balance_cents: "Current fund balance, on your latest benefit statement.",
  rate: "Percent of salary you contribute; can be found on your payslip.",
  gender: "Used to price the annuity your fund buys at retirement.",
  inflation: "Annual inflation assumption, percent. Leave blank for the default.",
  nominal_low: "Cautious annual return, percent, before inflation.",
  nominal_high: "Optimistic annual return, percent, before inflation.",
  salary_growth: "Annual salary growth, percent. Blank tracks inflation.",
};

const INT_RE = /^-?\d+$/;

function parseIntField(
  raw: string,
  path: string,
  lo: number,
  hi: number | null,
  required: boolean,
  errs: FieldError[],
): number | null {
  const s = raw.trim();
  if (s === "") {
    if (required) errs.push({ path, message: "is required" });
    return null;
  }
  if (!INT_RE.test(s)) {
    errs.push({ path, message: "must be an integer" });
    return null;
  }
  const v = parseInt(s, 10);
  if (v < lo) {
    errs.push({ path, message: `must be at least ${lo}` });
    return null;
  }
  if (hi !== null && v > hi) {
    errs.push({ path, message: `must be at most ${hi}` });
    return null;
  }
  return v;
}

// Range messages quote the server's float formatting ("1.0", "-0.99"), so
// the bound label is carried alongside the numeric bound.
function parseNumberField(
  raw: string,
  path: string,
  lo: number,
  loLabel: string,
  hi: number,
  hiLabel: string,
  required: boolean,
  errs: FieldError[],
): number | null {
  const s = raw.trim();
  if (s === "") {
    if (required) errs.push({ path, message: "is required" });
    return null;
  }
  const v = Number(s);
  if (!Number.isFinite(v)) {
    errs.push({ path, message: "must be a finite number" });
    return null;
  }
  if (v < lo) {
    errs.push({ path, message: `must be at least ${loLabel}` });
    return null;
  }
  if (v > hi) {
    errs.push({ path, message: `must be at most ${hiLabel}` });
    return null;
  }
  return v;
}

/** Rand amount -> integer cents, validated under the server's cents rules. */
function parseMoneyField(
  raw: string,
  path: string,
  loCents: number,
  required: boolean,
  errs: FieldError[],
): number | null {
  const s = raw.trim().replace(/[R,\s]/g, "");
  if (s === "") {
    if (required) errs.push({ path, message: "is required" });
    return null;
  }
  const v = Number(s);
  if (!Number.isFinite(v)) {
    errs.push({ path, message: "must be a finite number" });
    return null;
  }
  const cents = Math.round(v * 100);
  if (cents < loCents) {
    errs.push({ path, message: `must be at least ${loCents}` });
    return null;
  }
  return cents;
}

export interface ValidatedForm {
  payload: ProjectionPayload | null;
  errors: FieldError[];
}

/**
 * Validate the form and build the projection request body. Percent fields
 * become fractions; blank optional fields are omitted so the server applies
 * its own defaults.
 */
export function validateForm(form: FormState): ValidatedForm {
  const errs: FieldError[] = [];
  const age = parseIntField(form.age, "age", 16, 80, true, errs);
  const ret = parseIntField(form.retirementAge, "retirement_age", 17, 100, true, errs);
  const salaryCents = parseMoneyField(form.salary, "salary_cents", 1, true, errs);
  const balanceCents = parseMoneyField(form.balance, "balance_cents", 0, false, errs);
  const ratePct = parseNumberField(
    form.ratePct, "rate", 0.0, "0.0", 100.0, "1.0", false, errs,
  );
  const inflationPct = parseNumberField(
    form.inflationPct, "inflation", -99.0, "-0.99", 100.0, "1.0", false, errs,
  );
  const nominalLowPct = parseNumberField(
    form.nominalLowPct, "nominal_low", -99.0, "-0.99", 100.0, "1.0", false, errs,
  );
  const nominalHighPct = parseNumberField(
    form.nominalHighPct, "nominal_high", -99.0, "-0.99", 100.0, "1.0", false, errs,
  );
  const salaryGrowthPct = parseNumberField(
    form.salaryGrowthPct, "salary_growth", -99.0, "-0.99", 100.0, "1.0", false, errs,
  );
  if (age !== null && ret !== null && ret <= age) {
    errs.push({ path: "retirement_age", message: "must exceed age" });
  }
  if (
    nominalLowPct !== null &&
    nominalHighPct !== null &&
    nominalHighPct < nominalLowPct
  ) {
    errs.push({ path: "nominal_high", message: "must be at least nominal_low" });
  }
  if (errs.length > 0 || age === null || ret === null || salaryCents === null) {
    return { payload: null, errors: errs };
  }
  const payload: ProjectionPayload = {
    age,
    retirement_age: ret,
    salary_cents: salaryCents,
    gender: form.gender,
  };
  if (balanceCents !== null) payload.balance_cents = balanceCents;
  if (ratePct !== null) payload.rate = ratePct / 100;
  if (inflationPct !== null) payload.inflation = inflationPct / 100;
  if (nominalLowPct !== null) payload.nominal_low = nominalLowPct / 100;
  if (nominalHighPct !== null) payload.nominal_high = nominalHighPct / 100;
  if (salaryGrowthPct !== null) payload.salary_growth = salaryGrowthPct / 100;
  return { payload, errors: [] };
}

/** Validate a what-if retirement-age move against the profile's age. */
export function validateWhatifAge(
  raw: string,
  profileAge: number,
): { value: number | null; errors: FieldError[] } {
  const errs: FieldError[] = [];
  const v = parseIntField(raw, "changes.retirement_age", 17, 100, false, errs);
  if (v !== null && v <= profileAge) {
    errs.push({ path: "changes.retirement_age", message: "must exceed age" });
  }
  return { value: errs.length ? null : v, errors: errs };
}

/** Rebuild form fields from a saved scenario's canonical input block. */
export function formFromScenario(inputs: ScenarioInputs): FormState {
  return {
    age: String(inputs.age),
    retirementAge: String(inputs.retirement_age),
    salary: String(inputs.salary_cents / 100),
    balance: String(inputs.balance_cents / 100),
    ratePct: String(inputs.rate * 100),
    gender: inputs.gender,
    inflationPct: String(inputs.inflation * 100),
    nominalLowPct: String(inputs.nominal_low * 100),
    nominalHighPct: String(inputs.nominal_high * 100),
    salaryGrowthPct:
      inputs.salary_growth === null ? "" : String(inputs.salary_growth * 100),
    drawerOpen: false,
  };
}
