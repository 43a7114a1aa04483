import { describe, expect, it } from "vitest";

import {
  EMPTY_FORM,
  formFromScenario,
  validateForm,
  validateWhatifAge,
  type FormState,
} from "../src/validation.js";
import type { ScenarioInputs } from "../src/types.js";

// The reference member used across the product: incomes around R51k-R79k.
const REFERENCE: FormState = {
  ...EMPTY_FORM,
  age: "30",
  retirementAge: "65",
  salary: "200000",
  balance: "70000",
  ratePct: "7.5",
  gender: "M",
};

function messagesFor(form: FormState, path: string): string[] {
  return validateForm(form)
    .errors.filter((e) => e.path === path)
    .map((e) => e.message);
}

describe("form validation mirrors the server rules", () => {
  it("builds the reference payload exactly", () => {
    const { payload, errors } = validateForm(REFERENCE);
    expect(errors).toEqual([]);
    expect(payload).toEqual({
      age: 30,
      retirement_age: 65,
      salary_cents: 20_000_000,
      balance_cents: 7_000_000,
      rate: 0.075,
      gender: "M",
    });
  });

  it("accepts money fields with rand formatting", () => {
    const form = { ...REFERENCE, salary: "R 200,000", balance: "R 70 000" };
    const { payload } = validateForm(form);
    expect(payload?.salary_cents).toBe(20_000_000);
    expect(payload?.balance_cents).toBe(7_000_000);
  });

  it("omits blank optional fields so server defaults apply", () => {
    const form = { ...REFERENCE, balance: "", ratePct: "" };
    const { payload } = validateForm(form);
    expect(payload).toEqual({
      age: 30,
      retirement_age: 65,
      salary_cents: 20_000_000,
      gender: "M",
    });
  });

  it("converts percent inputs to fractions", () => {
    const form = {
      ...REFERENCE,
      ratePct: "15",
      inflationPct: "5",
      nominalLowPct: "8",
      nominalHighPct: "10",
      salaryGrowthPct: "6",
    };
    const { payload } = validateForm(form);
    expect(payload?.rate).toBe(0.15);
    expect(payload?.inflation).toBe(0.05);
    expect(payload?.nominal_low).toBe(0.08);
    expect(payload?.nominal_high).toBe(0.1);
    expect(payload?.salary_growth).toBe(0.06);
  });

  it.each([
    ["age", { age: "" }, "is required"],
    ["age", { age: "30.5" }, "must be an integer"],
    ["age", { age: "abc" }, "must be an integer"],
    ["age", { age: "15" }, "must be at least 16"],
    ["age", { age: "81" }, "must be at most 80"],
    ["retirement_age", { retirementAge: "" }, "is required"],
    ["retirement_age", { retirementAge: "101" }, "must be at most 100"],
    ["salary_cents", { salary: "" }, "is required"],
    ["salary_cents", { salary: "0" }, "must be at least 1"],
    ["salary_cents", { salary: "x" }, "must be a finite number"],
    ["balance_cents", { balance: "-5" }, "must be at least 0"],
    ["rate", { ratePct: "-1" }, "must be at least 0.0"],
    ["rate", { ratePct: "101" }, "must be at most 1.0"],
    ["inflation", { inflationPct: "-100" }, "must be at least -0.99"],
    ["nominal_low", { nominalLowPct: "oops" }, "must be a finite number"],
  ] as [string, Partial<FormState>, string][])(
    "flags %s with the server message",
    (path, patch, message) => {
      const form = { ...REFERENCE, ...patch };
      expect(messagesFor(form, path)).toContain(message);
    },
  );

  it("rejects retirement at or before the current age", () => {
    const form = { ...REFERENCE, retirementAge: "30" };
    expect(messagesFor(form, "retirement_age")).toEqual(["must exceed age"]);
  });

  it("rejects a high return below the low one", () => {
    const form = { ...REFERENCE, nominalLowPct: "10", nominalHighPct: "8" };
    expect(messagesFor(form, "nominal_high")).toEqual([
      "must be at least nominal_low",
    ]);
  });

  it("collects every offending field in one pass", () => {
    const form = { ...REFERENCE, age: "12", salary: "0", ratePct: "200" };
    const { payload, errors } = validateForm(form);
    expect(payload).toBeNull();
    expect(errors.map((e) => e.path).sort()).toEqual([
      "age",
      "rate",
      "salary_cents",
    ]);
  });
});

describe("what-if retirement age", () => {
  it("applies the server rules against the profile age", () => {
    expect(validateWhatifAge("70", 30).value).toBe(70);
    expect(validateWhatifAge("", 30).value).toBeNull();
    expect(validateWhatifAge("", 30).errors).toEqual([]);
    const tooEarly = validateWhatifAge("30", 30);
    expect(tooEarly.errors).toEqual([
      { path: "changes.retirement_age", message: "must exceed age" },
    ]);
    const junk = validateWhatifAge("soon", 30);
    expect(junk.errors[0]?.message).toBe("must be an integer");
  });
});

describe("scenario round trip", () => {
  it("fills the form from a stored canonical input block", () => {
    const inputs: ScenarioInputs = {
      age: 30,
      retirement_age: 65,
      salary_cents: 20_000_000,
      balance_cents: 7_000_000,
      rate: 0.075,
      gender: "F",
      inflation: 0.05,
      nominal_low: 0.08,
      nominal_high: 0.1,
      salary_growth: null,
      monthly: false,
    };
    const form = formFromScenario(inputs);
    expect(form.age).toBe("30");
    expect(form.salary).toBe("200000");
    expect(form.ratePct).toBe("7.5");
    expect(form.gender).toBe("F");
    expect(form.salaryGrowthPct).toBe("");
    // Re-validating the rebuilt form reproduces the stored profile fields.
    const { payload } = validateForm(form);
    expect(payload?.salary_cents).toBe(inputs.salary_cents);
    expect(payload?.rate).toBe(inputs.rate);
  });
});
