/**
 * Pure view functions: state in, HTML string out. Every figure shown comes
 * from a server response field; the only numeric literal in the copy is the
 * 75% benchmark the marker question refers to.
 */

import type {
  DisplayBlock,
  FieldError,
  ProjectionResponse,
  ScenarioSummary,
} from "./types.js";
import { FIELD_HINTS, type FormState } from "./validation.js";

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

/** 51000 -> "51 000"; grouping only, no rounding (server already rounded). */
export function formatAmount(n: number): string {
  const sign = n < 0 ? "-" : "";
  const digits = String(Math.abs(n));
  let grouped = "";
  for (let i = 0; i < digits.length; i++) {
    const fromEnd = digits.length - i;
    grouped += digits[i];
    if (fromEnd > 1 && fromEnd % 3 === 1) grouped += " ";
  }
  return sign + grouped;
}

export function formatRand(n: number): string {
  return "R " + formatAmount(n);
}

function errorFor(path: string, errors: FieldError[]): string {
  const hit = errors.find((e) => e.path === path);
  if (!hit) return "";
  return `<span class="field-error" role="alert">${escapeHtml(hit.message)}</span>`;
}

interface FieldSpec {
  path: string;
  label: string;
  formKey: keyof FormState;
  type: "number" | "text";
  suffix?: string;
}

const PROFILE_FIELDS: FieldSpec[] = [
  { path: "age", label: "Age", formKey: "age", type: "number" },
  { path: "retirement_age", label: "Retirement age", formKey: "retirementAge", type: "number" },
  { path: "salary_cents", label: "Annual salary", formKey: "salary", type: "text", suffix: "R" },
  { path: "balance_cents", label: "Current balance", formKey: "balance", type: "text", suffix: "R" },
  { path: "rate", label: "Contribution rate", formKey: "ratePct", type: "number", suffix: "%" },
];

const ASSUMPTION_FIELDS: FieldSpec[] = [
  { path: "inflation", label: "Inflation", formKey: "inflationPct", type: "number", suffix: "%" },
  { path: "nominal_low", label: "Return, cautious", formKey: "nominalLowPct", type: "number", suffix: "%" },
  { path: "nominal_high", label: "Return, optimistic", formKey: "nominalHighPct", type: "number", suffix: "%" },
  { path: "salary_growth", label: "Salary growth", formKey: "salaryGrowthPct", type: "number", suffix: "%" },
];

function renderField(spec: FieldSpec, form: FormState, errors: FieldError[]): string {
  const hintId = `hint-${spec.path}`;
  const value = escapeHtml(String(form[spec.formKey]));
  const suffix = spec.suffix ? `<span class="suffix">${spec.suffix}</span>` : "";
  return `
    <div class="field">
      <label for="f-${spec.path}">${spec.label}</label>
      <div class="control">
        <input id="f-${spec.path}" data-field="${String(spec.formKey)}"
               type="${spec.type}" value="${value}"
               aria-describedby="${hintId}" ${spec.type === "number" ? 'step="any"' : ""} />
        ${suffix}
      </div>
      <small id="${hintId}" class="hint">${escapeHtml(FIELD_HINTS[spec.path] ?? "")}</small>
      ${errorFor(spec.path, errors)}
    </div>`;
}

/** Screen one: the six inputs plus the assumptions drawer. */
export function renderInputScreen(
  form: FormState,
  errors: FieldError[],
  submitDisabled: boolean,
): string {
  const fields = PROFILE_FIELDS.map((f) => renderField(f, form, errors)).join("");
  const assumptions = ASSUMPTION_FIELDS.map((f) => renderField(f, form, errors)).join("");
  const genderChecked = (g: string) => (form.gender === g ? "checked" : "");
  return `
  <section class="screen" id="screen-inputs">
    <h1>Retirement income calculator</h1>
    <p>Six details about you and your fund; the projection runs on the server.</p>
    <form id="profile-form" novalidate>
      ${fields}
      <div class="field">
        <span id="gender-label">Gender</span>
        <div class="control" role="radiogroup" aria-labelledby="gender-label"
             aria-describedby="hint-gender">
          <label><input type="radio" name="gender" data-field="gender" value="M"
                 ${genderChecked("M")} /> Male</label>
          <label><input type="radio" name="gender" data-field="gender" value="F"
                 ${genderChecked("F")} /> Female</label>
        </div>
        <small id="hint-gender" class="hint">${escapeHtml(FIELD_HINTS.gender ?? "")}</small>
        ${errorFor("gender", errors)}
      </div>
      <details class="drawer" ${form.drawerOpen ? "open" : ""}>
        <summary>Assumptions</summary>
        ${assumptions}
        ${errorFor("", errors)}
      </details>
      <button type="submit" id="submit-projection" ${submitDisabled ? "disabled" : ""}>
        Project my income
      </button>
    </form>
  </section>`;
}

/** The on-track marker against the 75% benchmark. */
export function onTrackText(display: DisplayBlock): string {
  if (display.replacement_low_pct >= 75) return "Yes";
  if (display.replacement_high_pct >= 75) return "Only at the high end";
  return "No";
}

export function renderBand(display: DisplayBlock): string {
  return `${display.replacement_low_pct}% - ${display.replacement_high_pct}%`;
}

/** Screen two: the projected band plus the what-if panel mount point. */
export function renderResults(resp: ProjectionResponse): string {
  const d = resp.display;
  return `
  <section class="screen" id="screen-results">
    <h1>Your projection</h1>
    <dl class="band">
      <dt>Yearly income at retirement</dt>
      <dd id="income-band">${formatRand(d.income_low)} to ${formatRand(d.income_high)}</dd>
      <dt>Monthly</dt>
      <dd id="monthly-band">${formatRand(d.monthly_low)} to ${formatRand(d.monthly_high)}</dd>
      <dt>Replacement rate</dt>
      <dd id="replacement-band">${renderBand(d)} of final salary</dd>
      <dt>Are you on track for 75%?</dt>
      <dd id="on-track">${onTrackText(d)}</dd>
    </dl>
    <div id="whatif-mount"></div>
    <nav class="placeholders">
      <a href="#" aria-disabled="true" data-placeholder>Tax calculator</a>
      <a href="#" aria-disabled="true" data-placeholder>Change my contribution rate</a>
    </nav>
    <button type="button" data-action="back">Edit inputs</button>
  </section>`;
}

/** The what-if panel: slider plus adjusted column, all server numbers. */
export function renderWhatifPanel(
  baseline: ProjectionResponse,
  adjusted: ProjectionResponse | null,
  sliderPct: number,
  retireAge: string,
  lumpSum: string,
  errors: FieldError[],
): string {
  const column = (title: string, d: DisplayBlock, id: string) => `
    <div class="col" id="${id}">
      <h3>${title}</h3>
      <p class="figure">${formatRand(d.income_low)} to ${formatRand(d.income_high)} a year</p>
      <p class="figure">${renderBand(d)} of final salary</p>
    </div>`;
  const altCol = adjusted
    ? column("Adjusted", adjusted.display, "whatif-adjusted")
    : `<div class="col pending" id="whatif-adjusted"><h3>Adjusted</h3><p>...</p></div>`;
  return `
  <section class="whatif">
    <h2>What if?</h2>
    <div class="field">
      <label for="whatif-rate">Contribution rate: <output id="whatif-rate-out">${sliderPct}%</output></label>
      <input type="range" id="whatif-rate" min="0" max="27.5" step="0.5"
             value="${sliderPct}" />
    </div>
    <div class="field">
      <label for="whatif-age">Retire at</label>
      <input type="number" id="whatif-age" value="${escapeHtml(retireAge)}" step="1" />
      ${errorFor("changes.retirement_age", errors)}
    </div>
    <div class="field">
      <label for="whatif-lump">One-off lump sum into the fund</label>
      <input type="text" id="whatif-lump" value="${escapeHtml(lumpSum)}" />
      ${errorFor("lump_sum", errors)}
    </div>
    <div class="columns">
      ${column("Current plan", baseline.display, "whatif-baseline")}
      ${altCol}
    </div>
  </section>`;
}

export function renderScenarioPanel(
  scenarios: ScenarioSummary[],
  message: string,
): string {
  const rows = scenarios
    .map(
      (s) => `
      <li>
        <button type="button" data-action="open-scenario" data-id="${escapeHtml(s.id)}">
          ${escapeHtml(s.name)}
        </button>
        <time>${escapeHtml(s.created_at)}</time>
      </li>`,
    )
    .join("");
  return `
  <aside class="scenarios">
    <h2>Saved scenarios</h2>
    <ul>${rows || "<li class='empty'>Nothing saved yet.</li>"}</ul>
    <div class="field">
      <label for="scenario-name">Name</label>
      <input type="text" id="scenario-name" maxlength="200" />
      <button type="button" data-action="save-scenario">Save current inputs</button>
    </div>
    <p class="scenario-msg" role="status">${escapeHtml(message)}</p>
  </aside>`;
}

export function renderBanner(message: string | null): string {
  if (!message) return "";
  return `<div class="banner" role="alert">${escapeHtml(message)}</div>`;
}
