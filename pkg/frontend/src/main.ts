/**
 * DOM wiring: one state object, re-render on change, event delegation so
 * handlers survive re-renders. Flow mirrors the two product screens:
 * inputs -> results, with the what-if panel and scenario list on screen two.
 */

import { ApiClient, ApiError } from "./api.js";
import type {
  FieldError,
  ProjectionPayload,
  ProjectionResponse,
  ScenarioSummary,
  WhatifResponse,
} from "./types.js";
import {
  EMPTY_FORM,
  formFromScenario,
  validateForm,
  validateWhatifAge,
  type FormState,
} from "./validation.js";
import { debounce, WhatifQueue } from "./whatif.js";
import {
  renderBanner,
  renderInputScreen,
  renderResults,
  renderScenarioPanel,
  renderWhatifPanel,
} from "./views.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(location.search).get("api");
  if (fromQuery) return fromQuery;
  const meta = document.querySelector<HTMLMetaElement>('meta[name="api-base"]');
  return meta?.content || "http://127.0.0.1:8000";
}

const api = new ApiClient(apiBase());

interface WhatifState {
  sliderPct: number;
  retireAge: string;
  lumpSum: string;
  adjusted: ProjectionResponse | null;
  errors: FieldError[];
}

interface AppState {
  screen: "inputs" | "results";
  form: FormState;
  errors: FieldError[];
  submitted: boolean;
  banner: string | null;
  payload: ProjectionPayload | null;
  baseline: ProjectionResponse | null;
  whatif: WhatifState;
  scenarios: ScenarioSummary[];
  scenarioMsg: string;
}

const state: AppState = {
  screen: "inputs",
  form: { ...EMPTY_FORM },
  errors: [],
  submitted: false,
  banner: null,
  payload: null,
  baseline: null,
  whatif: { sliderPct: 7.5, retireAge: "", lumpSum: "", adjusted: null, errors: [] },
  scenarios: [],
  scenarioMsg: "",
};

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

function render(): void {
  const check = validateForm(state.form);
  const shown = state.submitted ? [...check.errors, ...state.errors] : state.errors;
  if (state.screen === "inputs") {
    root!.innerHTML =
      renderBanner(state.banner) +
      renderInputScreen(state.form, shown, check.payload === null);
    return;
  }
  const baseline = state.baseline!;
  root!.innerHTML =
    renderBanner(state.banner) +
    renderResults(baseline) +
    renderScenarioPanel(state.scenarios, state.scenarioMsg);
  const mount = document.getElementById("whatif-mount");
  if (mount) {
    mount.innerHTML = renderWhatifPanel(
      baseline,
      state.whatif.adjusted,
      state.whatif.sliderPct,
      state.whatif.retireAge,
      state.whatif.lumpSum,
      state.whatif.errors,
    );
  }
}

// One queue for the life of the page; stale slider responses are dropped.
const whatifQueue = new WhatifQueue<
  { payload: ProjectionPayload; changes: { rate: number; retirement_age?: number } },
  WhatifResponse
>(
  (req) => api.whatif(req.payload, req.changes),
  (resp) => {
    state.whatif.adjusted = resp.alt;
    state.whatif.errors = [];
    render();
  },
  (err) => {
    state.whatif.errors = err instanceof ApiError ? err.fieldErrors : [];
    state.banner = err instanceof ApiError ? null : "What-if request failed.";
    render();
  },
);

function centsFromRand(raw: string): number {
  const s = raw.trim().replace(/[R,\s]/g, "");
  const v = Number(s);
  return Number.isFinite(v) && v > 0 ? Math.round(v * 100) : 0;
}

function pushWhatif(): void {
  if (!state.payload) return;
  const ageCheck = validateWhatifAge(state.whatif.retireAge, state.payload.age);
  state.whatif.errors = ageCheck.errors;
  if (ageCheck.errors.length > 0) {
    render();
    return;
  }
  const lumpCents = centsFromRand(state.whatif.lumpSum);
  const payload: ProjectionPayload = {
    ...state.payload,
    balance_cents: (state.payload.balance_cents ?? 0) + lumpCents,
  };
  const changes: { rate: number; retirement_age?: number } = {
    rate: state.whatif.sliderPct / 100,
  };
  if (ageCheck.value !== null) changes.retirement_age = ageCheck.value;
  whatifQueue.push({ payload, changes });
}

const pushWhatifDebounced = debounce(pushWhatif, 150);

async function submitProjection(): Promise<void> {
  state.submitted = true;
  state.errors = [];
  state.banner = null;
  const { payload, errors } = validateForm(state.form);
  if (!payload) {
    state.errors = errors;
    render();
    return;
  }
  try {
    const resp = await api.projection(payload);
    state.payload = payload;
    state.baseline = resp;
    state.screen = "results";
    state.whatif = {
      sliderPct: (payload.rate ?? 0.075) * 100,
      retireAge: "",
      lumpSum: "",
      adjusted: resp,
      errors: [],
    };
    await refreshScenarios();
  } catch (err) {
    if (err instanceof ApiError) {
      state.errors = err.fieldErrors;
      state.banner = err.fieldErrors.length ? null : err.message;
    } else {
      state.banner = "The projection service is unreachable.";
    }
  }
  render();
}

async function refreshScenarios(): Promise<void> {
  try {
    state.scenarios = (await api.listScenarios()).scenarios;
  } catch {
    state.scenarios = [];
  }
}

async function saveScenario(): Promise<void> {
  const nameInput = document.getElementById("scenario-name") as HTMLInputElement | null;
  const name = nameInput?.value.trim() ?? "";
  if (!name || !state.payload) {
    state.scenarioMsg = "Give the scenario a name first.";
    render();
    return;
  }
  try {
    const rec = await api.saveScenario(name, state.payload);
    state.scenarioMsg = `Saved "${rec.name}".`;
    await refreshScenarios();
  } catch (err) {
    state.scenarioMsg = err instanceof ApiError ? err.message : "Save failed.";
  }
  render();
}

async function openScenario(id: string): Promise<void> {
  try {
    const rec = await api.getScenario(id);
    // Re-project from the stored canonical inputs; the server guarantees
    // the stored results match, so the reloaded view equals the saved one.
    const resp = await api.projection(rec.inputs);
    state.form = formFromScenario(rec.inputs);
    state.payload = rec.inputs;
    state.baseline = resp;
    state.screen = "results";
    state.whatif = {
      sliderPct: rec.inputs.rate * 100,
      retireAge: "",
      lumpSum: "",
      adjusted: resp,
      errors: [],
    };
    state.scenarioMsg = `Loaded "${rec.name}".`;
  } catch (err) {
    state.scenarioMsg = err instanceof ApiError ? err.message : "Load failed.";
  }
  render();
}

document.addEventListener("input", (ev) => {
  const el = ev.target as HTMLInputElement;
  if (el.dataset.field) {
    const key = el.dataset.field as keyof FormState;
    (state.form as unknown as Record<string, unknown>)[key] = el.value;
    if (state.submitted) render();
    else {
      // Keep the submit gate live without re-rendering mid-keystroke.
      const btn = document.getElementById("submit-projection") as HTMLButtonElement | null;
      if (btn) btn.disabled = validateForm(state.form).payload === null;
    }
    return;
  }
  if (el.id === "whatif-rate") {
    state.whatif.sliderPct = Number(el.value);
    const out = document.getElementById("whatif-rate-out");
    if (out) out.textContent = `${state.whatif.sliderPct}%`;
    pushWhatifDebounced();
  } else if (el.id === "whatif-age") {
    state.whatif.retireAge = el.value;
    pushWhatifDebounced();
  } else if (el.id === "whatif-lump") {
    state.whatif.lumpSum = el.value;
    pushWhatifDebounced();
  }
});

document.addEventListener("submit", (ev) => {
  const form = ev.target as HTMLFormElement;
  if (form.id === "profile-form") {
    ev.preventDefault();
    void submitProjection();
  }
});

document.addEventListener("click", (ev) => {
  const el = (ev.target as HTMLElement).closest<HTMLElement>("[data-action],[data-placeholder]");
  if (!el) return;
  if (el.dataset.placeholder !== undefined) {
    ev.preventDefault();
    return;
  }
  switch (el.dataset.action) {
    case "back":
      state.screen = "inputs";
      render();
      break;
    case "save-scenario":
      void saveScenario();
      break;
    case "open-scenario":
      void openScenario(el.dataset.id ?? "");
      break;
  }
});

render();
