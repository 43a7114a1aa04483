import { describe, expect, it } from "vitest";

import type { DisplayBlock, ProjectionResponse } from "../src/types.js";
import { EMPTY_FORM } from "../src/validation.js";
import {
  escapeHtml,
  formatAmount,
  formatRand,
  onTrackText,
  renderBand,
  renderBanner,
  renderInputScreen,
  renderResults,
  renderScenarioPanel,
  renderWhatifPanel,
} from "../src/views.js";

// Canned server display block for the reference member. The UI never
// computes these; it formats what the service sent.
const DISPLAY: DisplayBlock = {
  income_low: 51000,
  income_high: 79000,
  monthly_low: 4300,
  monthly_high: 6500,
  replacement_low_pct: 26,
  replacement_high_pct: 39,
};

const RESPONSE: ProjectionResponse = {
  results: {
    fund_low: 1069861.56,
    fund_high: 1646458.47,
    income_low: 51032.39,
    income_high: 78536.1,
    replacement_low: 0.2604,
    replacement_high: 0.4008,
    drawdown: 0.0477,
    final_salary: 195938.0,
  },
  display: DISPLAY,
};

function textContent(html: string): string {
  return html.replace(/<[^>]*>/g, " ");
}

describe("formatting", () => {
  it("groups thousands with spaces and never rounds", () => {
    expect(formatAmount(51000)).toBe("51 000");
    expect(formatAmount(4300)).toBe("4 300");
    expect(formatAmount(100)).toBe("100");
    expect(formatAmount(0)).toBe("0");
    expect(formatAmount(1234567)).toBe("1 234 567");
    expect(formatAmount(-4300)).toBe("-4 300");
    expect(formatRand(79000)).toBe("R 79 000");
  });

  it("writes the band with a plain hyphen", () => {
    expect(renderBand(DISPLAY)).toBe("26% - 39%");
  });
});

describe("results screen", () => {
  const html = renderResults(RESPONSE);

  it("shows the yearly, monthly and replacement bands from the display block", () => {
    expect(html).toContain("R 51 000 to R 79 000");
    expect(html).toContain("R 4 300 to R 6 500");
    expect(html).toContain("26% - 39% of final salary");
  });

  it("answers the on-track question against the 75% benchmark", () => {
    expect(html).toContain(">No<");
    expect(onTrackText(DISPLAY)).toBe("No");
    expect(onTrackText({ ...DISPLAY, replacement_high_pct: 80 })).toBe(
      "Only at the high end",
    );
    expect(
      onTrackText({ ...DISPLAY, replacement_low_pct: 75, replacement_high_pct: 90 }),
    ).toBe("Yes");
  });

  it("shows no figure that is not a server display field or the benchmark", () => {
    // Traceability: strip the markup, then every number left in the copy
    // must be one of the six display fields or the literal 75.
    const allowed = new Set([
      ...Object.values(DISPLAY).map((v) => String(v)),
      "75",
    ]);
    const tokens = textContent(html).match(/\d[\d ]*\d|\d/g) ?? [];
    for (const tok of tokens) {
      expect(allowed).toContain(tok.replace(/ /g, ""));
    }
    // Raw (unrounded) results never leak into the copy.
    expect(html).not.toContain("51032");
    expect(html).not.toContain("78536");
  });

  it("mounts the what-if panel and keeps the dead links inert", () => {
    expect(html).toContain('id="whatif-mount"');
    expect(html).toContain('data-placeholder>Tax calculator</a>');
    expect(html).toContain('aria-disabled="true"');
    expect(html).toContain('data-action="back"');
  });

  it("uses no em or en dashes anywhere", () => {
    expect(/[–—]/.test(html)).toBe(false);
  });
});

describe("input screen", () => {
  it("ties every field to its hint via aria-describedby", () => {
    const html = renderInputScreen(EMPTY_FORM, [], true);
    for (const path of [
      "age",
      "retirement_age",
      "salary_cents",
      "balance_cents",
      "rate",
      "gender",
      "inflation",
      "nominal_low",
      "nominal_high",
      "salary_growth",
    ]) {
      expect(html).toContain(`aria-describedby="hint-${path}"`);
      expect(html).toContain(`id="hint-${path}"`);
    }
    expect(html).toContain(
      "Percent of salary you contribute; can be found on your payslip.",
    );
  });

  it("renders inline errors next to the offending field", () => {
    const html = renderInputScreen(
      { ...EMPTY_FORM, age: "12" },
      [{ path: "age", message: "must be at least 16" }],
      true,
    );
    expect(html).toContain(
      '<span class="field-error" role="alert">must be at least 16</span>',
    );
  });

  it("gates the submit button on validity", () => {
    const disabled = renderInputScreen(EMPTY_FORM, [], true);
    const enabled = renderInputScreen(EMPTY_FORM, [], false);
    expect(disabled).toMatch(/id="submit-projection"\s+disabled/);
    expect(enabled).not.toMatch(/id="submit-projection"\s+disabled/);
  });

  it("escapes whatever the member typed", () => {
    const html = renderInputScreen(
      { ...EMPTY_FORM, salary: '"><script>alert(1)</script>' },
      [],
      true,
    );
    expect(html).not.toContain("<script>");
    expect(html).toContain("&lt;script&gt;");
  });

  it("keeps the assumptions drawer state", () => {
    expect(renderInputScreen({ ...EMPTY_FORM, drawerOpen: true }, [], true)).toContain(
      '<details class="drawer" open>',
    );
    expect(
      renderInputScreen({ ...EMPTY_FORM, drawerOpen: false }, [], true),
    ).not.toContain("<details class=\"drawer\" open>");
  });
});

describe("what-if panel", () => {
  it("shows both columns once the adjusted response lands", () => {
    const adjusted: ProjectionResponse = {
      ...RESPONSE,
      display: {
        ...DISPLAY,
        income_low: 93000,
        income_high: 144000,
        replacement_low_pct: 47,
        replacement_high_pct: 73,
      },
    };
    const html = renderWhatifPanel(RESPONSE, adjusted, 15, "65", "", []);
    expect(html).toContain("Current plan");
    expect(html).toContain("R 51 000 to R 79 000 a year");
    expect(html).toContain("R 93 000 to R 144 000 a year");
    expect(html).toContain("47% - 73%");
    expect(html).toContain('id="whatif-rate-out">15%');
    expect(html).toContain('value="15"');
  });

  it("marks the adjusted column pending before the response", () => {
    const html = renderWhatifPanel(RESPONSE, null, 7.5, "65", "", []);
    expect(html).toMatch(/id="whatif-adjusted"><h3>Adjusted<\/h3><p>\.\.\.<\/p>/);
  });

  it("surfaces a what-if age error inline", () => {
    const html = renderWhatifPanel(RESPONSE, null, 7.5, "30", "", [
      { path: "changes.retirement_age", message: "must exceed age" },
    ]);
    expect(html).toContain(
      '<span class="field-error" role="alert">must exceed age</span>',
    );
  });
});

describe("scenario panel and banner", () => {
  it("escapes stored names and ids", () => {
    const html = renderScenarioPanel(
      [
        {
          id: 'x" onmouseover="steal()',
          name: "<img src=x onerror=alert(1)>",
          created_at: "2026-08-17T10:00:00Z",
        },
      ],
      "",
    );
    expect(html).not.toContain("<img");
    expect(html).toContain("&lt;img src=x onerror=alert(1)&gt;");
    expect(html).toContain("x&quot; onmouseover=&quot;steal()");
  });

  it("handles the empty list and the status line", () => {
    const html = renderScenarioPanel([], "Saved.");
    expect(html).toContain("Nothing saved yet.");
    expect(html).toContain('<p class="scenario-msg" role="status">Saved.</p>');
  });

  it("renders the banner only when there is a message", () => {
    expect(renderBanner(null)).toBe("");
    const html = renderBanner("The projection service is unreachable.");
    expect(html).toContain('role="alert"');
    expect(html).toContain("The projection service is unreachable.");
  });

  it("escapes html wherever text passes through", () => {
    expect(escapeHtml(`<a b="c&d">'e'</a>`)).toBe(
      "&lt;a b=&quot;c&amp;d&quot;&gt;&#39;e&#39;&lt;/a&gt;",
    );
  });
});
