// Display fidelity for the results page: forest rows are one-to-one with
// the API estimates at 4-decimal rounding, metric tables mirror the CV
// summaries at 2 decimals.

import { describe, expect, it } from "vitest";
import { EffectEstimateJson, CvSummaryJson } from "../src/types.js";
import { buildForestRows, buildMetricRows, formatP } from "../src/viewmodel.js";

const ESTIMATES: EffectEstimateJson[] = [
    { method: "TMLE", estimand: "ATE", psi: 0.1171, ci_low: 0.0713,
      ci_high: 0.1629, p_value: 5.4e-7 },
    { method: "IPW", estimand: "ATE", psi: 0.1212, ci_low: 0.0699,
      ci_high: 0.1724, p_value: 0.0032 },
];

describe("forest rows", () => {
    it("renders exactly one row per estimate", () => {
        const rows = buildForestRows(ESTIMATES);
        expect(rows.length).toBe(ESTIMATES.length);
        expect(rows.map((r) => r.method)).toEqual(["TMLE", "IPW"]);
    });

    it("matches the API values at 4-decimal rounding", () => {
        const rows = buildForestRows(ESTIMATES);
        for (let i = 0; i < rows.length; i++) {
            expect(rows[i].psi).toBe(ESTIMATES[i].psi.toFixed(4));
            expect(rows[i].ciLow).toBe(ESTIMATES[i].ci_low.toFixed(4));
            expect(rows[i].ciHigh).toBe(ESTIMATES[i].ci_high.toFixed(4));
            expect(Number(rows[i].psi)).toBeCloseTo(ESTIMATES[i].psi, 4);
        }
    });

    it("handles negative effects and hazard-ratio rows", () => {
        const rows = buildForestRows([
            { method: "cox_ph", estimand: "ATE", psi: 0.4971,
              ci_low: 0.3822, ci_high: 0.6466, p_value: 0.2 },
            { method: "TMLE", estimand: "ATE", psi: -0.8123,
              ci_low: -0.9001, ci_high: -0.7245, p_value: 1e-12 },
        ]);
        expect(rows[0].psi).toBe("0.4971");
        expect(rows[1].psi).toBe("-0.8123");
        expect(rows[1].ciLow).toBe("-0.9001");
        expect(rows[1].pValue).toBe("<0.001");
    });

    it("formats p-values like the server's table text", () => {
        expect(formatP(0.0009999)).toBe("<0.001");
        expect(formatP(0.001)).toBe("0.001");
        expect(formatP(0.0914)).toBe("0.091");
        expect(formatP(null)).toBe("");
    });
});

describe("metric rows", () => {
    it("mirrors CvMetricSummary values at 2 decimals", () => {
        const summaries: Record<string, CvSummaryJson> = {
            treatment: { metric: "auc", per_fold: [0.71, 0.69, 0.7, 0.72, 0.68],
                         mean: 0.7, sd: 0.0158, min: 0.68, max: 0.72,
                         warnings: [] },
            outcome: { metric: "auc", per_fold: [0.8, 0.81, null, 0.79, 0.8],
                       mean: 0.8, sd: 0.0082, min: 0.79, max: 0.81,
                       warnings: ["fold 2 degenerate"] },
        };
        const rows = buildMetricRows(summaries);
        expect(rows.map((r) => r.model)).toEqual(["outcome", "treatment"]);
        const treat = rows[1];
        expect(treat.metric).toBe("auc");
        expect(treat.mean).toBe((0.7).toFixed(2));
        expect(treat.sd).toBe((0.0158).toFixed(2));
        expect(treat.min).toBe((0.68).toFixed(2));
        expect(treat.max).toBe((0.72).toFixed(2));
        expect(rows[0].warnings).toEqual(["fold 2 degenerate"]);
    });
});
