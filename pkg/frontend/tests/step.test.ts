// Right-continuous step semantics for the survival hover readout. The
// contract is pass-through: at a grid time the readout shows exactly the
// API array value (to 3 displayed decimals); between grid times it holds
// the previous step.

import { describe, expect, it } from "vitest";
import { formatHover, hoverReadout, stepIndex, stepValue } from "../src/step.js";
import { AteBlockJson } from "../src/types.js";

const BLOCK: AteBlockJson = {
    time_grid: [30, 90, 180, 365],
    values: [0.012, 0.0345, 0.0501, 0.0789],
    ci_low: [-0.01, 0.001, 0.02, 0.041],
    ci_high: [0.034, 0.068, 0.0802, 0.1168],
    s_treated: [0.99, 0.95, 0.9, 0.82],
    s_control: [0.978, 0.9155, 0.8499, 0.7411],
};

describe("stepIndex", () => {
    it("finds the rightmost grid point at or before t", () => {
        expect(stepIndex(BLOCK.time_grid, 29.9)).toBe(-1);
        expect(stepIndex(BLOCK.time_grid, 30)).toBe(0);
        expect(stepIndex(BLOCK.time_grid, 89.99)).toBe(0);
        expect(stepIndex(BLOCK.time_grid, 90)).toBe(1);
        expect(stepIndex(BLOCK.time_grid, 200)).toBe(2);
        expect(stepIndex(BLOCK.time_grid, 365)).toBe(3);
        expect(stepIndex(BLOCK.time_grid, 10000)).toBe(3);
    });
});

describe("hover readout", () => {
    it("equals the API ate array at grid times to 3 decimals", () => {
        for (let i = 0; i < BLOCK.time_grid.length; i++) {
            const h = hoverReadout(BLOCK, BLOCK.time_grid[i]);
            expect(h.ate.toFixed(3)).toBe(BLOCK.values[i].toFixed(3));
            expect(h.sTreated.toFixed(3)).toBe(BLOCK.s_treated[i].toFixed(3));
            expect(h.sControl.toFixed(3)).toBe(BLOCK.s_control[i].toFixed(3));
            expect(h.ciLow.toFixed(3)).toBe(BLOCK.ci_low[i].toFixed(3));
            expect(h.ciHigh.toFixed(3)).toBe(BLOCK.ci_high[i].toFixed(3));
        }
    });

    it("holds the previous step between grid points", () => {
        const h = hoverReadout(BLOCK, 120);
        expect(h.ate).toBe(BLOCK.values[1]);
        expect(h.sTreated).toBe(BLOCK.s_treated[1]);
    });

    it("reports no effect and full survival before the first event", () => {
        const h = hoverReadout(BLOCK, 5);
        expect(h.ate).toBe(0);
        expect(h.sTreated).toBe(1);
        expect(h.sControl).toBe(1);
    });

    it("holds the last step beyond the grid", () => {
        const h = hoverReadout(BLOCK, 9999);
        expect(h.ate).toBe(BLOCK.values[3]);
    });

    it("formats the readout with 3-decimal values", () => {
        const text = formatHover(hoverReadout(BLOCK, 90), "days");
        expect(text).toContain(`ate=${BLOCK.values[1].toFixed(3)}`);
        expect(text).toContain(`S1=${BLOCK.s_treated[1].toFixed(3)}`);
        expect(text).toContain(`S0=${BLOCK.s_control[1].toFixed(3)}`);
        expect(text).toContain("t=90.0 days");
    });
});

describe("stepValue on degenerate inputs", () => {
    it("returns the before value for an empty grid (arm with no events)", () => {
        expect(stepValue([], [], 50, 1.0)).toBe(1.0);
    });
});
