// Right-continuous step lookup for survival curves. The API hands us the
// jump grid and the post-jump values; between grid points the curve holds
// the previous value, and before the first event time survival is 1.

import { AteBlockJson } from "./types.js";

// Rightmost index i with grid[i] <= t, or -1 when t precedes the grid.
export function stepIndex(grid: number[], t: number): number {
    let lo = 0;
    let hi = grid.length;
    while (lo < hi) {
        const mid = (lo + hi) >> 1;
        if (grid[mid] <= t) lo = mid + 1;
        else hi = mid;
    }
    return lo - 1;
}

export function stepValue(
    grid: number[], values: number[], t: number, before: number,
): number {
    const idx = stepIndex(grid, t);
    return idx < 0 ? before : values[idx];
}

export interface SurvivalHover {
    t: number;
    sTreated: number;
    sControl: number;
    ate: number;
    ciLow: number;
    ciHigh: number;
}

export function hoverReadout(block: AteBlockJson, t: number): SurvivalHover {
    const grid = block.time_grid;
    return {
        t,
        sTreated: stepValue(grid, block.s_treated, t, 1.0),
        sControl: stepValue(grid, block.s_control, t, 1.0),
        ate: stepValue(grid, block.values, t, 0.0),
        ciLow: stepValue(grid, block.ci_low, t, 0.0),
        ciHigh: stepValue(grid, block.ci_high, t, 0.0),
    };
}

export function formatHover(h: SurvivalHover, unit: string): string {
    return `t=${h.t.toFixed(1)} ${unit}: S1=${h.sTreated.toFixed(3)} ` +
        `S0=${h.sControl.toFixed(3)} ate=${h.ate.toFixed(3)} ` +
        `(${h.ciLow.toFixed(3)}, ${h.ciHigh.toFixed(3)})`;
}
