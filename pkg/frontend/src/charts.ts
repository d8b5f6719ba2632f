// SVG chart builders. Every function returns markup as a string and
// touches no DOM, so they run under node for tests; app.ts owns
// insertion, hover wiring, and PNG export. Colors follow one small
// palette: treated orange, control blue.

import { CalibrationPoint, ForestRow, HistogramBar } from "./viewmodel.js";

export const TREATED_COLOR = "#e07b39";
export const CONTROL_COLOR = "#3a6ea5";
const AXIS_COLOR = "#888";
const GRID_COLOR = "#e4e4e4";

export interface LinearScale {
    d0: number;
    d1: number;
    r0: number;
    r1: number;
}

export function scaleApply(s: LinearScale, v: number): number {
    if (s.d1 === s.d0) return (s.r0 + s.r1) / 2;
    return s.r0 + (v - s.d0) * (s.r1 - s.r0) / (s.d1 - s.d0);
}

export function scaleInvert(s: LinearScale, px: number): number {
    if (s.r1 === s.r0) return s.d0;
    return s.d0 + (px - s.r0) * (s.d1 - s.d0) / (s.r1 - s.r0);
}

function esc(text: string): string {
    return text.replace(/&/g, "&amp;").replace(/</g, "&lt;")
        .replace(/>/g, "&gt;").replace(/"/g, "&quot;");
}

function fmtTick(v: number): string {
    if (v === 0) return "0";
    const a = Math.abs(v);
    if (a >= 1000) return v.toFixed(0);
    if (a >= 1) return String(Number(v.toFixed(2)));
    return String(Number(v.toFixed(3)));
}

function ticks(lo: number, hi: number, n = 5): number[] {
    if (hi <= lo) return [lo];
    const raw = (hi - lo) / n;
    const mag = Math.pow(10, Math.floor(Math.log10(raw)));
    const step = [1, 2, 5, 10].map((m) => m * mag)
        .find((s) => (hi - lo) / s <= n) ?? raw;
    const out: number[] = [];
    for (let v = Math.ceil(lo / step) * step; v <= hi + step / 1e6; v += step) {
        out.push(Math.abs(v) < step / 1e6 ? 0 : v);
    }
    return out;
}

// ------------------------------------------------------------- forest

export function svgForest(rows: ForestRow[], nullValue = 0): string {
    const width = 640;
    const rowH = 34;
    const top = 28;
    const height = top + rows.length * rowH + 36;
    const plotL = 200;
    const plotR = width - 150;

    let lo = nullValue;
    let hi = nullValue;
    for (const r of rows) {
        lo = Math.min(lo, r.ciLowValue);
        hi = Math.max(hi, r.ciHighValue);
    }
    const pad = (hi - lo || 1) * 0.1;
    const x: LinearScale = { d0: lo - pad, d1: hi + pad, r0: plotL, r1: plotR };

    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="12">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    const nullX = scaleApply(x, nullValue);
    parts.push(`<line x1="${nullX.toFixed(1)}" y1="${top - 8}" x2="${nullX.toFixed(1)}" y2="${top + rows.length * rowH}" stroke="${AXIS_COLOR}" stroke-dasharray="4 3"/>`);
    parts.push(`<text x="${width - 8}" y="16" text-anchor="end" fill="#444">estimate [95% CI], p</text>`);

    rows.forEach((r, i) => {
        const cy = top + i * rowH + rowH / 2;
        const x0 = scaleApply(x, r.ciLowValue);
        const x1 = scaleApply(x, r.ciHighValue);
        const xm = scaleApply(x, r.psiValue);
        parts.push(`<text x="8" y="${cy + 4}" fill="#222">${esc(r.method)} (${esc(r.estimand)})</text>`);
        parts.push(`<line x1="${x0.toFixed(1)}" y1="${cy}" x2="${x1.toFixed(1)}" y2="${cy}" stroke="#333" stroke-width="1.5"/>`);
        parts.push(`<line x1="${x0.toFixed(1)}" y1="${cy - 5}" x2="${x0.toFixed(1)}" y2="${cy + 5}" stroke="#333" stroke-width="1.5"/>`);
        parts.push(`<line x1="${x1.toFixed(1)}" y1="${cy - 5}" x2="${x1.toFixed(1)}" y2="${cy + 5}" stroke="#333" stroke-width="1.5"/>`);
        parts.push(`<rect x="${(xm - 4).toFixed(1)}" y="${cy - 4}" width="8" height="8" fill="${TREATED_COLOR}"/>`);
        parts.push(`<text x="${width - 8}" y="${cy + 4}" text-anchor="end" fill="#222">${r.psi} [${r.ciLow}, ${r.ciHigh}], p=${esc(r.pValue)}</text>`);
    });

    const axisY = top + rows.length * rowH + 6;
    parts.push(`<line x1="${plotL}" y1="${axisY}" x2="${plotR}" y2="${axisY}" stroke="${AXIS_COLOR}"/>`);
    for (const t of ticks(x.d0, x.d1)) {
        const tx = scaleApply(x, t);
        parts.push(`<line x1="${tx.toFixed(1)}" y1="${axisY}" x2="${tx.toFixed(1)}" y2="${axisY + 4}" stroke="${AXIS_COLOR}"/>`);
        parts.push(`<text x="${tx.toFixed(1)}" y="${axisY + 17}" text-anchor="middle" fill="#555">${fmtTick(t)}</text>`);
    }
    parts.push("</svg>");
    return parts.join("");
}

// ---------------------------------------------------------- histograms

export interface HistogramOptions {
    title?: string;
    xLabel?: string;
    seriesLabels?: [string, string];  // [treated, control]
}

export function svgHistogram(bars: HistogramBar[],
                             opts: HistogramOptions = {}): string {
    const width = 420;
    const height = 260;
    const m = { top: 26, right: 12, bottom: 34, left: 44 };
    const labels = opts.seriesLabels ?? ["treated", "control"];
    if (bars.length === 0) {
        return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}"><text x="10" y="20">no data</text></svg>`;
    }
    const xLo = bars[0].x0;
    const xHi = bars[bars.length - 1].x1;
    let yHi = 1;
    for (const b of bars) yHi = Math.max(yHi, b.treated, b.control);
    const x: LinearScale = { d0: xLo, d1: xHi, r0: m.left, r1: width - m.right };
    const y: LinearScale = { d0: 0, d1: yHi, r0: height - m.bottom, r1: m.top };

    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    if (opts.title) {
        parts.push(`<text x="${width / 2}" y="15" text-anchor="middle" fill="#222" font-size="12">${esc(opts.title)}</text>`);
    }
    // control behind, treated in front, both translucent so overlap reads
    for (const key of ["control", "treated"] as const) {
        const fill = key === "treated" ? TREATED_COLOR : CONTROL_COLOR;
        for (const b of bars) {
            const px0 = scaleApply(x, b.x0);
            const px1 = scaleApply(x, b.x1);
            const py = scaleApply(y, b[key]);
            const h = y.r0 - py;
            if (h <= 0) continue;
            parts.push(`<rect x="${px0.toFixed(1)}" y="${py.toFixed(1)}" width="${(px1 - px0).toFixed(1)}" height="${h.toFixed(1)}" fill="${fill}" fill-opacity="0.55"/>`);
        }
    }
    parts.push(axisLines(x, y, width, height, m, opts.xLabel ?? "", "count"));
    parts.push(legend(width - m.right - 120, m.top,
        [[labels[0], TREATED_COLOR], [labels[1], CONTROL_COLOR]]));
    parts.push("</svg>");
    return parts.join("");
}

function axisLines(x: LinearScale, y: LinearScale, width: number,
                   height: number, m: { top: number; right: number; bottom: number; left: number },
                   xLabel: string, yLabel: string): string {
    const parts: string[] = [];
    parts.push(`<line x1="${x.r0}" y1="${y.r0}" x2="${x.r1}" y2="${y.r0}" stroke="${AXIS_COLOR}"/>`);
    parts.push(`<line x1="${x.r0}" y1="${y.r0}" x2="${x.r0}" y2="${y.r1}" stroke="${AXIS_COLOR}"/>`);
    for (const t of ticks(x.d0, x.d1)) {
        const tx = scaleApply(x, t);
        parts.push(`<line x1="${tx.toFixed(1)}" y1="${y.r0}" x2="${tx.toFixed(1)}" y2="${y.r0 + 4}" stroke="${AXIS_COLOR}"/>`);
        parts.push(`<text x="${tx.toFixed(1)}" y="${y.r0 + 16}" text-anchor="middle" fill="#555">${fmtTick(t)}</text>`);
    }
    for (const t of ticks(y.d0, y.d1, 4)) {
        const ty = scaleApply(y, t);
        parts.push(`<line x1="${x.r0 - 4}" y1="${ty.toFixed(1)}" x2="${x.r0}" y2="${ty.toFixed(1)}" stroke="${AXIS_COLOR}"/>`);
        parts.push(`<line x1="${x.r0}" y1="${ty.toFixed(1)}" x2="${x.r1}" y2="${ty.toFixed(1)}" stroke="${GRID_COLOR}"/>`);
        parts.push(`<text x="${x.r0 - 7}" y="${ty.toFixed(1)}" dy="3" text-anchor="end" fill="#555">${fmtTick(t)}</text>`);
    }
    if (xLabel) {
        parts.push(`<text x="${(x.r0 + x.r1) / 2}" y="${height - 6}" text-anchor="middle" fill="#444">${esc(xLabel)}</text>`);
    }
    if (yLabel) {
        parts.push(`<text x="12" y="${(y.r0 + y.r1) / 2}" text-anchor="middle" fill="#444" transform="rotate(-90 12 ${(y.r0 + y.r1) / 2})">${esc(yLabel)}</text>`);
    }
    return parts.join("");
}

function legend(px: number, py: number, entries: [string, string][]): string {
    const parts: string[] = [];
    entries.forEach(([label, color], i) => {
        const yy = py + i * 16;
        parts.push(`<rect x="${px}" y="${yy}" width="10" height="10" fill="${color}" fill-opacity="0.7"/>`);
        parts.push(`<text x="${px + 15}" y="${yy + 9}" fill="#333">${esc(label)}</text>`);
    });
    return parts.join("");
}

// --------------------------------------------------------- step curves

export interface StepSeries {
    label: string;
    color: string;
    grid: number[];
    values: number[];
    ciLow?: number[];
    ciHigh?: number[];
    startAtOne?: boolean;  // survival curves begin at S(0)=1
}

export interface StepChart {
    svg: string;
    x: LinearScale;
    y: LinearScale;
    width: number;
    height: number;
}

function stepPath(x: LinearScale, y: LinearScale, grid: number[],
                  values: number[], startValue: number | null): string {
    const pieces: string[] = [];
    let lastY: number;
    if (startValue !== null) {
        pieces.push(`M${x.r0.toFixed(1)},${scaleApply(y, startValue).toFixed(1)}`);
        lastY = startValue;
    } else {
        pieces.push(`M${scaleApply(x, grid[0]).toFixed(1)},${scaleApply(y, values[0]).toFixed(1)}`);
        lastY = values[0];
    }
    for (let i = 0; i < grid.length; i++) {
        const px = scaleApply(x, grid[i]);
        pieces.push(`H${px.toFixed(1)}`);
        if (values[i] !== lastY) {
            pieces.push(`V${scaleApply(y, values[i]).toFixed(1)}`);
            lastY = values[i];
        }
    }
    pieces.push(`H${x.r1.toFixed(1)}`);
    return pieces.join("");
}

export function svgStepCurves(series: StepSeries[], opts: {
    title?: string; xLabel?: string; yLabel?: string;
    yDomain?: [number, number];
} = {}): StepChart {
    const width = 560;
    const height = 320;
    const m = { top: 28, right: 14, bottom: 38, left: 52 };

    let xHi = 1;
    let yLo = opts.yDomain ? opts.yDomain[0] : Infinity;
    let yHi = opts.yDomain ? opts.yDomain[1] : -Infinity;
    for (const s of series) {
        if (s.grid.length) xHi = Math.max(xHi, s.grid[s.grid.length - 1]);
        if (!opts.yDomain) {
            const all = [...s.values, ...(s.ciLow ?? []), ...(s.ciHigh ?? [])];
            if (s.startAtOne) all.push(1);
            for (const v of all) {
                yLo = Math.min(yLo, v);
                yHi = Math.max(yHi, v);
            }
        }
    }
    if (!opts.yDomain) {
        if (!Number.isFinite(yLo)) { yLo = 0; yHi = 1; }
        const pad = (yHi - yLo || 1) * 0.08;
        yLo -= pad;
        yHi += pad;
    }
    const x: LinearScale = { d0: 0, d1: xHi, r0: m.left, r1: width - m.right };
    const y: LinearScale = { d0: yLo, d1: yHi, r0: height - m.bottom, r1: m.top };

    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    if (opts.title) {
        parts.push(`<text x="${width / 2}" y="16" text-anchor="middle" fill="#222" font-size="13">${esc(opts.title)}</text>`);
    }
    parts.push(axisLines(x, y, width, height, m, opts.xLabel ?? "time", opts.yLabel ?? ""));

    for (const s of series) {
        if (!s.grid.length) continue;
        if (s.ciLow && s.ciHigh) {
            // band as two step paths joined into a polygon
            const upper = stepPoints(x, y, s.grid, s.ciHigh, s.startAtOne ? 1 : null);
            const lower = stepPoints(x, y, s.grid, s.ciLow, s.startAtOne ? 1 : null).reverse();
            const pts = [...upper, ...lower].map(
                ([px, py]) => `${px.toFixed(1)},${py.toFixed(1)}`).join(" ");
            parts.push(`<polygon points="${pts}" fill="${s.color}" fill-opacity="0.15"/>`);
        }
        parts.push(`<path d="${stepPath(x, y, s.grid, s.values, s.startAtOne ? 1 : null)}" fill="none" stroke="${s.color}" stroke-width="1.8"/>`);
    }
    parts.push(legend(x.r0 + 10, m.top + 4,
        series.map((s) => [s.label, s.color] as [string, string])));
    parts.push("</svg>");
    return { svg: parts.join(""), x, y, width, height };
}

function stepPoints(x: LinearScale, y: LinearScale, grid: number[],
                    values: number[], startValue: number | null): [number, number][] {
    const pts: [number, number][] = [];
    let prevY = startValue !== null
        ? scaleApply(y, startValue) : scaleApply(y, values[0]);
    pts.push([x.r0, prevY]);
    for (let i = 0; i < grid.length; i++) {
        const px = scaleApply(x, grid[i]);
        const py = scaleApply(y, values[i]);
        pts.push([px, prevY]);
        pts.push([px, py]);
        prevY = py;
    }
    pts.push([x.r1, prevY]);
    return pts;
}

// Single-series histogram from bin edges + counts (EDA distributions).
export function svgBars(edges: number[], counts: number[], title: string,
                        xLabel: string): string {
    const bars: HistogramBar[] = counts.map((c, i) => ({
        x0: edges[i], x1: edges[i + 1], treated: c, control: 0,
    }));
    const width = 420;
    const height = 260;
    const m = { top: 26, right: 12, bottom: 34, left: 44 };
    if (bars.length === 0) {
        return `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}"><text x="10" y="20">no data</text></svg>`;
    }
    const x: LinearScale = {
        d0: bars[0].x0, d1: bars[bars.length - 1].x1,
        r0: m.left, r1: width - m.right,
    };
    const y: LinearScale = {
        d0: 0, d1: Math.max(1, ...counts), r0: height - m.bottom, r1: m.top,
    };
    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    parts.push(`<text x="${width / 2}" y="15" text-anchor="middle" fill="#222" font-size="12">${esc(title)}</text>`);
    for (const b of bars) {
        const px0 = scaleApply(x, b.x0);
        const px1 = scaleApply(x, b.x1);
        const py = scaleApply(y, b.treated);
        const h = y.r0 - py;
        if (h <= 0) continue;
        parts.push(`<rect x="${px0.toFixed(1)}" y="${py.toFixed(1)}" width="${(px1 - px0).toFixed(1)}" height="${h.toFixed(1)}" fill="${CONTROL_COLOR}" fill-opacity="0.75"/>`);
    }
    parts.push(axisLines(x, y, width, height, m, xLabel, "count"));
    parts.push("</svg>");
    return parts.join("");
}

// --------------------------------------------------------- calibration

export function svgCalibration(points: CalibrationPoint[], brier: number): string {
    const width = 340;
    const height = 300;
    const m = { top: 26, right: 14, bottom: 36, left: 46 };
    const x: LinearScale = { d0: 0, d1: 1, r0: m.left, r1: width - m.right };
    const y: LinearScale = { d0: 0, d1: 1, r0: height - m.bottom, r1: m.top };
    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    parts.push(`<text x="${width / 2}" y="15" text-anchor="middle" fill="#222" font-size="12">Calibration (Brier ${brier.toFixed(4)})</text>`);
    parts.push(axisLines(x, y, width, height, m, "mean predicted", "observed rate"));
    parts.push(`<line x1="${x.r0}" y1="${y.r0}" x2="${x.r1}" y2="${y.r1}" stroke="${AXIS_COLOR}" stroke-dasharray="4 3"/>`);
    for (const p of points) {
        const px = scaleApply(x, p.predicted);
        const py = scaleApply(y, p.observed);
        const r = Math.max(2.5, Math.min(6, Math.sqrt(p.count) / 3));
        parts.push(`<circle cx="${px.toFixed(1)}" cy="${py.toFixed(1)}" r="${r.toFixed(1)}" fill="${CONTROL_COLOR}" fill-opacity="0.75"/>`);
    }
    parts.push("</svg>");
    return parts.join("");
}

// ------------------------------------------------------------- density

export function svgDensity(densities: Record<string, { x: number[]; y: number[] }>,
                           variable: string): string {
    const width = 420;
    const height = 260;
    const m = { top: 26, right: 12, bottom: 34, left: 44 };
    const arms = Object.keys(densities).sort();
    let xLo = Infinity;
    let xHi = -Infinity;
    let yHi = 0;
    for (const arm of arms) {
        const d = densities[arm];
        for (const v of d.x) { xLo = Math.min(xLo, v); xHi = Math.max(xHi, v); }
        for (const v of d.y) yHi = Math.max(yHi, v);
    }
    if (!Number.isFinite(xLo)) { xLo = 0; xHi = 1; yHi = 1; }
    const x: LinearScale = { d0: xLo, d1: xHi, r0: m.left, r1: width - m.right };
    const y: LinearScale = { d0: 0, d1: yHi * 1.05 || 1, r0: height - m.bottom, r1: m.top };
    const palette = [CONTROL_COLOR, TREATED_COLOR, "#5aa05a", "#9157b8"];
    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    parts.push(`<text x="${width / 2}" y="15" text-anchor="middle" fill="#222" font-size="12">${esc(variable)} density by arm</text>`);
    parts.push(axisLines(x, y, width, height, m, variable, "density"));
    arms.forEach((arm, i) => {
        const d = densities[arm];
        const pts = d.x.map((vx, j) =>
            `${scaleApply(x, vx).toFixed(1)},${scaleApply(y, d.y[j]).toFixed(1)}`).join(" ");
        parts.push(`<polyline points="${pts}" fill="none" stroke="${palette[i % palette.length]}" stroke-width="1.8"/>`);
    });
    parts.push(legend(width - m.right - 110, m.top, arms.map(
        (arm, i) => [`arm ${arm}`, palette[i % palette.length]] as [string, string])));
    parts.push("</svg>");
    return parts.join("");
}

// ---------------------------------------------------------- correlation

export function svgCorrelation(variables: string[],
                               matrix: (number | null)[][]): string {
    const cell = 46;
    const left = 110;
    const top = 24;
    const n = variables.length;
    const width = left + n * cell + 16;
    const height = top + n * cell + 110;
    const parts: string[] = [];
    parts.push(`<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="11">`);
    parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
    for (let i = 0; i < n; i++) {
        for (let j = 0; j < n; j++) {
            const v = matrix[i][j];
            const px = left + j * cell;
            const py = top + i * cell;
            const fill = v === null ? "#f0f0f0" : corColor(v);
            parts.push(`<rect x="${px}" y="${py}" width="${cell - 2}" height="${cell - 2}" fill="${fill}"/>`);
            const label = v === null ? "–" : v.toFixed(2);
            const dark = v !== null && Math.abs(v) > 0.6;
            parts.push(`<text x="${px + cell / 2 - 1}" y="${py + cell / 2 + 3}" text-anchor="middle" fill="${dark ? "white" : "#333"}">${label}</text>`);
        }
        parts.push(`<text x="${left - 8}" y="${top + i * cell + cell / 2 + 3}" text-anchor="end" fill="#333">${esc(variables[i])}</text>`);
        const lx = left + i * cell + cell / 2;
        const ly = top + n * cell + 10;
        parts.push(`<text x="${lx}" y="${ly}" fill="#333" text-anchor="start" transform="rotate(55 ${lx} ${ly})">${esc(variables[i])}</text>`);
    }
    parts.push("</svg>");
    return parts.join("");
}

function corColor(v: number): string {
    // blue for negative, orange for positive, white near zero
    const t = Math.max(-1, Math.min(1, v));
    const mix = (a: number, b: number, w: number) => Math.round(a + (b - a) * w);
    if (t >= 0) {
        const w = t;
        return `rgb(${mix(255, 224, w)},${mix(255, 123, w)},${mix(255, 57, w)})`;
    }
    const w = -t;
    return `rgb(${mix(255, 58, w)},${mix(255, 110, w)},${mix(255, 165, w)})`;
}
