// Pure builders turning API payloads into display rows. Formatting rules
// live here so the tests can hold them against the raw payloads: effects
// at 4 decimals, CV metrics at 2, SMD at 3, p-values as <0.001 below
// display resolution.

import {
    CalibrationJson,
    CvSummaryJson,
    EffectEstimateJson,
    NumericArmStats,
    OverviewJson,
    PropensityHistogram,
    Table1Json,
    CategoricalLevelStats,
} from "./types.js";

export interface ForestRow {
    method: string;
    estimand: string;
    psi: string;
    ciLow: string;
    ciHigh: string;
    pValue: string;
    // raw numbers kept for drawing whiskers
    psiValue: number;
    ciLowValue: number;
    ciHighValue: number;
}

export function formatP(p: number | null): string {
    if (p === null || !Number.isFinite(p)) return "";
    return p < 0.001 ? "<0.001" : p.toFixed(3);
}

export function buildForestRows(estimates: EffectEstimateJson[]): ForestRow[] {
    return estimates.map((est) => ({
        method: est.method,
        estimand: est.estimand,
        psi: est.psi.toFixed(4),
        ciLow: est.ci_low.toFixed(4),
        ciHigh: est.ci_high.toFixed(4),
        pValue: formatP(est.p_value),
        psiValue: est.psi,
        ciLowValue: est.ci_low,
        ciHighValue: est.ci_high,
    }));
}

export interface MetricRow {
    model: string;
    metric: string;
    mean: string;
    sd: string;
    min: string;
    max: string;
    warnings: string[];
}

export function buildMetricRows(
    summaries: Record<string, CvSummaryJson>,
): MetricRow[] {
    return Object.keys(summaries).sort().map((model) => {
        const s = summaries[model];
        return {
            model,
            metric: s.metric,
            mean: s.mean.toFixed(2),
            sd: s.sd.toFixed(2),
            min: s.min.toFixed(2),
            max: s.max.toFixed(2),
            warnings: s.warnings,
        };
    });
}

export interface HistogramBar {
    x0: number;
    x1: number;
    treated: number;
    control: number;
}

export function histogramBars(hist: PropensityHistogram): HistogramBar[] {
    const bars: HistogramBar[] = [];
    for (let i = 0; i + 1 < hist.edges.length; i++) {
        bars.push({
            x0: hist.edges[i],
            x1: hist.edges[i + 1],
            treated: hist.treated_counts[i],
            control: hist.control_counts[i],
        });
    }
    return bars;
}

export interface CalibrationPoint {
    predicted: number;
    observed: number;
    count: number;
}

export function calibrationPoints(cal: CalibrationJson): CalibrationPoint[] {
    return cal.bins.map((b) => ({
        predicted: b.mean_predicted,
        observed: b.observed_rate,
        count: b.count,
    }));
}

// Arm keys in table1 payloads are stringified Python values, so numeric
// levels can arrive as "0.0" while control_level reads back as 0. Match
// exactly first, then numerically.
export function armKey(
    byArm: Record<string, unknown>, level: string | number,
): string {
    const direct = String(level);
    if (direct in byArm) return direct;
    const levelNumber = Number(level);
    if (Number.isFinite(levelNumber)) {
        for (const key of Object.keys(byArm)) {
            if (Number(key) === levelNumber) return key;
        }
    }
    throw new Error(`no arm entry for level ${direct}`);
}

export interface Table1DisplayRow {
    label: string;
    indent: boolean;
    control: string;
    treated: string;
    p: string;
    smd: string;
}

function statCell(stats: NumericArmStats): string {
    if (stats.mean === null || stats.sd === null) return "";
    return `${stats.mean.toFixed(2)} (${stats.sd.toFixed(2)})`;
}

function levelCell(stats: CategoricalLevelStats): string {
    return `${stats.count} (${stats.pct.toFixed(1)}%)`;
}

export function formatSmd(smd: number | "Inf"): string {
    return smd === "Inf" ? "Inf" : smd.toFixed(3);
}

export function buildTable1Rows(t1: Table1Json): Table1DisplayRow[] {
    const rows: Table1DisplayRow[] = [];
    for (const row of t1.rows) {
        const controlKey = armKey(row.by_arm, t1.control_level);
        const treatedKey = armKey(row.by_arm, t1.treated_level);
        if (row.kind === "numeric") {
            rows.push({
                label: row.label,
                indent: false,
                control: statCell(row.by_arm[controlKey] as NumericArmStats),
                treated: statCell(row.by_arm[treatedKey] as NumericArmStats),
                p: formatP(row.p_value),
                smd: formatSmd(row.smd),
            });
        } else {
            rows.push({
                label: row.label,
                indent: false,
                control: "",
                treated: "",
                p: formatP(row.p_value),
                smd: formatSmd(row.smd),
            });
            const byLevelControl =
                row.by_arm[controlKey] as Record<string, CategoricalLevelStats>;
            const byLevelTreated =
                row.by_arm[treatedKey] as Record<string, CategoricalLevelStats>;
            for (const level of Object.keys(byLevelControl).sort()) {
                rows.push({
                    label: `${row.label}=${level}`,
                    indent: true,
                    control: levelCell(byLevelControl[level]),
                    treated: levelCell(byLevelTreated[level]),
                    p: "",
                    smd: "",
                });
            }
        }
    }
    return rows;
}

export function table1Header(t1: Table1Json, treatment: string): string[] {
    const controlKey = armKey(t1.n_by_arm, t1.control_level);
    const treatedKey = armKey(t1.n_by_arm, t1.treated_level);
    return [
        "Variable",
        `${treatment}=${formatLevel(t1.control_level)} (n=${t1.n_by_arm[controlKey]})`,
        `${treatment}=${formatLevel(t1.treated_level)} (n=${t1.n_by_arm[treatedKey]})`,
        "p",
        "SMD",
    ];
}

// Numeric levels arrive as JSON numbers, where 0.0 has already collapsed
// to 0, matching the server's %g rendering. String levels pass through.
export function formatLevel(level: string | number): string {
    return typeof level === "number" ? String(level) : level;
}

export interface OverviewCard {
    label: string;
    value: string;
}

export function overviewCards(
    overview: OverviewJson, kind: string,
): OverviewCard[] {
    const cards: OverviewCard[] = [
        { label: "Subjects", value: String(overview.n_subjects) },
        { label: "Covariates", value: String(overview.n_covariates) },
        { label: "Treated", value: `${overview.pct_treated.toFixed(1)}%` },
        { label: "Missing cells", value: `${overview.pct_missing.toFixed(1)}%` },
    ];
    if (kind === "binary" && overview.pct_outcome !== null) {
        cards.push({
            label: "Outcome rate",
            value: `${overview.pct_outcome.toFixed(1)}%`,
        });
    }
    if (kind === "continuous" && overview.mean_outcome !== null) {
        cards.push({
            label: "Mean outcome",
            value: overview.mean_outcome.toFixed(3),
        });
    }
    const surv = overview.survival;
    if (kind === "survival" && surv) {
        cards.push({
            label: "Events",
            value: `${surv.pct_event.toFixed(1)}%`,
        });
        cards.push({
            label: "Censored",
            value: `${surv.pct_censored.toFixed(1)}%`,
        });
        cards.push({
            label: "Mean time to event",
            value: surv.mean_time_to_event === null
                ? "n/a" : surv.mean_time_to_event.toFixed(1),
        });
    }
    return cards;
}
