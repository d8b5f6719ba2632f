// Import-form state and its mapping onto the server's config JSON.
// The state is a plain serializable object so "reset restores pristine
// state" is checkable by comparing serializations.

import { AnalysisConfigJson, SurvivalConfig } from "./types.js";

export type AnalysisKind = "binary" | "continuous" | "survival";
export type Estimand = "ATE" | "ATT" | "ATC";

export interface SurvivalFormFields {
    startColumn: string;
    endColumn: string;
    dateFormat: string;
    timeUnit: string;
    cutoff: string;
}

export interface ImportFormState {
    analysisKind: AnalysisKind;
    outcomeColumn: string;
    outcomePositiveLevel: string;
    treatmentColumn: string;
    treatmentPositiveLevel: string;
    estimand: Estimand;
    categoricalColumns: string[];
    excludedFromOutcomeModel: string[];
    excludedFromTreatmentModel: string[];
    survival: SurvivalFormFields;
    seed: string;
}

export function initialFormState(): ImportFormState {
    return {
        analysisKind: "binary",
        outcomeColumn: "",
        outcomePositiveLevel: "",
        treatmentColumn: "",
        treatmentPositiveLevel: "",
        estimand: "ATE",
        categoricalColumns: [],
        excludedFromOutcomeModel: [],
        excludedFromTreatmentModel: [],
        survival: {
            startColumn: "",
            endColumn: "",
            dateFormat: "YYYY-MM-DD",
            timeUnit: "days",
            cutoff: "",
        },
        seed: "0",
    };
}

// The "Reset Dashboard for New Analysis" control funnels through here.
export function resetForm(): ImportFormState {
    return initialFormState();
}

export function serializeFormState(state: ImportFormState): string {
    const ordered = (obj: unknown): unknown => {
        if (Array.isArray(obj)) return obj.map(ordered);
        if (obj !== null && typeof obj === "object") {
            const out: Record<string, unknown> = {};
            for (const key of Object.keys(obj).sort()) {
                out[key] = ordered((obj as Record<string, unknown>)[key]);
            }
            return out;
        }
        return obj;
    };
    return JSON.stringify(ordered(state));
}

export function isPristine(state: ImportFormState): boolean {
    return serializeFormState(state) === serializeFormState(initialFormState());
}

// Reasons the submit button stays disabled; empty means ready.
export function submitProblems(state: ImportFormState): string[] {
    const problems: string[] = [];
    if (!state.outcomeColumn) problems.push("select an outcome column");
    if (!state.treatmentColumn) problems.push("select a treatment column");
    if (state.treatmentColumn &&
        state.treatmentColumn === state.outcomeColumn) {
        problems.push("outcome and treatment must differ");
    }
    if (!state.treatmentPositiveLevel.trim()) {
        problems.push("give the treatment level that means treated");
    }
    if (state.analysisKind === "binary" &&
        !state.outcomePositiveLevel.trim()) {
        problems.push("give the outcome level that means the outcome occurred");
    }
    if (state.analysisKind === "survival") {
        const s = state.survival;
        if (!s.startColumn) problems.push("select the start-date column");
        if (!s.endColumn) problems.push("select the end-date column");
        if (!s.cutoff.trim() || !(Number(s.cutoff) > 0)) {
            problems.push("give a positive follow-up cutoff");
        }
        if (!state.outcomePositiveLevel.trim()) {
            problems.push("give the event indicator level");
        }
    }
    if (!/^-?\d+$/.test(state.seed.trim())) {
        problems.push("seed must be an integer");
    }
    return problems;
}

// Levels are sent as typed JSON when they look numeric, matching how the
// CSV parser will have typed the column values.
export function parseLevel(text: string): string | number {
    const trimmed = text.trim();
    const asNumber = Number(trimmed);
    return trimmed !== "" && Number.isFinite(asNumber) ? asNumber : trimmed;
}

export function formToConfig(state: ImportFormState): AnalysisConfigJson {
    let survival: SurvivalConfig | null = null;
    if (state.analysisKind === "survival") {
        survival = {
            start_column: state.survival.startColumn,
            end_column: state.survival.endColumn,
            date_format: state.survival.dateFormat,
            time_unit: state.survival.timeUnit,
            cutoff: Number(state.survival.cutoff),
        };
    }
    const needsOutcomeLevel = state.analysisKind !== "continuous";
    return {
        outcome_column: state.outcomeColumn,
        outcome_positive_level: needsOutcomeLevel
            ? parseLevel(state.outcomePositiveLevel) : null,
        treatment_column: state.treatmentColumn,
        treatment_positive_level: parseLevel(state.treatmentPositiveLevel),
        categorical_columns: [...state.categoricalColumns].sort(),
        excluded_from_outcome_model: [...state.excludedFromOutcomeModel].sort(),
        excluded_from_treatment_model:
            [...state.excludedFromTreatmentModel].sort(),
        estimand: state.estimand,
        analysis_kind: state.analysisKind,
        survival,
    };
}
