// Wire types for the analysis-service JSON API. These mirror the server's
// serialization exactly; the dashboard never computes statistics itself.

export interface UploadResponse {
    dataset_id: string;
    column_names: string[];
    n_rows: number;
}

export interface SurvivalConfig {
    start_column: string;
    end_column: string;
    date_format: string;
    time_unit: string;
    cutoff: number;
}

export interface AnalysisConfigJson {
    outcome_column: string;
    outcome_positive_level: string | number | null;
    treatment_column: string;
    treatment_positive_level: string | number;
    categorical_columns: string[];
    excluded_from_outcome_model: string[];
    excluded_from_treatment_model: string[];
    estimand: string;
    analysis_kind: string;
    survival: SurvivalConfig | null;
}

export interface EffectEstimateJson {
    method: string;
    estimand: string;
    psi: number;
    ci_low: number;
    ci_high: number;
    p_value: number;
}

export interface CvSummaryJson {
    metric: string;
    per_fold: (number | null)[];
    mean: number;
    sd: number;
    min: number;
    max: number;
    warnings: string[];
}

export interface CalibrationBin {
    mean_predicted: number;
    observed_rate: number;
    count: number;
}

export interface CalibrationJson {
    bins: CalibrationBin[];
    brier: number;
}

export interface PropensityHistogram {
    edges: number[];
    treated_counts: number[];
    control_counts: number[];
}

// Numeric rows carry {mean, sd} per arm (null when an arm has no
// observed values); categorical rows carry {count, pct} per level per
// arm. "Inf" marks a degenerate SMD.
export interface NumericArmStats {
    mean: number | null;
    sd: number | null;
}

export interface CategoricalLevelStats {
    count: number;
    pct: number;
}

export interface Table1RowJson {
    label: string;
    kind: "numeric" | "categorical";
    by_arm: Record<string, NumericArmStats | Record<string, CategoricalLevelStats>>;
    p_value: number | null;
    smd: number | "Inf";
}

export interface Table1Json {
    rows: Table1RowJson[];
    n_by_arm: Record<string, number>;
    control_level: string | number;
    treated_level: string | number;
}

export interface OverviewJson {
    n_subjects: number;
    n_covariates: number;
    pct_treated: number;
    pct_missing: number;
    pct_outcome: number | null;
    mean_outcome: number | null;
    survival: {
        pct_event: number;
        pct_censored: number;
        mean_time_to_event: number | null;
        followup_histogram: {
            edges: number[];
            event_counts: number[];
            censored_counts: number[];
        };
    } | null;
}

export interface CurveJson {
    time_grid: number[];
    values: number[];
    ci_low: number[];
    ci_high: number[];
}

export interface AteBlockJson extends CurveJson {
    s_treated: number[];
    s_control: number[];
}

export interface CoxBlockJson {
    covariates: string[];
    hazard_ratios: number[];
    beta: number[];
    se: number[];
    p_values: number[];
    loglik: number;
    caveat: string;
}

export interface SurvivalBlockJson {
    km_treated: CurveJson;
    km_control: CurveJson;
    ate: AteBlockJson;
    cox: CoxBlockJson;
    time_unit: string;
}

export interface ResultsDocumentJson {
    overview: OverviewJson;
    estimates: EffectEstimateJson[];
    propensity_histograms: Record<string, PropensityHistogram>;
    cv_summaries: Record<string, CvSummaryJson>;
    calibration: Record<string, CalibrationJson | null>;
    table1: Table1Json;
    survival: SurvivalBlockJson | null;
    notes: string[];
    provenance: { config: unknown; seed: number; version: string };
}

export interface EdaReportJson {
    variable: string;
    kind: "continuous" | "categorical";
    summary: Record<string, number | null>;
    notes: string[];
    histogram?: { edges: number[]; counts: number[] };
    densities?: Record<string, { x: number[]; y: number[] }>;
    proportions?: Record<string, number>;
    arm_counts?: Record<string, Record<string, number>>;
}

export interface Table1Response {
    table1: Table1Json;
    tsv: string;
}

export interface CorrelationResponse {
    variables: string[];
    matrix: (number | null)[][];
}

export interface JobStatus {
    status: "pending" | "running" | "done" | "failed";
    stage?: string | null;
    error_detail?: string | null;
}

export interface ErrorBody {
    code: string;
    message: string;
    detail: string | null;
}
