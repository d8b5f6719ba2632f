"""The full analysis pipeline: views, designs, estimators, diagnostics,
assembled into one ResultsDocument.

Everything downstream of (table bytes, config, seed) is deterministic.
Stage seeds are derived as fixed offsets from the run seed so adding a stage
never reshuffles the others: propensity seed+1, TMLE seed+2, IPW bootstrap
seed+3, treatment-model CV seed+4, outcome-model CV seed+5, Cox bootstrap
seed+6.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .diagnostics import (
    CalibrationTable,
    CvMetricSummary,
    Table1,
    cross_validate,
    overview,
    propensity_distribution,
    table1,
)
from .effects import (
    EffectEstimate,
    compute_weights,
    estimate_propensity,
    ipw_estimate,
    tmle_estimate,
)
from .errors import ConfigError, DataError, FitError
from .jsonutil import dump_bytes
from .learners import LearnerSpec, _make_fitter
from .survival import ate_curve, fit_cox, kaplan_meier
from .tabular import (
    AnalysisConfig,
    ModelViews,
    RawTable,
    build_views,
    complete_rows,
    derive_survival,
    encode_design,
    validate_config,
)

STAGES = ("parsing", "fitting_treatment_model", "fitting_outcome_model",
          "estimating", "cross_validating", "summarizing")

GLM_ONLY = (LearnerSpec("glm"),)


def resolve_library(cfg: AnalysisConfig):
    """Turn the config's raw learner dicts into LearnerSpecs, validating the
    kinds up front. None keeps the default library."""
    if cfg.learners is None:
        return None
    specs = [LearnerSpec.from_json_dict(d) for d in cfg.learners]
    for spec in specs:
        _make_fitter(spec, "binomial", 0)  # unknown kinds fail here
    return specs


def preflight(table: RawTable, cfg: AnalysisConfig):
    """Everything that can be rejected before work starts: config
    validation against the table plus learner-library resolution."""
    cfg = validate_config(table, cfg)
    return cfg, resolve_library(cfg)


@dataclass
class ResultsDocument:
    """The complete output of one analysis run."""

    overview: object
    estimates: list
    propensity_histograms: dict
    cv_summaries: dict
    calibration: dict
    table1: Table1
    survival: dict | None
    notes: list
    provenance: dict

    def to_json_dict(self) -> dict:
        return {
            "overview": self.overview.to_json_dict(),
            "estimates": [e.to_json_dict() for e in self.estimates],
            "propensity_histograms": self.propensity_histograms,
            "cv_summaries": {
                name: s.to_json_dict() for name, s in self.cv_summaries.items()
            },
            "calibration": {
                name: None if c is None else c.to_json_dict()
                for name, c in self.calibration.items()
            },
            "table1": self.table1.to_json_dict(),
            "survival": self.survival,
            "notes": list(self.notes),
            "provenance": self.provenance,
        }

    def to_bytes(self) -> bytes:
        return dump_bytes(self.to_json_dict())


@dataclass
class _Frame:
    """Aligned estimation inputs after complete-case filtering."""

    rows: list
    t_design: object
    o_design: object
    A: np.ndarray
    Y: np.ndarray | None
    times: np.ndarray | None = None
    events: np.ndarray | None = None
    n_dropped: int = 0
    notes: list = field(default_factory=list)


def _present_rows(col) -> set:
    return {i for i, v in enumerate(col) if v is not None}


def _binary_from(col, positive, rows) -> np.ndarray:
    return np.asarray([1.0 if col[i] == positive else 0.0 for i in rows])


def _assemble_frame(table: RawTable, views: ModelViews,
                    cfg: AnalysisConfig) -> _Frame:
    """Intersect the per-model complete cases so the treatment and outcome
    designs describe the same subjects in the same order."""
    t_cov_names = [c for c in views.treatment_view.column_names
                   if c != cfg.treatment_column]
    o_cov_names = [c for c in views.outcome_view.column_names
                   if c not in (cfg.treatment_column, cfg.outcome_column)]
    t_cov = table.select(t_cov_names)
    o_cov = table.select(o_cov_names)

    keep = set(complete_rows(t_cov))
    keep &= set(complete_rows(o_cov))
    keep &= _present_rows(table.column(cfg.treatment_column))

    notes = []
    times = events = None
    if cfg.analysis_kind == "survival":
        surv = derive_survival(table, cfg)
        by_row = {int(r): (surv.time[i], surv.event[i])
                  for i, r in enumerate(surv.row_index)}
        keep &= set(by_row)
    else:
        keep &= _present_rows(table.column(cfg.outcome_column))

    rows = sorted(keep)
    if not rows:
        raise DataError("zero rows survive complete-case filtering")
    n_dropped = table.n_rows - len(rows)
    if n_dropped:
        notes.append(
            f"complete-case analysis: {n_dropped} of {table.n_rows} rows "
            "dropped for missing values")

    cats = set(cfg.categorical_columns)
    t_design = encode_design(t_cov.take_rows(rows),
                             categorical=cats & set(t_cov_names),
                             row_ids=rows)
    o_design = encode_design(o_cov.take_rows(rows),
                             categorical=cats & set(o_cov_names),
                             row_ids=rows)

    A = _binary_from(table.column(cfg.treatment_column),
                     cfg.treatment_positive_level, rows)
    Y = None
    if cfg.analysis_kind == "binary":
        Y = _binary_from(table.column(cfg.outcome_column),
                         cfg.outcome_positive_level, rows)
    elif cfg.analysis_kind == "continuous":
        Y = np.asarray([table.column(cfg.outcome_column)[i] for i in rows],
                       dtype=float)
    else:
        times = np.asarray([by_row[i][0] for i in rows])
        events = np.asarray([by_row[i][1] for i in rows], dtype=bool)

    return _Frame(rows=rows, t_design=t_design, o_design=o_design, A=A, Y=Y,
                  times=times, events=events, n_dropped=n_dropped, notes=notes)


def _curve_block(curve) -> dict:
    half = 1.96 * np.sqrt(curve.variance)
    return {
        "time_grid": [float(v) for v in curve.times],
        "values": [float(v) for v in curve.survival],
        "ci_low": [float(v) for v in np.clip(curve.survival - half, 0.0, 1.0)],
        "ci_high": [float(v) for v in np.clip(curve.survival + half, 0.0, 1.0)],
    }


def _cox_bootstrap_ci(frame: _Frame, cfg: AnalysisConfig, design: np.ndarray,
                      seed: int) -> tuple:
    """Percentile bootstrap for the treatment hazard ratio, re-estimating
    the propensity, weights, and Cox fit per resample."""
    B = cfg.cox_bootstrap
    n = len(frame.A)
    reps = np.empty(B)
    attempts, limit = 0, 10 * B
    for b in range(B):
        rng = np.random.default_rng([seed, b])
        while True:
            attempts += 1
            if attempts > limit:
                raise FitError(
                    f"cox bootstrap exhausted {limit} attempts")
            rows = rng.integers(0, n, size=n)
            a_b = frame.A[rows]
            if a_b.sum() in (0, n) or not frame.events[rows].any():
                continue
            try:
                prop = estimate_propensity(
                    frame.t_design.values[rows], a_b,
                    method=cfg.propensity_method, clip=cfg.propensity_clip,
                    seed=seed)
                w_b = compute_weights(prop.scores, a_b, cfg.estimand)
                fit = fit_cox(design[rows], frame.times[rows],
                              frame.events[rows], w_b.w)
            except FitError:
                continue
            reps[b] = fit.beta[0]
            break
    lo, hi = np.quantile(reps, [0.025, 0.975])
    return float(np.exp(lo)), float(np.exp(hi))


def run_analysis(table: RawTable, cfg: AnalysisConfig, seed: int = 0,
                 progress=None) -> ResultsDocument:
    """Run the configured analysis end to end and assemble the results."""
    def stage(name: str):
        if progress is not None:
            progress(name)

    stage("parsing")
    cfg, library = preflight(table, cfg)
    views = build_views(table, cfg)
    frame = _assemble_frame(table, views, cfg)
    notes = list(frame.notes)

    stage("fitting_treatment_model")
    prop = estimate_propensity(
        frame.t_design.values, frame.A, method=cfg.propensity_method,
        clip=cfg.propensity_clip, seed=seed + 1, library=library,
        k=cfg.cv_folds)
    n_clipped = int(np.sum((prop.scores == cfg.propensity_clip)
                           | (prop.scores == 1 - cfg.propensity_clip)))
    if n_clipped:
        notes.append(
            f"{n_clipped} propensity scores clipped at "
            f"{cfg.propensity_clip:g}")
    weights = compute_weights(prop.scores, frame.A, cfg.estimand)

    estimates: list = []
    survival_block = None
    calibration: dict = {}
    cv_summaries: dict = {}

    if cfg.analysis_kind == "survival":
        stage("fitting_outcome_model")
        cox_design = np.hstack([frame.A[:, None], frame.o_design.values])
        cox_names = [cfg.treatment_column] + frame.o_design.names
        cox = fit_cox(cox_design, frame.times, frame.events, weights.w)

        stage("estimating")
        curve, km_treated, km_control = ate_curve(
            frame.times, frame.events, frame.A, prop.scores, cfg.estimand)
        hr = float(cox.hazard_ratios[0])
        se0 = float(cox.se[0])
        hr_ci = (float(np.exp(cox.beta[0] - 1.96 * se0)),
                 float(np.exp(cox.beta[0] + 1.96 * se0)))
        if cfg.cox_bootstrap:
            hr_ci = _cox_bootstrap_ci(frame, cfg, cox_design, seed + 6)
            notes.append(
                f"hazard-ratio interval from {cfg.cox_bootstrap} bootstrap "
                "resamples")
        estimates.append(EffectEstimate(
            method="cox_ph", estimand=cfg.estimand, psi=hr,
            ci_low=hr_ci[0], ci_high=hr_ci[1],
            p_value=float(cox.p_values[0]), se=se0))
        notes.append(
            f"cox_ph entry is the weighted hazard ratio for "
            f"{cfg.treatment_column}; {cox.caveat}")

        survival_block = {
            "km_treated": _curve_block(km_treated),
            "km_control": _curve_block(km_control),
            "ate": {
                "time_grid": [float(v) for v in curve.time_grid],
                "values": [float(v) for v in curve.ate],
                "ci_low": [float(v) for v in curve.ci_low],
                "ci_high": [float(v) for v in curve.ci_high],
                "s_treated": [float(v) for v in curve.s_treated],
                "s_control": [float(v) for v in curve.s_control],
            },
            "cox": {
                "covariates": cox_names,
                "hazard_ratios": [float(v) for v in cox.hazard_ratios],
                "beta": [float(v) for v in cox.beta],
                "se": [float(v) for v in cox.se],
                "p_values": [float(v) for v in cox.p_values],
                "loglik": cox.loglik,
                "caveat": cox.caveat,
            },
            "time_unit": cfg.survival.time_unit,
        }
    else:
        stage("fitting_outcome_model")
        if cfg.estimand == "ATE":
            tmle = tmle_estimate(
                frame.o_design.values, frame.t_design.values, frame.Y,
                frame.A, cfg.analysis_kind, estimand="ATE", library=library,
                k=cfg.cv_folds, seed=seed + 2, clip=cfg.propensity_clip,
                propensity=prop)
            stage("estimating")
            estimates.append(tmle)
        else:
            stage("estimating")
            notes.append("TMLE not available for this estimand; "
                         "reporting IPW only")
        ipw = ipw_estimate(
            frame.Y, frame.A, weights, cfg.analysis_kind,
            design=frame.t_design.values, bootstrap=cfg.ipw_bootstrap,
            seed=seed + 3, method=cfg.propensity_method,
            clip=cfg.propensity_clip, library=library, k=cfg.cv_folds)
        estimates.append(ipw)

    stage("cross_validating")
    treat_library = library if cfg.propensity_method == "superlearner" \
        else list(GLM_ONLY)
    cv_treat, cal_treat = cross_validate(
        frame.t_design.values, frame.A, metric="auc", model="superlearner",
        family="binomial", library=treat_library, k=cfg.cv_folds,
        seed=seed + 4)
    cv_summaries["treatment_model"] = cv_treat
    calibration["treatment_model"] = cal_treat

    if cfg.analysis_kind == "survival":
        cox_design = np.hstack([frame.A[:, None], frame.o_design.values])
        cv_out, cal_out = cross_validate(
            cox_design, None, metric="c_index", model="cox",
            k=cfg.cv_folds, seed=seed + 5,
            survival_extras={"times": frame.times, "events": frame.events})
    else:
        out_design = np.hstack([frame.o_design.values, frame.A[:, None]])
        if cfg.analysis_kind == "binary":
            cv_out, cal_out = cross_validate(
                out_design, frame.Y, metric="auc", model="superlearner",
                family="binomial", library=library, k=cfg.cv_folds,
                seed=seed + 5)
        else:
            cv_out, cal_out = cross_validate(
                out_design, frame.Y, metric="mse", model="superlearner",
                family="gaussian", library=library, k=cfg.cv_folds,
                seed=seed + 5)
    cv_summaries["outcome_model"] = cv_out
    calibration["outcome_model"] = cal_out

    stage("summarizing")
    surv_times = None
    if cfg.analysis_kind == "survival":
        surv_times = derive_survival(table, cfg)
    doc = ResultsDocument(
        overview=overview(views.summary_view, cfg, surv_times),
        estimates=estimates,
        propensity_histograms={
            method: propensity_distribution(prop.scores, frame.A)
            for method in (("tmle", "ipw") if cfg.estimand == "ATE"
                           and cfg.analysis_kind != "survival"
                           else ("ipw",))
        },
        cv_summaries=cv_summaries,
        calibration=calibration,
        table1=table1(views.summary_view, cfg),
        survival=survival_block,
        notes=notes,
        provenance={
            "config": cfg.to_json_dict(),
            "seed": int(seed),
            "version": __version__,
        },
    )
    if not doc.estimates:
        raise FitError("analysis produced no estimates")
    return doc
