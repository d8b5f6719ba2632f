"""Model-quality metrics (AUC, Brier, MSE, C-index) with k-fold cross
validation, and the descriptive outputs: overview statistics, per-variable
EDA, the baseline characteristics table with standardized mean differences,
pairwise correlations, and propensity histograms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import expit  # noqa: F401  (re-exported convenience)

from .errors import ConfigError, DataError
from .learners import fit_superlearner, kfold_assign
from .survival import fit_cox
from .tabular import AnalysisConfig, RawTable, covariate_names, date_columns

HISTOGRAM_BINS = 20
CALIBRATION_BINS = 10
DENSITY_POINTS = 100


# ---------------------------------------------------------------- metrics

def _auc(pred: np.ndarray, truth: np.ndarray) -> float:
    pos = truth == 1
    n1 = int(pos.sum())
    n0 = len(truth) - n1
    if n1 == 0 or n0 == 0:
        raise DataError("degenerate labels")
    ranks = stats.rankdata(pred)  # average ranks give ties 0.5 credit
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def _c_index(risk: np.ndarray, times: np.ndarray, events: np.ndarray) -> float:
    """Harrell's C: a pair is usable when the earlier time is an event, or
    the times tie with exactly one event (the event ranks as earlier)."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(events).astype(bool)
    r = np.asarray(risk, dtype=float)
    dt = t[:, None] - t[None, :]
    dr = r[:, None] - r[None, :]
    ei = e[:, None]
    ej = e[None, :]
    # i is the earlier subject of the pair
    earlier = (dt < 0) & ei
    tied_time = (dt == 0) & ei & ~ej
    usable = earlier | tied_time
    usable &= ~np.eye(len(t), dtype=bool)
    n_usable = int(usable.sum())
    if n_usable == 0:
        raise DataError("no usable pairs for the concordance index")
    concordant = float(((dr > 0) & usable).sum())
    tied_risk = float(((dr == 0) & usable).sum())
    return (concordant + 0.5 * tied_risk) / n_usable


def compute_metric(kind: str, predictions, truth=None,
                   survival_extras: dict | None = None) -> float:
    """One scalar metric; ``c_index`` reads times/events from
    survival_extras and treats predictions as risk scores."""
    pred = np.asarray(predictions, dtype=float).ravel()
    if kind == "c_index":
        if not survival_extras:
            raise ConfigError("c_index needs survival_extras")
        return _c_index(pred, survival_extras["times"], survival_extras["events"])
    y = np.asarray(truth, dtype=float).ravel()
    if pred.shape[0] != y.shape[0]:
        raise ConfigError("predictions and truth length mismatch")
    if kind == "mse":
        return float(np.mean((pred - y) ** 2))
    if kind in ("auc", "brier"):
        if not np.isin(y, (0.0, 1.0)).all():
            raise ConfigError(f"{kind} needs 0/1 truth")
        if kind == "brier":
            return float(np.mean((pred - y) ** 2))
        return _auc(pred, y)
    raise ConfigError(f"unknown metric {kind!r}")


# ---------------------------------------------------- cross validation

@dataclass
class CvMetricSummary:
    """Per-fold metric values and their four summary statistics."""

    metric: str
    per_fold: list
    mean: float
    sd: float
    min: float
    max: float
    warnings: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "metric": self.metric,
            "per_fold": [None if v is None else round(v, 4) for v in self.per_fold],
            "mean": round(self.mean, 4),
            "sd": round(self.sd, 4),
            "min": round(self.min, 4),
            "max": round(self.max, 4),
            "warnings": list(self.warnings),
        }


@dataclass
class CalibrationTable:
    """Equal-frequency calibration bins of pooled out-of-fold predictions."""

    bins: list  # of {mean_predicted, observed_rate, count}
    brier: float

    def to_json_dict(self) -> dict:
        return {
            "bins": [
                {"mean_predicted": round(b["mean_predicted"], 4),
                 "observed_rate": round(b["observed_rate"], 4),
                 "count": b["count"]}
                for b in self.bins
            ],
            "brier": round(self.brier, 4),
        }


def calibration_table(predictions, truth,
                      bins: int = CALIBRATION_BINS) -> CalibrationTable:
    pred = np.asarray(predictions, dtype=float).ravel()
    y = np.asarray(truth, dtype=float).ravel()
    order = np.argsort(pred, kind="stable")
    rows = []
    for chunk in np.array_split(order, bins):
        if chunk.size == 0:
            continue
        rows.append({
            "mean_predicted": float(pred[chunk].mean()),
            "observed_rate": float(y[chunk].mean()),
            "count": int(chunk.size),
        })
    return CalibrationTable(bins=rows, brier=float(np.mean((pred - y) ** 2)))


def _summarize_folds(metric: str, per_fold: list, warnings: list) -> CvMetricSummary:
    valid = [v for v in per_fold if v is not None]
    if not valid:
        raise DataError(f"no usable folds for {metric}")
    arr = np.asarray(valid)
    sd = float(np.std(arr, ddof=1)) if len(valid) > 1 else 0.0
    return CvMetricSummary(
        metric=metric,
        per_fold=per_fold,
        mean=float(arr.mean()),
        sd=sd,
        min=float(arr.min()),
        max=float(arr.max()),
        warnings=warnings,
    )


def cross_validate(design, y, metric: str, model: str = "superlearner",
                   family: str | None = None, library=None, k: int = 5,
                   seed: int = 0, survival_extras: dict | None = None):
    """Out-of-fold evaluation of a model on its own view.

    ``model`` is "superlearner" (family required) or "cox" (survival_extras
    required; the response slot is ignored, predictions are linear risk
    scores). Returns (CvMetricSummary, CalibrationTable or None); the
    calibration table pools the out-of-fold predictions of binomial models.
    A fold whose evaluation degenerates (single-class labels, no usable
    pairs, failed fit) is recorded as missing with a warning and excluded
    from the summary.
    """
    X = np.asarray(design, dtype=float)
    n = X.shape[0]
    folds = kfold_assign(n, k, seed)
    oof = np.full(n, np.nan)
    per_fold: list = []
    warnings: list = []

    if model == "cox":
        if not survival_extras:
            raise ConfigError("cox cross validation needs survival_extras")
        t = np.asarray(survival_extras["times"], dtype=float)
        e = np.asarray(survival_extras["events"]).astype(bool)
    else:
        if family is None:
            raise ConfigError("superlearner cross validation needs a family")
        y = np.asarray(y, dtype=float).ravel()

    for f in range(folds.k):
        test = folds.fold_of == f
        train = ~test
        try:
            if model == "cox":
                fit = fit_cox(X[train], t[train], e[train])
                risk = X[test] @ fit.beta
                oof[test] = risk
                value = _c_index(risk, t[test], e[test])
            else:
                fit = fit_superlearner(X[train], y[train], family,
                                       library=library, k=k, seed=seed)
                pred = fit.predict(X[test])
                oof[test] = pred
                value = compute_metric(metric, pred, y[test])
            per_fold.append(float(value))
        except (DataError, ConfigError) as exc:
            per_fold.append(None)
            warnings.append(f"fold {f} excluded: {exc}")
        except Exception as exc:  # noqa: BLE001 - fit failures skip the fold
            per_fold.append(None)
            warnings.append(f"fold {f} excluded: {type(exc).__name__}: {exc}")

    summary = _summarize_folds(metric, per_fold, warnings)
    calibration = None
    if model == "superlearner" and family == "binomial":
        have = ~np.isnan(oof)
        if have.any():
            calibration = calibration_table(oof[have], y[have])
    return summary, calibration


# ---------------------------------------------------------------- table 1

@dataclass
class Table1Row:
    label: str
    kind: str  # "numeric" | "categorical"
    arm_stats: object  # numeric: {level: (mean, sd)}; categorical: per-level counts
    p_value: float | None
    smd: float


@dataclass
class Table1:
    rows: list
    n_by_arm: dict
    control_level: object
    treated_level: object

    def to_json_dict(self) -> dict:
        rows = []
        for r in self.rows:
            if r.kind == "numeric":
                stats_block = {
                    str(level): {"mean": None if m is None else round(m, 4),
                                 "sd": None if s is None else round(s, 4)}
                    for level, (m, s) in r.arm_stats.items()
                }
            else:
                stats_block = {
                    str(level): {
                        lvl: {"count": c, "pct": round(p, 1)}
                        for lvl, (c, p) in per_level.items()
                    }
                    for level, per_level in r.arm_stats.items()
                }
            rows.append({
                "label": r.label,
                "kind": r.kind,
                "by_arm": stats_block,
                "p_value": r.p_value,
                "smd": r.smd,
            })
        return {
            "rows": rows,
            "n_by_arm": {str(k): v for k, v in self.n_by_arm.items()},
            "control_level": self.control_level,
            "treated_level": self.treated_level,
        }


def _fmt_p(p: float | None) -> str:
    if p is None:
        return ""
    if p < 0.001:
        return "<0.001"
    return f"{p:.3f}"


def _fmt_smd(s: float) -> str:
    if np.isinf(s):
        return "Inf"
    return f"{s:.3f}"


def table1_tsv(t1: Table1, treatment_column: str) -> str:
    """Tab-separated rendering, one line per numeric variable and one per
    categorical level, control arm first."""
    c, t = t1.control_level, t1.treated_level
    header = [
        "Variable",
        f"{treatment_column}={_level_text(c)} (n={t1.n_by_arm[c]})",
        f"{treatment_column}={_level_text(t)} (n={t1.n_by_arm[t]})",
        "p",
        "SMD",
    ]
    lines = ["\t".join(header)]
    for r in t1.rows:
        if r.kind == "numeric":
            cells = []
            for level in (c, t):
                m, s = r.arm_stats[level]
                cells.append("" if m is None else f"{m:.2f} ({s:.2f})")
            lines.append("\t".join(
                [r.label, cells[0], cells[1], _fmt_p(r.p_value), _fmt_smd(r.smd)]))
        else:
            lines.append("\t".join(
                [r.label, "", "", _fmt_p(r.p_value), _fmt_smd(r.smd)]))
            levels = sorted(r.arm_stats[c])
            for lvl in levels:
                cells = []
                for level in (c, t):
                    count, pct = r.arm_stats[level][lvl]
                    cells.append(f"{count} ({pct:.1f}%)")
                lines.append("\t".join(
                    [f"  {r.label}={lvl}", cells[0], cells[1], "", ""]))
    return "\n".join(lines) + "\n"


def _level_text(level) -> str:
    if isinstance(level, float):
        return f"{level:g}"
    return str(level)


def _numeric_row(label, values, arm_of, control, treated):
    stats_by_arm = {}
    samples = {}
    for level in (control, treated):
        vals = np.asarray(
            [v for v, a in zip(values, arm_of) if a == level and v is not None],
            dtype=float)
        samples[level] = vals
        if vals.size == 0:
            stats_by_arm[level] = (None, None)
        else:
            sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            stats_by_arm[level] = (float(vals.mean()), sd)

    v0, v1 = samples[control], samples[treated]
    p_value = None
    if v0.size >= 2 and v1.size >= 2:
        if np.var(v0) == 0 and np.var(v1) == 0:
            p_value = 1.0 if v0.mean() == v1.mean() else 0.0
        else:
            p_value = float(stats.ttest_ind(v1, v0, equal_var=False).pvalue)

    if v0.size == 0 or v1.size == 0:
        smd = 0.0
    else:
        m0, s0 = stats_by_arm[control]
        m1, s1 = stats_by_arm[treated]
        pooled = np.sqrt((s0 ** 2 + s1 ** 2) / 2.0)
        if pooled == 0:
            smd = 0.0 if m0 == m1 else float("inf")
        else:
            smd = abs(m1 - m0) / pooled
    return Table1Row(label=label, kind="numeric", arm_stats=stats_by_arm,
                     p_value=p_value, smd=float(smd))


def _categorical_smd(p1: np.ndarray, p0: np.ndarray) -> float:
    """Multivariate SMD over level proportions (first level dropped)."""
    d = (p1 - p0)[1:]
    if d.size == 0:
        return 0.0
    def cov(p):
        return np.diag(p[1:]) - np.outer(p[1:], p[1:])
    S = (cov(p1) + cov(p0)) / 2.0
    if not d.any():
        return 0.0
    if not S.any():
        return float("inf")
    val = float(d @ np.linalg.pinv(S) @ d)
    return float(np.sqrt(max(val, 0.0)))


def _categorical_row(label, values, arm_of, control, treated):
    labels = [None if v is None else _level_text(v) for v in values]
    levels = sorted({l for l in labels if l is not None})
    counts = {}
    for level in (control, treated):
        in_arm = [l for l, a in zip(labels, arm_of) if a == level and l is not None]
        total = len(in_arm)
        counts[level] = {
            lvl: (in_arm.count(lvl),
                  100.0 * in_arm.count(lvl) / total if total else 0.0)
            for lvl in levels
        }

    table = np.array([
        [counts[control][lvl][0] for lvl in levels],
        [counts[treated][lvl][0] for lvl in levels],
    ], dtype=float)
    p_value = None
    live_cols = table.sum(axis=0) > 0
    sub = table[:, live_cols]
    if sub.shape[1] >= 2 and (sub.sum(axis=1) > 0).all():
        p_value = float(stats.chi2_contingency(sub, correction=False)[1])

    n0, n1 = table[0].sum(), table[1].sum()
    if n0 == 0 or n1 == 0:
        smd = 0.0
    else:
        smd = _categorical_smd(table[1] / n1, table[0] / n0)
    return Table1Row(label=label, kind="categorical", arm_stats=counts,
                     p_value=p_value, smd=float(smd))


def table1(view: RawTable, cfg: AnalysisConfig) -> Table1:
    """Baseline characteristics by treatment arm. Rows: outcome first, the
    treatment itself, then every covariate. Raw date columns carry no
    comparable summary and are left out for survival analyses."""
    arm_col = view.column(cfg.treatment_column)
    levels = sorted({a for a in arm_col if a is not None},
                    key=lambda v: (v != cfg.treatment_positive_level))
    treated_level = cfg.treatment_positive_level
    control_level = next(l for l in levels if l != treated_level)

    arm_of = arm_col
    n_by_arm = {
        control_level: sum(1 for a in arm_of if a == control_level),
        treated_level: sum(1 for a in arm_of if a == treated_level),
    }

    ordered = [cfg.outcome_column, cfg.treatment_column]
    ordered += covariate_names(view, cfg)
    categorical = set(cfg.categorical_columns)
    rows = []
    for name in ordered:
        values = view.column(name)
        as_categorical = name in categorical or not view.is_numeric(name)
        if as_categorical:
            rows.append(_categorical_row(
                name, values, arm_of, control_level, treated_level))
        else:
            rows.append(_numeric_row(
                name, values, arm_of, control_level, treated_level))
    return Table1(rows=rows, n_by_arm=n_by_arm,
                  control_level=control_level, treated_level=treated_level)


# ------------------------------------------------------------------- EDA

@dataclass
class EdaReport:
    variable: str
    kind: str
    summary: dict
    histogram: dict | None = None
    densities: dict | None = None
    proportions: dict | None = None
    arm_counts: dict | None = None
    notes: list = field(default_factory=list)

    def to_json_dict(self) -> dict:
        out = {"variable": self.variable, "kind": self.kind,
               "summary": self.summary, "notes": list(self.notes)}
        if self.kind == "continuous":
            out["histogram"] = self.histogram
            out["densities"] = self.densities
        else:
            out["proportions"] = self.proportions
            out["arm_counts"] = self.arm_counts
        return out


def eda_variable(view: RawTable, variable: str, cfg: AnalysisConfig,
                 kind: str | None = None) -> EdaReport:
    """Per-variable exploration: summary stats, histogram, and per-arm
    density curves for continuous variables; level proportions and per-arm
    counts for categorical ones. ``kind`` overrides the inferred one."""
    values = view.column(variable)
    inferred = "categorical" if (
        variable in set(cfg.categorical_columns) or not view.is_numeric(variable)
    ) else "continuous"
    kind = kind or inferred
    if kind not in ("continuous", "categorical"):
        raise ConfigError(f"unknown eda kind {kind!r}")
    if kind == "continuous" and not view.is_numeric(variable):
        raise ConfigError(
            f"variable {variable!r} is not numeric; no continuous view")

    arm_col = view.column(cfg.treatment_column)
    notes: list = []

    if kind == "categorical":
        labels = [None if v is None else _level_text(v) for v in values]
        present = [l for l in labels if l is not None]
        if not present:
            raise DataError(f"variable {variable!r} has no observed values")
        levels = sorted(set(present))
        n = len(present)
        proportions = {lvl: present.count(lvl) / n for lvl in levels}
        arm_counts: dict = {}
        for arm in sorted({a for a in arm_col if a is not None}, key=_level_text):
            in_arm = [l for l, a in zip(labels, arm_col)
                      if a == arm and l is not None]
            arm_counts[_level_text(arm)] = {lvl: in_arm.count(lvl) for lvl in levels}
        return EdaReport(
            variable=variable, kind="categorical",
            summary={"n": n, "levels": len(levels)},
            proportions=proportions, arm_counts=arm_counts, notes=notes)

    vals = np.asarray([v for v in values if v is not None], dtype=float)
    if vals.size == 0:
        raise DataError(f"variable {variable!r} has no observed values")
    counts, edges = np.histogram(vals, bins=HISTOGRAM_BINS)
    densities: dict = {}
    lo, hi = float(vals.min()), float(vals.max())
    grid = np.linspace(lo, hi, DENSITY_POINTS)
    for arm in sorted({a for a in arm_col if a is not None}, key=_level_text):
        arm_vals = np.asarray(
            [v for v, a in zip(values, arm_col) if a == arm and v is not None],
            dtype=float)
        if arm_vals.size < 2 or np.std(arm_vals) == 0:
            notes.append(
                f"arm {_level_text(arm)}: too few distinct values for a density")
            continue
        kde = stats.gaussian_kde(arm_vals, bw_method="silverman")
        densities[_level_text(arm)] = {
            "x": [float(v) for v in grid],
            "y": [float(v) for v in kde(grid)],
        }
    return EdaReport(
        variable=variable, kind="continuous",
        summary={
            "n": int(vals.size),
            "min": float(vals.min()),
            "mean": float(vals.mean()),
            "median": float(np.median(vals)),
            "max": float(vals.max()),
        },
        histogram={"edges": [float(e) for e in edges],
                   "counts": [int(c) for c in counts]},
        densities=densities, notes=notes)


# -------------------------------------------------------------- overview

@dataclass
class OverviewStats:
    n_subjects: int
    n_covariates: int
    pct_treated: float
    pct_missing: float
    pct_outcome: float | None = None
    mean_outcome: float | None = None
    survival: dict | None = None

    def to_json_dict(self) -> dict:
        return {
            "n_subjects": self.n_subjects,
            "n_covariates": self.n_covariates,
            "pct_treated": self.pct_treated,
            "pct_missing": self.pct_missing,
            "pct_outcome": self.pct_outcome,
            "mean_outcome": None if self.mean_outcome is None
            else round(self.mean_outcome, 4),
            "survival": self.survival,
        }


def overview(view: RawTable, cfg: AnalysisConfig,
             survival_times=None) -> OverviewStats:
    """Dataset-level headline numbers for the configured analysis."""
    from .tabular import missingness_report

    arm = [a for a in view.column(cfg.treatment_column) if a is not None]
    pct_treated = round(
        100.0 * sum(1 for a in arm if a == cfg.treatment_positive_level) / len(arm),
        1) if arm else 0.0

    pct_outcome = None
    mean_outcome = None
    outcome = [v for v in view.column(cfg.outcome_column) if v is not None]
    if cfg.analysis_kind in ("binary", "survival"):
        if outcome:
            pct_outcome = round(
                100.0 * sum(1 for v in outcome
                            if v == cfg.outcome_positive_level) / len(outcome), 1)
    else:
        if outcome:
            mean_outcome = float(np.mean(outcome))

    surv_block = None
    if survival_times is not None:
        e = survival_times.event
        t = survival_times.time
        pct_event = round(100.0 * float(e.mean()), 1)
        mean_tte = float(t[e].mean()) if e.any() else None
        counts_event, edges = np.histogram(t[e], bins=HISTOGRAM_BINS,
                                           range=(0.0, float(t.max())))
        counts_cens, _ = np.histogram(t[~e], bins=HISTOGRAM_BINS,
                                      range=(0.0, float(t.max())))
        surv_block = {
            "pct_event": pct_event,
            "pct_censored": round(100.0 - pct_event, 1),
            "mean_time_to_event": None if mean_tte is None
            else round(mean_tte, 4),
            "followup_histogram": {
                "edges": [float(v) for v in edges],
                "event_counts": [int(c) for c in counts_event],
                "censored_counts": [int(c) for c in counts_cens],
            },
        }

    return OverviewStats(
        n_subjects=view.n_rows,
        n_covariates=len(covariate_names(view, cfg)),
        pct_treated=pct_treated,
        pct_missing=missingness_report(view).overall,
        pct_outcome=pct_outcome,
        mean_outcome=mean_outcome,
        survival=surv_block,
    )


# ----------------------------------------------------------- correlation

def correlation_matrix(view: RawTable, variables) -> dict:
    """Pairwise-complete Pearson correlations over the named numeric
    variables. Returns {variables, matrix} with None for undefined cells."""
    variables = list(variables)
    if len(variables) < 2:
        raise ConfigError("correlation needs at least 2 variables")
    cols = {}
    for name in variables:
        if not view.is_numeric(name):
            raise ConfigError(f"variable {name!r} is not numeric")
        vals = view.column(name)
        present = [v for v in vals if v is not None]
        if len(present) < 2 or float(np.std(present)) == 0.0:
            raise DataError(f"constant column {name!r}")
        cols[name] = np.array(
            [np.nan if v is None else v for v in vals], dtype=float)

    k = len(variables)
    matrix = [[1.0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            x, y = cols[variables[i]], cols[variables[j]]
            both = ~np.isnan(x) & ~np.isnan(y)
            r = None
            if both.sum() >= 2:
                xs, ys = x[both], y[both]
                if np.std(xs) > 0 and np.std(ys) > 0:
                    r = float(np.corrcoef(xs, ys)[0, 1])
            matrix[i][j] = matrix[j][i] = r
    return {"variables": variables, "matrix": matrix}


# ----------------------------------------------------------- propensity

def propensity_distribution(scores, A, bins: int = HISTOGRAM_BINS) -> dict:
    """Shared-edge histograms of the scores, one per treatment arm."""
    e = np.asarray(scores, dtype=float).ravel()
    A = np.asarray(A, dtype=float).ravel()
    if ((e <= 0) | (e >= 1)).any():
        raise ConfigError("scores must lie strictly inside (0, 1)")
    edges = np.linspace(0.0, 1.0, bins + 1)
    treated, _ = np.histogram(e[A == 1], bins=edges)
    control, _ = np.histogram(e[A == 0], bins=edges)
    return {
        "edges": [float(v) for v in edges],
        "treated_counts": [int(c) for c in treated],
        "control_counts": [int(c) for c in control],
    }
