"""CSV ingestion, config validation, per-model data views, design matrices,
and cutoff-censored survival times.

Tables are kept column-wise. A cell is a ``float`` (numeric), ``str`` (text),
or ``None`` (missing). A column is numeric iff every non-missing cell parses
as a finite decimal number; otherwise it is text and a categorical candidate.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from datetime import datetime

import numpy as np

from .errors import ConfigError, DataError, ParseError

Cell = "float | str | None"

ESTIMANDS = ("ATE", "ATT", "ATC")
ANALYSIS_KINDS = ("binary", "continuous", "survival")
TIME_UNITS = ("days", "months", "years")

# Fixed divisors keep unit conversion reproducible; calendar-exact month and
# year arithmetic is out of scope.
DAYS_PER_MONTH = 30.4375
DAYS_PER_YEAR = 365.25

DATE_FORMATS = {
    "YYYY-MM-DD": "%Y-%m-%d",
    "DD/MM/YYYY": "%d/%m/%Y",
    "MM/DD/YYYY": "%m/%d/%Y",
}

_NONFINITE_TOKENS = {
    "nan", "-nan", "+nan", "inf", "-inf", "+inf",
    "infinity", "-infinity", "+infinity",
}


def _parse_cell(text: str):
    """Classify one raw CSV field: missing, numeric, or text."""
    if text == "":
        return None
    if text.strip().lower() in _NONFINITE_TOKENS:
        return text
    try:
        value = float(text)
    except ValueError:
        return text
    if not np.isfinite(value):
        return text
    return value


@dataclass
class RawTable:
    """A parsed data set: ordered named columns of equal length."""

    column_names: list[str]
    columns: list[list]
    n_rows: int = field(init=False)

    def __post_init__(self):
        if not self.column_names:
            raise ConfigError("table has no columns")
        seen = set()
        for name in self.column_names:
            if not name:
                raise ConfigError("empty column name in header")
            if name in seen:
                raise ConfigError(f"duplicate column name {name!r}")
            seen.add(name)
        lengths = {len(col) for col in self.columns}
        if len(lengths) != 1:
            raise ConfigError("columns have unequal lengths")
        n = lengths.pop()
        if n < 1:
            raise ParseError("table has no data rows")
        self.n_rows = n
        # normalize ints/bools from programmatic construction
        self.columns = [
            [float(c) if isinstance(c, (int, float)) and not isinstance(c, bool)
             else c for c in col]
            for col in self.columns
        ]

    def index_of(self, name: str) -> int:
        try:
            return self.column_names.index(name)
        except ValueError:
            raise ConfigError(f"missing column name {name!r}") from None

    def column(self, name: str) -> list:
        return self.columns[self.index_of(name)]

    def is_numeric(self, name: str) -> bool:
        col = self.column(name)
        return all(c is None or isinstance(c, float) for c in col)

    def select(self, names: list[str]) -> "RawTable":
        """A new table with the given columns, in the given order."""
        return RawTable(list(names), [list(self.column(n)) for n in names])

    def take_rows(self, rows) -> "RawTable":
        rows = list(rows)
        return RawTable(
            list(self.column_names),
            [[col[i] for i in rows] for col in self.columns],
        )


def parse_csv(data: bytes) -> RawTable:
    """Parse UTF-8 CSV bytes (RFC 4180, mandatory header row) into a table."""
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"file is not valid UTF-8: {exc}") from None
    records = [row for row in csv.reader(io.StringIO(text)) if row]
    if not records:
        raise ParseError("empty file")
    header = records[0]
    width = len(header)
    raw_rows = records[1:]
    if not raw_rows:
        raise ParseError("file has a header but no data rows")
    for i, row in enumerate(raw_rows, start=1):
        if len(row) != width:
            raise ParseError(
                f"row {i} has {len(row)} cells, expected {width}"
            )
    cells = [[_parse_cell(row[j]) for row in raw_rows] for j in range(width)]
    # a column is numeric only if every non-missing cell parsed numeric
    columns = []
    for raw_col, col in zip(zip(*raw_rows), cells):
        if all(c is None or isinstance(c, float) for c in col):
            columns.append(list(col))
        else:
            columns.append([None if r == "" else r for r in raw_col])
    return RawTable(list(header), columns)


@dataclass(frozen=True)
class SurvivalSpec:
    """Timeframe specification for survival analyses."""

    start_column: str
    end_column: str
    date_format: str
    time_unit: str
    cutoff: float


DEFAULT_IPW_BOOTSTRAP = 499
DEFAULT_PROPENSITY_CLIP = 0.01
DEFAULT_CV_FOLDS = 5


@dataclass(frozen=True)
class AnalysisConfig:
    """The user's full analysis specification.

    The first block mirrors the import form one-to-one; the second holds
    engine knobs with serviceable defaults. ``learners`` is kept as raw
    {kind, hyperparameters} dicts here (None means the default library);
    resolution into actual learners happens where models are fit.
    """

    outcome_column: str
    treatment_column: str
    treatment_positive_level: object
    analysis_kind: str
    estimand: str = "ATE"
    outcome_positive_level: object = None
    categorical_columns: tuple = ()
    excluded_from_outcome_model: tuple = ()
    excluded_from_treatment_model: tuple = ()
    survival: SurvivalSpec | None = None

    learners: tuple | None = None
    ipw_bootstrap: int = DEFAULT_IPW_BOOTSTRAP
    propensity_clip: float = DEFAULT_PROPENSITY_CLIP
    cv_folds: int = DEFAULT_CV_FOLDS
    propensity_method: str = "glm"
    cox_bootstrap: int = 0

    def to_json_dict(self) -> dict:
        d = {
            "outcome_column": self.outcome_column,
            "outcome_positive_level": self.outcome_positive_level,
            "treatment_column": self.treatment_column,
            "treatment_positive_level": self.treatment_positive_level,
            "categorical_columns": sorted(self.categorical_columns),
            "excluded_from_outcome_model": sorted(self.excluded_from_outcome_model),
            "excluded_from_treatment_model": sorted(self.excluded_from_treatment_model),
            "estimand": self.estimand,
            "analysis_kind": self.analysis_kind,
            "survival": None,
            "learners": None if self.learners is None
            else [dict(spec) for spec in self.learners],
            "ipw_bootstrap": self.ipw_bootstrap,
            "propensity_clip": self.propensity_clip,
            "cv_folds": self.cv_folds,
            "propensity_method": self.propensity_method,
            "cox_bootstrap": self.cox_bootstrap,
        }
        if self.survival is not None:
            d["survival"] = {
                "start_column": self.survival.start_column,
                "end_column": self.survival.end_column,
                "date_format": self.survival.date_format,
                "time_unit": self.survival.time_unit,
                "cutoff": self.survival.cutoff,
            }
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "AnalysisConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        required = ("outcome_column", "treatment_column",
                    "treatment_positive_level", "analysis_kind")
        for key in required:
            if key not in d:
                raise ConfigError(f"config missing required field {key!r}")
        surv = d.get("survival")
        spec = None
        if surv is not None:
            if not isinstance(surv, dict):
                raise ConfigError("survival config must be an object")
            for key in ("start_column", "end_column", "date_format",
                        "time_unit", "cutoff"):
                if key not in surv:
                    raise ConfigError(f"survival config missing field {key!r}")
            try:
                cutoff = float(surv["cutoff"])
            except (TypeError, ValueError):
                raise ConfigError("survival cutoff must be a number") from None
            spec = SurvivalSpec(
                start_column=surv["start_column"],
                end_column=surv["end_column"],
                date_format=surv["date_format"],
                time_unit=surv["time_unit"],
                cutoff=cutoff,
            )
        learners = d.get("learners")
        if learners is not None:
            if not isinstance(learners, list):
                raise ConfigError("learners must be a list or null")
            learners = tuple(dict(item) for item in learners)
        try:
            return cls(
                outcome_column=d["outcome_column"],
                outcome_positive_level=d.get("outcome_positive_level"),
                treatment_column=d["treatment_column"],
                treatment_positive_level=d["treatment_positive_level"],
                categorical_columns=tuple(d.get("categorical_columns") or ()),
                excluded_from_outcome_model=tuple(
                    d.get("excluded_from_outcome_model") or ()),
                excluded_from_treatment_model=tuple(
                    d.get("excluded_from_treatment_model") or ()),
                estimand=d.get("estimand", "ATE"),
                analysis_kind=d["analysis_kind"],
                survival=spec,
                learners=learners,
                ipw_bootstrap=int(d.get("ipw_bootstrap", DEFAULT_IPW_BOOTSTRAP)),
                propensity_clip=float(
                    d.get("propensity_clip", DEFAULT_PROPENSITY_CLIP)),
                cv_folds=int(d.get("cv_folds", DEFAULT_CV_FOLDS)),
                propensity_method=d.get("propensity_method", "glm"),
                cox_bootstrap=int(d.get("cox_bootstrap", 0)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config value: {exc}") from None


def _distinct_levels(col) -> list:
    """Distinct non-missing values, in first-appearance order."""
    seen = []
    for c in col:
        if c is not None and c not in seen:
            seen.append(c)
    return seen


def _normalize_level(table: RawTable, column: str, level):
    """Coerce a configured level to the column's storage type and confirm
    the column actually contains it."""
    col = table.column(column)
    if table.is_numeric(column):
        try:
            level = float(level)
        except (TypeError, ValueError):
            raise ConfigError(
                f"level {level!r} not found in column {column!r}"
            ) from None
    else:
        level = str(level)
    if level not in col:
        raise ConfigError(f"level {level!r} not found in column {column!r}")
    return level


def date_columns(cfg: AnalysisConfig) -> tuple:
    if cfg.survival is None:
        return ()
    return (cfg.survival.start_column, cfg.survival.end_column)


def covariate_names(table: RawTable, cfg: AnalysisConfig) -> list[str]:
    """All columns that act as covariates by default: everything except the
    outcome, treatment, and survival date columns."""
    reserved = {cfg.outcome_column, cfg.treatment_column, *date_columns(cfg)}
    return [c for c in table.column_names if c not in reserved]


def validate_config(table: RawTable, cfg: AnalysisConfig) -> AnalysisConfig:
    """Check every config invariant against the table; return a normalized
    copy (levels coerced to the column's value type)."""
    if cfg.analysis_kind not in ANALYSIS_KINDS:
        raise ConfigError(f"unknown analysis_kind {cfg.analysis_kind!r}")
    if cfg.estimand not in ESTIMANDS:
        raise ConfigError(f"unknown estimand {cfg.estimand!r}")
    table.index_of(cfg.outcome_column)
    table.index_of(cfg.treatment_column)
    if cfg.outcome_column == cfg.treatment_column:
        raise ConfigError("outcome and treatment columns must be distinct")

    treat_levels = _distinct_levels(table.column(cfg.treatment_column))
    if len(treat_levels) != 2:
        raise ConfigError(
            f"treatment not dichotomous: column {cfg.treatment_column!r} has "
            f"{len(treat_levels)} distinct values"
        )
    treatment_positive = _normalize_level(
        table, cfg.treatment_column, cfg.treatment_positive_level)

    outcome_positive = cfg.outcome_positive_level
    if cfg.analysis_kind in ("binary", "survival"):
        out_levels = _distinct_levels(table.column(cfg.outcome_column))
        if len(out_levels) != 2:
            raise ConfigError(
                f"column {cfg.outcome_column!r} must have exactly 2 distinct "
                f"values for a {cfg.analysis_kind} analysis, found {len(out_levels)}"
            )
        if outcome_positive is None:
            raise ConfigError(
                "outcome_positive_level is required for this analysis kind")
        outcome_positive = _normalize_level(
            table, cfg.outcome_column, outcome_positive)
    else:
        if not table.is_numeric(cfg.outcome_column):
            raise ConfigError(
                f"outcome column {cfg.outcome_column!r} must be numeric for "
                "a continuous analysis"
            )
        outcome_positive = None

    if cfg.analysis_kind == "survival":
        if cfg.survival is None:
            raise ConfigError("survival config missing date columns")
        s = cfg.survival
        table.index_of(s.start_column)
        table.index_of(s.end_column)
        if s.start_column == s.end_column:
            raise ConfigError("start and end date columns must be distinct")
        if {s.start_column, s.end_column} & {cfg.outcome_column, cfg.treatment_column}:
            raise ConfigError("date columns cannot be the outcome or treatment")
        if s.date_format not in DATE_FORMATS:
            raise ConfigError(f"unsupported date format {s.date_format!r}")
        if s.time_unit not in TIME_UNITS:
            raise ConfigError(f"unsupported time unit {s.time_unit!r}")
        if not s.cutoff > 0:
            raise ConfigError("survival cutoff must be positive")
    elif cfg.survival is not None:
        raise ConfigError(
            "survival timeframe given for a non-survival analysis")

    reserved = {cfg.outcome_column, cfg.treatment_column, *date_columns(cfg)}
    for name in cfg.categorical_columns:
        table.index_of(name)
        if name in reserved:
            raise ConfigError(
                f"categorical set may not include {name!r} (outcome, "
                "treatment, or date column)"
            )
    for group in (cfg.excluded_from_outcome_model,
                  cfg.excluded_from_treatment_model):
        for name in group:
            table.index_of(name)
            if name in reserved:
                raise ConfigError(
                    f"exclusion {name!r} is not a covariate (outcome, "
                    "treatment, or date column)"
                )

    if cfg.ipw_bootstrap < 100:
        raise ConfigError("ipw_bootstrap must be at least 100")
    if not 0 < cfg.propensity_clip < 0.5:
        raise ConfigError("propensity_clip must be in (0, 0.5)")
    if cfg.cv_folds < 2:
        raise ConfigError("cv_folds must be at least 2")
    if cfg.propensity_method not in ("glm", "superlearner"):
        raise ConfigError(
            f"unknown propensity_method {cfg.propensity_method!r}")
    if cfg.cox_bootstrap != 0 and cfg.cox_bootstrap < 100:
        raise ConfigError("cox_bootstrap must be 0 (off) or at least 100")
    if cfg.learners is not None:
        if len(cfg.learners) == 0:
            raise ConfigError("learners list cannot be empty; use null")
        for item in cfg.learners:
            if not isinstance(item, dict) or not isinstance(item.get("kind"), str):
                raise ConfigError(
                    "each learner must be an object with a string 'kind'")

    # non-declared text columns are categorical by construction; a declared
    # set is still validated so typos surface early
    return replace(
        cfg,
        treatment_positive_level=treatment_positive,
        outcome_positive_level=outcome_positive,
        categorical_columns=tuple(cfg.categorical_columns),
        excluded_from_outcome_model=tuple(cfg.excluded_from_outcome_model),
        excluded_from_treatment_model=tuple(cfg.excluded_from_treatment_model),
    )


@dataclass
class ModelViews:
    """The three per-purpose slices of the input table."""

    summary_view: RawTable
    treatment_view: RawTable
    outcome_view: RawTable


def build_views(table: RawTable, cfg: AnalysisConfig) -> ModelViews:
    """Split the table into summary/treatment/outcome views. Per-model
    exclusions are removed from the matching view only."""
    covariates = covariate_names(table, cfg)
    treat_cov = [c for c in covariates
                 if c not in set(cfg.excluded_from_treatment_model)]
    out_cov = [c for c in covariates
               if c not in set(cfg.excluded_from_outcome_model)]
    if not treat_cov:
        raise DataError("no covariates remain for the treatment model")
    if not out_cov:
        raise DataError("no covariates remain for the outcome model")
    treatment_view = table.select(treat_cov + [cfg.treatment_column])
    outcome_view = table.select(
        out_cov + [cfg.treatment_column, cfg.outcome_column])
    return ModelViews(
        summary_view=table.select(list(table.column_names)),
        treatment_view=treatment_view,
        outcome_view=outcome_view,
    )


@dataclass
class DesignMatrix:
    """Numeric matrix with provenance: which source variable and (for
    indicators) which level each column encodes."""

    values: np.ndarray
    column_meta: list[tuple]  # (source variable, level or "numeric")
    row_index: np.ndarray

    @property
    def names(self) -> list[str]:
        return [src if lvl == "numeric" else f"{src}={lvl}"
                for src, lvl in self.column_meta]


def _level_label(value) -> str:
    if isinstance(value, float):
        return f"{value:g}"
    return str(value)


def complete_rows(table: RawTable) -> list[int]:
    """Row positions with no missing cell in any column of the table."""
    return [
        i for i in range(table.n_rows)
        if all(col[i] is not None for col in table.columns)
    ]


def encode_design(view: RawTable, categorical=(), row_ids=None) -> DesignMatrix:
    """Encode a table into a numeric matrix. Numeric columns pass through;
    categorical (declared, plus any text column) one-hot encode dropping the
    lexicographically smallest level. Rows with a missing cell in any column
    are dropped; ``row_index`` records the surviving original ids."""
    categorical = set(categorical)
    rows = complete_rows(view)
    if not rows:
        raise DataError("zero rows survive complete-case filtering")
    if row_ids is None:
        row_ids = list(range(view.n_rows))
    kept_ids = [row_ids[i] for i in rows]

    blocks = []
    meta = []
    for name in view.column_names:
        col = [view.column(name)[i] for i in rows]
        as_categorical = name in categorical or not view.is_numeric(name)
        if not as_categorical:
            blocks.append(np.asarray(col, dtype=float)[:, None])
            meta.append((name, "numeric"))
        else:
            labels = [_level_label(c) for c in col]
            levels = sorted(set(labels))
            if len(levels) < 2:
                raise DataError(
                    f"categorical column {name!r} has a single level")
            for level in levels[1:]:
                blocks.append(
                    np.asarray([1.0 if l == level else 0.0 for l in labels])[:, None])
                meta.append((name, level))
    values = np.hstack(blocks) if blocks else np.empty((len(rows), 0))
    return DesignMatrix(values=values, column_meta=meta,
                        row_index=np.asarray(kept_ids, dtype=int))


@dataclass
class SurvivalTimes:
    """Cutoff-censored follow-up: anyone without an observed event inside the
    cutoff window is censored at min(duration, cutoff)."""

    time: np.ndarray
    event: np.ndarray
    censored_fraction: float
    row_index: np.ndarray


def _parse_date(text, fmt: str, row: int, column: str):
    if not isinstance(text, str):
        text = _level_label(text)
    try:
        return datetime.strptime(text.strip(), fmt).date()
    except ValueError:
        raise ParseError(
            f"row {row}: cannot parse date {text!r} in column {column!r}"
        ) from None


def derive_survival(table: RawTable, cfg: AnalysisConfig) -> SurvivalTimes:
    """Compute per-subject follow-up times and event indicators from start/end
    dates, applying the configured cutoff as administrative censoring. Rows
    with a missing date or event cell are dropped (complete-case); malformed
    non-missing cells raise."""
    if cfg.survival is None:
        raise ConfigError("survival config missing date columns")
    s = cfg.survival
    fmt = DATE_FORMATS[s.date_format]
    start_col = table.column(s.start_column)
    end_col = table.column(s.end_column)
    event_col = table.column(cfg.outcome_column)

    times, events, kept = [], [], []
    for i in range(table.n_rows):
        if start_col[i] is None or end_col[i] is None or event_col[i] is None:
            continue
        start = _parse_date(start_col[i], fmt, i, s.start_column)
        end = _parse_date(end_col[i], fmt, i, s.end_column)
        days = (end - start).days
        if days < 0:
            raise ParseError(f"row {i}: end date before start date")
        if s.time_unit == "days":
            duration = float(days)
        elif s.time_unit == "months":
            duration = days / DAYS_PER_MONTH
        else:
            duration = days / DAYS_PER_YEAR
        raw_event = event_col[i] == cfg.outcome_positive_level
        if raw_event and duration <= s.cutoff:
            times.append(duration)
            events.append(True)
        else:
            times.append(min(duration, s.cutoff))
            events.append(False)
        kept.append(i)
    if not kept:
        raise DataError("no rows with complete survival information")
    events_arr = np.asarray(events, dtype=bool)
    return SurvivalTimes(
        time=np.asarray(times, dtype=float),
        event=events_arr,
        censored_fraction=float(1.0 - events_arr.mean()),
        row_index=np.asarray(kept, dtype=int),
    )


@dataclass
class MissingnessReport:
    per_column: dict
    overall: float


def missingness_report(table: RawTable) -> MissingnessReport:
    """Percent missing per column and overall, rounded to 0.1."""
    per_column = {}
    total_missing = 0
    for name, col in zip(table.column_names, table.columns):
        miss = sum(1 for c in col if c is None)
        total_missing += miss
        per_column[name] = round(100.0 * miss / table.n_rows, 1)
    total_cells = table.n_rows * len(table.column_names)
    overall = round(100.0 * total_missing / total_cells, 1)
    return MissingnessReport(per_column=per_column, overall=overall)
