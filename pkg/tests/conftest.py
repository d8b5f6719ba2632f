import io

import numpy as np
import pytest

from effectbench.tabular import AnalysisConfig, RawTable, SurvivalSpec, parse_csv


def make_csv(header, rows) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(header) + "\r\n")
    for row in rows:
        buf.write(",".join("" if c is None else str(c) for c in row) + "\r\n")
    return buf.getvalue().encode("utf-8")


def simulate_binary(n=150, seed=0, missing=False):
    """Confounded binary-outcome data as a RawTable."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    site = rng.choice(["a", "b", "c"], size=n)
    a = rng.binomial(1, 1.0 / (1.0 + np.exp(-(0.5 * x1 - 0.5 * x2))))
    y = rng.binomial(1, 1.0 / (1.0 + np.exp(-(0.4 * a + 0.8 * x1 - 0.3 * x2))))
    rows = []
    for i in range(n):
        v1 = "" if missing and i % 17 == 0 else f"{x1[i]:.6f}"
        rows.append([v1, f"{x2[i]:.6f}", site[i], a[i], y[i]])
    return parse_csv(make_csv(["x1", "x2", "site", "treat", "outcome"], rows))


def simulate_continuous(n=150, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    a = rng.binomial(1, 1.0 / (1.0 + np.exp(-(0.6 * x1))))
    y = 0.8 * a + x1 + 0.5 * x2 + rng.normal(size=n)
    rows = [[f"{x1[i]:.6f}", f"{x2[i]:.6f}", a[i], f"{y[i]:.6f}"] for i in range(n)]
    return parse_csv(make_csv(["x1", "x2", "treat", "outcome"], rows))


def simulate_survival(n=200, seed=0):
    """Date-anchored survival data with administrative censoring."""
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    a = rng.binomial(1, 1.0 / (1.0 + np.exp(-0.5 * x1)))
    rate = np.exp(-0.6 * a + 0.4 * x1) / 400.0
    t = rng.exponential(1.0 / rate)
    c = rng.uniform(100, 900, size=n)
    dur = np.minimum(t, c).astype(int) + 1
    event = (t <= c).astype(int)
    base = np.datetime64("2019-01-01")
    rows = []
    for i in range(n):
        start = base + rng.integers(0, 200)
        end = start + dur[i]
        rows.append([f"{x1[i]:.6f}", a[i], event[i], str(start), str(end)])
    return parse_csv(make_csv(["x1", "treat", "event", "enrolled", "exited"], rows))


def binary_config(**overrides):
    base = dict(
        outcome_column="outcome",
        treatment_column="treat",
        treatment_positive_level=1,
        analysis_kind="binary",
        estimand="ATE",
        outcome_positive_level=1,
        categorical_columns=("site",),
    )
    base.update(overrides)
    return AnalysisConfig(**base)


def continuous_config(**overrides):
    base = dict(outcome_column="outcome", treatment_column="treat",
                treatment_positive_level=1, analysis_kind="continuous",
                estimand="ATE")
    base.update(overrides)
    return AnalysisConfig(**base)


def survival_config(**overrides):
    base = dict(
        outcome_column="event",
        treatment_column="treat",
        treatment_positive_level=1,
        analysis_kind="survival",
        estimand="ATE",
        outcome_positive_level=1,
        survival=SurvivalSpec(start_column="enrolled", end_column="exited",
                              date_format="YYYY-MM-DD", time_unit="days",
                              cutoff=730.0),
    )
    base.update(overrides)
    return AnalysisConfig(**base)


@pytest.fixture
def binary_table():
    return simulate_binary()


@pytest.fixture
def continuous_table():
    return simulate_continuous()


@pytest.fixture
def survival_table():
    return simulate_survival()
