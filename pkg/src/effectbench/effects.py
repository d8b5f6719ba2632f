"""Propensity scores, estimand weights, and the IPW and TMLE effect
estimators.

Conventions: ``A`` is a 0/1 treatment vector, design matrices carry no
intercept column, and the treatment column is never part of the treatment
design. The outcome design passed to TMLE holds covariates only; treatment
is appended internally so counterfactual predictions stay in one place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

from .errors import ConfigError, DataError, FitError
from .learners import (
    EnsembleFit,
    FittedLearner,
    fit_glm,
    fit_mean,
    fit_superlearner,
)

DEFAULT_CLIP = 0.01
DEFAULT_BOOTSTRAP = 499
Z_95 = 1.96

# logit needs interior values; also bounds the clever covariate pieces that
# divide by Q-bar residual scale
QBAR_EPS = 1e-6

ESTIMANDS = ("ATE", "ATT", "ATC")


def _check_treatment(A) -> np.ndarray:
    A = np.asarray(A, dtype=float).ravel()
    if not np.isin(A, (0.0, 1.0)).all():
        raise ConfigError("treatment vector must be 0/1")
    if A.sum() == 0 or A.sum() == len(A):
        raise DataError("no variation in treatment")
    return A


@dataclass
class PropensityModel:
    """A fitted treatment model and its clipped scores."""

    fit: object  # EnsembleFit or FittedLearner
    scores: np.ndarray
    clip_bound: float


def estimate_propensity(design, A, method: str = "glm",
                        clip: float = DEFAULT_CLIP, seed: int = 0,
                        library=None, k: int = 5) -> PropensityModel:
    """Fit P(A=1|X) and clip the scores into [clip, 1-clip].

    Zero-variance columns are removed first: they carry no information and
    would only duplicate the intercept, so an all-constant design reduces to
    the intercept-only fit whose score is exactly the treated fraction.
    """
    if not 0 < clip < 0.5:
        raise ConfigError("clip bound must be in (0, 0.5)")
    A = _check_treatment(A)
    X = np.asarray(design, dtype=float)
    if X.ndim != 2 or X.shape[0] != len(A):
        raise ConfigError("treatment design shape mismatch")
    live = X.std(axis=0) > 0
    X = X[:, live]

    if method == "glm":
        if X.shape[1] == 0:
            fit = fit_mean(A, "binomial")
            raw = np.full(len(A), float(A.mean()))
        else:
            fit = fit_glm(X, A, "binomial")
            raw = fit.predict(X)
    elif method == "superlearner":
        fit = fit_superlearner(X, A, "binomial", library=library, k=k, seed=seed)
        raw = fit.predict(X)
    else:
        raise ConfigError(f"unknown propensity method {method!r}")
    return PropensityModel(
        fit=fit,
        scores=np.clip(raw, clip, 1.0 - clip),
        clip_bound=float(clip),
    )


@dataclass
class WeightVector:
    """Estimand-specific inverse-probability weights."""

    w: np.ndarray
    raw: np.ndarray
    estimand: str
    normalized: bool


def compute_weights(scores, A, estimand: str) -> WeightVector:
    """Raw estimand weights, then normalization to mean 1 within each arm."""
    if estimand not in ESTIMANDS:
        raise ConfigError(f"unknown estimand {estimand!r}")
    A = _check_treatment(A)
    e = np.asarray(scores, dtype=float).ravel()
    if e.shape[0] != A.shape[0]:
        raise ConfigError("scores length mismatch")
    if (e <= 0).any() or (e >= 1).any():
        raise ConfigError("scores must lie strictly inside (0, 1)")

    if estimand == "ATE":
        raw = A / e + (1.0 - A) / (1.0 - e)
    elif estimand == "ATT":
        raw = A + (1.0 - A) * e / (1.0 - e)
    else:
        raw = A * (1.0 - e) / e + (1.0 - A)

    w = raw.copy()
    treated = A == 1
    w[treated] /= w[treated].mean()
    w[~treated] /= w[~treated].mean()
    return WeightVector(w=w, raw=raw, estimand=estimand, normalized=True)


def hajek_point(Y, A, w) -> float:
    """Weighted difference in arm means (ratio form, scale invariant)."""
    Y = np.asarray(Y, dtype=float).ravel()
    A = np.asarray(A, dtype=float).ravel()
    w = np.asarray(w, dtype=float).ravel()
    treated = w * A
    control = w * (1.0 - A)
    return float(treated @ Y / treated.sum() - control @ Y / control.sum())


@dataclass
class EffectEstimate:
    """One estimator's answer: point, 95% interval, p-value, and optional
    per-subject influence values / fluctuation coefficient."""

    method: str
    estimand: str
    psi: float
    ci_low: float
    ci_high: float
    p_value: float
    se: float | None = None
    influence: np.ndarray | None = None
    epsilon: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "method": self.method,
            "estimand": self.estimand,
            "psi": round(self.psi, 4),
            "ci_low": round(self.ci_low, 4),
            "ci_high": round(self.ci_high, 4),
            "p_value": self.p_value,
        }


def _two_sided_normal_p(psi: float, se: float) -> float:
    if se <= 0 or not np.isfinite(se):
        return 1.0 if psi == 0 else 0.0
    return float(2.0 * norm.sf(abs(psi) / se))


def ipw_estimate(Y, A, weights: WeightVector, outcome_kind: str,
                 design=None, bootstrap: int = DEFAULT_BOOTSTRAP,
                 seed: int = 0, method: str = "glm",
                 clip: float = DEFAULT_CLIP, library=None,
                 k: int = 5) -> EffectEstimate:
    """Hájek IPW point estimate with a seeded percentile bootstrap.

    Every resample re-runs the propensity fit and the weighting on the
    resampled rows of ``design``; replicate b draws from its own RNG stream
    derived from (seed, b), so the replicate set is schedule-independent.
    A resample with a single-arm draw (or a failed refit) is redrawn, with
    at most 10 * bootstrap attempts in total.
    """
    if outcome_kind not in ("binary", "continuous"):
        raise ConfigError(f"unknown outcome kind {outcome_kind!r}")
    if bootstrap < 100:
        raise ConfigError("bootstrap count must be at least 100")
    if design is None:
        raise ConfigError("ipw_estimate needs the treatment design to bootstrap")
    Y = np.asarray(Y, dtype=float).ravel()
    A = _check_treatment(A)
    X = np.asarray(design, dtype=float)
    n = len(Y)
    if X.shape[0] != n or weights.w.shape[0] != n:
        raise ConfigError("ipw_estimate input length mismatch")

    psi = hajek_point(Y, A, weights.w)

    attempts = 0
    limit = 10 * bootstrap
    reps = np.empty(bootstrap)
    for b in range(bootstrap):
        rng = np.random.default_rng([seed, b])
        while True:
            attempts += 1
            if attempts > limit:
                raise FitError(
                    f"bootstrap exhausted {limit} attempts without "
                    f"{bootstrap} valid resamples")
            rows = rng.integers(0, n, size=n)
            a_b = A[rows]
            if a_b.sum() == 0 or a_b.sum() == n:
                continue
            try:
                model = estimate_propensity(
                    X[rows], a_b, method=method, clip=clip,
                    seed=seed, library=library, k=k)
                w_b = compute_weights(model.scores, a_b, weights.estimand)
            except FitError:
                continue
            reps[b] = hajek_point(Y[rows], a_b, w_b.w)
            break

    lo, hi = np.quantile(reps, [0.025, 0.975])
    se = float(np.std(reps, ddof=1))
    return EffectEstimate(
        method="IPW",
        estimand=weights.estimand,
        psi=psi,
        # the percentile interval can, on rare draws, sit entirely to one
        # side of the point estimate; the reported interval always covers it
        ci_low=min(float(lo), psi),
        ci_high=max(float(hi), psi),
        p_value=_two_sided_normal_p(psi, se),
        se=se,
    )


def _fluctuate(offset_logit: np.ndarray, H: np.ndarray, y: np.ndarray,
               tol: float = 1e-12, max_iter: int = 100) -> float:
    """Solve the one-dimensional fluctuation MLE by Newton iterations:
    the score is sum H * (y - expit(offset + eps * H))."""
    eps = 0.0
    n = len(y)
    for _ in range(max_iter):
        p = expit(offset_logit + eps * H)
        score = float(H @ (y - p))
        if abs(score) < tol * n:
            return eps
        curvature = float((H * H) @ (p * (1.0 - p)))
        if curvature <= 0:
            raise FitError("degenerate fluctuation curvature")
        eps += score / curvature
    raise FitError("fluctuation did not converge")


def tmle_estimate(outcome_design, treatment_design, Y, A, outcome_kind: str,
                  estimand: str = "ATE", library=None, k: int = 5,
                  seed: int = 0, clip: float = DEFAULT_CLIP,
                  propensity_method: str = "glm",
                  propensity: PropensityModel | None = None) -> EffectEstimate:
    """Targeted maximum likelihood for the ATE.

    Continuous outcomes are mapped onto [0, 1] with the sample min/max, the
    outcome regression is a SuperLearner on [covariates, A], the propensity
    comes from the treatment design, and a single clever-covariate
    fluctuation updates the initial fit. Inference is by the influence
    curve.
    """
    if estimand != "ATE":
        raise ConfigError("TMLE not available for this estimand")
    if outcome_kind not in ("binary", "continuous"):
        raise ConfigError(f"unknown outcome kind {outcome_kind!r}")
    Y = np.asarray(Y, dtype=float).ravel()
    A = _check_treatment(A)
    Xo = np.asarray(outcome_design, dtype=float)
    n = len(Y)
    if Xo.ndim != 2 or Xo.shape[0] != n:
        raise ConfigError("outcome design shape mismatch")

    if outcome_kind == "binary":
        if not np.isin(Y, (0.0, 1.0)).all():
            raise ConfigError("binary outcome must be 0/1")
        a_bound, b_bound = 0.0, 1.0
        y_star = Y
        family = "binomial"
    else:
        a_bound, b_bound = float(Y.min()), float(Y.max())
        if b_bound == a_bound:
            raise DataError("constant outcome")
        y_star = (Y - a_bound) / (b_bound - a_bound)
        family = "gaussian"

    q_design = np.hstack([Xo, A[:, None]])
    q_fit = fit_superlearner(q_design, y_star, family, library=library,
                             k=k, seed=seed)
    ones = np.ones((n, 1))
    q1 = np.clip(q_fit.predict(np.hstack([Xo, ones])), QBAR_EPS, 1 - QBAR_EPS)
    q0 = np.clip(q_fit.predict(np.hstack([Xo, 0 * ones])), QBAR_EPS, 1 - QBAR_EPS)
    q_obs = np.where(A == 1, q1, q0)

    if propensity is None:
        propensity = estimate_propensity(
            treatment_design, A, method=propensity_method,
            clip=clip, seed=seed, library=library, k=k)
    e = propensity.scores
    if e.shape[0] != n:
        raise ConfigError("propensity scores length mismatch")
    h_obs = A / e - (1.0 - A) / (1.0 - e)

    eps = _fluctuate(logit(q_obs), h_obs, y_star)
    q1_star = expit(logit(q1) + eps / e)
    q0_star = expit(logit(q0) - eps / (1.0 - e))
    q_obs_star = np.where(A == 1, q1_star, q0_star)

    psi_star = float(np.mean(q1_star - q0_star))
    ic = h_obs * (y_star - q_obs_star) + q1_star - q0_star - psi_star
    scale = b_bound - a_bound
    psi = scale * psi_star
    se = scale * float(np.sqrt(np.var(ic, ddof=1) / n))
    return EffectEstimate(
        method="TMLE",
        estimand="ATE",
        psi=psi,
        ci_low=psi - Z_95 * se,
        ci_high=psi + Z_95 * se,
        p_value=_two_sided_normal_p(psi, se),
        se=se,
        influence=scale * ic,
        epsilon=eps,
    )
