"""Weighted Kaplan-Meier curves, weighted Cox proportional hazards, and the
survival ATE curve (treated-minus-control difference of weighted KM curves).

Case weights are normalized to mean 1 on entry everywhere, which makes every
output invariant to rescaling all weights by a positive constant: the KM
ratios are invariant anyway, and for Cox it keeps the gradient tolerance,
standard errors, and log-likelihood on a stable scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import ConfigError, DataError, FitError
from .effects import compute_weights

COX_TOL = 1e-8
COX_MAX_ITER = 25
COX_BETA_BOUND = 100.0
Z_95 = 1.96


def _check_survival_inputs(times, events, case_weights):
    t = np.asarray(times, dtype=float).ravel()
    e = np.asarray(events).ravel().astype(bool)
    if t.shape[0] != e.shape[0]:
        raise ConfigError("times and events length mismatch")
    if t.shape[0] == 0:
        raise ConfigError("empty survival input")
    if (t < 0).any() or not np.isfinite(t).all():
        raise ConfigError("times must be finite and nonnegative")
    if case_weights is None:
        w = np.ones(t.shape[0])
    else:
        w = np.asarray(case_weights, dtype=float).ravel()
        if w.shape[0] != t.shape[0]:
            raise ConfigError("case_weights length mismatch")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ConfigError("case_weights must be finite and nonnegative")
        if w.sum() <= 0:
            raise ConfigError("case_weights sum to zero")
    return t, e, w / w.mean()


@dataclass
class SurvivalCurve:
    """Product-limit estimate evaluated at the event times."""

    times: np.ndarray
    survival: np.ndarray
    variance: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def step_values(self, grid) -> np.ndarray:
        """Right-continuous step interpolation of S onto a time grid."""
        grid = np.asarray(grid, dtype=float)
        idx = np.searchsorted(self.times, grid, side="right") - 1
        out = np.ones(grid.shape[0])
        hit = idx >= 0
        out[hit] = self.survival[idx[hit]]
        return out

    def step_variance(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        idx = np.searchsorted(self.times, grid, side="right") - 1
        out = np.zeros(grid.shape[0])
        hit = idx >= 0
        out[hit] = self.variance[idx[hit]]
        return out


def kaplan_meier(times, events, case_weights=None) -> SurvivalCurve:
    """Weighted product-limit estimator with Greenwood variance.

    All-censored input yields an empty curve (S identically 1). Where the
    curve reaches exactly 0 the Greenwood factor is undefined; the variance
    is reported as 0 there since the estimate can fall no further.
    """
    t, e, w = _check_survival_inputs(times, events, case_weights)
    event_times = np.unique(t[e])
    if event_times.size == 0:
        empty = np.empty(0)
        return SurvivalCurve(empty, empty.copy(), empty.copy(),
                             empty.copy(), empty.copy())

    order = np.argsort(t, kind="stable")
    ts, es, ws = t[order], e[order], w[order]
    # weighted number at risk just before tau: total weight with t >= tau
    suffix = np.concatenate([np.cumsum(ws[::-1])[::-1], [0.0]])

    n_at_risk = np.empty(event_times.size)
    d_events = np.empty(event_times.size)
    for i, tau in enumerate(event_times):
        first = np.searchsorted(ts, tau, side="left")
        last = np.searchsorted(ts, tau, side="right")
        n_at_risk[i] = suffix[first]
        d_events[i] = np.sum(ws[first:last] * es[first:last])

    frac = d_events / n_at_risk
    survival = np.cumprod(1.0 - frac)
    with np.errstate(divide="ignore", invalid="ignore"):
        greenwood_terms = d_events / (n_at_risk * (n_at_risk - d_events))
    greenwood_terms = np.where(np.isfinite(greenwood_terms), greenwood_terms, 0.0)
    variance = survival ** 2 * np.cumsum(greenwood_terms)
    variance = np.where(survival > 0, variance, 0.0)
    return SurvivalCurve(
        times=event_times,
        survival=survival,
        variance=variance,
        at_risk=n_at_risk,
        events=d_events,
    )


@dataclass
class CoxFit:
    """Weighted Cox proportional hazards fit (Breslow ties)."""

    beta: np.ndarray
    hazard_ratios: np.ndarray
    se: np.ndarray
    p_values: np.ndarray
    loglik: float
    caveat: str = ("model-based standard errors treat the case weights "
                   "as fixed and known")


def _cox_loglik_parts(X, t, e, w, beta):
    """Weighted Breslow partial log-likelihood, gradient, and information.

    Rows are processed in descending time order so risk-set sums are running
    cumulative sums; tied times share one risk set.
    """
    n, p = X.shape
    eta = X @ beta
    shift = eta.max()  # keeps exp() bounded
    r = w * np.exp(eta - shift)

    order = np.argsort(-t, kind="stable")
    ts, es_, ws_, Xs = t[order], e[order], w[order], X[order]
    rs = r[order]

    ll = 0.0
    grad = np.zeros(p)
    info = np.zeros((p, p))
    s0 = 0.0
    s1 = np.zeros(p)
    s2 = np.zeros((p, p))
    i = 0
    while i < n:
        j = i
        while j < n and ts[j] == ts[i]:
            s0 += rs[j]
            s1 += rs[j] * Xs[j]
            s2 += rs[j] * np.outer(Xs[j], Xs[j])
            j += 1
        for idx in range(i, j):
            if es_[idx]:
                wi = ws_[idx]
                ll += wi * ((Xs[idx] @ beta - shift) - np.log(s0))
                mean_x = s1 / s0
                ll_grad = Xs[idx] - mean_x
                grad += wi * ll_grad
                info += wi * (s2 / s0 - np.outer(mean_x, mean_x))
        i = j
    return ll, grad, info


def fit_cox(X, times, events, case_weights=None) -> CoxFit:
    """Newton-Raphson with step halving on the weighted partial likelihood."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    t, e, w = _check_survival_inputs(times, events, case_weights)
    if X.shape[0] != t.shape[0]:
        raise ConfigError("design and times length mismatch")
    if not e.any():
        raise DataError("no events in survival data")
    if X.shape[1] == 0:
        raise ConfigError("cox model needs at least one covariate")

    beta = np.zeros(X.shape[1])
    ll, grad, info = _cox_loglik_parts(X, t, e, w, beta)
    for _ in range(COX_MAX_ITER):
        if np.max(np.abs(grad)) < COX_TOL:
            break
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError:
            raise FitError("singular information matrix in cox fit") from None
        size = 1.0
        # slack covers summation rounding in ll: near the optimum the true
        # improvement can be below one ulp and a strictly monotone search
        # would stall with the gradient still above COX_TOL
        slack = 1e-12 * (1.0 + abs(ll))
        while True:
            candidate = beta + size * step
            new_ll, new_grad, new_info = _cox_loglik_parts(X, t, e, w, candidate)
            if new_ll >= ll - slack or size < 1e-10:
                break
            size /= 2.0
        beta, ll, grad, info = candidate, new_ll, new_grad, new_info
        if np.max(np.abs(beta)) > COX_BETA_BOUND:
            raise FitError("monotone likelihood")
    else:
        raise FitError(
            f"cox fit did not converge in {COX_MAX_ITER} iterations")

    try:
        cov = np.linalg.inv(info)
    except np.linalg.LinAlgError:
        raise FitError("singular information matrix in cox fit") from None
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, beta / se, np.inf * np.sign(beta))
    p_values = np.where(np.isfinite(z), 2.0 * norm.sf(np.abs(z)), 0.0)
    p_values = np.where((beta == 0) & (se == 0), 1.0, p_values)
    return CoxFit(
        beta=beta,
        hazard_ratios=np.exp(beta),
        se=se,
        p_values=p_values,
        loglik=float(ll),
    )


@dataclass
class AteCurve:
    """Pointwise difference of the two arms' weighted KM curves."""

    time_grid: np.ndarray
    ate: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    s_treated: np.ndarray
    s_control: np.ndarray


def ate_curve(times, events, A, scores, estimand: str = "ATE"):
    """IPW-weighted per-arm Kaplan-Meier curves and their difference.

    Returns (AteCurve, treated SurvivalCurve, control SurvivalCurve). The
    grid is the union of both arms' event times; variance adds the per-arm
    Greenwood variances (independent-arm approximation) and the band is
    truncated to [-1, 1].
    """
    t, e, _ = _check_survival_inputs(times, events, None)
    A = np.asarray(A, dtype=float).ravel()
    if A.shape[0] != t.shape[0]:
        raise ConfigError("treatment length mismatch")
    weights = compute_weights(scores, A, estimand)

    treated = A == 1
    curve1 = kaplan_meier(t[treated], e[treated], weights.w[treated])
    curve0 = kaplan_meier(t[~treated], e[~treated], weights.w[~treated])

    grid = np.unique(np.concatenate([curve1.times, curve0.times]))
    s1 = curve1.step_values(grid)
    s0 = curve0.step_values(grid)
    ate = s1 - s0
    var = curve1.step_variance(grid) + curve0.step_variance(grid)
    half = Z_95 * np.sqrt(var)
    return (
        AteCurve(
            time_grid=grid,
            ate=ate,
            ci_low=np.maximum(ate - half, -1.0),
            ci_high=np.minimum(ate + half, 1.0),
            s_treated=s1,
            s_control=s0,
        ),
        curve1,
        curve0,
    )
