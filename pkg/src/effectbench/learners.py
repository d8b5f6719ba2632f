"""Regression learners and the stacked ensemble built on top of them.

Design matrices here are plain (n, p) float arrays WITHOUT an intercept
column; every learner adds its own intercept. Binomial responses are 0/1
vectors and binomial predictions are probabilities clipped to
[1e-12, 1 - 1e-12]. Every fit is deterministic given (inputs, seed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from .errors import ConfigError, FitError

PROB_EPS = 1e-12

IRLS_TOL = 1e-8
IRLS_MAX_ITER = 50
SEPARATION_NORM = 1e3

CD_TOL = 1e-7
LASSO_GRID_SIZE = 20
LASSO_GRID_SPAN = 1000.0


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ConfigError("design matrix must be 2-dimensional")
    return X

def _check_xy(X, y):
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise ConfigError(
            f"design has {X.shape[0]} rows but response has {y.shape[0]}")
    if X.shape[0] == 0:
        raise ConfigError("empty design matrix")
    if not np.isfinite(X).all():
        raise ConfigError("design matrix contains non-finite values")
    if not np.isfinite(y).all():
        raise ConfigError("response contains non-finite values")
    return X, y

def _check_family(family: str, y: np.ndarray):
    if family not in ("binomial", "gaussian"):
        raise ConfigError(f"unknown family {family!r}")
    if family == "binomial" and not np.isin(y, (0.0, 1.0)).all():
        raise ConfigError("binomial response must be 0/1")

def clip_probability(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


@dataclass
class Stump:
    """One depth-1 regression tree: x[feature] <= threshold goes left."""

    feature: int
    threshold: float
    left_value: float
    right_value: float


@dataclass
class FittedLearner:
    """A fitted base learner with a uniform prediction contract."""

    kind: str
    family: str
    params: dict

    def linear_predictor(self, X) -> np.ndarray:
        X = _as_matrix(X)
        if self.kind in ("glm", "lasso"):
            return self.params["intercept"] + X @ self.params["slopes"]
        if self.kind == "mean":
            return np.full(X.shape[0], self.params["value"])
        if self.kind == "gbstumps":
            eta = np.full(X.shape[0], self.params["f0"])
            rate = self.params["learning_rate"]
            for s in self.params["stumps"]:
                eta += rate * np.where(
                    X[:, s.feature] <= s.threshold, s.left_value, s.right_value)
            return eta
        raise ConfigError(f"unknown learner kind {self.kind!r}")

    def predict(self, X) -> np.ndarray:
        eta = self.linear_predictor(X)
        if self.family == "binomial":
            return clip_probability(expit(eta))
        return eta


def _solve_spd(H: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve Hx = b for symmetric positive definite H; Cholesky failure is
    how rank deficiency surfaces."""
    try:
        L = np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        raise FitError("collinear design") from None
    return np.linalg.solve(L.T, np.linalg.solve(L, b))


def fit_glm(X, y, family: str, case_weights=None) -> FittedLearner:
    """Generalized linear model: weighted least squares for gaussian, IRLS
    for binomial. The intercept is always included."""
    X, y = _check_xy(X, y)
    _check_family(family, y)
    n = X.shape[0]
    if case_weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(case_weights, dtype=float).ravel()
        if w.shape[0] != n:
            raise ConfigError("case_weights length mismatch")
        if (w < 0).any() or not np.isfinite(w).all():
            raise ConfigError("case_weights must be finite and nonnegative")
    Xd = np.hstack([np.ones((n, 1)), X])

    if family == "gaussian":
        XtW = Xd.T * w
        beta = _solve_spd(XtW @ Xd, XtW @ y)
    else:
        beta = np.zeros(Xd.shape[1])
        for _ in range(IRLS_MAX_ITER):
            p = expit(Xd @ beta)
            score = Xd.T @ (w * (y - p))
            if np.max(np.abs(score)) < IRLS_TOL:
                break
            # weights may underflow under separation; keep the Hessian
            # nonzero so the norm check below gets to fire
            irls_w = np.maximum(w * p * (1.0 - p), 1e-300)
            beta = beta + _solve_spd((Xd.T * irls_w) @ Xd, score)
            if np.max(np.abs(beta)) > SEPARATION_NORM:
                raise FitError("separation suspected")
        else:
            raise FitError(
                f"no IRLS convergence in {IRLS_MAX_ITER} iterations")

    return FittedLearner(
        kind="glm", family=family,
        params={"intercept": float(beta[0]), "slopes": beta[1:].copy()},
    )


def fit_mean(y, family: str) -> FittedLearner:
    """Constant-only model: the sample mean (on the link scale for binomial)."""
    y = np.asarray(y, dtype=float).ravel()
    _check_family(family, y)
    m = float(np.mean(y))
    value = float(logit(clip_probability(np.asarray(m)))) \
        if family == "binomial" else m
    return FittedLearner(kind="mean", family=family, params={"value": value})


def _standardize(X: np.ndarray):
    mean = X.mean(axis=0)
    sd = X.std(axis=0)
    live = sd > 0
    safe_sd = np.where(live, sd, 1.0)
    return (X - mean) / safe_sd, mean, safe_sd, live


def _soft_threshold(z: float, gamma: float) -> float:
    if z > gamma:
        return z - gamma
    if z < -gamma:
        return z + gamma
    return 0.0


def _cd_gaussian(Z, y, lam, beta, live, max_pass=100000):
    """Cyclic coordinate descent on (1/2n)||y - b0 - Zb||^2 + lam*||b||_1
    with Z standardized, so every coordinate Hessian is 1."""
    n = Z.shape[0]
    b0 = float(y.mean())
    r = y - b0 - Z @ beta
    cols = np.flatnonzero(live)
    for _ in range(max_pass):
        delta = 0.0
        for j in cols:
            old = beta[j]
            rho = (Z[:, j] @ r) / n + old
            new = _soft_threshold(rho, lam)
            if new != old:
                r += Z[:, j] * (old - new)
                beta[j] = new
                delta = max(delta, abs(new - old))
        if delta < CD_TOL:
            break
    return b0, beta

def _cd_binomial(Z, y, lam, b0, beta, live, max_outer=100):
    """Penalized IRLS: quadratic approximation around the current fit, then
    weighted coordinate descent on the working response."""
    n = Z.shape[0]
    cols = np.flatnonzero(live)
    for _ in range(max_outer):
        eta = b0 + Z @ beta
        p = expit(eta)
        w = np.maximum(p * (1.0 - p), 1e-6)
        z = eta + (y - p) / w
        r = z - b0 - Z @ beta
        outer_delta = 0.0
        for _ in range(1000):
            delta = 0.0
            old0 = b0
            b0 = float(np.sum(w * (r + b0)) / np.sum(w))
            r += old0 - b0
            delta = max(delta, abs(b0 - old0))
            for j in cols:
                old = beta[j]
                zj = Z[:, j]
                num = np.sum(w * zj * (r + zj * old)) / n
                den = np.sum(w * zj * zj) / n
                new = _soft_threshold(num, lam) / den
                if new != old:
                    r += zj * (old - new)
                    beta[j] = new
                    delta = max(delta, abs(new - old))
            outer_delta = max(outer_delta, delta)
            if delta < CD_TOL:
                break
        if outer_delta < CD_TOL:
            break
    return b0, beta


def fit_lasso(X, y, family: str, lam: float) -> FittedLearner:
    """L1-penalized regression by cyclic coordinate descent. Covariates are
    standardized internally, the intercept is unpenalized, and reported
    coefficients are on the original scale."""
    if lam < 0:
        raise ConfigError("negative lambda")
    X, y = _check_xy(X, y)
    _check_family(family, y)
    Z, mean, sd, live = _standardize(X)
    beta = np.zeros(X.shape[1])
    if family == "gaussian":
        b0, beta = _cd_gaussian(Z, y, lam, beta, live)
    else:
        start = float(logit(clip_probability(np.asarray(y.mean()))))
        b0, beta = _cd_binomial(Z, y, lam, start, beta, live)
    slopes = beta / sd
    intercept = b0 - float(np.sum(beta * mean / sd))
    return FittedLearner(
        kind="lasso", family=family,
        params={"intercept": intercept, "slopes": slopes, "lambda": float(lam)},
    )


def lasso_lambda_grid(X, y, family: str) -> np.ndarray:
    """Geometric grid from lambda_max (all slopes zero) down three decades."""
    X, y = _check_xy(X, y)
    Z, _, _, live = _standardize(X)
    if not live.any():
        return np.zeros(1)
    null_resid = y - y.mean()
    # per-column dots, same kernel as the coordinate-descent loop, so the
    # full-shrinkage property at lambda_max holds bit-exactly
    n = len(y)
    lam_max = max(abs(float(Z[:, j] @ null_resid)) / n
                  for j in np.flatnonzero(live))
    if lam_max <= 0:
        return np.zeros(1)
    return np.geomspace(lam_max, lam_max / LASSO_GRID_SPAN, LASSO_GRID_SIZE)


def select_lasso_lambda(X, y, family: str, k: int = 5, seed: int = 0) -> float:
    """Pick lambda from the default grid by k-fold CV risk (squared error;
    on the probability scale for binomial). Ties go to the larger lambda."""
    X, y = _check_xy(X, y)
    grid = lasso_lambda_grid(X, y, family)
    if len(grid) == 1:
        return float(grid[0])
    n = X.shape[0]
    folds = kfold_assign(n, min(k, n), seed)
    risks = np.zeros(len(grid))
    for f in range(folds.k):
        test = folds.fold_of == f
        train = ~test
        for i, lam in enumerate(grid):
            fit = fit_lasso(X[train], y[train], family, lam)
            pred = fit.predict(X[test])
            risks[i] += float(np.sum((y[test] - pred) ** 2))
    return float(grid[int(np.argmin(risks / n))])


def fit_gbstumps(X, y, family: str, rounds: int = 200,
                 learning_rate: float = 0.1, seed: int = 0) -> FittedLearner:
    """Gradient boosting of depth-1 trees. Splits are chosen by exhaustive
    scan over midpoints of consecutive distinct feature values, maximizing
    the standard second-order gain; leaf values are Newton steps (plain
    means for gaussian)."""
    if rounds < 0:
        raise ConfigError("rounds must be nonnegative")
    if not 0 < learning_rate <= 1:
        raise ConfigError("learning_rate must be in (0, 1]")
    X, y = _check_xy(X, y)
    _check_family(family, y)
    n, p = X.shape

    if family == "binomial":
        f0 = float(logit(clip_probability(np.asarray(y.mean()))))
    else:
        f0 = float(y.mean())
    F = np.full(n, f0)
    order = [np.argsort(X[:, j], kind="stable") for j in range(p)]
    stumps = []
    for _ in range(rounds):
        if family == "binomial":
            prob = expit(F)
            g = y - prob
            h = prob * (1.0 - prob)
        else:
            g = y - F
            h = np.ones(n)
        g_total = float(g.sum())
        h_total = float(h.sum())
        best = None  # (gain, feature, threshold, gl, hl)
        for j in range(p):
            idx = order[j]
            xs = X[idx, j]
            gcum = np.cumsum(g[idx])
            hcum = np.cumsum(h[idx])
            splittable = np.flatnonzero(xs[:-1] < xs[1:])
            for i in splittable:
                gl, hl = gcum[i], hcum[i]
                gr, hr = g_total - gl, h_total - hl
                gain = gl * gl / max(hl, 1e-12) + gr * gr / max(hr, 1e-12)
                if best is None or gain > best[0] + 1e-15:
                    best = (gain, j, (xs[i] + xs[i + 1]) / 2.0, gl, hl)
        if best is None:
            # no feature splits: a constant Newton adjustment
            value = g_total / max(h_total, 1e-12)
            stump = Stump(0, np.inf, value, value)
        else:
            _, j, thr, gl, hl = best
            stump = Stump(
                j, float(thr),
                gl / max(hl, 1e-12),
                (g_total - gl) / max(h_total - hl, 1e-12),
            )
        F += learning_rate * np.where(
            X[:, stump.feature] <= stump.threshold,
            stump.left_value, stump.right_value)
        stumps.append(stump)
    return FittedLearner(
        kind="gbstumps", family=family,
        params={"f0": f0, "learning_rate": float(learning_rate),
                "stumps": stumps, "rounds": int(rounds), "seed": int(seed)},
    )


def nnls(Z, y, tol: float = 1e-8) -> np.ndarray:
    """Nonnegative least squares, Lawson-Hanson active set: minimize
    ||Zw - y||^2 subject to w >= 0, to KKT gradient tolerance ``tol``."""
    Z = _as_matrix(Z)
    y = np.asarray(y, dtype=float).ravel()
    if Z.shape[0] != y.shape[0]:
        raise ConfigError("nnls shape mismatch")
    m = Z.shape[1]
    w = np.zeros(m)
    passive = np.zeros(m, dtype=bool)
    for _ in range(30 * m + 30):
        grad = Z.T @ (y - Z @ w)
        active = np.flatnonzero(~passive)
        if active.size == 0 or np.max(grad[active]) <= tol:
            break
        passive[active[int(np.argmax(grad[active]))]] = True
        while True:
            cols = np.flatnonzero(passive)
            s, *_ = np.linalg.lstsq(Z[:, cols], y, rcond=None)
            if (s > 0).all():
                w[:] = 0.0
                w[cols] = s
                break
            current = w[cols]
            shrink = s <= 0
            alpha = np.min(current[shrink] / (current[shrink] - s[shrink]))
            moved = current + alpha * (s - current)
            moved[moved < 1e-14] = 0.0
            w[:] = 0.0
            w[cols] = moved
            passive[cols] = moved > 0
    return w


@dataclass(frozen=True)
class FoldAssignment:
    """Seeded balanced k-fold split."""

    fold_of: np.ndarray
    k: int
    seed: int


def kfold_assign(n: int, k: int, seed: int) -> FoldAssignment:
    """Uniform shuffle then round-robin: fold sizes differ by at most 1."""
    if k < 2:
        raise ConfigError("k must be at least 2")
    if k > n:
        raise ConfigError(f"k={k} exceeds n={n}")
    perm = np.random.default_rng(seed).permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % k
    return FoldAssignment(fold_of=fold_of, k=k, seed=seed)


@dataclass(frozen=True)
class LearnerSpec:
    """One entry of the ensemble library: a kind tag plus hyperparameters."""

    kind: str
    hyperparameters: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {"kind": self.kind, "hyperparameters": dict(self.hyperparameters)}

    @classmethod
    def from_json_dict(cls, d: dict) -> "LearnerSpec":
        if not isinstance(d, dict) or "kind" not in d:
            raise ConfigError("learner spec must be an object with a 'kind'")
        return cls(kind=d["kind"], hyperparameters=dict(d.get("hyperparameters") or {}))


def default_library() -> list:
    """GLM, CV-selected lasso, and boosted stumps."""
    return [
        LearnerSpec("glm"),
        LearnerSpec("lasso", {"lambda": None}),
        LearnerSpec("gbstumps", {"rounds": 200, "learning_rate": 0.1}),
    ]


def _make_fitter(spec: LearnerSpec, family: str, seed: int):
    hp = spec.hyperparameters or {}
    if spec.kind == "glm":
        return lambda X, y: fit_glm(X, y, family)
    if spec.kind == "mean":
        return lambda X, y: fit_mean(y, family)
    if spec.kind == "lasso":
        lam = hp.get("lambda")
        if lam is None:
            def fit(X, y):
                chosen = select_lasso_lambda(X, y, family, seed=seed)
                return fit_lasso(X, y, family, chosen)
            return fit
        return lambda X, y: fit_lasso(X, y, family, float(lam))
    if spec.kind == "gbstumps":
        rounds = int(hp.get("rounds", 200))
        rate = float(hp.get("learning_rate", 0.1))
        return lambda X, y: fit_gbstumps(
            X, y, family, rounds=rounds, learning_rate=rate, seed=seed)
    raise ConfigError(f"unknown learner kind {spec.kind!r}")


def spec_labels(library) -> list:
    """Stable display names; duplicate kinds get a positional suffix."""
    kinds = [s.kind for s in library]
    labels = []
    for i, kind in enumerate(kinds):
        if kinds.count(kind) > 1:
            labels.append(f"{kind}#{kinds[:i].count(kind) + 1}")
        else:
            labels.append(kind)
    return labels


def stack_risk(y: np.ndarray, pred: np.ndarray) -> float:
    """Stacking risk: mean squared error (on probabilities for binomial)."""
    return float(np.mean((y - pred) ** 2))


@dataclass
class EnsembleFit:
    """NNLS-stacked SuperLearner over a library of base learners."""

    base_fits: list
    labels: list
    weights: np.ndarray
    cv_risks: np.ndarray
    meta_risk: float
    family: str
    k: int
    seed: int
    warnings: list = field(default_factory=list)

    def predict(self, X) -> np.ndarray:
        X = _as_matrix(X)
        out = np.zeros(X.shape[0])
        for weight, fit in zip(self.weights, self.base_fits):
            if weight > 0:
                out += weight * fit.predict(X)
        if self.family == "binomial":
            return clip_probability(out)
        return out


def fit_superlearner(X, y, family: str, library=None, k: int = 5,
                     seed: int = 0) -> EnsembleFit:
    """Stacked ensemble: out-of-fold prediction matrix, NNLS of the response
    on it, weights normalized to sum 1, base learners refit on full data.

    A learner that fails on any fold is dropped (weight 0, warning recorded);
    if every learner fails the whole fit fails. If the normalized blend does
    not beat the best single learner's CV risk, the weight vector falls back
    to that single learner so the stack never underperforms its best member.
    """
    X, y = _check_xy(X, y)
    _check_family(family, y)
    if library is None:
        library = default_library()
    library = list(library)
    if not library:
        raise ConfigError("empty learner library")
    n = X.shape[0]
    folds = kfold_assign(n, k, seed)
    labels = spec_labels(library)
    fitters = [_make_fitter(spec, family, seed) for spec in library]

    Z = np.zeros((n, len(library)))
    failures = {}
    warnings = []
    for i, (label, fitter) in enumerate(zip(labels, fitters)):
        try:
            for f in range(folds.k):
                test = folds.fold_of == f
                fit = fitter(X[~test], y[~test])
                Z[test, i] = fit.predict(X[test])
        except Exception as exc:  # noqa: BLE001 - any learner failure drops it
            failures[label] = f"{type(exc).__name__}: {exc}"

    alive = [i for i in range(len(library)) if labels[i] not in failures]
    if not alive:
        details = "; ".join(f"{k}: {v}" for k, v in sorted(failures.items()))
        raise FitError(f"every base learner failed: {details}")
    for label in sorted(failures):
        warnings.append(f"learner {label} dropped: {failures[label]}")

    Zs = Z[:, alive]
    cv_risks = np.array([stack_risk(y, Zs[:, j]) for j in range(len(alive))])
    raw = nnls(Zs, y)
    total = raw.sum()
    if total > 0:
        weights = raw / total
    else:
        weights = np.full(len(alive), 1.0 / len(alive))
        warnings.append("all-zero NNLS solution; falling back to uniform weights")
    meta_risk = stack_risk(y, Zs @ weights)
    best = int(np.argmin(cv_risks))
    if meta_risk > cv_risks[best]:
        weights = np.zeros(len(alive))
        weights[best] = 1.0
        meta_risk = float(cv_risks[best])
        warnings.append(
            f"normalized blend underperformed {labels[alive[best]]}; "
            "using that learner alone")

    base_fits = [fitters[i](X, y) for i in alive]
    return EnsembleFit(
        base_fits=base_fits,
        labels=[labels[i] for i in alive],
        weights=weights,
        cv_risks=cv_risks,
        meta_risk=float(meta_risk),
        family=family,
        k=folds.k,
        seed=seed,
        warnings=warnings,
    )
