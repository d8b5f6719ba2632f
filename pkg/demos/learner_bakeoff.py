#!/usr/bin/env python3
"""How the SuperLearner splits its weights when the truth is nonlinear.

The outcome surface has a step in it, which a linear model cannot
represent. Boosted stumps can. The stacked ensemble should notice this
from the cross-validated risks and shift weight accordingly; with a
linear truth, the weights should move back to the GLM.
"""

import numpy as np

from effectbench.learners import LearnerSpec, fit_superlearner

rng = np.random.default_rng(3)
n = 3000
X = rng.normal(size=(n, 4))

library = (
    LearnerSpec("glm"),
    LearnerSpec("lasso"),
    LearnerSpec("gbstumps", {"rounds": 150, "learning_rate": 0.1}),
)


def show(tag, y, family):
    fit = fit_superlearner(X, y, family, library=library, k=5, seed=0)
    pairs = ", ".join(f"{lbl}={w:.2f}"
                      for lbl, w in zip(fit.labels, fit.weights))
    print(f"{tag}: {pairs}   (cv risk of blend {fit.meta_risk:.4f})")
    for warning in fit.warnings:
        print(f"  warning: {warning}")


# Step function of x0: invisible to the linear learners.
y_step = (X[:, 0] > 0.5).astype(float) * 1.5 + 0.3 * X[:, 1] \
    + rng.normal(scale=0.5, size=n)
show("step truth     ", y_step, "gaussian")

# Plain linear truth: stumps only add variance here.
y_lin = 1.2 * X[:, 0] - 0.7 * X[:, 2] + rng.normal(scale=0.5, size=n)
show("linear truth   ", y_lin, "gaussian")

# Logistic truth for a binary label.
p = 1.0 / (1.0 + np.exp(-(0.9 * X[:, 0] - 0.9 * X[:, 3])))
y_bin = rng.binomial(1, p).astype(float)
show("logistic truth ", y_bin, "binomial")
