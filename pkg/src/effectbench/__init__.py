"""effectbench: a treatment-effect estimation workbench.

Doubly-robust (TMLE) and inverse-probability-weighted estimators for binary
and continuous outcomes, weighted Kaplan-Meier and Cox models for survival,
cross-validated model diagnostics, and a small HTTP service plus CLI that
drive the whole pipeline.
"""

__version__ = "0.1.0"
