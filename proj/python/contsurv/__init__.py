"""Counterfactual survival surfaces for a continuous exposure."""

from ._core import (
    ContsurvError,
    CoxFit,
    Dataset,
    Scenario,
    Surface,
    __version__,
    bootstrap_survival,
    contrast,
    counterfactual_surface,
    fit_cox,
    kaplan_meier,
    landmark,
    martingale_residuals,
    null_martingale_residuals,
    quantile_curve,
    render,
    rmst_curve,
    schoenfeld_residuals,
    simulate,
    true_surface,
    true_survival,
)

__all__ = [
    "ContsurvError",
    "CoxFit",
    "Dataset",
    "Scenario",
    "Surface",
    "bootstrap_survival",
    "contrast",
    "counterfactual_surface",
    "fit_cox",
    "kaplan_meier",
    "landmark",
    "martingale_residuals",
    "null_martingale_residuals",
    "quantile_curve",
    "render",
    "rmst_curve",
    "schoenfeld_residuals",
    "simulate",
    "true_surface",
    "true_survival",
]
