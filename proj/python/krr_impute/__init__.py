"""Kernel ridge regression imputation with linearization variance estimation."""

from krr_impute._core import (
    KrrImputeError,
    KrrModel,
    bernoulli_poly,
    density_ratio_weights,
    fit_krr,
    gaussian_kernel,
    gram,
    impute,
    norm_quantile,
    select_lambda,
    simulate,
    sobolev_kernel,
    true_theta,
)

__all__ = [
    "KrrImputeError",
    "KrrModel",
    "bernoulli_poly",
    "density_ratio_weights",
    "fit_krr",
    "gaussian_kernel",
    "gram",
    "impute",
    "norm_quantile",
    "select_lambda",
    "simulate",
    "sobolev_kernel",
    "true_theta",
]
