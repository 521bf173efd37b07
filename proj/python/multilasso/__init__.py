"""Penalized estimation for multi-combination and hidden-covariate models.

Thin wrapper over the C++ core: bound evaluators, the box-constrained l1
solver, design diagnostics, and the hidden-model enumeration routines.
"""

try:
    # wheel layout: the extension is installed inside the package
    from ._multilasso import (  # noqa: F401
        beta,
        hidden_constants,
        hidden_loglik,
        hidden_spec_uniform,
        kappa_RE,
        lasso_error_bound,
        lasso_tuning,
        massart_bound,
        mean_max_bound,
        prop_hidden_error,
        prox_l1_box,
        rho,
        sample_hidden,
        sample_multinomial_responses,
        sigma_Xl,
        solve_multinomial_lasso,
        tilted_law,
        verify_massart,
    )
except ImportError:  # in-tree build: module sits next to the package
    from _multilasso import (  # noqa: F401
        beta,
        hidden_constants,
        hidden_loglik,
        hidden_spec_uniform,
        kappa_RE,
        lasso_error_bound,
        lasso_tuning,
        massart_bound,
        mean_max_bound,
        prop_hidden_error,
        prox_l1_box,
        rho,
        sample_hidden,
        sample_multinomial_responses,
        sigma_Xl,
        solve_multinomial_lasso,
        tilted_law,
        verify_massart,
    )

__all__ = [
    "beta",
    "hidden_constants",
    "hidden_loglik",
    "hidden_spec_uniform",
    "kappa_RE",
    "lasso_error_bound",
    "lasso_tuning",
    "massart_bound",
    "mean_max_bound",
    "prop_hidden_error",
    "prox_l1_box",
    "rho",
    "sample_hidden",
    "sample_multinomial_responses",
    "sigma_Xl",
    "solve_multinomial_lasso",
    "tilted_law",
    "verify_massart",
]
