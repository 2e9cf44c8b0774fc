"""Grid-based calculus of alpha-concave functions, their mean width, and inequality checks."""
from .alphacore import (AlphaDomainError, AlphaFn, AlphaParam, alpha_scale, alpha_sum, base,
                        convex_combination, is_alpha_concave, make_G_alpha, support_function, unbase)
from .extgrid import CONVEX, MASS, GridError, GridFn, GridSpec, gradient_central, integrate, sample
from .inequalities import (CheckReport, ParameterRangeError, check_bbl, check_gaussian_poincare,
                           check_poincare, check_urysohn, check_variation_formulas, urysohn_rhs)
from .lft import convex_envelope, inf_convolve, legendre, sup_convolve
from .meanwidth import (WidthDomainError, WidthResult, integral_G_alpha, log_gamma, mean_width_limit,
                        mean_width_repr, weight_kernel)

__all__ = [
    "AlphaDomainError", "AlphaFn", "AlphaParam", "CONVEX", "CheckReport", "GridError", "GridFn",
    "GridSpec", "MASS", "ParameterRangeError", "WidthDomainError", "WidthResult", "alpha_scale",
    "alpha_sum", "base", "check_bbl", "check_gaussian_poincare", "check_poincare", "check_urysohn",
    "check_variation_formulas", "convex_combination", "convex_envelope", "gradient_central",
    "inf_convolve", "integral_G_alpha", "integrate", "is_alpha_concave", "legendre", "log_gamma",
    "make_G_alpha", "mean_width_limit", "mean_width_repr", "sample", "sup_convolve",
    "support_function", "unbase", "urysohn_rhs", "weight_kernel",
]
