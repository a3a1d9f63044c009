"""Monotone Green's-function integration pricer for American options on two
assets under the bivariate Merton jump-diffusion model."""
from .convolve import EmbedMode, convolve_direct, convolve_step, plan
from .harness import CASES, comprehensive_table, convergence_study, domain_study
from .kernel import (KernelArray, TruncationError, build_kernel, eval_series_term,
                     fourier_symbol, kernel_mass, select_truncation_K)
from .model import (GridSpec, ModelParams, Payoff, PayoffKind, build_grid,
                    payoff_eval, trapezoid_weights, validate)
from .pricer import Mode, PriceResult, exercise_region, price, value_at

__all__ = [
    "CASES", "EmbedMode", "GridSpec", "KernelArray", "Mode", "ModelParams", "Payoff",
    "PayoffKind", "PriceResult", "TruncationError", "build_grid", "build_kernel",
    "comprehensive_table", "convergence_study", "convolve_direct", "convolve_step",
    "domain_study", "eval_series_term", "exercise_region", "fourier_symbol",
    "kernel_mass", "payoff_eval", "plan", "price", "select_truncation_K",
    "trapezoid_weights", "validate", "value_at",
]
