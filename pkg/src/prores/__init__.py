"""Proportional response dynamics in CES Fisher markets: update rules, the
market potential, an equilibrium oracle, and rate certificates that check
every convergence guarantee against simulated trajectories."""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bregman import (
    EntropyKernel,
    StrongConvexityEstimate,
    entropic_md_step,
    kl,
    numeric_argmin_oracle,
    strong_bregman_probe,
)
from .dynamics import (
    DynamicsConfig,
    Rule,
    TraceRecord,
    damped_pr_step,
    generalized_pr_step,
    pr_complements_step,
    pr_step,
    pr_substitutes_step,
    run,
    simulate,
)
from .eg import dominance_check, eg_dual, eg_objective
from .equilibrium import EquilibriumCertificate, solve, verify
from .market import (
    Buyer,
    MarketInstance,
    UtilityKind,
    best_response_spending,
    generate_random,
    load_market,
    prices,
    save_market,
    uniform_spending,
    utility_value,
    validate,
)
from .potential import PotentialValue, grad_phi, phi, phi_gap, sandwich_gap
from .rates import RateCertificate, certify

__version__ = "0.1.0"

__all__ = [
    "Buyer", "DynamicsConfig", "EntropyKernel", "EquilibriumCertificate",
    "KERNEL_BACKEND", "MarketInstance", "PotentialValue", "RateCertificate",
    "Rule", "StrongConvexityEstimate", "TraceRecord", "UtilityKind",
    "best_response_spending", "certify", "damped_pr_step", "dominance_check",
    "eg_dual", "eg_objective", "entropic_md_step", "generalized_pr_step",
    "generate_random", "grad_phi", "kl", "load_market", "numeric_argmin_oracle",
    "phi", "phi_gap", "pr_complements_step", "pr_step", "pr_substitutes_step",
    "prices", "run", "sandwich_gap", "save_market", "simulate", "solve",
    "strong_bregman_probe", "uniform_spending", "utility_value", "validate",
    "verify",
]
