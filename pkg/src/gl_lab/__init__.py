"""Group Lasso (l1/l2) row selection for multivariate regression.

Estimation by block coordinate descent, the sparsity-overlap sample
complexity theory, a primal-dual witness verifier and Monte Carlo
phase-transition experiments.
"""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .linalg import block_norm, cholesky, linf_operator_norm, solve_spd, spectral_norm
from .theory import (SupportSet, TheoryReport, bmin, ordinary_lasso_complexity, psi_bounds,
                     psi_two_by_two, sample_complexity_theta, sparsity_overlap, zeta)
from .ensembles import (AssumptionReport, EnsembleSpec, assemble_observations, check_assumptions,
                        make_coefficients, sample_design, sample_noise)
from .solver import (Solution, SolverConfig, group_lasso, kkt_residual, lasso_union_rows,
                     restricted_group_lasso, support)
from .witness import WitnessReport, construct_witness, m_matrix, zeta_perturbation_check
from .experiments import (SweepResult, SweepSpec, chi2_tail_check, estimate_theta50,
                          lambda_from_rule, run_trial, sweep_theta)
