"""pdmph: position-dependent-mass non-Hermitian Hamiltonians from generating
functions, with quantitative verification of their operator identities.

The package builds, on uniform grids with 4th-order finite differences:

  * mass profiles m(x), the kinetic weight U = (2m)^(-1/2) and the mass
    integral mu(x) with derivatives (``profiles``),
  * catalog and custom generating-function systems: companion function f,
    complex potential V, mass-free effective potential, ground-state pair
    (psi, xi) and the unit-modulus gauge factor (``pipeline``),
  * dense realizations of the first-order operators, the metric, the
    Hamiltonian and its adjoint, parity metrics and the antilinear
    similarity (``operators``),
  * residual checks with grid-refinement convergence orders, dense spectra
    and metric-weighted Gram structure (``verify``),
  * deterministic machine-readable reports and a CLI (``report``, ``cli``).
"""

__version__ = "0.1.0"

from .errors import (BudgetExceededError, CheckFailureError, ConfigError,
                     DomainViolationError, EigensolverError,
                     GeneratingFunctionZeroError, IOFormatError,
                     InvalidDomainError, NonpositiveMassError, PdmphError)
from .grid import (Grid, GridFunction, cumint, cumulative_integral,
                   diff_matrix, make_grid, observed_order)
from .profiles import MassProfile, ProfileBundle, eval_profile
from .pipeline import (CATALOG, FAMILIES, DressedSystem, GeneratingSpec,
                       assemble_potential, catalog_rows, compute_f,
                       compute_f_eq33, effective_potential, ground_state,
                       make_family, printed_potential, to_csv)
from .operators import (CoefficientSet, OperatorMatrix, build_d,
                        build_d_dagger, build_d_tilde, build_d_tilde_dagger,
                        build_eta_parity, build_eta_tilde,
                        build_eta_tilde_block, build_h_prime,
                        build_h_prime_block, build_h_prime_dagger,
                        build_parity, default_probes, dirichlet_block,
                        export_matrix, import_matrix, tau_similarity_residual)
from .verify import (CheckResult, OperatorInputs, SpectralResult,
                     SystemBuilder, apply_corruption, check_eq25, check_eq26,
                     check_eq29, check_eta, check_gauge_equivalence,
                     check_groundstate, check_intertwining, check_parity_eta,
                     check_spectrum, check_tau, eigendecompose, residual_eq28,
                     residual_trace, run_suite)
from .report import emit_json, payload_bytes, resolve_config, write_report
