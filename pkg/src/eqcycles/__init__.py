"""Equilibria, scalar reduction and limit-cycle certificates for the planar
2n-fold symmetric family dz/dt = p z^(n-1) zbar^(n-2) + s z^n zbar^(n-1) - zbar^(2n-1).

Every closed-form result exposed here is cross-checked in the test suite by
an independent brute-force route (grid-Newton roots, dense sign sampling,
adaptive quadrature, direct integration).
"""

from .errors import (AnalysisError, NoBracket, NoReturn, NotAnEquilibrium,
                     NotOnStratum, OnSingularSet, RequiresS2, SectionTangency,
                     StepFailure, TransversalityFailed, ValidityWarning,
                     ZeroP, ZeroP2)
from .field import (CartesianPoint, Params, PolarState, cartesian_to_polar,
                    divergence, equivariance_residual, eval_field, eval_phi,
                    eval_polar, hamiltonian_value, is_hamiltonian,
                    polar_to_cartesian, polar_velocity_to_cartesian,
                    set_max_symmetry_order)
from .equilibria import (Equilibrium, EquilibriumCount, QuadraticFormValue,
                         all_equilibria, classify_equilibrium,
                         count_equilibria, jacobian, quadratic_form,
                         quadratic_form_expanded, saddle_node_lambda2,
                         solve_fundamental_equilibria, t_plus_minus)
from .abel import (AbelCoefficients, InfinityReport, OriginClassification,
                   SignCertificate, UniquenessCertificate, abel_coefficients,
                   angular_speed_factor, cherkas, cherkas_inverse,
                   classify_infinity, classify_origin,
                   infinity_integral_closed_form, lyapunov_constants,
                   sign_certificate_A, sign_certificate_B,
                   sign_change_criterion_B, uniqueness_certificate,
                   verify_infinity_integral)
from .flow import (LimitCycle, Trajectory, TransversalPolygon,
                   abel_periodic_solutions, abel_shoot,
                   build_transversal_polygon, continue_cycle,
                   default_section_angle, find_limit_cycle, integrate,
                   return_map, search_limit_cycle)
from .oracle import (OracleConfig, oracle_equilibria, oracle_infinity_integral,
                     oracle_sign_change)

__version__ = "0.1.0"
