"""Three-velocity ballistic annihilation with clustered blockades:
exact resolver, closed-form phase-transition analytics, and Monte Carlo
verification."""

__version__ = "0.1.0"

from .laws import (ClusterLaw, CustomPmf, Delta, Geometric, LawError,
                   PowerLaw, TwoPoint, parse_law)
from .configs import (Configuration, ExperimentParams, ExponentialSpacing,
                      UniformSpacing, parse_spacing, sample_config,
                      sub_config, trial_rng)
from .resolver import (CollisionRecord, Outcome, TieError, collision_time,
                       first_particle_fate, origin_visited_by_left, resolve,
                       resolve_naive, surviving_counts, W_statistic)
from .analytics import (AnalyticCurve, F_of_v, pc, q_geometric_closed,
                        r_formula, recursion_residual, rk_formula, s_formula,
                        sk_formula, solve_q, tabulate_curve, theta_from_q)
from .estimators import (EstimateReport, SRReport, estimate_arrival_symmetry,
                         estimate_q, estimate_sr, estimate_theta,
                         estimate_W_curve, wilson_ci)
from .diagram import render_svg
