"""Budget-constrained peak minimization for planar control-affine systems.

Synthesizes, simulates and verifies the null-singular-null feedback that
minimizes the peak of the second coordinate under an L1 budget constraint
on the control.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateGradient, DomainError,
                     EmptyRegion, G2Zero, NoBracket, NotInDPlus, OutOfRange,
                     PeakctlError, QuadratureFailure, SingularDelta,
                     StiffnessError)
from .integrate import (EventSpec, Trajectory, event_budget, event_f2_zero,
                        event_leaves_domain, event_y_crosses, integrate,
                        integrate_piecewise)
from .models import (Domain, KolmogorovForm, PlanarModel, State, builtin,
                     delta, from_descriptor, kolmogorov_to_planar,
                     vector_field)
from .nsn import (NSNPolicy, NSNResult, make_policy, nsn_feedback,
                  ridge_feedback, simulate_nsn, singular_control)
from .synthesis import (SynthesisReport, budget_L, budget_curve, solve_ystar,
                        uncontrolled_arc, x_bar, x_h)
from .verify import (CheckReport, ConditionResult, OracleReport,
                     check_assumption2, check_assumption3, check_assumption4,
                     check_green, check_hypotheses5, counterexample,
                     green_flux, oracle_compare)
