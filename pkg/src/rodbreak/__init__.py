"""Wave-breaking criteria and numerics for the hyperelastic rod equation."""

from .params import DomainError, RodParameters, beta_extended_of, beta_of, delta_of, extremal_root_of
from .field import Grid, GridFunction, InvariantReport, NonSmoothDataError
from .profiles import ProfileSpec, ResolutionError, build_profile
from .criteria import BlowupBound, CriterionVerdict, PreconditionError, blowup_bound, run_battery
from .solver import NumericalFailure, SimulationConfig, SimulationResult, run
from .characteristics import CharacteristicTrace, SparseFramesError, integrate_flow, integrate_flows

__version__ = "0.1.0"
