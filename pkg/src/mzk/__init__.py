"""Numerical laboratory for a coupled Schrodinger / acoustic wave system.

Two complex envelopes E1, E2 evolve under a cubic magnetic cross coupling
of strength eta > 0, driven by an acoustic density n and velocity v on a
doubly periodic box.  The package provides the spectral field algebra, the
radial ground state of the associated scalar equation, a Strang-split
integrator, explicit self-similar blowing-up solutions, the energy-norm
rescaling frame, and blow-up rate analysis, with a CLI in mzk.cli.
"""

from .errors import (AccuracyError, BlowUpReached, BoundaryMassWarning,
                     ConfigError, DegenerateStateError, DomainError,
                     FitFailure, GridMismatchError, InvalidFieldError,
                     MzkError, ResolutionWarning, SolverFailure)
from .fields import (ComplexField2D, Grid2D, RealField2D, SystemState,
                     VectorField2D, boundary_mass_fraction, dealias,
                     divergence, gradient, gradient_norm_sq, l2_norm_sq,
                     l4_norm_4, laplacian, read_checkpoint,
                     smooth_random_field, spectral_derivative,
                     state_from_arrays, vector_l2_norm_sq, write_checkpoint)
from .groundstate import (GNCheck, PohozaevResult, RadialProfile,
                          ThresholdWindow, gn_check, ode_residual,
                          pohozaev_check, profile_gradient_norm_sq,
                          profile_l4, profile_mass, profile_to_grid,
                          radial_integral, solve_Q, threshold_window)
from .dynamics import (ConservedQuantities, StepperConfig, Trajectory,
                       band_energy_fraction, conserved_quantities,
                       energy_seminorm, hamiltonian, mass, residual,
                       residual_norms, run, schrodinger_phase_ratio, step)
from .selfsimilar import (ExplicitSolution, ProfilePair, ScalingReport,
                          evaluate, limit_profile, scaling_check,
                          seeded_profile, solve_profile, time_derivatives_of)
from .rescale import (RescaledState, lambda_of, rescale_state,
                      rescaled_residual, rescaled_window)
from .analysis import (Classification, LowerBoundVerdict, RateFit,
                       check_lower_bound, classify_initial_data, fit_rate,
                       sobolev_ratio_monitor)
from .config import RunConfig, build_initial_state, parse_config
from .parallel import worker_count

__version__ = "0.1.0"
