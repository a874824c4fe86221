"""Spectral solvers for time-fractional evolution equations."""

from fracspec import kernels
from fracspec.caputo_oracle import (ScalarFODE, TimeGrid, caputo_l1, caputo_l2, default_grading,
                                    rl_integral, solve_scalar_fode)
from fracspec.errors import (AliasingError, BoxEscapeError, FracSpecError, GridMismatchError,
                             InstabilityError, InsufficientSamplesError, NonConvergenceError,
                             NumericalError, ParameterError, PoleError, ResolutionError)
from fracspec.euclidean_multiplier import (LpLqStudy, PeriodizedLine, lp_norm, run_lplq_study,
                                           solve_heat_line)
from fracspec.evolution import (DataNorms, DecayFitResult, EvolutionProblem, SolutionSnapshot,
                                decay_bound, heat_time_derivative, solve, solve_heat, solve_multiterm,
                                solve_wave, verify_decay, wave_time_derivative)
from fracspec.mittag_leffler import (EvalReport, ml_array, ml_multivariate, ml_one, ml_two,
                                     bound_check_one, gamma_real, rgamma)
from fracspec.spectral_operator import (SpectralCoefficients, SpectralOperator, analyze, by_name,
                                        dirichlet_laplacian, harmonic_oscillator, involution_operator,
                                        periodic_laplacian, sobolev_norm, synthesize)

__version__ = "0.1.0"
