"""Regularization of linear inverse problems by diagonal frame decomposition."""

from .analysis import (DensityReport, delta_star, density_check, empirical_worst_case,
                       log_lower_bound_reference, lower_bound)
from .bench import ExperimentConfig, RateTable, emit_outputs, make_source_truth, run_experiment
from .dfd import (DfdSystem, ForwardOperator, MultiplierOperator, NoisyData, PicardDivergenceError,
                  add_noise, diagonal_system, picard_solve, regularize, stable_pseudoinverse_bound,
                  verify_dfd)
from .filters import (Filter, check_assumption_A2, check_assumption_B, check_assumption_C,
                      parse_filter, spectral_cutoff, tikhonov)
from .frames import (CoeffSeq, DualFrameError, Frame, FrameBoundError, IndexMismatchError, IndexSet,
                     analysis, dual_apply, estimate_frame_bounds, frame_operator_apply, synthesis)
from .grid import Grid, GridFunction, GridMismatchError, sobolev_norm
from .heat import HeatOperator, MeyerWavelet, NyquistError, build_band_dfd, build_wvd
from .mittag_leffler import mittag_leffler_neg
from .param import (MorozovBracketError, MorozovConfig, MorozovSolvabilityError, a_priori_alpha,
                    discrepancy, morozov_solve, posterior_error_bound, prior_error_bound)
from .source import DomainError, IndexFunction, Log, Poly, SourceSet, parse_phi, source_norm

__version__ = "0.1.0"
