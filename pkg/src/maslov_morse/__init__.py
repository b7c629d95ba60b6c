"""Morse indices of matrix Schrodinger operators on [0, 1] via the Maslov index."""

from .boundary import (BKDecomposition, BottomShelfData, BoundaryPair, Side, TargetData, bk_decompose,
                       bottom_shelf, normalize_pair, target_data, validate_pair)
from .maslov import (CrossingEvent, PathSegment, PhasePath, SegmentKind, eigen_phases, locate_crossings,
                     maslov_box, match_phases, omega_lambda, omega_s, spectral_flow, wtilde)
from .morse import (MorseReport, count_below, lambda_infty, morse_count, morse_via_gamma3, morse_via_theorem,
                    perturbation_prediction)
from .problem import Problem, Settings
from .shooting import Frame, Potential, dirichlet_kernel_count, integrate_frame, lagrangian_defect, system_matrix

__version__ = "0.1.0"
