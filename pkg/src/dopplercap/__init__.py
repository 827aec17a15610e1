"""Capacity bounds for Doppler-impaired OFDM channels modeled as
H = F + s G with a scalar complex Gaussian uncertainty s."""

from .alignment import (AlignmentPrecoder, SchemeConfig, SEstimate,
                        build_precoder, choose_pilot_direction, estimate_s,
                        make_scheme, optimize_scheme, rate_coarse,
                        rate_refined, rate_sa, refined_error_cov,
                        subspace_bases)
from .channel import (ChannelSample, InputCovariance, StructuredChannel,
                      cond_cov_given_s, cond_output_cov, h_y_given_x,
                      output_cov, sample_output)
from .config import CSV_HEADER, ResultRow, SweepSpec
from .duality import (DualityParams, UpperBoundResult, beta_term, gamma_term,
                      small_sigma_bracket, ub_alpha_grid, ub_best, ub_dof,
                      ub_general, ub_logdet)
from .gaussian import (LowerBoundResult, lmmse_error_cov, optimize_qx,
                       r0_matrix, rate_gaussian_linear,
                       rate_gaussian_optimal, waterfilling_capacity)
from .montecarlo import (Estimate, MCConfig, expect_complex_gaussian,
                         gauss_hermite_2d)
from .ofdm import (NTN_TDL_A, DopplerLinearization, MultipathProfile,
                   OFDMConfig, TapSet, build_ntn_channel, draw_taps,
                   full_channel, ici_matrix, linearize, scale_delays)
from .sweep import run_sweep, sweep_to_csv

__version__ = "0.1.0"
