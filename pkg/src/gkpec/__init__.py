"""Design and evaluation of GKP-stabilized Gaussian codes on noisy channels.

The package covers the full pipeline: reducing a correlated Gaussian channel
to independent effective noise channels, propagating exact residual-noise
mixtures through layered two-mode codes, optimizing gains and stack
orderings, and scoring the result against capacity bounds, Monte Carlo
sampling, and transmission fidelity.
"""

__version__ = "0.1.0"

from .gaussian import (GaussianChannel, awgn_channel, awgn_product,
                       channel_from_amp, channel_from_loss, compose,
                       identity_channel, omega, random_symplectic, tensor)
from .mixtures import (GaussianMixture1D, ROOT_2PI, average_std, bin_index,
                       gkp_bin_coeff, modular_reduce, prune)
from .codes import (SrLayerParams, TmsLayerParams, correct_quadratures,
                    layer_params, preferred_order, sr_balanced_kappa,
                    sr_symplectic, tms_asymptotic_optimum, tms_symplectic,
                    two_mode_average_std)
from .concat import (CodePlan, EvalReport, asymptotic_recursion,
                     evaluate_plan, plan_sigma, three_mode_explicit, upsilon)
from .reduction import (IrreducibleChannelError, ReductionResult,
                        random_channel, reduce_channel, verify_reduction,
                        williamson)
from .memory import (memory_full_channel, memory_matrix, memory_sigmas,
                     memory_sigmas_asymptotic, usable_modes)
from .analysis import (capacity_lower_bound, contour_grid, db_to_r,
                       fidelity_gaussian_approx, fidelity_no_qec,
                       fidelity_with_qec, threshold_diagonal,
                       two_mode_optimum)
from .optimize import (optimize_full, optimize_gains_global,
                       optimize_gains_greedy, sample_generator)
from .montecarlo import mc_fidelity, mc_residual, pit_chi2
