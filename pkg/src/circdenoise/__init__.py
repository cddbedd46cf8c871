"""Parallel nonlocal image denoising with a shared circulant transform.

Patches are grouped by similarity around reference positions, stacked into
third-order tensors, projected onto a pair of global orthonormal bases
learned from the image itself, decorrelated along the group axis with an
orthonormal Haar matrix, hard thresholded, and aggregated back with
uniform weights.  An adaptive mode inspects spectra of circulant
patch-group Gram matrices to decide whether the working noise level
should be lowered before filtering.
"""

from .config import AdaptiveConfig, DenoiseConfig, config_from_dict, config_to_dict
from .errors import (
    CoordError,
    DenoiseError,
    DimsError,
    EmptyTrainingSetError,
    FormatError,
    NotPowerOfTwoError,
    NumericError,
    OddGroupError,
    PatchSizeError,
)
from .fileio import load_image, load_tensor, save_image, save_tensor
from .grouping import (
    MatchStats,
    Matcher,
    PatchGroup,
    gcp_distance,
    guide_channel,
    match_patches,
    reference_positions,
    schedule_references,
)
from .metrics import MetricsReport, add_awgn, psnr, ssim
from .noise import (
    EigenPairs,
    NoiseModel,
    adjust_sigma,
    circ_gram_eigenpairs,
    circ_gram_first_row,
    circ_gram_spectrum,
    estimate_sigma_baseline,
    rank_position,
    vote_sigma,
)
from .pipeline import (
    RunStats,
    aggregate,
    denoise,
    denoise_multiband,
    denoise_with_stats,
    tile_bounds,
)
from .tensor import bcirc, dft_mode3, haar_matrix, idft_mode3, t_product, t_svd, t_transpose
from .transform import (
    GlobalBasis,
    filter_groups,
    forward_transform,
    hard_threshold,
    inverse_transform,
    learn_global_basis,
    threshold_value,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "CoordError",
    "DenoiseConfig",
    "DenoiseError",
    "DimsError",
    "EigenPairs",
    "EmptyTrainingSetError",
    "FormatError",
    "GlobalBasis",
    "MatchStats",
    "Matcher",
    "MetricsReport",
    "NoiseModel",
    "NotPowerOfTwoError",
    "NumericError",
    "OddGroupError",
    "PatchGroup",
    "RunStats",
    "add_awgn",
    "adjust_sigma",
    "aggregate",
    "bcirc",
    "circ_gram_eigenpairs",
    "circ_gram_first_row",
    "circ_gram_spectrum",
    "config_from_dict",
    "config_to_dict",
    "denoise",
    "denoise_multiband",
    "denoise_with_stats",
    "dft_mode3",
    "estimate_sigma_baseline",
    "filter_groups",
    "forward_transform",
    "gcp_distance",
    "guide_channel",
    "haar_matrix",
    "hard_threshold",
    "idft_mode3",
    "inverse_transform",
    "learn_global_basis",
    "load_image",
    "load_tensor",
    "match_patches",
    "psnr",
    "rank_position",
    "reference_positions",
    "save_image",
    "save_tensor",
    "schedule_references",
    "ssim",
    "t_product",
    "t_svd",
    "t_transpose",
    "threshold_value",
    "tile_bounds",
    "vote_sigma",
]
