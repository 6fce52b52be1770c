"""Unsupervised oblique-forest autoencoder.

An ensemble of oblique trees (HHCART / RandCART) fit against synthetic
uniform targets encodes a sample as one leaf id per tree; decoding solves
min ||x||_1 over the stacked signed path inequalities A x >= b, optionally
inside a [0, 255] pixel box.
"""

from .codec import (BoxSpec, ConstraintSystem, LeafCode, PIXEL_BOX, assemble,
                    decode, decode_image, encode, encode_image)
from .dataio import (Dataset, SplitSpec, Standardizer, load_codes, load_model,
                     read_csv, read_image, resize_bilinear, save_codes,
                     save_csv, save_model, train_test_split, write_image)
from .forest import ForestConfig, ForestModel, apply_all, fit
from .lpsolve import LpProblem, LpSolution, solve_l1, solve_lp
from .metrics import Timing, mse, ssim, stopwatch
from .numkit import Rng
from .otree import (ObliqueNode, ObliqueTree, SignedPath, TreeFitParams,
                    apply, best_axis_split, fit_hhcart, fit_randcart,
                    path_of_leaf)
from .transforms import TRANSFORM_KINDS, extract_direction

__version__ = "0.1.0"

__all__ = [
    "BoxSpec", "ConstraintSystem", "Dataset", "ForestConfig", "ForestModel",
    "LeafCode", "LpProblem", "LpSolution", "ObliqueNode", "ObliqueTree",
    "PIXEL_BOX", "Rng", "SignedPath", "SplitSpec", "Standardizer", "Timing",
    "TRANSFORM_KINDS", "TreeFitParams", "apply", "apply_all", "assemble",
    "best_axis_split", "decode", "decode_image", "encode", "encode_image",
    "extract_direction", "fit", "fit_hhcart", "fit_randcart", "load_codes",
    "load_model", "mse", "path_of_leaf", "read_csv", "read_image",
    "resize_bilinear", "save_codes", "save_csv", "save_model", "solve_l1",
    "solve_lp", "ssim", "stopwatch", "train_test_split", "write_image",
]
