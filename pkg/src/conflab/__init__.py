"""Self-adaptive training and self-adaptive mixup on a small numpy MLP."""

from .data import Dataset, NoiseSpec, inject_noise, load_csv, load_idx, make_gaussian_mixture, make_imbalanced
from .metrics import RunRecord
from .sam import run_mixup, run_sam
from .sat import SoftLabelStore, TrainConfig, run_ce, run_sat
from .training import fit

__all__ = [
    "Dataset",
    "NoiseSpec",
    "RunRecord",
    "SoftLabelStore",
    "TrainConfig",
    "fit",
    "inject_noise",
    "load_csv",
    "load_idx",
    "make_gaussian_mixture",
    "make_imbalanced",
    "run_ce",
    "run_mixup",
    "run_sam",
    "run_sat",
]
