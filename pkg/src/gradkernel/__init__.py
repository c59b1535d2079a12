"""Gradient-kernel regression on small feed-forward models."""

from .data import Dataset, SplitPlan, load_idx, make_binary_task, select_basis, synth_blobs
from .harness import EpochRecord, ExperimentConfig, emit_csv, emit_path_kernel_report, run_experiment
from .kernel import KernelMatrix, cosine_normalize, gradient_kernel, kernel_matrix, path_kernel
from .model import (
    ModelSpec,
    forward,
    init_params,
    last_layers_mask,
    loss_and_gradient,
    masked_gradient,
    per_example_gradient,
    per_example_gradients,
)
from .regression import EvalReport, RegressionFit, evaluate, fit, predict
from .trainer import TrainConfig, network_accuracy, sgd_epoch

__version__ = "0.1.0"
