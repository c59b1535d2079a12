"""Epoch-by-epoch comparison of gradient-kernel regression against the network."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import data as data_mod
from .kernel import cosine_normalize, kernel_matrix, path_kernel_terms
from .model import ModelSpec, init_params, last_layers_mask
from .regression import evaluate, fit, predict
from .trainer import TrainConfig, network_accuracy, sgd_epoch

log = logging.getLogger(__name__)

CSV_HEADER = [
    "epoch",
    "kernel_train_acc",
    "kernel_test_acc",
    "net_train_acc",
    "net_test_acc",
    "kernel_test_sse",
    "fit_rank",
    "sv_ratio",
    "degenerate_grads",
]


class KernelError(RuntimeError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    kernel_train_accuracy: float
    kernel_test_accuracy: float
    net_train_accuracy: float
    net_test_accuracy: float
    kernel_test_sse: float
    fit_rank: int
    singular_value_ratio: float
    degenerate_gradients: int


@dataclass
class ExperimentConfig:
    images: Optional[str] = None
    labels: Optional[str] = None
    synthetic: bool = False
    synth_dim: int = 2
    synth_separation: float = 10.0
    synth_noise: float = 0.1
    positive_digit: int = 1
    negative_digit: int = 7
    train_per_class: int = 500
    test_per_class: int = 500
    basis_per_class: int = 50
    spec: str = "784-64-32-1:relu"
    epochs: int = 9
    steps_per_epoch: int = 10
    batch_size: int = 100
    learning_rate: float = 0.1
    ridge: float = 0.0
    mask_layers: int = 0
    standardize: bool = False
    pixel_mean: float = 0.0
    pixel_std: float = 1.0
    seed: int = 0
    out: str = "results.csv"

    @classmethod
    def from_mapping(cls, values: dict, base: "ExperimentConfig | None" = None) -> "ExperimentConfig":
        """Build a config from string or typed values, converting per field type."""
        base = base or cls()
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        updates = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            updates[key] = _convert(types[key], raw, key)
        return dataclasses.replace(base, **updates)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            values[key.strip()] = value.strip()
        return cls.from_mapping(values)

    @property
    def model_spec(self) -> ModelSpec:
        return ModelSpec.parse(self.spec)

    def train_config(self, mask=None) -> TrainConfig:
        return TrainConfig(self.epochs, self.steps_per_epoch, self.batch_size,
                           self.learning_rate, self.seed, mask)


def _convert(type_name, raw, key):
    if not isinstance(raw, str):
        return raw
    t = str(type_name)
    try:
        if t == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if t == "int":
            return int(raw)
        if t == "float":
            return float(raw)
    except ValueError:
        raise ValueError(f"bad value for {key}: {raw!r}") from None
    return raw or None if t.startswith("Optional") else raw


def load_dataset(cfg: ExperimentConfig) -> tuple[data_mod.Dataset, data_mod.SplitPlan]:
    """Dataset and split (with basis) for a config."""
    if cfg.synthetic:
        ds = data_mod.synth_blobs(cfg.train_per_class + cfg.test_per_class, cfg.synth_dim,
                                  cfg.synth_separation, cfg.synth_noise, cfg.seed)
        plan = data_mod.balanced_split(ds.labels, cfg.train_per_class, cfg.test_per_class, cfg.seed)
    else:
        if not (cfg.images and cfg.labels):
            raise ValueError("either --synthetic or both --images and --labels are required")
        images, labels = data_mod.load_idx(cfg.images, cfg.labels)
        if cfg.standardize:
            images = data_mod.standardize(images, cfg.pixel_mean, cfg.pixel_std)
        ds, plan = data_mod.make_binary_task(images, labels, cfg.positive_digit, cfg.negative_digit,
                                             cfg.train_per_class, cfg.test_per_class, cfg.seed)
    plan.basis_indices = data_mod.select_basis(plan, ds.labels, cfg.basis_per_class, cfg.seed)
    return ds, plan


def evaluate_epoch(spec: ModelSpec, params, ds: data_mod.Dataset, plan: data_mod.SplitPlan,
                   epoch: int, ridge: float = 0.0, mask=None) -> EpochRecord:
    train, test = ds.subset(plan.train_indices), ds.subset(plan.test_indices)
    basis = ds.examples[plan.basis_indices]
    queries = np.concatenate([train.examples, test.examples])
    K = cosine_normalize(kernel_matrix(spec, params, queries, basis, mask))
    bad = np.argwhere(~np.isfinite(K.entries))
    if len(bad):
        row = int(bad[0][0])
        index = plan.train_indices[row] if row < len(train) else plan.test_indices[row - len(train)]
        raise KernelError(f"non-finite kernel entry at epoch {epoch}, example index {index}")
    n = len(train)
    K_train, K_test = K.entries[:n], K.entries[n:]
    coef = fit(K_train, train.labels, ridge)
    train_report = evaluate(predict(K_train, coef), train.labels)
    test_report = evaluate(predict(K_test, coef), test.labels)
    return EpochRecord(
        epoch=epoch,
        kernel_train_accuracy=train_report.accuracy,
        kernel_test_accuracy=test_report.accuracy,
        net_train_accuracy=network_accuracy(spec, params, train.examples, train.labels),
        net_test_accuracy=network_accuracy(spec, params, test.examples, test.labels),
        kernel_test_sse=test_report.sse,
        fit_rank=coef.rank,
        singular_value_ratio=coef.singular_value_ratio,
        degenerate_gradients=K.n_degenerate,
    )


def run_experiment(cfg: ExperimentConfig, trail: Optional[list] = None) -> list[EpochRecord]:
    """Run the kernel-vs-network comparison for ``cfg.epochs`` SGD epochs.

    Records are taken before each epoch's updates plus once after the last,
    so the first record is at initialization.  Pass a list as ``trail`` to
    collect the parameter snapshot behind each record.
    """
    spec = cfg.model_spec
    ds, plan = load_dataset(cfg)
    if ds.examples.shape[1] != spec.input_dim:
        raise ValueError(f"model input width {spec.input_dim} != data width {ds.examples.shape[1]}")
    mask = last_layers_mask(spec, cfg.mask_layers) if cfg.mask_layers else None
    tcfg = cfg.train_config(mask)
    train = ds.subset(plan.train_indices)
    params = init_params(spec, cfg.seed)
    records = []
    for epoch in range(cfg.epochs + 1):
        if trail is not None:
            trail.append(params.copy())
        rec = evaluate_epoch(spec, params, ds, plan, epoch, cfg.ridge, mask)
        log.info("epoch %d: kernel test %.4f, net test %.4f", epoch,
                 rec.kernel_test_accuracy, rec.net_test_accuracy)
        records.append(rec)
        if epoch < cfg.epochs:
            params = sgd_epoch(spec, params, train.examples, train.labels, tcfg, epoch)
    return records


def emit_csv(records: Iterable[EpochRecord], path) -> None:
    records = list(records)
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.epoch,
                f"{r.kernel_train_accuracy:.6f}",
                f"{r.kernel_test_accuracy:.6f}",
                f"{r.net_train_accuracy:.6f}",
                f"{r.net_test_accuracy:.6f}",
                f"{r.kernel_test_sse:.17g}",
                r.fit_rank,
                f"{r.singular_value_ratio:.17g}",
                r.degenerate_gradients,
            ])


def read_csv(path) -> list[EpochRecord]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        EpochRecord(
            epoch=int(r["epoch"]),
            kernel_train_accuracy=float(r["kernel_train_acc"]),
            kernel_test_accuracy=float(r["kernel_test_acc"]),
            net_train_accuracy=float(r["net_train_acc"]),
            net_test_accuracy=float(r["net_test_acc"]),
            kernel_test_sse=float(r["kernel_test_sse"]),
            fit_rank=int(r["fit_rank"]),
            singular_value_ratio=float(r["sv_ratio"]),
            degenerate_gradients=int(r["degenerate_grads"]),
        )
        for r in rows
    ]


def emit_path_kernel_report(spec: ModelSpec, trail, X, pairs, path, mask=None) -> None:
    """CSV of ``i, j, path_kernel, epoch_0 .. epoch_T`` for each example pair."""
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["i", "j", "path_kernel", *(f"epoch_{t}" for t in range(len(trail)))])
        for i, j in pairs:
            terms = path_kernel_terms(spec, trail, X[i], X[j], mask)
            writer.writerow([i, j, f"{math.fsum(terms):.17g}", *(f"{v:.17g}" for v in terms)])
