"""Command line entry point: ``gradkernel run`` and ``gradkernel pathkernel``."""

from __future__ import annotations

import argparse
import logging
import sys

from .harness import ExperimentConfig, emit_csv, emit_path_kernel_report, load_dataset, run_experiment
from .model import last_layers_mask

# flag name -> config key; flags given on the command line override the config file
FLAGS = {
    "images": str,
    "labels": str,
    "out": str,
    "seed": int,
    "epochs": int,
    "spec": str,
    "basis_per_class": int,
    "train_per_class": int,
    "test_per_class": int,
    "mask_layers": int,
    "learning_rate": float,
    "ridge": float,
    "synth_dim": int,
    "synth_separation": float,
    "synth_noise": float,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    for name, typ in FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    p.add_argument("--synthetic", action="store_true", default=None,
                   help="use two Gaussian blobs instead of IDX files")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gradkernel")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="kernel regression vs SGD by epoch; writes a CSV")
    _add_common(run)
    pk = sub.add_parser("pathkernel", help="per-epoch path kernel for example pairs")
    _add_common(pk)
    pk.add_argument("--pairs", required=True,
                    help="comma-separated i:j pairs of dataset row indices, e.g. 0:1,5:5")
    return parser


def parse_pairs(text: str) -> list[tuple[int, int]]:
    pairs = []
    for item in text.split(","):
        i, sep, j = item.strip().partition(":")
        if not sep:
            raise ValueError(f"bad pair {item!r}, expected i:j")
        pairs.append((int(i), int(j)))
    return pairs


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in [*FLAGS, "synthetic"] if getattr(args, k) is not None}
    return ExperimentConfig.from_mapping(overrides, base=cfg)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _config(args)
        if args.command == "run":
            emit_csv(run_experiment(cfg), cfg.out)
        else:
            pairs = parse_pairs(args.pairs)
            trail = []
            run_experiment(cfg, trail=trail)
            ds, _ = load_dataset(cfg)
            for i, j in pairs:
                if not (0 <= i < len(ds) and 0 <= j < len(ds)):
                    raise ValueError(f"pair {i}:{j} out of range for {len(ds)} examples")
            spec = cfg.model_spec
            mask = last_layers_mask(spec, cfg.mask_layers) if cfg.mask_layers else None
            emit_path_kernel_report(spec, trail, ds.examples, pairs, cfg.out, mask)
    except Exception as exc:  # noqa: BLE001 - report any failure as one diagnostic line
        print(f"gradkernel: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
