"""Command-line entry point: ``region-mixup {train,eval,attack,augment,synth}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .augment import build_grid_masks, cutmix_batch, region_mixup_batch, sample_recipe
from .augment import vanilla_mixup_batch
from .config import RunConfig, parse_config, serialize_config
from .core import (
    BetaParams,
    ConfigError,
    ParameterError,
    RngState,
    ShapeError,
    sample_beta,
    sample_permutation,
)
from .data import gen_synthetic, load_dataset, one_hot, save_dataset
from .nn import PARAM_NAMES, FormatError, load_tensors, save_tensors
from .robustness import DEFAULT_EPS, AttackConfig, evaluate_under_attack
from .train import METHODS, evaluate_accuracy, metrics_csv, train_run

log = logging.getLogger("region_mixup")

CHECKPOINT_NAME = "checkpoint.rmx"
METRICS_NAME = "metrics.csv"


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--k", type=int, help="grid dimension for region mixup")
    common.add_argument("--alpha", type=float, help="Beta(alpha, alpha) mixing parameter")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--out", type=Path, help="output directory (train) or file")
    common.add_argument("--limit", type=int, help="use only the first N training records")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="region-mixup", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("train", parents=[common], help="train the small CNN")
    p.add_argument("--test-limit", type=int, help="use only the first N test records")
    p.add_argument("--epochs", type=int)
    p.add_argument("--timing", action="store_true", help="write wall-clock seconds to the metrics CSV")

    for name, text in (("eval", "clean test accuracy"), ("attack", "accuracy under FGSM")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--model", type=Path, help="checkpoint (default: <out_dir>/checkpoint.rmx)")
        p.add_argument("--data", help="dataset file(s) (default: dataset_test)")
        if name == "attack":
            p.add_argument("--eps", type=float, default=DEFAULT_EPS, help="L-inf budget on [0,1] pixels")

    p = sub.add_parser("augment", parents=[common], help="write a mixed copy of a dataset")
    p.add_argument("--data", help="dataset file(s) (default: dataset_train)")
    p.add_argument("--batch-size", type=int)

    p = sub.add_parser("synth", parents=[common], help="write the synthetic two-class dataset")
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--size", type=int, default=16)
    return parser


def _run_config(args) -> RunConfig:
    cfg = parse_config(args.config.read_text(encoding="utf-8")) if args.config else RunConfig()
    for key in ("seed", "k", "alpha", "method", "limit"):
        value = getattr(args, key, None)
        if value is not None:
            cfg.set(key, value)
    if getattr(args, "epochs", None) is not None:
        cfg.train.epochs = args.epochs
    if getattr(args, "batch_size", None) is not None:
        cfg.train.batch_size = args.batch_size
    cfg.validate()
    return cfg


def _require(value, what):
    if value is None:
        raise ConfigError(f"{what} is required")
    return value


def _cmd_train(args, cfg: RunConfig) -> int:
    out_dir = Path(args.out or _require(cfg.out_dir, "out_dir (or --out)"))
    train = load_dataset(_require(cfg.dataset_train, "dataset_train")).subset(cfg.limit)
    test = load_dataset(_require(cfg.dataset_test, "dataset_test")).subset(args.test_limit)
    model, rows = train_run(cfg.train, train, test)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_tensors(out_dir / CHECKPOINT_NAME, {n: model.params[n] for n in PARAM_NAMES})
    (out_dir / METRICS_NAME).write_text(metrics_csv(rows, timing=args.timing), encoding="utf-8")
    (out_dir / "run.cfg").write_text(serialize_config(cfg), encoding="utf-8")
    if rows:
        print(f"accuracy={rows[-1].test_acc:.6g}")
    return 0


def _load_model_and_data(args, cfg: RunConfig):
    model_path = args.model
    if model_path is None:
        model_path = Path(args.out or _require(cfg.out_dir, "--model or out_dir")) / CHECKPOINT_NAME
    params = load_tensors(model_path)
    missing = [n for n in PARAM_NAMES if n not in params]
    if missing:
        raise FormatError(f"checkpoint lacks parameters {missing}")
    ds = load_dataset(args.data or _require(cfg.dataset_test, "--data or dataset_test"))
    return params, ds.subset(cfg.limit)


def _cmd_eval(args, cfg: RunConfig) -> int:
    params, ds = _load_model_and_data(args, cfg)
    print(f"accuracy={evaluate_accuracy(params, ds):.6g}")
    return 0


def _cmd_attack(args, cfg: RunConfig) -> int:
    params, ds = _load_model_and_data(args, cfg)
    acc = evaluate_under_attack(params, ds, AttackConfig(args.eps))
    print(f"accuracy={acc:.6g}")
    return 0


def _cmd_augment(args, cfg: RunConfig) -> int:
    out = _require(args.out, "--out")
    ds = load_dataset(args.data or _require(cfg.dataset_train, "--data or dataset_train"))
    ds = ds.subset(cfg.limit)
    tc = cfg.train
    x = ds.images
    y = one_hot(ds.labels, ds.classes, x.dtype)
    if tc.method == "region":
        masks = build_grid_masks(x.shape[2], x.shape[3], tc.k)
    root = RngState(tc.seed)
    xs, ys = [], []
    starts = range(0, len(ds), tc.batch_size)
    for b0, rng in zip(starts, root.split(len(starts))):
        xb, yb = x[b0:b0 + tc.batch_size], y[b0:b0 + tc.batch_size]
        n = xb.shape[0]
        if tc.method == "region":
            xb, yb = region_mixup_batch(xb, yb, sample_recipe(tc.k, BetaParams(tc.alpha), n, rng), masks)
        elif tc.method == "mixup":
            lam = sample_beta(BetaParams(tc.alpha), rng)
            xb, yb = vanilla_mixup_batch(xb, yb, lam, sample_permutation(n, rng))
        elif tc.method == "cutmix":
            xb, yb = cutmix_batch(xb, yb, BetaParams(tc.alpha), rng)
        xs.append(xb)
        ys.append(yb)
    save_tensors(out, {"images": np.concatenate(xs), "labels": np.concatenate(ys)})
    return 0


def _cmd_synth(args, cfg: RunConfig) -> int:
    out = _require(args.out, "--out")
    ds = gen_synthetic(args.n, args.size, RngState(cfg.train.seed))
    save_dataset(out, ds)
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "attack": _cmd_attack,
    "augment": _cmd_augment,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _run_config(args)
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, FormatError, ShapeError, ParameterError, OSError) as exc:
        print(f"region-mixup {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
