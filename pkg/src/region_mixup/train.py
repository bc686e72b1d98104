"""Training iteration, epoch loop and clean-accuracy evaluation."""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .augment import (
    build_grid_masks,
    cutmix_batch,
    region_mixup_batch,
    sample_recipe,
    standard_augment,
    vanilla_mixup_batch,
)
from .core import (
    BetaParams,
    ConfigError,
    ParameterError,
    RngState,
    sample_beta,
    sample_permutation,
)
from .data import Dataset, one_hot
from .nn import (
    Geometry,
    GradTape,
    LRSchedule,
    OptimizerState,
    backward,
    init_params,
    lr_at_epoch,
    predict,
    sgd_step,
    small_cnn_forward,
    soft_cross_entropy,
)
from .nn.model import PARAM_NAMES

log = logging.getLogger(__name__)

METHODS = ("region", "mixup", "cutmix", "none")
AUGMENT_MODES = ("standard", "crop", "none")


@dataclass
class TrainConfig:
    method: str = "region"
    k: int = 2
    alpha: float = 1.0
    epochs: int = 400
    batch_size: int = 128
    base_lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 5e-4
    lr_milestones: tuple[int, ...] = (100, 150)
    lr_factor: float = 10.0
    standard_ce: bool = True
    seed: int = 0
    augment: str = "standard"

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {', '.join(METHODS)}, got {self.method!r}")
        if self.augment not in AUGMENT_MODES:
            raise ConfigError(f"augment must be one of {', '.join(AUGMENT_MODES)}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be > 0, got {self.alpha}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")
        if not self.base_lr > 0 or not self.lr_factor > 0:
            raise ConfigError("base_lr and lr_factor must be positive")
        if self.momentum < 0 or self.weight_decay < 0:
            raise ConfigError("momentum and weight_decay must be non-negative")
        if any(m < 0 for m in self.lr_milestones):
            raise ConfigError("lr milestones must be non-negative epochs")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    @property
    def schedule(self) -> LRSchedule:
        return LRSchedule(self.base_lr, tuple(self.lr_milestones), self.lr_factor)


@dataclass
class ModelState:
    params: dict[str, np.ndarray]
    opt: OptimizerState = field(default_factory=OptimizerState)

    @property
    def step(self) -> int:
        return self.opt.step


@dataclass(frozen=True)
class MetricsRow:
    epoch: int
    train_loss: float
    test_acc: float
    seconds: float


def new_model(cfg: TrainConfig, geom: Geometry, rng: RngState) -> ModelState:
    params = init_params(rng, geom)
    opt = OptimizerState(
        lr=cfg.base_lr,
        momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
        velocity={n: np.zeros_like(params[n]) for n in PARAM_NAMES},
    )
    return ModelState(params, opt)


def mix_batch(x, y, cfg: TrainConfig, rng: RngState, recipe=None):
    """Mixed pair for the configured method, or None when ``method == "none"``.

    Draw order per method: region draws its k*k lambdas then k*k partner
    permutations; mixup draws one lambda then one permutation, so region
    with k=1 consumes the stream exactly like mixup.
    """
    n, _, h, w = x.shape
    if cfg.method == "region":
        masks = build_grid_masks(h, w, cfg.k)
        if recipe is None:
            recipe = sample_recipe(cfg.k, BetaParams(cfg.alpha), n, rng)
        return region_mixup_batch(x, y, recipe, masks)
    if cfg.method == "mixup":
        lam = sample_beta(BetaParams(cfg.alpha), rng)
        perm = sample_permutation(n, rng)
        return vanilla_mixup_batch(x, y, lam, perm)
    if cfg.method == "cutmix":
        return cutmix_batch(x, y, BetaParams(cfg.alpha), rng)
    return None


def loss_and_grads(params, x, y):
    """Soft cross-entropy of the model on (x, y) and its parameter gradients."""
    tape = GradTape()
    loss = soft_cross_entropy(small_cnn_forward(params, x, tape), y)
    grads = backward(tape, loss)
    return float(loss.value), grads


def train_iteration(model: ModelState, batch, cfg: TrainConfig, rng: RngState, recipe=None):
    """One optimisation step on a minibatch ``(x, y)`` with one-hot ``y``.

    Loss is ``CE(f(x), y) + CE(f(x_mix), y_mix)`` when ``cfg.standard_ce`` is
    on, ``CE(f(x_mix), y_mix)`` alone when it is off, and ``CE(f(x), y)`` for
    ``method == "none"``. Each term is differentiated on its own tape and the
    gradients are summed before a single SGD step.

    ``recipe`` overrides the sampled region-mixup recipe (region method only).
    """
    x, y = batch
    mixed = mix_batch(x, y, cfg, rng, recipe)
    terms = []
    if mixed is None or cfg.standard_ce:
        terms.append((x, y))
    if mixed is not None:
        terms.append(mixed)

    total = 0.0
    grads = None
    for tx, ty in terms:
        loss, g = loss_and_grads(model.params, tx, ty)
        total += loss
        grads = g if grads is None else {n: grads[n] + g[n] for n in grads}
    params, opt = sgd_step(model.params, grads, model.opt)
    return ModelState(params, opt), total


def evaluate_accuracy(params, ds: Dataset) -> float:
    if len(ds) == 0:
        raise ParameterError("cannot evaluate on an empty dataset")
    params = getattr(params, "params", params)
    return float(np.mean(predict(params, ds.images) == ds.labels))


def mean_loss(params, ds: Dataset, batch_size: int = 500) -> float:
    """Mean clean cross-entropy over a dataset."""
    params = getattr(params, "params", params)
    total = 0.0
    for i in range(0, len(ds), batch_size):
        xb = ds.images[i:i + batch_size]
        yb = one_hot(ds.labels[i:i + batch_size], ds.classes, xb.dtype)
        total += float(soft_cross_entropy(small_cnn_forward(params, xb), yb)) * xb.shape[0]
    return total / len(ds)


def check_compatible(cfg: TrainConfig, ds: Dataset) -> Geometry:
    """Validate the config against the data geometry before any training work."""
    cfg.validate()
    _, c, h, w = ds.images.shape
    if cfg.method == "region":
        build_grid_masks(h, w, cfg.k)
    return Geometry(c, h, w, ds.classes)


def train_run(cfg: TrainConfig, train: Dataset, test: Dataset):
    """Train for ``cfg.epochs`` epochs; returns ``(model, metrics rows)``.

    Each epoch: fix the learning rate, shuffle, augment, run minibatch
    iterations (the last partial batch included), then evaluate on the raw
    test set. Everything random flows from ``cfg.seed``.
    """
    if len(train) == 0 or len(test) == 0:
        raise ParameterError("train and test sets must be non-empty")
    geom = check_compatible(cfg, train)
    if test.images.shape[1:] != train.images.shape[1:] or test.classes != train.classes:
        raise ConfigError("train and test sets disagree on geometry or class count")

    root = RngState(cfg.seed)
    init_rng, loop_rng = root.split(2)
    model = new_model(cfg, geom, init_rng)
    rows: list[MetricsRow] = []
    n = len(train)
    for epoch in range(cfg.epochs):
        start = time.perf_counter()
        model.opt.lr = lr_at_epoch(cfg.schedule, epoch)
        (ep_rng,) = loop_rng.split(1)
        shuffle_rng, aug_rng, iter_rng = ep_rng.split(3)

        order = sample_permutation(n, shuffle_rng)
        x = train.images[order]
        labels = train.labels[order]
        if cfg.augment != "none":
            x = standard_augment(x, aug_rng, flip=cfg.augment == "standard")

        losses = []
        starts = range(0, n, cfg.batch_size)
        for b0, it_rng in zip(starts, iter_rng.split(len(starts))):
            xb = x[b0:b0 + cfg.batch_size]
            yb = one_hot(labels[b0:b0 + cfg.batch_size], train.classes, xb.dtype)
            model, loss = train_iteration(model, (xb, yb), cfg, it_rng)
            losses.append(loss)

        acc = evaluate_accuracy(model.params, test)
        row = MetricsRow(epoch, float(np.mean(losses)), acc, time.perf_counter() - start)
        log.info("epoch %d lr %.4g loss %.4f acc %.4f", epoch, model.opt.lr, row.train_loss, acc)
        if not np.isfinite(row.train_loss):
            log.warning("non-finite training loss at epoch %d", epoch)
        rows.append(row)
    return model, rows


def metrics_csv(rows, timing: bool = False) -> str:
    """CSV text with header ``epoch,train_loss,test_acc,seconds``.

    Wall-clock seconds are written only with ``timing=True``; otherwise the
    column holds 0 so repeated runs produce identical files.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["epoch", "train_loss", "test_acc", "seconds"])
    for r in rows:
        secs = r.seconds if timing else 0.0
        writer.writerow([r.epoch, f"{r.train_loss:.6g}", f"{r.test_acc:.6g}", f"{secs:.6g}"])
    return buf.getvalue()
