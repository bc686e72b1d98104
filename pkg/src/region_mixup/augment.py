"""Grid masks, region mixup, vanilla mixup, CutMix and pad/crop/flip preprocessing.

Image batches are (N, C, H, W) arrays, label batches are (N, K) rows on the
probability simplex. All transforms return new arrays and leave their inputs
untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    BetaParams,
    DivisibilityError,
    ParameterError,
    RngState,
    ShapeError,
    lerp,
    sample_beta,
    sample_permutation,
)

PAD = 2


@dataclass(frozen=True)
class MaskGrid:
    """k x k partition of an H x W image into equal rectangles.

    ``tiles[j] = (row0, col0, row1, col1)`` with exclusive upper bounds, in
    row-major tile order (top-left tile first).
    """

    k: int
    height: int
    width: int
    tiles: tuple[tuple[int, int, int, int], ...]

    def masks(self) -> np.ndarray:
        """Dense 0/1 masks of shape (k*k, H, W)."""
        out = np.zeros((len(self.tiles), self.height, self.width), dtype=np.uint8)
        for j, (r0, c0, r1, c1) in enumerate(self.tiles):
            out[j, r0:r1, c0:c1] = 1
        return out


@dataclass(frozen=True)
class MixRecipe:
    """Per-tile mixing coefficients and partner permutations for one iteration."""

    k: int
    lambdas: tuple[float, ...]
    permutations: tuple[np.ndarray, ...]

    def __post_init__(self):
        if not (len(self.lambdas) == len(self.permutations) == self.k * self.k):
            raise ShapeError(
                f"recipe for k={self.k} needs {self.k * self.k} lambdas and permutations, "
                f"got {len(self.lambdas)} and {len(self.permutations)}"
            )


def build_grid_masks(height: int, width: int, k: int) -> MaskGrid:
    if k < 1:
        raise ParameterError(f"grid dimension must be >= 1, got {k}")
    if height % k or width % k:
        raise DivisibilityError(f"image {height}x{width} is not divisible into a {k}x{k} grid")
    th, tw = height // k, width // k
    tiles = tuple(
        (r * th, c * tw, (r + 1) * th, (c + 1) * tw) for r in range(k) for c in range(k)
    )
    return MaskGrid(k, height, width, tiles)


def sample_recipe(k: int, alpha: BetaParams | float, batch_size: int, rng: RngState) -> MixRecipe:
    """All k*k lambdas are drawn first, then one batch permutation per tile."""
    lambdas = sample_beta(alpha, rng, size=k * k)
    perms = tuple(sample_permutation(batch_size, rng) for _ in range(k * k))
    return MixRecipe(k, tuple(float(v) for v in lambdas), perms)


def _check_batch(x, y):
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 4:
        raise ShapeError(f"image batch must be (N, C, H, W), got shape {x.shape}")
    if y.ndim != 2 or y.shape[0] != x.shape[0]:
        raise ShapeError(f"label batch {y.shape} does not match image batch {x.shape}")
    return x, y


def _check_perm(perm, n):
    perm = np.asarray(perm)
    if perm.shape != (n,):
        raise ShapeError(f"permutation of length {perm.shape} for batch of {n}")
    return perm


def region_mixup_batch(x, y, recipe: MixRecipe, masks: MaskGrid):
    """Mix every tile j of each image with the same tile of its partner ``perm_j(i)``.

    Tile j uses weight ``lambdas[j]`` on the image itself; the mixed label is
    the average over tiles of the per-tile label interpolations.
    """
    x, y = _check_batch(x, y)
    n, _, h, w = x.shape
    if (masks.height, masks.width) != (h, w):
        raise ShapeError(f"masks built for {masks.height}x{masks.width}, images are {h}x{w}")
    if recipe.k != masks.k:
        raise ShapeError(f"recipe k={recipe.k} does not match mask grid k={masks.k}")

    x_mix = np.empty_like(x)
    y_acc = np.zeros_like(y)
    for (r0, c0, r1, c1), lam, perm in zip(masks.tiles, recipe.lambdas, recipe.permutations):
        perm = _check_perm(perm, n)
        x_mix[:, :, r0:r1, c0:c1] = lerp(x[:, :, r0:r1, c0:c1], x[perm, :, r0:r1, c0:c1], lam)
        y_acc += lerp(y, y[perm], lam)
    y_mix = y_acc * (1.0 / (recipe.k * recipe.k))
    return x_mix, y_mix.astype(y.dtype, copy=False)


def vanilla_mixup_batch(x, y, lam: float, perm):
    x, y = _check_batch(x, y)
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")
    perm = _check_perm(perm, x.shape[0])
    return lerp(x, x[perm], lam), lerp(y, y[perm], lam)


def cutmix_box(height: int, width: int, lam: float, rng: RngState):
    """Box of size (H*sqrt(1-lam), W*sqrt(1-lam)) centred uniformly, clipped to the image.

    Returns ``(row0, col0, row1, col1)`` with exclusive upper bounds.
    """
    ratio = np.sqrt(1.0 - lam)
    cut_h = int(height * ratio)
    cut_w = int(width * ratio)
    cy = int(rng.integers(height))
    cx = int(rng.integers(width))
    r0 = int(np.clip(cy - cut_h // 2, 0, height))
    r1 = int(np.clip(cy - cut_h // 2 + cut_h, 0, height))
    c0 = int(np.clip(cx - cut_w // 2, 0, width))
    c1 = int(np.clip(cx - cut_w // 2 + cut_w, 0, width))
    return r0, c0, r1, c1


def cutmix_with_box(x, y, perm, box):
    """Paste the partner's pixels inside ``box``; partner label weight is the box area fraction."""
    x, y = _check_batch(x, y)
    n, _, h, w = x.shape
    perm = _check_perm(perm, n)
    r0, c0, r1, c1 = box
    x_mix = x.copy()
    x_mix[:, :, r0:r1, c0:c1] = x[perm, :, r0:r1, c0:c1]
    partner = (r1 - r0) * (c1 - c0) / (h * w)
    return x_mix, lerp(y, y[perm], 1.0 - partner)


def cutmix_batch(x, y, alpha: BetaParams | float, rng: RngState):
    x, y = _check_batch(x, y)
    n, _, h, w = x.shape
    if n < 1:
        raise ParameterError("empty batch")
    lam = sample_beta(alpha, rng)
    perm = sample_permutation(n, rng)
    box = cutmix_box(h, w, lam, rng)
    return cutmix_with_box(x, y, perm, box)


def pad_crop_flip(x, offsets, flips):
    """Zero-pad by 2 pixels, crop back to H x W at per-image ``offsets``, then mirror where ``flips``.

    ``offsets`` is (N, 2) with entries in [0, 4]; offset (2, 2) is the identity crop.
    """
    x = np.asarray(x)
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * PAD, w + 2 * PAD), dtype=x.dtype)
    xp[:, :, PAD:PAD + h, PAD:PAD + w] = x
    out = np.empty_like(x)
    for i, ((oy, ox), flip) in enumerate(zip(np.asarray(offsets), np.asarray(flips))):
        crop = xp[i, :, oy:oy + h, ox:ox + w]
        out[i] = crop[:, :, ::-1] if flip else crop
    return out


def standard_augment(x, rng: RngState, flip: bool = True):
    """Random pad-and-crop plus a horizontal flip with probability 1/2, per image."""
    x = np.asarray(x)
    n = x.shape[0]
    offsets = rng.integers(2 * PAD + 1, size=(n, 2))
    flips = rng.uniform(n) < 0.5
    if not flip:
        flips[:] = False
    return pad_crop_flip(x, offsets, flips)
