"""Two-convolution classifier used as a desk-scale backbone."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import RngState, ShapeError, float_dtype
from .autodiff import GradTape, conv2d, dense, flatten, maxpool2x2, relu

CONV1_FILTERS = 16
CONV2_FILTERS = 32
PARAM_NAMES = ("conv1.w", "conv1.b", "conv2.w", "conv2.b", "fc.w", "fc.b")


@dataclass(frozen=True)
class Geometry:
    channels: int
    height: int
    width: int
    classes: int

    def __post_init__(self):
        if self.height % 4 or self.width % 4:
            raise ShapeError(
                f"input {self.height}x{self.width} must be divisible by 4 for two 2x2 pools"
            )
        if min(self.channels, self.height, self.width) < 1 or self.classes < 2:
            raise ShapeError(f"invalid geometry {self}")

    @property
    def dense_features(self):
        return CONV2_FILTERS * (self.height // 4) * (self.width // 4)


def param_shapes(geom: Geometry) -> dict[str, tuple[int, ...]]:
    return {
        "conv1.w": (CONV1_FILTERS, geom.channels, 3, 3),
        "conv1.b": (CONV1_FILTERS,),
        "conv2.w": (CONV2_FILTERS, CONV1_FILTERS, 3, 3),
        "conv2.b": (CONV2_FILTERS,),
        "fc.w": (geom.dense_features, geom.classes),
        "fc.b": (geom.classes,),
    }


def init_params(rng: RngState, geom: Geometry, dtype=None) -> dict[str, np.ndarray]:
    """Uniform(-b, b) weights with b = sqrt(6 / fan_in); zero biases."""
    dtype = dtype or float_dtype()
    params = {}
    for name, shape in param_shapes(geom).items():
        if name.endswith(".b"):
            params[name] = np.zeros(shape, dtype=dtype)
            continue
        fan_in = int(np.prod(shape[1:])) if name.startswith("conv") else shape[0]
        bound = np.sqrt(6.0 / fan_in)
        params[name] = ((rng.uniform(shape) * 2.0 - 1.0) * bound).astype(dtype)
    return params


def geometry_of(params, x_shape) -> Geometry:
    """Geometry implied by a parameter set and an (N, C, H, W) input shape."""
    _, c, h, w = x_shape
    geom = Geometry(c, h, w, params["fc.b"].shape[0])
    expected = param_shapes(geom)
    for name in PARAM_NAMES:
        if tuple(params[name].shape) != expected[name]:
            raise ShapeError(
                f"parameter {name} has shape {tuple(params[name].shape)}, "
                f"input {tuple(x_shape)} needs {expected[name]}"
            )
    return geom


def small_cnn_forward(params, x, tape: GradTape | None = None):
    """conv3x3-relu-pool, conv3x3-relu-pool, dense. Returns (N, K) logits.

    With a tape, parameters are registered under their names and the result
    is a recorded node. ``x`` may be an array or a node from ``tape.input``.
    """
    xv = x.value if hasattr(x, "value") else np.asarray(x)
    if xv.ndim != 4:
        raise ShapeError(f"expected (N, C, H, W) input, got {xv.shape}")
    geometry_of(params, xv.shape)
    p = {name: tape.param(name, params[name]) for name in PARAM_NAMES} if tape else params

    h = maxpool2x2(relu(conv2d(x, p["conv1.w"], p["conv1.b"])))
    h = maxpool2x2(relu(conv2d(h, p["conv2.w"], p["conv2.b"])))
    return dense(flatten(h), p["fc.w"], p["fc.b"])


def predict(params, x, batch_size: int = 500) -> np.ndarray:
    """Argmax class per sample; ties go to the lowest class index."""
    x = np.asarray(x)
    preds = [
        np.argmax(small_cnn_forward(params, x[i:i + batch_size]), axis=1)
        for i in range(0, x.shape[0], batch_size)
    ]
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)
