"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--batch 128] [--size 32] [--repeat 20]

Both implementations live side by side in ``region_mixup.kernels`` so one
process can time them; the env flag only chooses which one the library binds.
Outputs are checked for agreement before timing.
"""
import argparse
import statistics
import time

import numpy as np

from region_mixup import kernels
from region_mixup._accel import HAVE_NUMBA
from region_mixup.core import RngState


def _time(fn, repeat):
    fn()  # warm-up (and JIT compile)
    samples = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples)


def _conv_step(im2col, col2im, x, w, dout):
    """Forward plus backward of one 3x3 conv via columns."""
    n, c, h, wd = x.shape
    cols = im2col(x)
    out = np.einsum("of,nfp->nop", w, cols, optimize=True)
    dw = np.einsum("nop,nfp->of", dout, cols, optimize=True)
    dcols = np.einsum("of,nop->nfp", w, dout, optimize=True)
    return out, dw, col2im(dcols, (n, c, h, wd))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=128)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--channels", type=int, default=16)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed: pip install -e .[accel]")

    rng = RngState(0)
    n, c, s = args.batch, args.channels, args.size
    x = rng.uniform((n, c, s, s)).astype(np.float32)
    cols = kernels.im2col_np(x)
    pooled, idx = kernels.maxpool2_np(x)
    dpool = rng.normal(pooled.shape).astype(np.float32)
    w = rng.normal((c, c * 9)).astype(np.float32)
    dout = rng.normal((n, c, s * s)).astype(np.float32)

    cases = {
        "im2col": (lambda: kernels.im2col_np(x), lambda: kernels.im2col_nb(x)),
        "col2im": (lambda: kernels.col2im_np(cols, x.shape), lambda: kernels.col2im_nb(cols, x.shape)),
        "maxpool2": (lambda: kernels.maxpool2_np(x), lambda: kernels.maxpool2_nb(x)),
        "maxpool2_backward": (
            lambda: kernels.maxpool2_backward_np(dpool, idx),
            lambda: kernels.maxpool2_backward_nb(dpool, idx),
        ),
        "conv_step": (
            lambda: _conv_step(kernels.im2col_np, kernels.col2im_np, x, w, dout),
            lambda: _conv_step(kernels.im2col_nb, kernels.col2im_nb, x, w, dout),
        ),
    }

    print(f"input (N, C, H, W) = ({n}, {c}, {s}, {s}), float32, median of {args.repeat}")
    print(f"{'kernel':<20}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn) in cases.items():
        a, b = np_fn(), nb_fn()
        for u, v in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            np.testing.assert_allclose(u, v, rtol=1e-5, atol=1e-4)
        t_np, t_nb = _time(np_fn, args.repeat), _time(nb_fn, args.repeat)
        print(f"{name:<20}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>9.2f}x")


if __name__ == "__main__":
    main()
