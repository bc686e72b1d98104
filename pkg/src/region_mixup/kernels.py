"""Hot convolution and pooling kernels.

Every kernel has two implementations with identical semantics: a numba
``_nb`` loop version and a vectorised ``_np`` version. The public names are
bound at import time according to :data:`region_mixup._accel.USE_NUMBA`.

Layouts: images are (N, C, H, W); convolutions are 3x3, stride 1, zero
padding 1, and columns are (N, C*9, H*W) ordered (c, di, dj).
"""
import numpy as np

from ._accel import USE_NUMBA, njit

KSIZE = 3
PAD = 1


def im2col_np(x):
    n, c, h, w = x.shape
    xp = np.zeros((n, c, h + 2 * PAD, w + 2 * PAD), dtype=x.dtype)
    xp[:, :, PAD:PAD + h, PAD:PAD + w] = x
    cols = np.empty((n, c, KSIZE, KSIZE, h, w), dtype=x.dtype)
    for di in range(KSIZE):
        for dj in range(KSIZE):
            cols[:, :, di, dj] = xp[:, :, di:di + h, dj:dj + w]
    return cols.reshape(n, c * KSIZE * KSIZE, h * w)


def col2im_np(cols, shape):
    n, c, h, w = shape
    cols = cols.reshape(n, c, KSIZE, KSIZE, h, w)
    xp = np.zeros((n, c, h + 2 * PAD, w + 2 * PAD), dtype=cols.dtype)
    for di in range(KSIZE):
        for dj in range(KSIZE):
            xp[:, :, di:di + h, dj:dj + w] += cols[:, :, di, dj]
    return np.ascontiguousarray(xp[:, :, PAD:PAD + h, PAD:PAD + w])


def maxpool2_np(x):
    """2x2/stride-2 max pool. Returns (out, argmax) with argmax in 0..3 per window."""
    n, c, h, w = x.shape
    win = (
        x.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )
    idx = np.argmax(win, axis=-1)
    out = np.take_along_axis(win, idx[..., None], axis=-1)[..., 0]
    return out, idx.astype(np.int8)


def maxpool2_backward_np(dout, idx):
    n, c, h2, w2 = dout.shape
    win = np.zeros((n, c, h2, w2, 4), dtype=dout.dtype)
    np.put_along_axis(win, idx[..., None].astype(np.intp), dout[..., None], axis=-1)
    return np.ascontiguousarray(
        win.reshape(n, c, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(n, c, 2 * h2, 2 * w2)
    )


@njit
def _im2col_nb(x, cols):
    # cols comes from numpy's allocator, which recycles pages; numba's does not
    n, c, h, w = x.shape
    for b in range(n):
        for ch in range(c):
            for di in range(3):
                for dj in range(3):
                    row = ch * 9 + di * 3 + dj
                    j0 = max(0, 1 - dj)
                    j1 = min(w, w + 1 - dj)
                    for i in range(h):
                        si = i + di - 1
                        base = i * w
                        if si < 0 or si >= h:
                            for j in range(w):
                                cols[b, row, base + j] = 0
                            continue
                        for j in range(j0):
                            cols[b, row, base + j] = 0
                        for j in range(j0, j1):
                            cols[b, row, base + j] = x[b, ch, si, j + dj - 1]
                        for j in range(j1, w):
                            cols[b, row, base + j] = 0


@njit
def _col2im_nb(cols, n, c, h, w):
    # accumulate in (di, dj) order so the sums match col2im_np bit for bit
    xp = np.zeros((n, c, h + 2, w + 2), dtype=cols.dtype)
    for b in range(n):
        for ch in range(c):
            for di in range(3):
                for dj in range(3):
                    row = ch * 9 + di * 3 + dj
                    for i in range(h):
                        for j in range(w):
                            xp[b, ch, i + di, j + dj] += cols[b, row, i * w + j]
    return xp[:, :, 1:h + 1, 1:w + 1].copy()


@njit
def _maxpool2_nb(x):
    n, c, h, w = x.shape
    out = np.empty((n, c, h // 2, w // 2), dtype=x.dtype)
    idx = np.empty((n, c, h // 2, w // 2), dtype=np.int8)
    for b in range(n):
        for ch in range(c):
            for i in range(h // 2):
                for j in range(w // 2):
                    best = x[b, ch, 2 * i, 2 * j]
                    arg = 0
                    for k in range(1, 4):
                        v = x[b, ch, 2 * i + k // 2, 2 * j + k % 2]
                        if v > best:
                            best = v
                            arg = k
                    out[b, ch, i, j] = best
                    idx[b, ch, i, j] = arg
    return out, idx


@njit
def _maxpool2_backward_nb(dout, idx):
    n, c, h2, w2 = dout.shape
    dx = np.zeros((n, c, 2 * h2, 2 * w2), dtype=dout.dtype)
    for b in range(n):
        for ch in range(c):
            for i in range(h2):
                for j in range(w2):
                    k = idx[b, ch, i, j]
                    dx[b, ch, 2 * i + k // 2, 2 * j + k % 2] = dout[b, ch, i, j]
    return dx


def im2col_nb(x):
    n, c, h, w = x.shape
    cols = np.empty((n, c * 9, h * w), dtype=x.dtype)
    _im2col_nb(np.ascontiguousarray(x), cols)
    return cols


def col2im_nb(cols, shape):
    n, c, h, w = shape
    return _col2im_nb(np.ascontiguousarray(cols), n, c, h, w)


def maxpool2_nb(x):
    return _maxpool2_nb(np.ascontiguousarray(x))


def maxpool2_backward_nb(dout, idx):
    return _maxpool2_backward_nb(np.ascontiguousarray(dout), np.ascontiguousarray(idx))


if USE_NUMBA:
    im2col, col2im = im2col_nb, col2im_nb
    maxpool2, maxpool2_backward = maxpool2_nb, maxpool2_backward_nb
else:
    im2col, col2im = im2col_np, col2im_np
    maxpool2, maxpool2_backward = maxpool2_np, maxpool2_backward_np

BACKEND = "numba" if USE_NUMBA else "numpy"
