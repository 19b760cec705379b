"""Hot numeric kernels: direct 2-D convolutions in image and k-space.

Two interchangeable backends compute the same quantities: numba-compiled
loops (default whenever numba imports) and a pure-numpy sliding-window
path.  The PSFNET_NUMBA environment variable ("0"/"false"/"off" disables
the compiled path at import time) or set_backend() selects between them.
The compiled path uses fastmath, so it assumes finite inputs and agrees
with the numpy path only up to floating-point reduction order.  The
kernels are single-threaded: at desk-scale image sizes the launch cost of
a thread pool exceeds the win, and serial loops keep every result bitwise
reproducible.
"""

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

__all__ = [
    "HAVE_NUMBA",
    "get_backend",
    "set_backend",
    "conv2d",
    "conv2d_input_grad",
    "conv2d_weight_grad",
    "complex_corr2d",
    "complex_corr2d_adjoint",
]


def _env_wants_numba() -> bool:
    val = os.environ.get("PSFNET_NUMBA", "1").strip().lower()
    return val not in ("0", "false", "off", "no")


_backend = "numba" if (HAVE_NUMBA and _env_wants_numba()) else "numpy"


def get_backend() -> str:
    return _backend


def set_backend(name: str) -> None:
    global _backend
    if name not in ("numpy", "numba"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    _backend = name


# ---------------------------------------------------------------------------
# pure-numpy path (sliding windows + BLAS-backed tensordot)

def _pad2(x, ph, pw):
    return np.pad(x, ((0, 0), (ph, ph), (pw, pw)))


def _conv2d_np(x, w, b):
    kh, kw = w.shape[2], w.shape[3]
    win = sliding_window_view(_pad2(x, kh // 2, kw // 2), (kh, kw), axis=(1, 2))
    out = np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4]))
    return out + b[:, None, None]


def _conv2d_weight_grad_np(x, g, kh, kw):
    win = sliding_window_view(_pad2(x, kh // 2, kw // 2), (kh, kw), axis=(1, 2))
    return np.tensordot(g, win, axes=([1, 2], [1, 2]))


def _complex_corr2d_np(w, x):
    kh, kw = w.shape[2], w.shape[3]
    win = sliding_window_view(_pad2(x, kh // 2, kw // 2), (kh, kw), axis=(1, 2))
    return np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4]))


# ---------------------------------------------------------------------------
# numba path (parallel over independent outputs, so deterministic)

if HAVE_NUMBA:
    # The jitted bodies hold only scalar loops; padding and output
    # allocation happen outside, which keeps the generated code tight.

    @njit(cache=True, fastmath=True)
    def _conv2d_nb(w, b, xp, out):
        co, ci, kh, kw = w.shape
        h, wd = out.shape[1], out.shape[2]
        for o in range(co):
            for i in range(h):
                for j in range(wd):
                    out[o, i, j] = b[o]
            for c in range(ci):
                for a in range(kh):
                    for bb in range(kw):
                        wv = w[o, c, a, bb]
                        for i in range(h):
                            for j in range(wd):
                                out[o, i, j] += wv * xp[c, i + a, j + bb]

    @njit(cache=True, fastmath=True)
    def _conv2d3_nb(w, b, xp, out):
        # 3x3 specialization: taps live in registers, one store per pixel
        co, ci = w.shape[0], w.shape[1]
        h, wd = out.shape[1], out.shape[2]
        for o in range(co):
            for i in range(h):
                for j in range(wd):
                    out[o, i, j] = b[o]
            for c in range(ci):
                t00, t01, t02 = w[o, c, 0, 0], w[o, c, 0, 1], w[o, c, 0, 2]
                t10, t11, t12 = w[o, c, 1, 0], w[o, c, 1, 1], w[o, c, 1, 2]
                t20, t21, t22 = w[o, c, 2, 0], w[o, c, 2, 1], w[o, c, 2, 2]
                for i in range(h):
                    for j in range(wd):
                        out[o, i, j] += (
                            t00 * xp[c, i, j]
                            + t01 * xp[c, i, j + 1]
                            + t02 * xp[c, i, j + 2]
                            + t10 * xp[c, i + 1, j]
                            + t11 * xp[c, i + 1, j + 1]
                            + t12 * xp[c, i + 1, j + 2]
                            + t20 * xp[c, i + 2, j]
                            + t21 * xp[c, i + 2, j + 1]
                            + t22 * xp[c, i + 2, j + 2]
                        )

    @njit(cache=True, fastmath=True)
    def _conv2d_weight_grad_nb(xp, g, dw):
        co, ci, kh, kw = dw.shape
        h, wd = g.shape[1], g.shape[2]
        for o in range(co):
            for c in range(ci):
                for a in range(kh):
                    for bb in range(kw):
                        acc = 0.0
                        for i in range(h):
                            for j in range(wd):
                                acc += g[o, i, j] * xp[c, i + a, j + bb]
                        dw[o, c, a, bb] = acc

    @njit(cache=True, fastmath=True)
    def _conv2d3_weight_grad_nb(xp, g, dw):
        # 3x3 specialization: nine accumulators, one pass over the image
        co, ci = dw.shape[0], dw.shape[1]
        h, wd = g.shape[1], g.shape[2]
        for o in range(co):
            for c in range(ci):
                a00 = a01 = a02 = a10 = a11 = a12 = a20 = a21 = a22 = 0.0
                for i in range(h):
                    for j in range(wd):
                        gv = g[o, i, j]
                        a00 += gv * xp[c, i, j]
                        a01 += gv * xp[c, i, j + 1]
                        a02 += gv * xp[c, i, j + 2]
                        a10 += gv * xp[c, i + 1, j]
                        a11 += gv * xp[c, i + 1, j + 1]
                        a12 += gv * xp[c, i + 1, j + 2]
                        a20 += gv * xp[c, i + 2, j]
                        a21 += gv * xp[c, i + 2, j + 1]
                        a22 += gv * xp[c, i + 2, j + 2]
                dw[o, c, 0, 0], dw[o, c, 0, 1], dw[o, c, 0, 2] = a00, a01, a02
                dw[o, c, 1, 0], dw[o, c, 1, 1], dw[o, c, 1, 2] = a10, a11, a12
                dw[o, c, 2, 0], dw[o, c, 2, 1], dw[o, c, 2, 2] = a20, a21, a22

    @njit(cache=True, fastmath=True)
    def _complex_corr2d_nb(w, xp, out):
        co, ci, kh, kw = w.shape
        h, wd = out.shape[1], out.shape[2]
        for o in range(co):
            for i in range(h):
                for j in range(wd):
                    out[o, i, j] = 0.0 + 0.0j
            for c in range(ci):
                for a in range(kh):
                    for bb in range(kw):
                        wv = w[o, c, a, bb]
                        for i in range(h):
                            for j in range(wd):
                                out[o, i, j] += wv * xp[c, i + a, j + bb]


# ---------------------------------------------------------------------------
# dispatchers

def _padded(x, kh, kw):
    ci, h, wd = x.shape
    xp = np.zeros((ci, h + kh - 1, wd + kw - 1), dtype=x.dtype)
    xp[:, kh // 2 : kh // 2 + h, kw // 2 : kw // 2 + wd] = x
    return xp


def conv2d(x, w, b):
    """Same-padded 2-D cross-correlation: [Ci,H,W] x [Co,Ci,kh,kw] -> [Co,H,W]."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if _backend == "numba":
        kh, kw = w.shape[2], w.shape[3]
        xp = _padded(x, kh, kw)
        out = np.empty((w.shape[0], x.shape[1], x.shape[2]))
        if kh == 3 and kw == 3:
            _conv2d3_nb(w, b, xp, out)
        else:
            _conv2d_nb(w, b, xp, out)
        return out
    return _conv2d_np(x, w, b)


def conv2d_input_grad(g, w):
    """Cotangent of conv2d with respect to its input."""
    wt = np.ascontiguousarray(w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    zeros = np.zeros(wt.shape[0])
    return conv2d(g, wt, zeros)


def conv2d_weight_grad(x, g, kh, kw):
    """Cotangent of conv2d with respect to its weights: returns [Co,Ci,kh,kw]."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    g = np.ascontiguousarray(g, dtype=np.float64)
    if _backend == "numba":
        xp = _padded(x, kh, kw)
        dw = np.empty((g.shape[0], x.shape[0], kh, kw))
        if kh == 3 and kw == 3:
            _conv2d3_weight_grad_nb(xp, g, dw)
        else:
            _conv2d_weight_grad_nb(xp, g, dw)
        return dw
    return _conv2d_weight_grad_np(x, g, kh, kw)


def complex_corr2d(w, x):
    """Same-padded complex cross-correlation over k-space, all coils to all coils."""
    x = np.ascontiguousarray(x, dtype=np.complex128)
    w = np.ascontiguousarray(w, dtype=np.complex128)
    if _backend == "numba":
        kh, kw = w.shape[2], w.shape[3]
        xp = _padded(x, kh, kw)
        out = np.empty((w.shape[0], x.shape[1], x.shape[2]), dtype=np.complex128)
        _complex_corr2d_nb(w, xp, out)
        return out
    return _complex_corr2d_np(w, x)


def complex_corr2d_adjoint(w, g):
    """Adjoint of complex_corr2d in the standard complex inner product."""
    wt = np.conj(w.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    return complex_corr2d(wt, g)
