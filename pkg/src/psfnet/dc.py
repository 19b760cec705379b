"""Data-consistency projection in k-space.

dc_project blends the k-space of the current image estimate toward the
acquired samples at masked locations; with lam=inf the acquired values
replace the estimate exactly.  Entries outside the mask pass through
unchanged.  The map is affine in the image; dc_linear is its linear part,
which is self-adjoint because the mask weighting is real and diagonal in
k-space and the transforms are unitary.
"""

import numpy as np

from .tensorfft import fft2c, ifft2c

__all__ = ["dc_project", "dc_linear"]


def _blend(ksp, und_ksp, dc_mask, lam):
    m = np.asarray(dc_mask).astype(bool)
    if np.isinf(lam):
        return np.where(m, und_ksp, ksp)
    return np.where(m, (ksp + lam * und_ksp) / (1.0 + lam), ksp)


def dc_project(x, und_ksp, dc_mask, lam=np.inf):
    """Restore acquired k-space data into the estimate x at dc_mask entries."""
    x = np.asarray(x)
    und_ksp = np.asarray(und_ksp)
    if x.shape != und_ksp.shape or x.shape[-2:] != np.asarray(dc_mask).shape:
        raise ValueError(
            f"shape mismatch: x {x.shape}, und_ksp {und_ksp.shape}, "
            f"mask {np.asarray(dc_mask).shape}"
        )
    if not lam > 0:
        raise ValueError(f"lam must be positive or inf, got {lam}")
    return ifft2c(_blend(fft2c(x), und_ksp, dc_mask, lam))


def dc_linear(x, dc_mask, lam=np.inf):
    """Linear part of dc_project (acquired entries scaled by 1/(1+lam))."""
    ksp = fft2c(x)
    m = np.asarray(dc_mask).astype(bool)
    if np.isinf(lam):
        out = np.where(m, 0.0, ksp)
    else:
        out = np.where(m, ksp / (1.0 + lam), ksp)
    return ifft2c(out)
