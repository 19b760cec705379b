"""Centered unitary 2-D Fourier transforms and complex norms.

Convention: the zero-frequency sample sits at (h//2, w//2) and both
directions carry 1/sqrt(h*w) scaling, so the transform is unitary and
fft2c/ifft2c are exact inverses and adjoints of each other.
"""

import numpy as np

__all__ = ["fft2c", "ifft2c", "lp_norm"]


def _check_image(x) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim < 2:
        raise ValueError(f"expected at least 2 dimensions, got shape {x.shape}")
    if x.shape[-2] < 2 or x.shape[-1] < 2:
        raise ValueError(f"spatial extents must be >= 2, got shape {x.shape}")
    return x


def fft2c(img) -> np.ndarray:
    """Centered unitary 2-D DFT applied over the trailing two axes."""
    img = _check_image(img)
    shifted = np.fft.ifftshift(img, axes=(-2, -1))
    ksp = np.fft.fft2(shifted, norm="ortho")
    return np.fft.fftshift(ksp, axes=(-2, -1))


def ifft2c(ksp) -> np.ndarray:
    """Inverse of fft2c, same centering and unitary scaling."""
    ksp = _check_image(ksp)
    shifted = np.fft.ifftshift(ksp, axes=(-2, -1))
    img = np.fft.ifft2(shifted, norm="ortho")
    return np.fft.fftshift(img, axes=(-2, -1))


def lp_norm(x, p: int = 2) -> float:
    """l1 (sum of magnitudes) or l2 (Euclidean) norm of a flattened tensor."""
    x = np.asarray(x)
    if p == 1:
        return float(np.sum(np.abs(x)))
    if p == 2:
        return float(np.linalg.norm(x.ravel()))
    raise ValueError(f"p must be 1 or 2, got {p}")
