"""Random k-space undersampling masks and the self-supervision split.

Masks are drawn point-wise from a density that is either a bivariate
normal peaking at the k-space center (variable) or a constant (uniform).
The density's free parameter is bisected so the expected sample count,
including the forced fully-sampled calibration window, hits h*w/R within
1%.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

__all__ = ["SamplingMask", "make_mask", "split_for_selfsup"]

PATTERNS = ("variable", "uniform")


@dataclass
class SamplingMask:
    """Binary acquisition mask plus calibration window geometry.

    calib is (row0, col0, rows, cols).  split, when present, is a
    (dc_mask, loss_mask) pair partitioning the acquired entries.
    """

    mask: np.ndarray
    calib: tuple
    accel_target: float
    pattern: str
    seed: int
    split: tuple | None = None

    @property
    def dc_mask(self) -> np.ndarray:
        if self.split is None:
            raise ConfigError("mask carries no self-supervision split")
        return self.split[0]

    @property
    def loss_mask(self) -> np.ndarray:
        if self.split is None:
            raise ConfigError("mask carries no self-supervision split")
        return self.split[1]


def _center_window(h, w, size):
    ch = cw = int(size)
    return (h // 2 - ch // 2, w // 2 - cw // 2, ch, cw)


def _density(h, w, calib, pattern, param):
    if pattern == "variable":
        ii = np.arange(h) - h // 2
        jj = np.arange(w) - w // 2
        r2 = ii[:, None] ** 2 + jj[None, :] ** 2
        dens = np.exp(-r2 / (2.0 * param**2))
    else:
        dens = np.full((h, w), param)
    h0, w0, ch, cw = calib
    dens = np.minimum(dens, 1.0)
    dens[h0 : h0 + ch, w0 : w0 + cw] = 1.0
    return dens


def make_mask(h, w, accel, pattern="variable", calib_size=16, seed=0) -> SamplingMask:
    """Draw an undersampling mask targeting acceleration rate accel."""
    if pattern not in PATTERNS:
        raise ConfigError(f"pattern must be one of {PATTERNS}, got {pattern!r}")
    if accel < 1.0:
        raise ConfigError(f"acceleration rate must be >= 1, got {accel}")
    if calib_size > min(h, w):
        raise ConfigError("calibration window exceeds grid")
    calib = _center_window(h, w, calib_size)
    n_calib = calib[2] * calib[3]
    target = h * w / accel
    if target < n_calib:
        raise ConfigError(
            f"acceleration {accel} infeasible: calibration window alone has "
            f"{n_calib} samples but the budget is {target:.1f}"
        )

    if target >= h * w * (1.0 - 1e-12):
        mask = np.ones((h, w), dtype=np.uint8)
        return SamplingMask(mask, calib, float(accel), pattern, int(seed))

    def expected(param):
        return float(_density(h, w, calib, pattern, param).sum())

    lo, hi = (1e-3, 8.0 * max(h, w)) if pattern == "variable" else (0.0, 1.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        e = expected(mid)
        if abs(e - target) <= 0.01 * target:
            break
        if e < target:
            lo = mid
        else:
            hi = mid
    dens = _density(h, w, calib, pattern, mid)

    rng = np.random.default_rng(seed)
    mask = (rng.random((h, w)) < dens).astype(np.uint8)
    h0, w0, ch, cw = calib
    mask[h0 : h0 + ch, w0 : w0 + cw] = 1
    return SamplingMask(mask, calib, float(accel), pattern, int(seed))


def split_for_selfsup(mask: SamplingMask, loss_frac=0.4, seed=0) -> SamplingMask:
    """Partition acquired entries into DC and loss sets for self-supervision.

    Calibration-window entries always land in the DC set; the remaining
    acquired entries are split uniformly at random with at least one loss
    entry.
    """
    if mask.split is not None:
        raise ConfigError("mask already carries a split")
    if not 0.0 < loss_frac < 1.0:
        raise ConfigError(f"loss_frac must lie in (0, 1), got {loss_frac}")
    h0, w0, ch, cw = mask.calib
    in_calib = np.zeros_like(mask.mask, dtype=bool)
    in_calib[h0 : h0 + ch, w0 : w0 + cw] = True
    outside = np.flatnonzero((mask.mask == 1) & ~in_calib)
    if outside.size == 0:
        raise ConfigError("no acquired entries outside the calibration window")

    n_loss = max(1, int(round(loss_frac * outside.size)))
    rng = np.random.default_rng(seed)
    chosen = rng.permutation(outside)[:n_loss]

    loss = np.zeros_like(mask.mask)
    loss.ravel()[chosen] = 1
    dcm = (mask.mask & ~loss).astype(np.uint8)
    return replace(mask, split=(dcm, loss))
