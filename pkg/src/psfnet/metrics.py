"""Image quality metrics and the signed-rank test used to compare methods.

PSNR and SSIM operate on coil-combined magnitude images; the SSIM window
is the usual 11x11 Gaussian (sigma 1.5) with K1=0.01, K2=0.03 and the
dynamic range tied to the reference image.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError

__all__ = ["psnr", "ssim", "wilcoxon_signed_rank", "mean_stderr", "EvalReport"]


def psnr(recon_mag, ref_mag) -> float:
    """20*log10(max(ref)/rmse); +inf for identical images."""
    recon_mag = np.asarray(recon_mag, dtype=np.float64)
    ref_mag = np.asarray(ref_mag, dtype=np.float64)
    if recon_mag.shape != ref_mag.shape:
        raise ValueError(f"shape mismatch: {recon_mag.shape} vs {ref_mag.shape}")
    mse = float(np.mean((recon_mag - ref_mag) ** 2))
    if mse == 0.0:
        return math.inf
    return 20.0 * math.log10(float(ref_mag.max()) / math.sqrt(mse))


def _gaussian_window(size=11, sigma=1.5):
    ax = np.arange(size) - size // 2
    k = np.exp(-(ax**2) / (2.0 * sigma**2))
    win = np.outer(k, k)
    return win / win.sum()


def ssim(recon_mag, ref_mag, win_size=11, sigma=1.5, k1=0.01, k2=0.03) -> float:
    """Mean local SSIM over all fully interior windows."""
    x = np.asarray(recon_mag, dtype=np.float64)
    y = np.asarray(ref_mag, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    if min(x.shape) < win_size:
        raise ConfigError(f"images must be at least {win_size}x{win_size}")
    win = _gaussian_window(win_size, sigma)

    def filt(img):
        v = sliding_window_view(img, (win_size, win_size))
        return np.tensordot(v, win, axes=([2, 3], [0, 1]))

    mu_x = filt(x)
    mu_y = filt(y)
    var_x = filt(x * x) - mu_x**2
    var_y = filt(y * y) - mu_y**2
    cov = filt(x * y) - mu_x * mu_y

    rng_max = float(y.max())
    dyn = rng_max if rng_max > 0 else 1.0
    c1 = (k1 * dyn) ** 2
    c2 = (k2 * dyn) ** 2
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def _midranks(v):
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _exact_two_sided(ranks, w_pos) -> float:
    # distribution of W+ over all sign assignments, via integer DP on 2*rank
    r2 = np.rint(2.0 * ranks).astype(np.int64)
    counts = np.zeros(int(r2.sum()) + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in r2:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    total = counts.sum()
    w2 = int(np.rint(2.0 * w_pos))
    p_le = counts[: w2 + 1].sum() / total
    p_ge = counts[w2:].sum() / total
    return min(1.0, 2.0 * min(p_le, p_ge))


def wilcoxon_signed_rank(a, b) -> float:
    """Two-sided paired signed-rank p-value.

    Zero differences are dropped and ties get mid-ranks.  The null
    distribution is enumerated exactly for up to 20 non-zero pairs and
    normal-approximated (with tie and continuity corrections) beyond.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ConfigError("inputs must be equal-length 1-D arrays")
    if a.size < 5:
        raise ConfigError(f"need at least 5 pairs, got {a.size}")
    d = np.where(a == b, 0.0, a - b)  # inf == inf counts as a tie, not inf - inf
    d = d[d != 0]
    if d.size == 0:
        return 1.0
    ranks = _midranks(np.abs(d))
    w_pos = float(ranks[d > 0].sum())
    m = d.size
    if m <= 20:
        return _exact_two_sided(ranks, w_pos)

    mu = m * (m + 1) / 4.0
    _, tie_counts = np.unique(np.abs(d), return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / 48.0
    var = m * (m + 1) * (2 * m + 1) / 24.0 - tie_term
    if var <= 0:
        return 1.0
    z = max(0.0, abs(w_pos - mu) - 0.5) / math.sqrt(var)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mean_stderr(values):
    """Sample mean and standard error."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ConfigError("no values")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


@dataclass
class EvalReport:
    """Per-scan metrics, per-method aggregates, pairwise signed-rank p-values."""

    scan_ids: list
    per_scan: dict = field(default_factory=dict)   # method -> list[(psnr, ssim)]
    pairwise: dict = field(default_factory=dict)   # (m1, m2, metric) -> p

    def add_method(self, method, psnrs, ssims):
        self.per_scan[method] = list(zip(psnrs, ssims))

    def summary(self, method):
        vals = self.per_scan[method]
        mp, sp = mean_stderr([v[0] for v in vals])
        ms, ss = mean_stderr([v[1] for v in vals])
        return mp, sp, ms, ss

    def run_pairwise(self):
        methods = sorted(self.per_scan)
        for i, m1 in enumerate(methods):
            for m2 in methods[i + 1 :]:
                for mi, name in ((0, "psnr"), (1, "ssim")):
                    x = [v[mi] for v in self.per_scan[m1]]
                    y = [v[mi] for v in self.per_scan[m2]]
                    try:
                        p = wilcoxon_signed_rank(x, y)
                    except ConfigError:
                        p = math.nan
                    self.pairwise[(m1, m2, name)] = p
