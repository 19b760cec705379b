"""Synthetic multi-coil scans: ellipse phantoms, sensitivity maps, k-space.

A scan bundles the sensitivity-weighted coil images, the maps themselves,
the fully sampled k-space (optionally noisy), the sampling mask and the
undersampled k-space with zeros at unacquired entries.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .sampling import SamplingMask, make_mask, split_for_selfsup
from .tensorfft import fft2c

__all__ = [
    "Ellipse",
    "PhantomConfig",
    "Scan",
    "shepp_logan_ellipses",
    "perturb_ellipses",
    "make_phantom",
    "make_sens_maps",
    "simulate_scan",
    "make_scan_set",
]


@dataclass(frozen=True)
class Ellipse:
    intensity: float
    cx: float
    cy: float
    a: float
    b: float
    theta_deg: float = 0.0


def shepp_logan_ellipses() -> list:
    """The classic 10-ellipse head phantom with high-contrast intensities."""
    rows = [
        (1.00, 0.00, 0.0000, 0.6900, 0.920, 0.0),
        (-0.80, 0.00, -0.0184, 0.6624, 0.874, 0.0),
        (-0.20, 0.22, 0.0000, 0.1100, 0.310, -18.0),
        (-0.20, -0.22, 0.0000, 0.1600, 0.410, 18.0),
        (0.10, 0.00, 0.3500, 0.2100, 0.250, 0.0),
        (0.10, 0.00, 0.1000, 0.0460, 0.046, 0.0),
        (0.10, 0.00, -0.1000, 0.0460, 0.046, 0.0),
        (0.10, -0.08, -0.6050, 0.0460, 0.023, 0.0),
        (0.10, 0.00, -0.6060, 0.0230, 0.023, 0.0),
        (0.10, 0.06, -0.6050, 0.0230, 0.046, 0.0),
    ]
    return [Ellipse(*r) for r in rows]


def perturb_ellipses(ellipses, rng, pos_jitter=0.03, axis_jitter=0.06, int_jitter=0.12):
    """Randomly jitter ellipse geometry/intensity to vary scans in a suite."""
    out = []
    for e in ellipses:
        out.append(
            Ellipse(
                intensity=e.intensity * (1.0 + int_jitter * rng.uniform(-1, 1)),
                cx=e.cx + pos_jitter * rng.uniform(-1, 1),
                cy=e.cy + pos_jitter * rng.uniform(-1, 1),
                a=max(1e-3, e.a * (1.0 + axis_jitter * rng.uniform(-1, 1))),
                b=max(1e-3, e.b * (1.0 + axis_jitter * rng.uniform(-1, 1))),
                theta_deg=e.theta_deg + 3.0 * rng.uniform(-1, 1),
            )
        )
    return out


@dataclass
class PhantomConfig:
    h: int
    w: int
    coils: int = 4
    ellipses: list = field(default_factory=shepp_logan_ellipses)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.coils < 1:
            raise ConfigError(f"coils must be >= 1, got {self.coils}")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        for e in self.ellipses:
            if e.a <= 0 or e.b <= 0:
                raise ConfigError("ellipse axes must be positive")


def make_phantom(cfg: PhantomConfig) -> np.ndarray:
    """Superpose ellipse indicator functions; real-valued, deterministic."""
    ys = (np.arange(cfg.h) - cfg.h / 2.0) / (cfg.h / 2.0)
    xs = (np.arange(cfg.w) - cfg.w / 2.0) / (cfg.w / 2.0)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    img = np.zeros((cfg.h, cfg.w), dtype=np.float64)
    for e in cfg.ellipses:
        t = np.deg2rad(e.theta_deg)
        dx, dy = xx - e.cx, yy - e.cy
        xr = dx * np.cos(t) + dy * np.sin(t)
        yr = -dx * np.sin(t) + dy * np.cos(t)
        img += e.intensity * ((xr / e.a) ** 2 + (yr / e.b) ** 2 <= 1.0)
    return img


def make_sens_maps(h, w, coils, seed=0) -> np.ndarray:
    """Smooth complex coil profiles, RSS-normalized to 1 at every pixel.

    Gaussian magnitude lobes sit at equispaced angles around the FOV and
    each coil carries a random linear phase; everything is deterministic
    for a given seed.
    """
    if coils < 1:
        raise ConfigError(f"coils must be >= 1, got {coils}")
    rng = np.random.default_rng(seed)
    ys = (np.arange(h) - h / 2.0) / (h / 2.0)
    xs = (np.arange(w) - w / 2.0) / (w / 2.0)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")

    maps = np.empty((coils, h, w), dtype=np.complex128)
    for c in range(coils):
        ang = 2.0 * np.pi * c / coils + rng.uniform(-0.05, 0.05)
        cx, cy = 0.9 * np.cos(ang), 0.9 * np.sin(ang)
        width = rng.uniform(0.85, 1.05)
        mag = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2.0 * width**2)) + 0.03
        slope = rng.uniform(-1.5, 1.5, size=2)
        offset = rng.uniform(-np.pi, np.pi)
        phase = slope[0] * xx + slope[1] * yy + offset
        maps[c] = mag * np.exp(1j * phase)

    rss = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return maps / rss


@dataclass
class Scan:
    """One simulated acquisition."""

    scan_id: str
    truth_img: np.ndarray
    sens_maps: np.ndarray
    full_ksp: np.ndarray
    mask: SamplingMask
    und_ksp: np.ndarray


def simulate_scan(phantom, sens_maps, mask: SamplingMask, noise_sigma=0.0, seed=0,
                  scan_id="scan") -> Scan:
    """Forward-model a phantom into masked multi-coil k-space data."""
    phantom = np.asarray(phantom)
    sens_maps = np.asarray(sens_maps)
    if sens_maps.shape[1:] != phantom.shape or mask.mask.shape != phantom.shape:
        raise ValueError(
            f"shape mismatch: phantom {phantom.shape}, maps {sens_maps.shape}, "
            f"mask {mask.mask.shape}"
        )
    truth = sens_maps * phantom[None]
    full = fft2c(truth)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        noise = rng.standard_normal(full.shape) + 1j * rng.standard_normal(full.shape)
        full = full + noise_sigma * noise
    und = full * mask.mask[None]
    return Scan(scan_id, truth, sens_maps, full, mask, und)


def make_scan_set(n_scans, h, w, coils, accel, pattern="variable", calib_size=16,
                  noise_sigma=0.0, seed=0, selfsup=False, loss_frac=0.4,
                  id_prefix="scan") -> list:
    """Generate a deterministic suite of jittered-phantom scans."""
    rng = np.random.default_rng(seed)
    sub_seeds = rng.integers(0, 2**31 - 1, size=(n_scans, 4))
    base = shepp_logan_ellipses()
    scans = []
    for i in range(n_scans):
        s_ell, s_map, s_mask, s_noise = (int(v) for v in sub_seeds[i])
        ellipses = perturb_ellipses(base, np.random.default_rng(s_ell))
        cfg = PhantomConfig(h=h, w=w, coils=coils, ellipses=ellipses)
        phantom = make_phantom(cfg)
        maps = make_sens_maps(h, w, coils, seed=s_map)
        mask = make_mask(h, w, accel, pattern=pattern, calib_size=calib_size, seed=s_mask)
        if selfsup:
            mask = split_for_selfsup(mask, loss_frac=loss_frac, seed=s_mask + 1)
        scans.append(
            simulate_scan(phantom, maps, mask, noise_sigma=noise_sigma, seed=s_noise,
                          scan_id=f"{id_prefix}{i:03d}")
        )
    return scans
