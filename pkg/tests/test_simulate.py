import numpy as np
import pytest

from psfnet.cascade import coil_combine
from psfnet.errors import ConfigError
from psfnet.sampling import make_mask
from psfnet.simulate import (Ellipse, PhantomConfig, make_phantom, make_scan_set,
                             make_sens_maps, perturb_ellipses, shepp_logan_ellipses,
                             simulate_scan)
from psfnet.tensorfft import fft2c, ifft2c


def test_zero_ellipses_gives_zero_image():
    img = make_phantom(PhantomConfig(h=16, w=16, ellipses=[]))
    assert np.abs(img).max() == 0.0


def test_full_cover_ellipse_gives_ones():
    big = [Ellipse(intensity=1.0, cx=0, cy=0, a=2.0, b=2.0)]
    img = make_phantom(PhantomConfig(h=12, w=12, ellipses=big))
    assert np.all(img == 1.0)


def test_center_pixel_matches_point_in_ellipse_oracle():
    cfg = PhantomConfig(h=64, w=64)
    img = make_phantom(cfg)
    # oracle: sum intensities of ellipses containing the center pixel (0, 0)
    expected = 0.0
    for e in cfg.ellipses:
        t = np.deg2rad(e.theta_deg)
        dx, dy = -e.cx, -e.cy
        xr = dx * np.cos(t) + dy * np.sin(t)
        yr = -dx * np.sin(t) + dy * np.cos(t)
        if (xr / e.a) ** 2 + (yr / e.b) ** 2 <= 1.0:
            expected += e.intensity
    assert img[32, 32] == pytest.approx(expected)


def test_phantom_is_real_and_deterministic():
    cfg = PhantomConfig(h=32, w=32)
    a = make_phantom(cfg)
    b = make_phantom(cfg)
    assert a.dtype == np.float64
    assert np.array_equal(a, b)


def test_invalid_ellipse_axes_rejected():
    with pytest.raises(ConfigError):
        PhantomConfig(h=8, w=8, ellipses=[Ellipse(1.0, 0, 0, 0.0, 0.5)])
    with pytest.raises(ConfigError):
        PhantomConfig(h=8, w=8, coils=0)


def test_single_coil_map_has_unit_magnitude():
    maps = make_sens_maps(16, 16, 1, seed=3)
    assert np.allclose(np.abs(maps), 1.0, atol=1e-10)


def test_rss_normalization():
    maps = make_sens_maps(24, 20, 5, seed=9)
    rss = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    assert np.abs(rss - 1.0).max() <= 1e-10


def test_sens_maps_bitwise_deterministic():
    a = make_sens_maps(16, 16, 4, seed=11)
    b = make_sens_maps(16, 16, 4, seed=11)
    assert np.array_equal(a, b)
    c = make_sens_maps(16, 16, 4, seed=12)
    assert not np.array_equal(a, c)


def _toy_scan(noise=0.0, seed=0, accel=1.0):
    cfg = PhantomConfig(h=16, w=16, coils=3)
    phantom = make_phantom(cfg)
    maps = make_sens_maps(16, 16, 3, seed=2)
    mask = make_mask(16, 16, accel, calib_size=8, seed=4)
    return simulate_scan(phantom, maps, mask, noise_sigma=noise, seed=seed), phantom


def test_full_mask_noiseless_und_equals_fft_of_truth():
    scan, _ = _toy_scan()
    assert np.array_equal(scan.und_ksp, scan.full_ksp)
    assert np.abs(scan.full_ksp - fft2c(scan.truth_img)).max() <= 1e-10


def test_masked_entries_are_zero():
    scan, _ = _toy_scan(accel=2.0)
    unacquired = scan.mask.mask == 0
    assert np.abs(scan.und_ksp[:, unacquired]).max() == 0.0


def test_noisy_scan_is_seed_deterministic():
    a, _ = _toy_scan(noise=0.05, seed=7)
    b, _ = _toy_scan(noise=0.05, seed=7)
    assert np.array_equal(a.full_ksp, b.full_ksp)
    c, _ = _toy_scan(noise=0.05, seed=8)
    assert not np.array_equal(a.full_ksp, c.full_ksp)


def test_zero_filled_of_full_scan_recovers_truth():
    scan, _ = _toy_scan()
    zf = ifft2c(scan.und_ksp)
    assert np.abs(zf - scan.truth_img).max() <= 1e-10


def test_coil_combine_recovers_phantom():
    scan, phantom = _toy_scan()
    combined = coil_combine(scan.truth_img, scan.sens_maps)
    assert np.abs(combined - phantom).max() <= 1e-10


def test_shape_mismatch_rejected():
    cfg = PhantomConfig(h=16, w=16, coils=2)
    phantom = make_phantom(cfg)
    maps = make_sens_maps(16, 12, 2, seed=0)
    mask = make_mask(16, 16, 1.0, calib_size=8, seed=0)
    with pytest.raises(ValueError):
        simulate_scan(phantom, maps, mask)


def test_perturb_ellipses_varies_but_preserves_count():
    base = shepp_logan_ellipses()
    out = perturb_ellipses(base, np.random.default_rng(0))
    assert len(out) == len(base)
    assert any(a != b for a, b in zip(out, base))


def test_make_scan_set_is_deterministic_and_distinct():
    a = make_scan_set(3, 24, 24, 2, 2.0, calib_size=8, seed=5)
    b = make_scan_set(3, 24, 24, 2, 2.0, calib_size=8, seed=5)
    assert [s.scan_id for s in a] == ["scan000", "scan001", "scan002"]
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.und_ksp, sb.und_ksp)
    assert not np.array_equal(a[0].truth_img, a[1].truth_img)


def test_make_scan_set_selfsup_carries_split():
    scans = make_scan_set(2, 24, 24, 2, 2.0, calib_size=8, seed=5, selfsup=True)
    for s in scans:
        assert s.mask.split is not None
