import numpy as np
import pytest

from conftest import random_complex
from psfnet.tensorfft import fft2c, ifft2c, lp_norm


def test_constant_image_gives_center_only_spectrum():
    img = np.full((1, 4, 4), 3.5 + 0j)
    ksp = fft2c(img)
    assert ksp[0, 2, 2] == pytest.approx(4 * 3.5)
    ksp[0, 2, 2] = 0
    assert np.abs(ksp).max() < 1e-12


def test_center_spike_inverts_to_constant(rng):
    ksp = np.zeros((1, 8, 8), dtype=complex)
    v = 2.0 - 1.0j
    ksp[0, 4, 4] = v
    img = ifft2c(ksp)
    assert np.allclose(img, v / 8.0, atol=1e-12)


def test_zero_roundtrip():
    z = np.zeros((2, 6, 6), dtype=complex)
    assert np.abs(ifft2c(z)).max() == 0.0
    assert np.abs(fft2c(z)).max() == 0.0


def test_roundtrip_identity(rng):
    for _ in range(20):
        x = random_complex(rng, (3, 12, 10))
        assert np.abs(ifft2c(fft2c(x)) - x).max() <= 1e-12 * np.abs(x).max()
        assert np.abs(fft2c(ifft2c(x)) - x).max() <= 1e-12 * np.abs(x).max()


def test_parseval(rng):
    for _ in range(20):
        x = random_complex(rng, (2, 16, 16))
        assert abs(lp_norm(fft2c(x)) - lp_norm(x)) <= 1e-10 * lp_norm(x)


def test_linearity(rng):
    x = random_complex(rng, (2, 8, 8))
    z = random_complex(rng, (2, 8, 8))
    a, b = 1.7 - 0.3j, -0.6 + 2.2j
    lhs = fft2c(a * x + b * z)
    rhs = a * fft2c(x) + b * fft2c(z)
    assert np.abs(lhs - rhs).max() <= 1e-10 * np.abs(rhs).max()


def test_odd_dimensions_roundtrip(rng):
    x = random_complex(rng, (1, 7, 9))
    assert np.allclose(ifft2c(fft2c(x)), x, atol=1e-12)
    # DC lands at floor(n/2)
    const = np.ones((1, 7, 9), dtype=complex)
    ksp = fft2c(const)
    assert abs(ksp[0, 3, 4]) == pytest.approx(np.sqrt(63))


def test_shape_errors():
    with pytest.raises(ValueError):
        fft2c(np.ones(5))
    with pytest.raises(ValueError):
        ifft2c(np.ones((3, 1, 4)))


def test_norm_single_element():
    x = np.array([3.0 + 4.0j])
    assert lp_norm(x, 1) == pytest.approx(5.0)
    assert lp_norm(x, 2) == pytest.approx(5.0)


def test_norm_two_elements():
    x = np.array([1.0, 1.0j])
    assert lp_norm(x, 1) == pytest.approx(2.0)
    assert lp_norm(x, 2) == pytest.approx(np.sqrt(2.0))


def test_norm_against_accumulation_oracle(rng):
    x = random_complex(rng, (4, 5, 6))
    acc = 0.0
    for v in x.ravel():
        acc += abs(v) ** 2
    assert lp_norm(x, 2) ** 2 == pytest.approx(acc, rel=1e-12)
    with pytest.raises(ValueError):
        lp_norm(x, 3)
