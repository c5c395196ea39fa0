import numpy as np
import pytest

from qpikit import ComplexField


def bandlimited_complex(rng, n, radius):
    """Random complex array whose spectrum is confined to |f| < radius cycles/px."""
    spec = np.zeros((n, n), dtype=np.complex128)
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.fftfreq(n)[None, :]
    sel = np.hypot(fx, fy) < radius
    spec[sel] = rng.normal(size=sel.sum()) + 1j * rng.normal(size=sel.sum())
    arr = np.fft.ifft2(spec)
    return arr / np.abs(arr).mean()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def flat_field():
    return ComplexField(np.ones((64, 64)), np.zeros((64, 64)), 0.1, 0.532)


def make_field(amplitude, phase, pixel_size=0.1, wavelength=0.532, **kw):
    return ComplexField(np.asarray(amplitude, float), np.asarray(phase, float),
                        pixel_size, wavelength, **kw)
