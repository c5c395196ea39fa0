"""System-aberration modeling: Zernike basis, synthetic multipliers, and the
two classical correctors (background subtraction and Zernike fitting).

Zernike modes use Noll single-indexing with RMS-unit normalization (the disc
average of Z_j^2 is 1), so fitted coefficients read directly as radians RMS.
The unit disc is inscribed in the image; pixels outside it use the natural
polynomial continuation for synthesis but are excluded from fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import BadBackground, DomainError, UnderdeterminedFit
from .field import ComplexField
from .unwrap import wrap_phase

AMPLITUDE_FLOOR_FRACTION = 1e-6


def noll_to_nm(j: int) -> tuple[int, int]:
    """Convert a Noll index (j >= 1) to radial degree n and azimuthal order m."""
    if j < 1:
        raise DomainError(f"Noll indices start at 1, got {j}")
    n = 0
    j1 = j - 1
    while j1 > n:
        n += 1
        j1 -= n
    m = (-1) ** j * ((n % 2) + 2 * ((j1 + (n + 1) % 2) // 2))
    return n, m


def _radial(n: int, m: int, rho: np.ndarray) -> np.ndarray:
    m = abs(m)
    out = np.zeros_like(rho)
    for k in range((n - m) // 2 + 1):
        coeff = ((-1.0) ** k * _fact(n - k)
                 / (_fact(k) * _fact((n + m) // 2 - k) * _fact((n - m) // 2 - k)))
        out = out + coeff * rho ** (n - 2 * k)
    return out


def _fact(k: int) -> float:
    out = 1.0
    for i in range(2, k + 1):
        out *= i
    return out


def _zernike_nocheck(j: int, rho: np.ndarray, theta: np.ndarray) -> np.ndarray:
    n, m = noll_to_nm(j)
    radial = _radial(n, m, rho)
    if m == 0:
        return np.sqrt(n + 1.0) * radial
    norm = np.sqrt(2.0 * (n + 1.0))
    if m > 0:
        return norm * radial * np.cos(m * theta)
    return norm * radial * np.sin(-m * theta)


def zernike_eval(j: int, points) -> np.ndarray:
    """Evaluate orthonormal Zernike mode Z_j at (rho, theta) points on the unit disc."""
    pts = np.asarray(points, dtype=np.float64)
    rho, theta = pts[..., 0], pts[..., 1]
    if np.any(rho > 1.0) or np.any(rho < 0.0):
        raise DomainError("rho must lie in [0, 1]")
    return _zernike_nocheck(j, rho, theta)


def unit_disc_coords(height: int, width: int) -> tuple[np.ndarray, np.ndarray]:
    """(rho, theta) grids for the unit disc inscribed in a height x width image."""
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    radius = (min(height, width) - 1) / 2.0
    y = (np.arange(height) - cy)[:, None] / radius
    x = (np.arange(width) - cx)[None, :] / radius
    return np.hypot(x, y), np.arctan2(y, x)


def zernike_surface(coeffs, height: int, width: int) -> np.ndarray:
    """Sum of c_j * Z_j over the image, with polynomial continuation outside the disc."""
    rho, theta = unit_disc_coords(height, width)
    surface = np.zeros((height, width))
    for j, c in coeffs:
        if c != 0.0:
            surface += c * _zernike_nocheck(int(j), rho, theta)
    return surface


@dataclass
class AberrationModel:
    """Zernike coefficients plus parasitic-fringe terms describing W(x, y).

    ``zernike_coeffs`` is a list of (noll_index, coefficient-in-radians);
    ``fringes`` a list of (amplitude, fx, fy, phase_offset) with frequencies
    in cycles/pixel; ``envelope_sigma`` a Gaussian illumination-envelope width
    in pixels (0 disables).
    """

    zernike_coeffs: list = dc_field(default_factory=list)
    fringes: list = dc_field(default_factory=list)
    envelope_sigma: float = 0.0

    def __post_init__(self):
        indices = [int(j) for j, _ in self.zernike_coeffs]
        if len(indices) != len(set(indices)):
            raise ValueError("duplicate Noll indices in aberration model")
        if any(not np.isfinite(c) for _, c in self.zernike_coeffs):
            raise ValueError("non-finite Zernike coefficient")
        if any(a < 0 for a, _, _, _ in self.fringes):
            raise ValueError("fringe amplitudes must be >= 0")

    def truth_pairs(self) -> list:
        """[[j, c], ...] for QPIF metadata."""
        return [[int(j), float(c)] for j, c in self.zernike_coeffs]


def synth_aberration(model: AberrationModel, width: int, height: int,
                     pixel_size: float = 1.0, wavelength: float = 1.0) -> ComplexField:
    """Complex multiplier field realizing an aberration model.

    Phase is the Zernike surface plus a_k * sin(2 pi (fx x + fy y) + delta_k)
    per fringe; amplitude is the Gaussian envelope times the fringe
    interference modulus |1 + sum a_k e^{i(...)}|.
    """
    phase = zernike_surface(model.zernike_coeffs, height, width)
    amplitude = np.ones((height, width))

    if model.fringes:
        y, x = np.mgrid[0:height, 0:width]
        interference = np.ones((height, width), dtype=np.complex128)
        for a, fx, fy, delta in model.fringes:
            theta = 2.0 * np.pi * (fx * x + fy * y) + delta
            phase += a * np.sin(theta)
            interference += a * np.exp(1j * theta)
        amplitude *= np.abs(interference)

    if model.envelope_sigma > 0:
        cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
        y = (np.arange(height) - cy)[:, None]
        x = (np.arange(width) - cx)[None, :]
        amplitude *= np.exp(-(x ** 2 + y ** 2) / (2.0 * model.envelope_sigma ** 2))

    return ComplexField(amplitude, phase, pixel_size, wavelength)


def apply_aberration(field: ComplexField, multiplier: ComplexField) -> ComplexField:
    """Pointwise complex product of a field with an aberration multiplier."""
    return ComplexField(
        field.amplitude * multiplier.amplitude,
        field.phase + multiplier.phase,
        field.pixel_size, field.wavelength,
    )


def correct_background(sample: ComplexField, background: ComplexField) -> ComplexField:
    """Divide the sample field by an object-free background field.

    Output amplitude is the ratio, output phase the wrapped difference. The
    background amplitude must exceed 1e-6 of its mean everywhere.
    """
    if sample.shape != background.shape:
        raise BadBackground(
            f"shape mismatch: sample {sample.shape} vs background {background.shape}"
        )
    floor = AMPLITUDE_FLOOR_FRACTION * float(background.amplitude.mean())
    low = background.amplitude <= floor
    if low.any():
        r, c = np.argwhere(low)[0]
        raise BadBackground(
            f"background amplitude at or below floor {floor:.3e} at pixel ({r}, {c})"
        )
    return ComplexField(
        sample.amplitude / background.amplitude,
        wrap_phase(sample.phase - background.phase),
        sample.pixel_size, sample.wavelength, wrapped=True,
    )


def fit_zernike(phase: np.ndarray, max_noll: int,
                mask: np.ndarray | None = None) -> np.ndarray:
    """Least-squares Zernike coefficients of an unwrapped phase grid.

    The fit runs over masked pixels inside the unit disc; pixels with rho > 1
    never participate. Returns coefficients for Noll indices 1..max_noll.
    """
    phase = np.asarray(phase, dtype=np.float64)
    h, w = phase.shape
    rho, theta = unit_disc_coords(h, w)
    select = rho <= 1.0
    if mask is not None:
        select &= np.asarray(mask, dtype=bool)
    n_pix = int(select.sum())
    if n_pix < max_noll:
        raise UnderdeterminedFit(
            f"{n_pix} masked pixels cannot determine {max_noll} Zernike modes"
        )
    design = np.column_stack(
        [_zernike_nocheck(j, rho[select], theta[select]) for j in range(1, max_noll + 1)]
    )
    coeffs, *_ = np.linalg.lstsq(design, phase[select], rcond=None)
    return coeffs


def correct_zernike_fit(field: ComplexField, max_noll: int,
                        mask: np.ndarray | None = None) -> tuple[ComplexField, np.ndarray]:
    """Subtract the fitted Zernike surface from a field's unwrapped phase.

    Returns the corrected field and the fitted coefficients (Noll 1..max_noll,
    radians RMS). Amplitude is unchanged; the subtracted surface extends over
    the whole image by polynomial continuation.
    """
    coeffs = fit_zernike(field.phase, max_noll, mask)
    surface = zernike_surface(list(enumerate(coeffs, start=1)), field.height, field.width)
    corrected = ComplexField(field.amplitude.copy(), field.phase - surface,
                             field.pixel_size, field.wavelength)
    return corrected, coeffs


@dataclass
class AberrationSampling:
    """Distribution of instrument aberrations for dataset generation.

    Zernike coefficients (Noll 2..max_noll, piston excluded) are zero-mean
    Gaussian with std sigma0 / j; 0..fringes_max parasitic fringes get
    amplitude U(amp_range), frequency magnitude U(freq_range) with a random
    direction, and a uniform phase offset.
    """

    sigma0: float = 1.0
    max_noll: int = 15
    fringes_max: int = 2
    amp_range: tuple[float, float] = (0.02, 0.15)
    freq_range: tuple[float, float] = (0.02, 0.10)
    envelope_sigma: float = 0.0


def sample_aberration(rng: np.random.Generator,
                      sampling: AberrationSampling | None = None) -> AberrationModel:
    """Draw a random aberration model for one scene."""
    s = sampling or AberrationSampling()
    coeffs = [(j, rng.normal(0.0, s.sigma0 / j)) for j in range(2, s.max_noll + 1)]
    fringes = []
    for _ in range(int(rng.integers(0, s.fringes_max + 1))):
        amp = rng.uniform(*s.amp_range)
        freq = rng.uniform(*s.freq_range)
        angle = rng.uniform(0.0, 2.0 * np.pi)
        fringes.append((amp, freq * np.cos(angle), freq * np.sin(angle),
                        rng.uniform(0.0, 2.0 * np.pi)))
    return AberrationModel(coeffs, fringes, s.envelope_sigma)
