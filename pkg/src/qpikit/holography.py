"""Off-axis hologram synthesis and Fourier sideband (Takeda) retrieval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidCarrier, InvalidField, SidebandOverlap
from .field import ComplexField, read_planes, write_planes

# Fraction of the filter radius over which the sideband mask rolls off.
EDGE_TAPER = 0.10


@dataclass
class Carrier:
    """Off-axis reference tilt in cycles/pixel."""

    fx: float
    fy: float
    reference_amplitude: float = 1.0

    @property
    def magnitude(self) -> float:
        return float(np.hypot(self.fx, self.fy))

    def validate(self) -> None:
        if self.reference_amplitude <= 0:
            raise InvalidCarrier("reference amplitude must be positive")
        m = self.magnitude
        if not 0.0 < m < 0.5:
            raise InvalidCarrier(
                f"carrier magnitude {m:.4f} must lie strictly between 0 and Nyquist (0.5)"
            )


@dataclass
class Hologram:
    """Real-valued off-axis interference intensity with carrier metadata."""

    intensity: np.ndarray
    carrier: Carrier
    pixel_size: float
    wavelength: float

    def __post_init__(self):
        self.intensity = np.asarray(self.intensity, dtype=np.float64)

    @property
    def shape(self) -> tuple[int, int]:
        return self.intensity.shape

    def validate(self) -> None:
        if not np.all(np.isfinite(self.intensity)):
            raise InvalidField("hologram intensity contains non-finite values")
        if np.any(self.intensity < 0):
            raise InvalidField("hologram intensity contains negative values")
        self.carrier.validate()


def synth_hologram(field: ComplexField, carrier: Carrier, noise_std: float = 0.0,
                   rng: np.random.Generator | None = None) -> Hologram:
    """Interfere a field with a tilted plane reference.

    intensity = |A e^{i phi} + R e^{i 2 pi (fx x + fy y)}|^2 with x the column
    and y the row index. ``noise_std`` adds Gaussian intensity noise (clipped
    at zero) to model detector noise.
    """
    field.validate()
    carrier.validate()
    h, w = field.shape
    y, x = np.mgrid[0:h, 0:w]
    ref = carrier.reference_amplitude * np.exp(2j * np.pi * (carrier.fx * x + carrier.fy * y))
    intensity = np.abs(field.to_complex() + ref) ** 2
    if noise_std > 0:
        if rng is None:
            rng = np.random.default_rng()
        intensity = np.clip(intensity + rng.normal(0.0, noise_std, intensity.shape), 0.0, None)
    return Hologram(intensity, carrier, field.pixel_size, field.wavelength)


def sideband_mask(shape: tuple[int, int], filter_radius: float) -> np.ndarray:
    """Circular low-pass mask (DC-centered, DFT ordering) with a raised-cosine edge.

    Fully open inside (1 - EDGE_TAPER) * filter_radius, rolling to zero at
    filter_radius.
    """
    h, w = shape
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    rho = np.hypot(fx, fy)
    inner = (1.0 - EDGE_TAPER) * filter_radius
    mask = np.zeros(shape)
    mask[rho <= inner] = 1.0
    band = (rho > inner) & (rho < filter_radius)
    mask[band] = 0.5 * (1.0 + np.cos(np.pi * (rho[band] - inner) / (filter_radius - inner)))
    return mask


def retrieve_takeda(hologram: Hologram, filter_radius: float = 0.12) -> ComplexField:
    """Demodulate the object field from an off-axis hologram.

    The intensity spectrum's sideband at the carrier is extracted with a
    tapered circular mask, translated to the spectral origin (integer bins by
    rolling the spectrum, the sub-bin remainder by a spatial phase ramp), and
    inverse-transformed. Under the e^{+i carrier} reference convention the
    sideband carries R * conj(E), so the demodulated image is conjugated and
    divided by the reference amplitude to return the object field itself.

    Output phase is wrapped to (-pi, pi].
    """
    hologram.validate()
    carrier = hologram.carrier
    if filter_radius <= 0:
        raise SidebandOverlap("filter radius must be positive")
    if filter_radius >= carrier.magnitude:
        raise SidebandOverlap(
            f"filter radius {filter_radius} reaches the carrier at {carrier.magnitude:.4f}"
        )

    h, w = hologram.shape
    spectrum = np.fft.fft2(hologram.intensity)

    # integer-bin carrier shift
    kx = int(np.round(carrier.fx * w))
    ky = int(np.round(carrier.fy * h))
    shifted = np.roll(spectrum, (-ky, -kx), axis=(0, 1))
    demod = np.fft.ifft2(shifted * sideband_mask((h, w), filter_radius))

    # sub-bin remainder as a spatial ramp
    dfx = carrier.fx - kx / w
    dfy = carrier.fy - ky / h
    if dfx != 0.0 or dfy != 0.0:
        y, x = np.mgrid[0:h, 0:w]
        demod = demod * np.exp(-2j * np.pi * (dfx * x + dfy * y))

    obj = np.conj(demod) / carrier.reference_amplitude
    return ComplexField.from_complex(obj, hologram.pixel_size, hologram.wavelength,
                                     wrapped=True)


def write_hologram(hologram: Hologram, path) -> None:
    """Store a hologram as single-channel QPIF with its carrier in the metadata."""
    hologram.validate()
    meta = {
        "role": "raw",
        "pixel_size": hologram.pixel_size,
        "wavelength": hologram.wavelength,
        "carrier": {
            "fx": hologram.carrier.fx,
            "fy": hologram.carrier.fy,
            "reference_amplitude": hologram.carrier.reference_amplitude,
        },
    }
    write_planes(path, hologram.intensity[None, :, :], meta)


def read_hologram(path) -> Hologram:
    planes, meta = read_planes(path)
    if planes.shape[0] != 1 or "carrier" not in meta:
        raise FormatError(f"{path}: not a single-channel hologram QPIF")
    c = meta["carrier"]
    carrier = Carrier(float(c["fx"]), float(c["fy"]), float(c["reference_amplitude"]))
    return Hologram(planes[0], carrier,
                    float(meta.get("pixel_size", 1.0)), float(meta.get("wavelength", 1.0)))
