"""Optical diffraction tomography under the Rytov approximation.

Each aberration-corrected field contributes its 2D spectrum onto a spherical
cap of the 3D scattering-potential spectrum (Fourier diffraction theorem);
caps are averaged voxelwise, the potential inverse-transformed to a
refractive-index volume, and the missing cone treated by alternating
non-negativity and measured-spectrum constraints.

Conventions: fields are incident-normalized (demodulated), so a field bin at
transverse frequency q maps to physical scattered wavevector k = q + k_i with
K = k - k_i = (q, kz - kz_i), kz = sqrt(k_m^2 - |q + k_i|^2). The cap weight
kz / (2 pi i * voxel) converts the field's 2D DFT to 3D DFT samples of the
potential f = k0^2 (n^2 - n_m^2) / (4 pi); its inverse is applied by the
forward model so the pair is adjoint-consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sp_fft

from .errors import AngleCountMismatch, InvalidAngle, NeedsUnwrap
from .field import ComplexField
from .phantom import OpticsConfig, RIVolume
from .unwrap import residues

DEFAULT_REG_ITERS = 50
_AMPLITUDE_EPS = 1e-12


@dataclass
class EwaldSample:
    """Cap sampling map for one illumination angle.

    Parallel arrays over the contributing 2D field bins: ``bin_y``/``bin_x``
    index the field's DFT grid, (``kx``, ``ky``, ``kz``) are the physical
    scattered-wave components in rad/um, ``vox_z`` the target z-frequency
    voxel, and ``weight`` the complex spectrum factor (proportional to kz).
    The transverse target voxels coincide with the 2D bins.
    """

    bin_y: np.ndarray
    bin_x: np.ndarray
    kx: np.ndarray
    ky: np.ndarray
    kz: np.ndarray
    vox_z: np.ndarray
    weight: np.ndarray


def ewald_map(angle, optics: OpticsConfig, nz: int | None = None) -> EwaldSample:
    """Map each propagating 2D field frequency onto the 3D Ewald cap.

    Frequencies with kx^2 + ky^2 >= k_medium^2 (evanescent) are excluded, as
    are caps falling outside the z band of an nz-deep volume. Kz uses the
    positive root (forward scattering).
    """
    n = optics.grid
    nz = nz or n
    k_m = optics.k_medium
    kx_i, ky_i = float(angle[0]), float(angle[1])
    if kx_i ** 2 + ky_i ** 2 >= k_m ** 2:
        raise InvalidAngle(f"illumination ({kx_i:.3f}, {ky_i:.3f}) is evanescent")
    kz_i = np.sqrt(k_m ** 2 - kx_i ** 2 - ky_i ** 2)

    freqs = 2.0 * np.pi * np.fft.fftfreq(n, d=optics.pixel_size)
    qx = freqs[None, :] + np.zeros((n, 1))
    qy = freqs[:, None] + np.zeros((1, n))
    kx = qx + kx_i
    ky = qy + ky_i
    kt2 = kx * kx + ky * ky
    propagating = kt2 < k_m ** 2

    kz = np.zeros_like(kt2)
    kz[propagating] = np.sqrt(k_m ** 2 - kt2[propagating])
    kz_shift = kz - kz_i

    dkz = 2.0 * np.pi / (nz * optics.pixel_size)
    vox_z = np.rint(kz_shift / dkz).astype(np.int64)
    in_band = propagating & (np.abs(vox_z) <= nz // 2 - 1)

    by, bx = np.nonzero(in_band)
    weight = kz[in_band] / (2.0j * np.pi * optics.pixel_size)
    return EwaldSample(by, bx, kx[in_band], ky[in_band], kz[in_band],
                       np.mod(vox_z[in_band], nz), weight)


@dataclass
class SpectrumAccumulator:
    """Voxelwise average of cap contributions to the 3D potential spectrum.

    The value at a filled voxel is numerator / hit_count; voxels with zero
    hits are the missing cone. Each contribution is also deposited
    Hermitian-mirrored (the potential is real), so the averaged spectrum is
    Hermitian by construction. ``k0`` and ``n_medium`` carry the conversion
    context between potential and refractive index.
    """

    numerator: np.ndarray
    hit_count: np.ndarray
    k0: float
    n_medium: float

    @classmethod
    def empty(cls, shape, k0: float, n_medium: float) -> "SpectrumAccumulator":
        return cls(np.zeros(shape, dtype=np.complex128), np.zeros(shape), k0, n_medium)

    def deposit(self, vox_z, vox_y, vox_x, values) -> None:
        np.add.at(self.numerator, (vox_z, vox_y, vox_x), values)
        np.add.at(self.hit_count, (vox_z, vox_y, vox_x), 1.0)
        nz, ny, nx = self.numerator.shape
        mz, my, mx = np.mod(-vox_z, nz), np.mod(-vox_y, ny), np.mod(-vox_x, nx)
        np.add.at(self.numerator, (mz, my, mx), np.conj(values))
        np.add.at(self.hit_count, (mz, my, mx), 1.0)

    @property
    def filled(self) -> np.ndarray:
        return self.hit_count > 0

    def averaged(self) -> np.ndarray:
        out = np.zeros_like(self.numerator)
        mask = self.filled
        out[mask] = self.numerator[mask] / self.hit_count[mask]
        return out


def volume_spectrum(potential: np.ndarray) -> np.ndarray:
    """3D DFT of a potential with the z origin at the volume center.

    Cap sampling rounds Kz to the nearest voxel; putting the volume's z
    center at the DFT origin keeps the spectrum slowly varying along Kz so
    that rounding is benign. Transverse axes stay registered with the field
    pixel grid (their bins are sampled exactly, never rounded).
    """
    return sp_fft.fftn(np.fft.ifftshift(potential, axes=(0,)), workers=-1)


def volume_from_spectrum(spectrum: np.ndarray) -> np.ndarray:
    return np.fft.fftshift(sp_fft.ifftn(spectrum, workers=-1).real, axes=(0,))


def _potential_to_ri(potential: np.ndarray, k0: float, n_medium: float) -> np.ndarray:
    arg = n_medium ** 2 + 4.0 * np.pi * potential / k0 ** 2
    return np.sqrt(np.clip(arg, 1.0, None))


def _ri_to_potential(values: np.ndarray, k0: float, n_medium: float) -> np.ndarray:
    return k0 ** 2 * (values ** 2 - n_medium ** 2) / (4.0 * np.pi)


def _constrain(potential, spectrum_meas, mask, iters):
    # Alternate (a) non-negative potential (n >= n_medium) and (b) restoring
    # measured spectrum voxels; order keeps data consistency exact on exit.
    for _ in range(iters):
        np.clip(potential, 0.0, None, out=potential)
        spectrum = volume_spectrum(potential)
        spectrum[mask] = spectrum_meas[mask]
        potential = volume_from_spectrum(spectrum)
    return potential


def nonneg_regularize(volume: RIVolume, filled_spectrum: SpectrumAccumulator,
                      iters: int) -> RIVolume:
    """Missing-cone treatment: clamp n >= n_medium, restore measured spectrum."""
    if iters < 0:
        raise ValueError("iters must be >= 0")
    if iters == 0:
        return RIVolume(volume.values.copy(), volume.voxel_size, volume.n_medium)
    potential = _ri_to_potential(volume.values, filled_spectrum.k0, volume.n_medium)
    potential = _constrain(potential, filled_spectrum.averaged(),
                           filled_spectrum.filled, iters)
    return RIVolume(_potential_to_ri(potential, filled_spectrum.k0, volume.n_medium),
                    volume.voxel_size, volume.n_medium)


def reconstruct(fields: list[ComplexField], optics: OpticsConfig,
                regularization_iters: int = DEFAULT_REG_ITERS,
                nz: int | None = None,
                check_residues: bool = True) -> RIVolume:
    """Reconstruct a refractive-index volume from per-angle corrected fields.

    Each field's Rytov datum ln(A) + i*phi is spectrum-mapped onto its Ewald
    cap and accumulated; the averaged spectrum is inverse-transformed and
    converted to n(r), then constrained for ``regularization_iters`` cycles.
    Fields must carry unwrapped phase (wrapping is detected via residues).
    """
    if len(fields) != len(optics.angles):
        raise AngleCountMismatch(
            f"{len(fields)} fields for {len(optics.angles)} configured angles"
        )
    n = optics.grid
    nz = nz or n
    for i, fld in enumerate(fields):
        if fld.shape != (n, n):
            raise AngleCountMismatch(
                f"field {i} has shape {fld.shape}, expected ({n}, {n})"
            )
        if check_residues and np.any(residues(fld.phase).charges):
            raise NeedsUnwrap(f"field {i} carries wrapped phase (residues found)")

    accum = SpectrumAccumulator.empty((nz, n, n), optics.k0, optics.n_medium)
    for fld, angle in zip(fields, optics.angles):
        emap = ewald_map(angle, optics, nz=nz)
        u_rytov = np.log(np.maximum(fld.amplitude, _AMPLITUDE_EPS)) + 1j * fld.phase
        u2 = sp_fft.fft2(u_rytov, workers=-1)
        accum.deposit(emap.vox_z, emap.bin_y, emap.bin_x,
                      emap.weight * u2[emap.bin_y, emap.bin_x])

    spectrum_meas = accum.averaged()
    potential = volume_from_spectrum(spectrum_meas)
    potential = _constrain(potential, spectrum_meas, accum.filled, regularization_iters)
    values = _potential_to_ri(potential, optics.k0, optics.n_medium)
    return RIVolume(values, optics.pixel_size, optics.n_medium)
