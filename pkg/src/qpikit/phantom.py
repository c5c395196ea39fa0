"""Ground-truth phantoms: projected bead phases, cell-like blob textures,
3D refractive-index volumes, and per-angle fields from the Fourier-diffraction
forward model (the adjoint of the tomographic reconstructor).
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import FormatError, InvalidAngle, ScatteringBound
from .field import ComplexField, read_planes, write_planes

WEAK_SCATTERING_LIMIT = 0.1  # max |n - n_m| / n_m accepted by the linear model


@dataclass
class OpticsConfig:
    """Imaging geometry shared by synthesis and reconstruction.

    ``angles`` lists illumination transverse wavevectors (kx, ky) in rad/um;
    each must be propagating in the medium (kx^2 + ky^2 < k_medium^2).
    """

    wavelength: float = 0.532
    n_medium: float = 1.337
    pixel_size: float = 0.1
    grid: int = 128
    angles: list = dc_field(default_factory=lambda: [(0.0, 0.0)])

    def __post_init__(self):
        if self.wavelength <= 0:
            raise ValueError("wavelength must be positive")
        if not self.angles:
            raise ValueError("at least one illumination angle is required")
        km2 = self.k_medium ** 2
        for kx, ky in self.angles:
            if kx * kx + ky * ky >= km2:
                raise InvalidAngle(
                    f"illumination ({kx:.3f}, {ky:.3f}) rad/um is evanescent "
                    f"(k_medium = {self.k_medium:.3f})"
                )

    @property
    def k0(self) -> float:
        """Vacuum wavenumber 2 pi / lambda in rad/um."""
        return 2.0 * np.pi / self.wavelength

    @property
    def k_medium(self) -> float:
        return 2.0 * np.pi * self.n_medium / self.wavelength


def cone_angles(wavelength: float, n_medium: float, count: int = 49,
                polar_deg: float = 45.0) -> list:
    """Normal incidence plus (count - 1) directions equally spaced on a cone.

    The polar angle is measured in the medium. The default 49-angle circular
    scan matches a typical angle-scanning tomographic acquisition.
    """
    k_m = 2.0 * np.pi * n_medium / wavelength
    kt = k_m * np.sin(np.deg2rad(polar_deg))
    angles = [(0.0, 0.0)]
    for i in range(count - 1):
        psi = 2.0 * np.pi * i / (count - 1)
        angles.append((kt * np.cos(psi), kt * np.sin(psi)))
    return angles


@dataclass
class BeadSpec:
    """Hard sphere of refractive-index contrast delta_n.

    ``center`` is (x, y) or (x, y, z) in micrometers relative to the grid
    center; ``radius`` in micrometers.
    """

    center: tuple
    radius: float
    delta_n: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bead radius must be positive")
        if not np.isfinite(self.delta_n):
            raise ValueError("delta_n must be finite")


@dataclass
class BlobSpec:
    """Smooth compactly supported bump: delta_n * exp(1 - 1/(1 - s^2)) for s < 1,
    with s the elliptical radius scaled by ``semi_axes`` (micrometers)."""

    center: tuple
    semi_axes: tuple
    delta_n: float


@dataclass
class RIVolume:
    """3D refractive-index grid n(r) with shape (nz, ny, nx)."""

    values: np.ndarray
    voxel_size: float
    n_medium: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 3:
            raise ValueError("volume values must be 3D")

    @property
    def nz(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def nx(self) -> int:
        return self.values.shape[2]


def _axis_coords(n: int, step: float) -> np.ndarray:
    return (np.arange(n) - (n - 1) / 2.0) * step


def bead_phase(spec: BeadSpec, optics: OpticsConfig) -> np.ndarray:
    """Projection phase of a bead: (2 pi / lambda) * delta_n * 2 * sqrt(r^2 - rho^2)."""
    n = optics.grid
    x = _axis_coords(n, optics.pixel_size)[None, :] - spec.center[0]
    y = _axis_coords(n, optics.pixel_size)[:, None] - spec.center[1]
    rho2 = x * x + y * y
    chord = 2.0 * np.sqrt(np.clip(spec.radius ** 2 - rho2, 0.0, None))
    return optics.k0 * spec.delta_n * chord


def bump_phase(center, sigmas, peak: float, optics: OpticsConfig) -> np.ndarray:
    """2D compact bump phase used for cell-like texture in projection phantoms."""
    n = optics.grid
    x = (_axis_coords(n, optics.pixel_size)[None, :] - center[0]) / sigmas[0]
    y = (_axis_coords(n, optics.pixel_size)[:, None] - center[1]) / sigmas[1]
    s2 = x * x + y * y
    out = np.zeros((n, n))
    inside = s2 < 1.0
    out[inside] = peak * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def make_phantom_volume(beads, blobs, optics: OpticsConfig,
                        nz: int | None = None) -> RIVolume:
    """Compose a refractive-index volume; overlaps take the max contrast."""
    n = optics.grid
    nz = nz or n
    x = _axis_coords(n, optics.pixel_size)[None, None, :]
    y = _axis_coords(n, optics.pixel_size)[None, :, None]
    z = _axis_coords(nz, optics.pixel_size)[:, None, None]
    contrast = np.zeros((nz, n, n))

    for bead in beads:
        cx, cy = bead.center[0], bead.center[1]
        cz = bead.center[2] if len(bead.center) > 2 else 0.0
        r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
        np.maximum(contrast, np.where(r2 < bead.radius ** 2, bead.delta_n, 0.0),
                   out=contrast)

    for blob in blobs:
        cx, cy = blob.center[0], blob.center[1]
        cz = blob.center[2] if len(blob.center) > 2 else 0.0
        s2 = ((x - cx) / blob.semi_axes[0]) ** 2 + ((y - cy) / blob.semi_axes[1]) ** 2 \
            + ((z - cz) / blob.semi_axes[2]) ** 2
        bump = np.zeros_like(s2)
        inside = s2 < 1.0
        bump[inside] = blob.delta_n * np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
        np.maximum(contrast, bump, out=contrast)

    return RIVolume(optics.n_medium + contrast, optics.pixel_size, optics.n_medium)


def forward_fields(volume: RIVolume, optics: OpticsConfig) -> list[ComplexField]:
    """Per-angle complex fields of a volume under the first-order Rytov model.

    The volume's scattering-potential spectrum is sampled on each angle's
    Ewald cap (same map the reconstructor uses), divided by the
    reconstruction weighting, and inverse-transformed to e^{u_R}. Fields are
    incident-normalized: zero contrast gives amplitude 1, phase 0.
    """
    from . import odt  # circular at module level: odt consumes these fields

    contrast = np.max(np.abs(volume.values - volume.n_medium)) / volume.n_medium
    if contrast > WEAK_SCATTERING_LIMIT:
        raise ScatteringBound(
            f"contrast {contrast:.3f} exceeds the weak-scattering limit "
            f"{WEAK_SCATTERING_LIMIT}"
        )
    if volume.ny != optics.grid or volume.nx != optics.grid:
        raise ValueError("volume transverse grid must match optics.grid")
    if not np.isclose(volume.voxel_size, optics.pixel_size):
        raise ValueError("voxel size must equal the field pixel size")

    potential = optics.k0 ** 2 * (volume.values ** 2 - volume.n_medium ** 2) / (4.0 * np.pi)
    spectrum3 = odt.volume_spectrum(potential)

    fields = []
    n = optics.grid
    for angle in optics.angles:
        emap = odt.ewald_map(angle, optics, nz=volume.nz)
        u2 = np.zeros((n, n), dtype=np.complex128)
        u2[emap.bin_y, emap.bin_x] = (
            spectrum3[emap.vox_z, emap.bin_y, emap.bin_x] / emap.weight
        )
        u_rytov = np.fft.ifft2(u2)
        fields.append(ComplexField(np.exp(u_rytov.real), u_rytov.imag,
                                   optics.pixel_size, optics.wavelength))
    return fields


# ---------------------------------------------------------------------------
# QPIF-V volume storage: standard header, channels = nz, z-slice planar payload
# ---------------------------------------------------------------------------

def write_volume(volume: RIVolume, path, extra_meta: dict | None = None) -> None:
    meta = {"volume": True, "voxel_size": volume.voxel_size, "n_medium": volume.n_medium}
    if extra_meta:
        meta.update(extra_meta)
    write_planes(path, volume.values, meta)


def read_volume(path) -> RIVolume:
    planes, meta = read_planes(path)
    if not meta.get("volume"):
        raise FormatError(f"{path}: missing the volume flag, not a QPIF-V file")
    return RIVolume(planes, float(meta["voxel_size"]), float(meta["n_medium"]))


# ---------------------------------------------------------------------------
# random scene sampling for dataset generation
# ---------------------------------------------------------------------------

@dataclass
class PhantomSampling:
    """Ranges for random projection phantoms (all lengths in micrometers)."""

    bead_count: tuple[int, int] = (1, 2)
    bead_radius: tuple[float, float] = (1.0, 2.5)
    bead_dn: tuple[float, float] = (0.02, 0.06)
    bump_count: tuple[int, int] = (0, 4)
    bump_peak: tuple[float, float] = (0.3, 2.0)
    bump_sigma: tuple[float, float] = (0.5, 2.5)
    placement_fraction: float = 0.5


def sample_projection_phase(rng: np.random.Generator, optics: OpticsConfig,
                            sampling: PhantomSampling | None = None) -> np.ndarray:
    """Random projected sample phase: beads plus smooth bumps."""
    s = sampling or PhantomSampling()
    half_fov = s.placement_fraction * optics.grid * optics.pixel_size / 2.0
    phase = np.zeros((optics.grid, optics.grid))
    for _ in range(int(rng.integers(s.bead_count[0], s.bead_count[1] + 1))):
        center = rng.uniform(-half_fov, half_fov, size=2)
        phase += bead_phase(
            BeadSpec(tuple(center), rng.uniform(*s.bead_radius), rng.uniform(*s.bead_dn)),
            optics,
        )
    for _ in range(int(rng.integers(s.bump_count[0], s.bump_count[1] + 1))):
        center = rng.uniform(-half_fov, half_fov, size=2)
        sigmas = rng.uniform(*s.bump_sigma, size=2)
        phase += bump_phase(tuple(center), tuple(sigmas), rng.uniform(*s.bump_peak), optics)
    return phase
