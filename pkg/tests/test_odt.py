import numpy as np
import pytest

from qpikit import (
    BeadSpec,
    ComplexField,
    OpticsConfig,
    cone_angles,
    forward_fields,
    make_phantom_volume,
    nonneg_regularize,
    reconstruct,
)
from qpikit.errors import AngleCountMismatch, InvalidAngle, NeedsUnwrap
from qpikit.odt import SpectrumAccumulator, ewald_map, volume_spectrum
from qpikit.unwrap import wrap_phase

SMALL = OpticsConfig(wavelength=0.532, n_medium=1.337, pixel_size=0.1, grid=64,
                     angles=cone_angles(0.532, 1.337, count=25, polar_deg=40.0))


def unit_fields(optics):
    n = optics.grid
    return [ComplexField(np.ones((n, n)), np.zeros((n, n)),
                         optics.pixel_size, optics.wavelength)
            for _ in optics.angles]


def test_ewald_normal_incidence_dc_maps_to_origin():
    optics = OpticsConfig(grid=32, angles=[(0.0, 0.0)])
    emap = ewald_map((0.0, 0.0), optics)
    dc = (emap.bin_y == 0) & (emap.bin_x == 0)
    assert dc.sum() == 1
    assert emap.vox_z[dc][0] == 0
    assert emap.kz[dc][0] == pytest.approx(optics.k_medium)


def test_ewald_excludes_evanescent():
    optics = OpticsConfig(grid=32, angles=[(0.0, 0.0)])
    emap = ewald_map((0.0, 0.0), optics)
    assert np.all(emap.kx ** 2 + emap.ky ** 2 < optics.k_medium ** 2)
    # the grid's corner frequencies exceed k_medium and must be absent
    n_total = 32 * 32
    assert len(emap.bin_y) < n_total


def test_ewald_oblique_cap_center():
    optics = OpticsConfig(grid=64, angles=[(0.0, 0.0)])
    k_m = optics.k_medium
    kx_i = k_m * np.sin(np.pi / 6)
    emap = ewald_map((kx_i, 0.0), optics)
    dc = (emap.bin_y == 0) & (emap.bin_x == 0)
    # at demodulated bin (0,0) the physical frequency is the illumination itself
    assert emap.kx[dc][0] == pytest.approx(kx_i)
    assert emap.ky[dc][0] == pytest.approx(0.0)
    assert emap.vox_z[dc][0] == 0  # K = k - k_i = 0


def test_ewald_invalid_angle():
    optics = OpticsConfig(grid=32, angles=[(0.0, 0.0)])
    with pytest.raises(InvalidAngle):
        ewald_map((optics.k_medium * 1.01, 0.0), optics)


def test_unit_fields_reconstruct_to_medium():
    volume = reconstruct(unit_fields(SMALL), SMALL, regularization_iters=2)
    assert np.allclose(volume.values, SMALL.n_medium, atol=1e-9)


def test_angle_count_mismatch():
    with pytest.raises(AngleCountMismatch):
        reconstruct(unit_fields(SMALL)[:-1], SMALL)


def test_wrapped_input_detected():
    fields = unit_fields(SMALL)
    n = SMALL.grid
    y, x = np.mgrid[0:n, 0:n]
    fields[3] = ComplexField(np.ones((n, n)),
                             wrap_phase(np.arctan2(y - 31.5, x - 31.5)),
                             SMALL.pixel_size, SMALL.wavelength)
    with pytest.raises(NeedsUnwrap):
        reconstruct(fields, SMALL)


def test_bead_round_trip_small():
    bead = BeadSpec((0.0, 0.0, 0.0), 1.0, 0.03)
    volume = make_phantom_volume([bead], [], SMALL)
    fields = forward_fields(volume, SMALL)
    rec = reconstruct(fields, SMALL, regularization_iters=30)
    center = SMALL.grid // 2
    true_ri = SMALL.n_medium + 0.03
    assert abs(rec.values[center, center, center] - true_ri) < 0.2 * 0.03


def test_regularization_identity_at_zero_iters():
    accum = SpectrumAccumulator.empty((8, 8, 8), k0=11.8, n_medium=1.337)
    values = 1.337 + np.random.default_rng(0).random((8, 8, 8)) * 0.01
    from qpikit import RIVolume

    vol = RIVolume(values, 0.1, 1.337)
    out = nonneg_regularize(vol, accum, 0)
    assert np.array_equal(out.values, values)
    assert out.values is not values


def test_regularization_clamps_below_medium():
    accum = SpectrumAccumulator.empty((8, 8, 8), k0=11.8, n_medium=1.337)
    from qpikit import RIVolume

    values = np.full((8, 8, 8), 1.337)
    values[2, 3, 4] = 1.337 - 0.01
    out = nonneg_regularize(RIVolume(values, 0.1, 1.337), accum, 1)
    assert out.values[2, 3, 4] == pytest.approx(1.337, abs=1e-12)


def test_regularization_reduces_center_error():
    bead = BeadSpec((0.0, 0.0, 0.0), 1.0, 0.03)
    fields = forward_fields(make_phantom_volume([bead], [], SMALL), SMALL)
    center = SMALL.grid // 2
    true_ri = SMALL.n_medium + 0.03
    err0 = abs(reconstruct(fields, SMALL, 0).values[center, center, center] - true_ri)
    err50 = abs(reconstruct(fields, SMALL, 50).values[center, center, center] - true_ri)
    assert err50 <= err0


def test_data_consistency_after_regularization():
    bead = BeadSpec((0.0, 0.0, 0.0), 0.8, 0.02)
    fields = forward_fields(make_phantom_volume([bead], [], SMALL), SMALL)
    n = SMALL.grid
    accum = SpectrumAccumulator.empty((n, n, n), SMALL.k0, SMALL.n_medium)
    for fld, angle in zip(fields, SMALL.angles):
        emap = ewald_map(angle, SMALL, nz=n)
        u2 = np.fft.fft2(np.log(fld.amplitude) + 1j * fld.phase)
        accum.deposit(emap.vox_z, emap.bin_y, emap.bin_x,
                      emap.weight * u2[emap.bin_y, emap.bin_x])
    rec = reconstruct(fields, SMALL, regularization_iters=7)
    potential = SMALL.k0 ** 2 * (rec.values ** 2 - SMALL.n_medium ** 2) / (4 * np.pi)
    spec = volume_spectrum(potential)
    meas = accum.averaged()
    mask = accum.filled
    scale = np.abs(meas[mask]).max()
    assert np.abs(spec[mask] - meas[mask]).max() < 1e-9 * scale


def test_accumulator_hermitian_symmetry():
    bead = BeadSpec((0.4, -0.3, 0.2), 0.8, 0.02)
    fields = forward_fields(make_phantom_volume([bead], [], SMALL), SMALL)
    n = SMALL.grid
    accum = SpectrumAccumulator.empty((n, n, n), SMALL.k0, SMALL.n_medium)
    for fld, angle in zip(fields, SMALL.angles):
        emap = ewald_map(angle, SMALL, nz=n)
        u2 = np.fft.fft2(np.log(fld.amplitude) + 1j * fld.phase)
        accum.deposit(emap.vox_z, emap.bin_y, emap.bin_x,
                      emap.weight * u2[emap.bin_y, emap.bin_x])
    avg = accum.averaged()
    mirrored = np.conj(avg[::-1, ::-1, ::-1])
    mirrored = np.roll(mirrored, (1, 1, 1), axis=(0, 1, 2))  # conj(F(-K))
    mask = accum.filled
    mirror_mask = np.roll(accum.filled[::-1, ::-1, ::-1], (1, 1, 1), axis=(0, 1, 2))
    both = mask & mirror_mask
    scale = np.abs(avg[both]).max()
    assert np.abs(avg[both] - mirrored[both]).max() < 1e-6 * scale


def test_lateral_shift_equivariance():
    shift_vox = 5
    optics = SMALL
    b0 = BeadSpec((0.0, 0.0, 0.0), 0.8, 0.02)
    b1 = BeadSpec((shift_vox * optics.pixel_size, 0.0, 0.0), 0.8, 0.02)
    rec0 = reconstruct(forward_fields(make_phantom_volume([b0], [], optics), optics),
                       optics, 10)
    rec1 = reconstruct(forward_fields(make_phantom_volume([b1], [], optics), optics),
                       optics, 10)
    mid = optics.grid // 2
    slice0 = rec0.values[mid] - optics.n_medium
    slice1 = rec1.values[mid] - optics.n_medium
    corr = np.fft.ifft2(np.fft.fft2(slice1) * np.conj(np.fft.fft2(slice0))).real
    peak = np.unravel_index(np.argmax(corr), corr.shape)
    dx = peak[1] if peak[1] <= optics.grid // 2 else peak[1] - optics.grid
    dy = peak[0] if peak[0] <= optics.grid // 2 else peak[0] - optics.grid
    assert abs(dx - shift_vox) <= 1
    assert abs(dy) <= 1
