import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpikit import ComplexField, FieldMeta, Manifest, crop_center, export_pairs, read_field, write_field
from qpikit.errors import CropError, FormatError, InvalidField, PairError, VersionError
from qpikit.field import assign_splits, read_planes

from conftest import make_field


def f32(values):
    # float32-representable values so the QPIF round trip is the identity
    return np.asarray(values).astype(np.float32).astype(np.float64)


def sample_field(rng, n=32):
    return ComplexField(f32(rng.random((n, n)) + 0.5),
                        f32((rng.random((n, n)) - 0.5) * 6.0), 0.1, 0.532)


def test_payload_size_256(tmp_path, rng):
    field = sample_field(rng, 256)
    path = tmp_path / "f.qpif"
    write_field(field, FieldMeta("gt"), path)
    raw = path.read_bytes()
    meta_len = struct.unpack_from("<I", raw, 24)[0]
    assert len(raw) - 28 - meta_len == 256 * 256 * 2 * 4 == 524288


def test_round_trip_bit_identical(tmp_path, rng):
    field = sample_field(rng)
    field.wrapped = False
    meta = FieldMeta("pred", angle_index=3, pair_id="p7",
                     aberration_truth=[[4, 0.25]], extra={"note": "x"})
    path = tmp_path / "f.qpif"
    write_field(field, meta, path)
    back, bmeta = read_field(path)
    assert np.array_equal(back.amplitude, field.amplitude)
    assert np.array_equal(back.phase, field.phase)
    assert back.pixel_size == field.pixel_size
    assert back.wavelength == field.wavelength
    assert bmeta == meta


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.integers(0, 2 ** 31 - 1))
def test_round_trip_property(tmp_path_factory, h, w, seed):
    rng = np.random.default_rng(seed)
    amp = f32(rng.random((h, w)) * 3.0)
    phase = f32((rng.random((h, w)) - 0.5) * 8.0)
    field = ComplexField(amp, phase, 0.25, 0.633)
    path = tmp_path_factory.mktemp("qpif") / "f.qpif"
    write_field(field, FieldMeta("raw"), path)
    back, _ = read_field(path)
    assert np.array_equal(back.amplitude, amp)
    assert np.array_equal(back.phase, phase)


def test_unwritable_path(tmp_path, rng):
    from qpikit.errors import IoError

    with pytest.raises(IoError):
        write_field(sample_field(rng), FieldMeta("raw"),
                    tmp_path / "no_such_dir" / "f.qpif")


def test_nan_amplitude_rejected(tmp_path):
    amp = np.ones((8, 8))
    amp[3, 3] = np.nan
    field = make_field(amp, np.zeros((8, 8)))
    with pytest.raises(InvalidField):
        write_field(field, FieldMeta("raw"), tmp_path / "bad.qpif")


def test_bad_magic(tmp_path, rng):
    path = tmp_path / "f.qpif"
    write_field(sample_field(rng), FieldMeta("raw"), path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"QPIX"
    path.write_bytes(raw)
    with pytest.raises(FormatError):
        read_field(path)


def test_header_echo_64(tmp_path, rng):
    path = tmp_path / "f.qpif"
    write_field(sample_field(rng, 64), FieldMeta("raw"), path)
    back, _ = read_field(path)
    assert back.width == back.height == 64


def test_truncated_payload(tmp_path, rng):
    path = tmp_path / "f.qpif"
    write_field(sample_field(rng), FieldMeta("raw"), path)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(FormatError, match=r"\d+ bytes, expected \d+"):
        read_field(path)


def test_unsupported_version(tmp_path, rng):
    path = tmp_path / "f.qpif"
    write_field(sample_field(rng), FieldMeta("raw"), path)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<H", raw, 4, 99)
    path.write_bytes(raw)
    with pytest.raises(VersionError):
        read_field(path)


def test_crop_identity(rng):
    field = sample_field(rng, 64)
    out = crop_center(field, 64)
    assert np.array_equal(out.amplitude, field.amplitude)


def test_crop_centered_region(rng):
    field = sample_field(rng, 512)
    out = crop_center(field, 256)
    assert np.array_equal(out.amplitude, field.amplitude[128:384, 128:384])


def test_crop_too_large(rng):
    with pytest.raises(CropError):
        crop_center(sample_field(rng, 100), 256)


def test_crop_composition(rng):
    field = sample_field(rng, 96)
    once = crop_center(field, 48)
    twice = crop_center(crop_center(field, 72), 48)
    assert np.array_equal(once.phase, twice.phase)


def test_crop_odd_remainder_floors(rng):
    field = sample_field(rng, 9)
    out = crop_center(field, 4)
    # (9 - 4) // 2 == 2
    assert np.array_equal(out.amplitude, field.amplitude[2:6, 2:6])


def _pairs(rng, n, size=16):
    out = []
    for i in range(n):
        out.append((sample_field(rng, size), sample_field(rng, size),
                    FieldMeta("input", pair_id=f"p{i:03d}")))
    return out


def test_export_degenerate_ratio(tmp_path, rng):
    manifest = export_pairs(_pairs(rng, 2), 1.0, 42, tmp_path)
    assert len(manifest.entries) == 2
    assert all(e.split == "train" for e in manifest.entries)


def test_export_rerun_determinism(tmp_path, rng):
    pairs = _pairs(rng, 5)
    export_pairs(pairs, 0.6, 42, tmp_path / "a")
    export_pairs(pairs, 0.6, 42, tmp_path / "b")
    assert (tmp_path / "a/manifest.jsonl").read_bytes() == \
        (tmp_path / "b/manifest.jsonl").read_bytes()


def test_export_dimension_mismatch(tmp_path, rng):
    pairs = [(sample_field(rng, 8), sample_field(rng, 16),
              FieldMeta("input", pair_id="p0"))]
    with pytest.raises(PairError):
        export_pairs(pairs, 0.5, 0, tmp_path)


def test_export_duplicate_pair_id(tmp_path, rng):
    pairs = [(sample_field(rng, 8), sample_field(rng, 8), FieldMeta("input", pair_id="p")),
             (sample_field(rng, 8), sample_field(rng, 8), FieldMeta("input", pair_id="p"))]
    with pytest.raises(PairError):
        export_pairs(pairs, 0.5, 0, tmp_path)


def test_split_fraction_within_one_entry():
    for n, ratio in [(3, 0.5), (10, 0.8), (7, 0.33)]:
        splits = assign_splits([f"id{i}" for i in range(n)], ratio, 1)
        n_train = sum(1 for s in splits.values() if s == "train")
        assert abs(n_train - ratio * n) < 1.0


def test_split_deterministic_across_calls():
    ids = [f"pair{i}" for i in range(20)]
    assert assign_splits(ids, 0.7, 5) == assign_splits(list(reversed(ids)), 0.7, 5)


def test_manifest_round_trip(tmp_path, rng):
    manifest = export_pairs(_pairs(rng, 3), 0.5, 9, tmp_path)
    back = Manifest.read(tmp_path / "manifest.jsonl")
    assert back == manifest
    line = (tmp_path / "manifest.jsonl").read_text().splitlines()[0]
    assert set(json.loads(line)) == {"pair_id", "input_path", "gt_path", "split",
                                     "angle_index"}


def test_volume_flagged_files_rejected_as_fields(tmp_path, rng):
    from qpikit import RIVolume, write_volume

    path = tmp_path / "v.qpif"
    write_volume(RIVolume(np.full((2, 4, 4), 1.337), 0.1, 1.337), path)
    planes, meta = read_planes(path)
    assert planes.shape == (2, 4, 4)
    assert meta["volume"] is True
    with pytest.raises(FormatError):
        read_field(path)
