"""Complex-field containers, the QPIF binary format, and paired-dataset manifests.

QPIF layout (little-endian throughout)::

    magic "QPIF" (4 bytes)
    version   u16 = 1
    reserved  u16 = 0
    width     u32
    height    u32
    channels  u32   (2 for fields, 1 for holograms, nz for volumes)
    dtype     u32 = 0  (float32)
    meta_len  u32
    meta      UTF-8 JSON, meta_len bytes
    payload   channels * height * width float32, row-major, channel-planar

Fields store the amplitude plane followed by the phase plane. The payload is
float32: grids carrying wider precision are rounded on write, so the
write/read round trip is the identity exactly on float32-representable data.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .errors import CropError, FormatError, InvalidField, IoError, PairError, VersionError

QPIF_MAGIC = b"QPIF"
QPIF_VERSION = 1
_HEADER = struct.Struct("<4sHHIIIII")

ROLES = ("input", "gt", "pred", "background", "raw")
SPLITS = ("train", "val", "test")


@dataclass
class ComplexField:
    """2D complex optical field E = A * exp(i*phi), stored as (amplitude, phase) grids.

    Grids are float64 (height, width) arrays; ``pixel_size`` and ``wavelength``
    are in micrometers. ``wrapped`` tags a field whose phase lies in (-pi, pi].
    """

    amplitude: np.ndarray
    phase: np.ndarray
    pixel_size: float
    wavelength: float
    wrapped: bool = False

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=np.float64)
        self.phase = np.asarray(self.phase, dtype=np.float64)
        if self.amplitude.ndim != 2 or self.phase.ndim != 2:
            raise InvalidField("amplitude and phase must be 2D grids")
        if self.amplitude.shape != self.phase.shape:
            raise InvalidField(
                f"grid shapes differ: {self.amplitude.shape} vs {self.phase.shape}"
            )

    @property
    def height(self) -> int:
        return self.amplitude.shape[0]

    @property
    def width(self) -> int:
        return self.amplitude.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.amplitude.shape

    def to_complex(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)

    @classmethod
    def from_complex(cls, values, pixel_size: float, wavelength: float,
                     wrapped: bool = False) -> "ComplexField":
        values = np.asarray(values, dtype=np.complex128)
        return cls(np.abs(values), np.angle(values), pixel_size, wavelength, wrapped=wrapped)

    def validate(self) -> None:
        """Raise InvalidField unless amplitude/phase satisfy the type invariants."""
        if not np.all(np.isfinite(self.amplitude)):
            raise InvalidField("amplitude contains non-finite values")
        if not np.all(np.isfinite(self.phase)):
            raise InvalidField("phase contains non-finite values")
        if np.any(self.amplitude < 0):
            raise InvalidField("amplitude contains negative values")
        if self.wrapped and (np.any(self.phase <= -np.pi) or np.any(self.phase > np.pi)):
            raise InvalidField("field tagged wrapped has phase outside (-pi, pi]")


@dataclass
class FieldMeta:
    """Per-file metadata carried in the QPIF JSON block."""

    role: str = "raw"
    angle_index: int = 0
    pair_id: str = ""
    aberration_truth: list | None = None  # list of [noll_index, coefficient]
    extra: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        if self.angle_index < 0:
            raise ValueError("angle_index must be >= 0")


@dataclass
class ManifestEntry:
    pair_id: str
    input_path: str
    gt_path: str
    split: str
    angle_index: int


@dataclass
class Manifest:
    """Dataset index: one JSON object per line, paths relative to the manifest."""

    entries: list[ManifestEntry]

    def write(self, path) -> None:
        lines = [
            json.dumps(
                {
                    "pair_id": e.pair_id,
                    "input_path": e.input_path,
                    "gt_path": e.gt_path,
                    "split": e.split,
                    "angle_index": e.angle_index,
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            for e in self.entries
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path) -> "Manifest":
        entries = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            entries.append(
                ManifestEntry(d["pair_id"], d["input_path"], d["gt_path"],
                              d["split"], d["angle_index"])
            )
        return cls(entries)


# ---------------------------------------------------------------------------
# low-level QPIF I/O (shared by fields, holograms, and volumes)
# ---------------------------------------------------------------------------

def write_planes(path, planes: np.ndarray, meta: dict) -> None:
    """Write a (channels, height, width) float stack as a QPIF file."""
    planes = np.ascontiguousarray(planes, dtype=np.float32)
    if planes.ndim != 3:
        raise InvalidField("payload must be (channels, height, width)")
    if not np.all(np.isfinite(planes)):
        raise InvalidField("payload contains non-finite values")
    channels, height, width = planes.shape
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    header = _HEADER.pack(QPIF_MAGIC, QPIF_VERSION, 0, width, height, channels, 0,
                          len(meta_bytes))
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(meta_bytes)
            fh.write(planes.tobytes())
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_planes(path) -> tuple[np.ndarray, dict]:
    """Read a QPIF file, returning the (channels, height, width) stack and metadata."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, _reserved, width, height, channels, dtype, meta_len = _HEADER.unpack_from(raw)
    if magic != QPIF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {QPIF_MAGIC!r}")
    if version != QPIF_VERSION:
        raise VersionError(f"{path}: unsupported version {version}")
    if dtype != 0:
        raise FormatError(f"{path}: unsupported dtype code {dtype}")
    offset = _HEADER.size
    if len(raw) < offset + meta_len:
        raise FormatError(f"{path}: truncated metadata block")
    try:
        meta = json.loads(raw[offset:offset + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: metadata is not valid JSON: {exc}") from exc
    offset += meta_len
    expected = channels * height * width * 4
    actual = len(raw) - offset
    if actual != expected:
        raise FormatError(
            f"{path}: payload has {actual} bytes, expected {expected} "
            f"({channels}x{height}x{width} float32)"
        )
    planes = np.frombuffer(raw, dtype="<f4", offset=offset).reshape(channels, height, width)
    return planes.astype(np.float64), meta


# ---------------------------------------------------------------------------
# field-level operations
# ---------------------------------------------------------------------------

def write_field(field: ComplexField, meta: FieldMeta, path) -> None:
    """Write a 2-channel (amplitude, phase) QPIF file."""
    field.validate()
    meta_dict = {
        "role": meta.role,
        "angle_index": meta.angle_index,
        "pair_id": meta.pair_id,
        "aberration_truth": meta.aberration_truth,
        "extra": meta.extra,
        "pixel_size": field.pixel_size,
        "wavelength": field.wavelength,
        "wrapped": field.wrapped,
    }
    write_planes(path, np.stack([field.amplitude, field.phase]), meta_dict)


def read_field(path) -> tuple[ComplexField, FieldMeta]:
    """Read a 2-channel QPIF file back into (ComplexField, FieldMeta)."""
    planes, meta = read_planes(path)
    if meta.get("volume"):
        raise FormatError(f"{path}: is a QPIF-V volume, not a 2-channel field")
    if planes.shape[0] != 2:
        raise FormatError(f"{path}: expected 2 channels, found {planes.shape[0]}")
    field = ComplexField(
        planes[0], planes[1],
        pixel_size=float(meta.get("pixel_size", 1.0)),
        wavelength=float(meta.get("wavelength", 1.0)),
        wrapped=bool(meta.get("wrapped", False)),
    )
    fmeta = FieldMeta(
        role=meta.get("role", "raw"),
        angle_index=int(meta.get("angle_index", 0)),
        pair_id=meta.get("pair_id", ""),
        aberration_truth=meta.get("aberration_truth"),
        extra=meta.get("extra", {}),
    )
    return field, fmeta


def crop_center(field: ComplexField, size: int) -> ComplexField:
    """Center-crop a field to size x size, flooring odd remainders."""
    if size <= 0:
        raise CropError(f"crop size must be positive, got {size}")
    h, w = field.shape
    if size > min(h, w):
        raise CropError(f"cannot crop {h}x{w} field to {size}")
    r0 = (h - size) // 2
    c0 = (w - size) // 2
    return ComplexField(
        field.amplitude[r0:r0 + size, c0:c0 + size].copy(),
        field.phase[r0:r0 + size, c0:c0 + size].copy(),
        field.pixel_size, field.wavelength, wrapped=field.wrapped,
    )


def split_rank_key(seed: int, pair_id: str) -> int:
    """Platform-independent 64-bit ordering key for split assignment."""
    digest = hashlib.sha256(f"{seed}:{pair_id}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def assign_splits(pair_ids: list[str], split_ratio: float, seed: int) -> dict[str, str]:
    """Deterministic train/val assignment hitting the ratio within one entry.

    Pairs are ordered by a keyed hash of (seed, pair_id); the first
    ceil(ratio * N) become "train". Identical (seed, pair set) always yields
    the identical assignment, independent of process or platform.
    """
    if not 0.0 <= split_ratio <= 1.0:
        raise ValueError(f"split_ratio must be in [0, 1], got {split_ratio}")
    ranked = sorted(pair_ids, key=lambda p: (split_rank_key(seed, p), p))
    n_train = int(np.ceil(split_ratio * len(ranked)))
    return {p: ("train" if i < n_train else "val") for i, p in enumerate(ranked)}


def export_pairs(pairs, split_ratio: float, seed: int, out_dir) -> Manifest:
    """Write (input, gt) field pairs as QPIF files plus a JSONL manifest.

    ``pairs`` is a list of (input ComplexField, gt ComplexField, FieldMeta);
    the meta's pair_id names the files. Returns the manifest, which is also
    written to ``out_dir/manifest.jsonl`` with paths relative to ``out_dir``.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seen = set()
    for inp, gt, meta in pairs:
        if inp.shape != gt.shape:
            raise PairError(
                f"pair {meta.pair_id!r}: input {inp.shape} vs gt {gt.shape}"
            )
        if meta.pair_id in seen:
            raise PairError(f"duplicate pair_id {meta.pair_id!r}")
        seen.add(meta.pair_id)

    splits = assign_splits([meta.pair_id for _, _, meta in pairs], split_ratio, seed)
    entries = []
    for inp, gt, meta in sorted(pairs, key=lambda p: p[2].pair_id):
        input_name = f"{meta.pair_id}_input.qpif"
        gt_name = f"{meta.pair_id}_gt.qpif"
        in_meta = FieldMeta("input", meta.angle_index, meta.pair_id,
                            meta.aberration_truth, meta.extra)
        gt_meta = FieldMeta("gt", meta.angle_index, meta.pair_id,
                            meta.aberration_truth, meta.extra)
        write_field(inp, in_meta, out_dir / input_name)
        write_field(gt, gt_meta, out_dir / gt_name)
        entries.append(ManifestEntry(meta.pair_id, input_name, gt_name,
                                     splits[meta.pair_id], meta.angle_index))
    manifest = Manifest(entries)
    manifest.write(out_dir / "manifest.jsonl")
    return manifest
