"""End-to-end synthetic paired-dataset generation.

Per scene: sample a phantom and an aberration model; form the ideal field;
multiply by the aberration to get the sample field and use the bare
multiplier as the background field; push both through hologram synthesis and
sideband retrieval; the network input is the retrieved sample field (wrapped,
aberrated), the ground truth is the background-corrected, Goldstein-unwrapped
field. Everything is seeded so reruns are byte-identical.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from . import aberration as ab
from . import holography as holo
from . import phantom as ph
from .errors import SceneRejected
from .field import ComplexField, FieldMeta, Manifest, crop_center, export_pairs
from .unwrap import unwrap_goldstein

log = logging.getLogger("qpikit.dataset")

QUALITY_REJECT_FRACTION = 0.01
MAX_SCENE_RETRIES = 8


@dataclass
class SimConfig:
    """Dataset generation settings; serialized as JSON (see README schema)."""

    count: int = 8
    grid: int = 256
    seed: int = 0
    split_ratio: float = 0.8
    noise: float = 0.0
    include_angles: bool = False
    optics: ph.OpticsConfig = dc_field(default_factory=ph.OpticsConfig)
    carrier: holo.Carrier = dc_field(default_factory=lambda: holo.Carrier(0.25, 0.25))
    filter_radius: float = 0.12
    aberration: ab.AberrationSampling = dc_field(default_factory=ab.AberrationSampling)
    phantom: ph.PhantomSampling = dc_field(default_factory=ph.PhantomSampling)
    fixed_instrument: bool = False
    instrument_jitter: float = 0.1

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.grid < 4 or self.grid & (self.grid - 1):
            raise ValueError("grid must be a power of two")
        if self.optics.grid != self.grid:
            raise ValueError("optics.grid must equal the dataset grid")

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        grid = int(data.get("grid", 256))
        optics_kw = dict(data.pop("optics", {}))
        cone = optics_kw.pop("cone", None)
        optics_kw.setdefault("grid", grid)
        if cone is not None:
            optics_kw["angles"] = ph.cone_angles(
                optics_kw.get("wavelength", 0.532), optics_kw.get("n_medium", 1.337),
                count=int(cone.get("count", 49)),
                polar_deg=float(cone.get("polar_deg", 45.0)),
            )
        optics_kw["angles"] = [tuple(a) for a in optics_kw.get("angles", [(0.0, 0.0)])]
        carrier_kw = data.pop("carrier", {})
        ab_kw = dict(data.pop("aberration", {}))
        for key in ("amp_range", "freq_range"):
            if key in ab_kw:
                ab_kw[key] = tuple(ab_kw[key])
        phantom_kw = dict(data.pop("phantom", {}))
        for key in ("bead_count", "bead_radius", "bead_dn", "bump_count",
                    "bump_peak", "bump_sigma"):
            if key in phantom_kw:
                phantom_kw[key] = tuple(phantom_kw[key])
        return cls(
            optics=ph.OpticsConfig(**optics_kw),
            carrier=holo.Carrier(**carrier_kw) if carrier_kw else holo.Carrier(0.25, 0.25),
            aberration=ab.AberrationSampling(**ab_kw),
            phantom=ph.PhantomSampling(**phantom_kw),
            **data,
        )

    @classmethod
    def from_json(cls, path) -> "SimConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _rng_for(config: SimConfig, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=config.seed,
                                                        spawn_key=tuple(key)))


def _sample_scene_aberration(rng: np.random.Generator, config: SimConfig) -> ab.AberrationModel:
    if not config.fixed_instrument:
        return ab.sample_aberration(rng, config.aberration)
    # one base instrument per dataset seed, jittered per scene
    base = ab.sample_aberration(_rng_for(config, 0xBA5E), config.aberration)
    jit = config.instrument_jitter
    coeffs = [(j, c * (1.0 + rng.normal(0.0, jit))) for j, c in base.zernike_coeffs]
    fringes = [(abs(a * (1.0 + rng.normal(0.0, jit))), fx, fy, d + rng.normal(0.0, jit))
               for a, fx, fy, d in base.fringes]
    return ab.AberrationModel(coeffs, fringes, base.envelope_sigma)


def _scene_content(scene_seed: int, config: SimConfig, retry: int):
    """Deterministic per-scene content: aberration model and ideal field(s)."""
    rng = _rng_for(config, scene_seed, retry)
    model = _sample_scene_aberration(rng, config)
    if config.include_angles:
        volume = _sample_volume(rng, config)
        ideals = ph.forward_fields(volume, config.optics)
    else:
        phase = ph.sample_projection_phase(rng, config.optics, config.phantom)
        ideals = [ComplexField(np.ones_like(phase), phase,
                               config.optics.pixel_size, config.optics.wavelength)]
    return model, ideals


def _process_angle(ideal: ComplexField, model: ab.AberrationModel,
                   config: SimConfig, scene_seed: int, retry: int, angle_index: int):
    """Aberrate, interfere, retrieve, correct, unwrap one angle's field."""
    multiplier = ab.synth_aberration(model, config.grid, config.grid,
                                     config.optics.pixel_size, config.optics.wavelength)
    sample = ab.apply_aberration(ideal, multiplier)
    background = ComplexField(multiplier.amplitude.copy(), multiplier.phase.copy(),
                              ideal.pixel_size, ideal.wavelength)

    noise_rng = _rng_for(config, scene_seed, retry, 1000 + angle_index)
    retr_sample = holo.retrieve_takeda(
        holo.synth_hologram(sample, config.carrier, config.noise, noise_rng),
        config.filter_radius)
    retr_background = holo.retrieve_takeda(
        holo.synth_hologram(background, config.carrier, config.noise, noise_rng),
        config.filter_radius)

    corrected = ab.correct_background(retr_sample, retr_background)
    gt_phase, quality = unwrap_goldstein(corrected.phase, return_quality=True)
    if quality.mean() > QUALITY_REJECT_FRACTION:
        raise SceneRejected(
            f"scene {scene_seed} angle {angle_index}: unwrap quality mask covers "
            f"{quality.mean():.1%}"
        )
    gt = ComplexField(corrected.amplitude, gt_phase, ideal.pixel_size, ideal.wavelength)
    kx, ky = config.optics.angles[angle_index]
    meta = FieldMeta(
        role="input",
        angle_index=angle_index,
        pair_id=f"scene{scene_seed:06d}" + (f"_a{angle_index:02d}"
                                            if config.include_angles else ""),
        aberration_truth=model.truth_pairs(),
        extra={"kx": float(kx), "ky": float(ky), "n_medium": config.optics.n_medium},
    )
    return crop_center(retr_sample, config.grid), crop_center(gt, config.grid), meta


def generate_pair(scene_seed: int, config: SimConfig, angle_index: int = 0,
                  _retry: int = 0):
    """Generate the (input, gt, meta) pair of one scene (and one angle).

    Deterministic in (config.seed, scene_seed, angle_index): the same call
    always yields the bit-identical pair.
    """
    model, ideals = _scene_content(scene_seed, config, _retry)
    return _process_angle(ideals[angle_index], model, config,
                          scene_seed, _retry, angle_index)


def _sample_volume(rng: np.random.Generator, config: SimConfig) -> ph.RIVolume:
    s = config.phantom
    half_fov = s.placement_fraction * config.grid * config.optics.pixel_size / 2.0
    beads = []
    for _ in range(int(rng.integers(s.bead_count[0], s.bead_count[1] + 1))):
        center = rng.uniform(-half_fov, half_fov, size=3) * np.array([1.0, 1.0, 0.3])
        beads.append(ph.BeadSpec(tuple(center), rng.uniform(*s.bead_radius),
                                 rng.uniform(*s.bead_dn)))
    blobs = []
    for _ in range(int(rng.integers(s.bump_count[0], s.bump_count[1] + 1))):
        center = rng.uniform(-half_fov, half_fov, size=3) * np.array([1.0, 1.0, 0.3])
        axes = rng.uniform(s.bump_sigma[0], s.bump_sigma[1], size=3)
        blobs.append(ph.BlobSpec(tuple(center), tuple(axes), rng.uniform(0.005, 0.04)))
    return ph.make_phantom_volume(beads, blobs, config.optics)


def _make_scene(scene: int, config: SimConfig):
    """All pairs of one scene, resampling the whole scene on quality rejection."""
    angle_indices = range(len(config.optics.angles)) if config.include_angles else (0,)
    for retry in range(MAX_SCENE_RETRIES):
        try:
            model, ideals = _scene_content(scene, config, retry)
            return [_process_angle(ideals[a], model, config, scene, retry, a)
                    for a in angle_indices]
        except SceneRejected as exc:
            log.warning("rejected: %s (retry %d)", exc, retry + 1)
    raise SceneRejected(f"scene {scene} failed {MAX_SCENE_RETRIES} retries")


def generate_dataset(config: SimConfig, out_dir, jobs: int = 1) -> Manifest:
    """Generate ``config.count`` scenes (one pair per angle when
    ``include_angles``) and export them as QPIF files plus a manifest."""
    scenes = range(config.count)
    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            per_scene = list(pool.map(lambda s: _make_scene(s, config), scenes))
    else:
        per_scene = [_make_scene(s, config) for s in scenes]
    pairs = [pair for scene_pairs in per_scene for pair in scene_pairs]
    return export_pairs(pairs, config.split_ratio, config.seed, out_dir)
