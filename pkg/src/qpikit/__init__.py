"""qpikit: synthetic quantitative phase imaging pipeline.

Hologram synthesis and sideband retrieval, Goldstein branch-cut unwrapping,
background-subtraction and Zernike-fit aberration correction, Rytov
diffraction tomography, the associated loss/error metrics, and seeded
paired-dataset export in the QPIF format.
"""

from . import errors
from .aberration import (
    AberrationModel,
    AberrationSampling,
    correct_background,
    correct_zernike_fit,
    fit_zernike,
    sample_aberration,
    synth_aberration,
    zernike_eval,
)
from .dataset import SimConfig, generate_dataset, generate_pair
from .estimators import (
    BackgroundCorrector,
    GoldsteinUnwrapper,
    SidebandRetriever,
    TomographicReconstructor,
    ZernikeCorrector,
)
from .field import (
    ComplexField,
    FieldMeta,
    Manifest,
    crop_center,
    export_pairs,
    read_field,
    write_field,
)
from .holography import Carrier, Hologram, retrieve_takeda, synth_hologram
from .metrics import (
    MetricsReport,
    SsimParams,
    error_report,
    fce,
    loss_combined,
    loss_l1,
    loss_ssim_contrast,
    percentile_summary,
    rmse_phase,
)
from .odt import ewald_map, nonneg_regularize, reconstruct
from .phantom import (
    BeadSpec,
    BlobSpec,
    OpticsConfig,
    RIVolume,
    bead_phase,
    cone_angles,
    forward_fields,
    make_phantom_volume,
    read_volume,
    write_volume,
)
from .unwrap import CutMask, ResidueMap, place_branch_cuts, residues, unwrap_goldstein, wrap_phase

__version__ = "0.1.0"

__all__ = [
    "AberrationModel", "AberrationSampling", "BackgroundCorrector", "BeadSpec",
    "BlobSpec", "Carrier", "ComplexField", "CutMask", "FieldMeta",
    "GoldsteinUnwrapper", "Hologram", "Manifest", "MetricsReport", "OpticsConfig",
    "RIVolume", "ResidueMap", "SidebandRetriever", "SimConfig", "SsimParams",
    "TomographicReconstructor", "ZernikeCorrector", "bead_phase", "cone_angles",
    "correct_background", "correct_zernike_fit", "crop_center", "error_report",
    "errors", "ewald_map", "export_pairs", "fce", "fit_zernike", "forward_fields",
    "generate_dataset", "generate_pair", "loss_combined", "loss_l1",
    "loss_ssim_contrast", "make_phantom_volume", "nonneg_regularize",
    "percentile_summary", "place_branch_cuts", "read_field", "read_volume",
    "reconstruct", "residues", "retrieve_takeda", "rmse_phase", "sample_aberration",
    "synth_aberration", "synth_hologram", "unwrap_goldstein", "wrap_phase",
    "write_field", "write_volume", "zernike_eval",
]
