"""Loss and error metrics: L1, contrast-only SSIM, the combined training loss,
field cross-correlation error (FCE), phase RMSE, error maps, coherent-noise
statistics, fractional histograms, and percentile summaries.

FCE is one minus the normalized magnitude of the complex inner product, so a
correlation of 0.982 corresponds to an FCE of 0.018; global phase drops out.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateField, EmptyInput, EmptyMask, ShapeError
from .field import ComplexField

DEFAULT_LAMBDA = 1.0
_C_FLOOR = 1e-12


@dataclass
class SsimParams:
    """Contrast-SSIM parameters: odd sliding ``window``, exponent ``alpha``,
    stabilizer ``c``. With c None the stabilizer is derived per channel as
    (0.03 * range of the ground-truth channel)^2, floored for constant images.
    """

    window: int = 11
    alpha: float = 1.0
    c: float | None = None

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ValueError("window must be odd and >= 3")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.c is not None and self.c <= 0:
            raise ValueError("stabilizer c must be positive")


@dataclass
class MetricsReport:
    fce: float
    rmse_phase: float
    loss_l1: float
    loss_ssim: float
    loss_combined: float
    error_std: float
    hist_bin_centers: np.ndarray
    hist_fractions: np.ndarray
    coherent_noise_std: float | None = None

    def to_dict(self) -> dict:
        d = {
            "fce": self.fce,
            "rmse_phase": self.rmse_phase,
            "loss_l1": self.loss_l1,
            "loss_ssim": self.loss_ssim,
            "loss_combined": self.loss_combined,
            "error_std": self.error_std,
            "hist_bin_centers": [float(v) for v in self.hist_bin_centers],
            "hist_fractions": [float(v) for v in self.hist_fractions],
        }
        if self.coherent_noise_std is not None:
            d["coherent_noise_std"] = self.coherent_noise_std
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def histogram_csv(self) -> str:
        lines = ["bin_center,fraction"]
        for center, frac in zip(self.hist_bin_centers, self.hist_fractions):
            lines.append(f"{center!r},{frac!r}")
        return "\n".join(lines) + "\n"


def field_channels(field: ComplexField) -> np.ndarray:
    """Stack a field into the 2-channel (amplitude, phase) image the losses use."""
    return np.stack([field.amplitude, field.phase])


def _check_shapes(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise ShapeError(f"shape mismatch: {x.shape} vs {y.shape}")


def loss_l1(x, y) -> float:
    """Mean absolute difference over all pixels and channels."""
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    _check_shapes(x, y)
    return float(np.mean(np.abs(y - x)))


def _local_std(img: np.ndarray, window: int) -> np.ndarray:
    mean = ndimage.uniform_filter(img, size=window, mode="reflect")
    mean_sq = ndimage.uniform_filter(img * img, size=window, mode="reflect")
    return np.sqrt(np.clip(mean_sq - mean * mean, 0.0, None))


def loss_ssim_contrast(x, y, params: SsimParams | None = None) -> float:
    """Mean of 1 - SSIM_contrast, with SSIM_c = ((2 sx sy + c)/(sx^2 + sy^2 + c))^alpha
    from per-pixel sliding-window standard deviations."""
    params = params or SsimParams()
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    _check_shapes(x, y)
    if x.ndim == 2:
        x, y = x[None], y[None]
    if min(x.shape[-2:]) < params.window:
        raise ShapeError(
            f"image {x.shape[-2:]} is smaller than the {params.window}-pixel window"
        )
    total = 0.0
    for xc, yc in zip(x, y):
        c = params.c
        if c is None:
            c = max((0.03 * float(yc.max() - yc.min())) ** 2, _C_FLOOR)
        sx, sy = _local_std(xc, params.window), _local_std(yc, params.window)
        ssim = ((2.0 * sx * sy + c) / (sx * sx + sy * sy + c)) ** params.alpha
        total += float(np.mean(1.0 - ssim))
    return total / x.shape[0]


def loss_combined(x, y, lam: float = DEFAULT_LAMBDA,
                  params: SsimParams | None = None) -> float:
    """loss_l1 + lambda * loss_ssim_contrast."""
    return loss_l1(x, y) + lam * loss_ssim_contrast(x, y, params)


def _as_complex(field) -> np.ndarray:
    if isinstance(field, ComplexField):
        return field.to_complex()
    return np.asarray(field, dtype=np.complex128)


def fce(e_gt, e_out) -> float:
    """Field cross-correlation error: 1 - |<gt, out>| / (||gt|| * ||out||)."""
    a, b = _as_complex(e_gt), _as_complex(e_out)
    _check_shapes(a, b)
    norm_a = np.sqrt(np.sum(np.abs(a) ** 2))
    norm_b = np.sqrt(np.sum(np.abs(b) ** 2))
    if norm_a == 0.0 and norm_b == 0.0:
        raise DegenerateField("both fields are identically zero")
    if norm_a == 0.0 or norm_b == 0.0:
        return 1.0
    corr = np.abs(np.sum(np.conj(a) * b)) / (norm_a * norm_b)
    return float(np.clip(1.0 - corr, 0.0, 1.0))


def rmse_phase(phi_gt, phi_out, remove_offset: bool = False) -> float:
    """Root-mean-square phase difference; optionally offset-free."""
    a = np.asarray(phi_gt, dtype=np.float64)
    b = np.asarray(phi_out, dtype=np.float64)
    _check_shapes(a, b)
    diff = a - b
    if remove_offset:
        diff = diff - diff.mean()
    return float(np.sqrt(np.mean(diff * diff)))


def fractional_histogram(values: np.ndarray, bins=51) -> tuple[np.ndarray, np.ndarray]:
    """Histogram normalized to fractions; returns (bin_centers, fractions)."""
    values = np.asarray(values, dtype=np.float64).ravel()
    counts, edges = np.histogram(values, bins=bins)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return centers, counts / values.size


def error_report(e_gt: ComplexField, e_out: ComplexField,
                 background_mask: np.ndarray | None = None,
                 bins=51,
                 ssim_params: SsimParams | None = None,
                 lam: float = DEFAULT_LAMBDA) -> MetricsReport:
    """Full metrics for one field pair: error map E = phi_gt - phi_out, its std
    and fractional histogram, the losses, FCE, and (with a background mask)
    the coherent-noise std of the ground-truth phase over the mask."""
    if e_gt.shape != e_out.shape:
        raise ShapeError(f"shape mismatch: {e_gt.shape} vs {e_out.shape}")
    error_map = e_gt.phase - e_out.phase
    centers, fractions = fractional_histogram(error_map, bins)

    noise_std = None
    if background_mask is not None:
        mask = np.asarray(background_mask, dtype=bool)
        if not mask.any():
            raise EmptyMask("background mask selects no pixels")
        noise_std = float(np.std(e_gt.phase[mask]))

    x, y = field_channels(e_out), field_channels(e_gt)
    l1 = loss_l1(x, y)
    ssim = loss_ssim_contrast(x, y, ssim_params)
    return MetricsReport(
        fce=fce(e_gt, e_out),
        rmse_phase=rmse_phase(e_gt.phase, e_out.phase),
        loss_l1=l1,
        loss_ssim=ssim,
        loss_combined=l1 + lam * ssim,
        error_std=float(np.std(error_map)),
        hist_bin_centers=centers,
        hist_fractions=fractions,
        coherent_noise_std=noise_std,
    )


def percentile_summary(values, percentile: float) -> float:
    """Smallest threshold t with at least ``percentile`` of values <= t."""
    values = list(values)
    if not values:
        raise EmptyInput("cannot summarize an empty value list")
    if not 0.0 < percentile <= 1.0:
        raise ValueError(f"percentile must be in (0, 1], got {percentile}")
    ranked = sorted(float(v) for v in values)
    k = max(1, int(np.ceil(percentile * len(ranked))))
    return ranked[k - 1]
