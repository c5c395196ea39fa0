import numpy as np
import pytest

from qpikit import (
    ComplexField,
    SsimParams,
    error_report,
    fce,
    loss_combined,
    loss_l1,
    loss_ssim_contrast,
    percentile_summary,
    rmse_phase,
)
from qpikit.errors import DegenerateField, EmptyInput, EmptyMask, ShapeError
from qpikit.metrics import fractional_histogram

from conftest import make_field


def brute_force_contrast_ssim(x, y, window, alpha, c):
    """Windowed oracle: reflect-pad, then explicit per-pixel window statistics."""
    half = window // 2
    xp = np.pad(x, half, mode="symmetric")
    yp = np.pad(y, half, mode="symmetric")
    out = np.zeros_like(x, dtype=float)
    for i in range(x.shape[0]):
        for j in range(x.shape[1]):
            wx = xp[i:i + window, j:j + window]
            wy = yp[i:i + window, j:j + window]
            sx, sy = wx.std(), wy.std()
            out[i, j] = ((2 * sx * sy + c) / (sx ** 2 + sy ** 2 + c)) ** alpha
    return float(np.mean(1.0 - out))


# ---------------------------------------------------------------------------
# L1
# ---------------------------------------------------------------------------

def test_l1_identity(rng):
    x = rng.random((2, 8, 8))
    assert loss_l1(x, x) == 0.0


def test_l1_constant_offset(rng):
    x = rng.random((2, 8, 8))
    assert loss_l1(x, x + 0.37) == pytest.approx(0.37, abs=1e-12)


def test_l1_hand_arithmetic():
    assert loss_l1(np.array([1.0, 2.0]), np.array([2.0, 4.0])) == pytest.approx(1.5)


def test_l1_shape_mismatch():
    with pytest.raises(ShapeError):
        loss_l1(np.zeros((4, 4)), np.zeros((4, 5)))


# ---------------------------------------------------------------------------
# contrast SSIM
# ---------------------------------------------------------------------------

def test_ssim_identity(rng):
    x = rng.random((16, 16))
    assert loss_ssim_contrast(x, x) == pytest.approx(0.0, abs=1e-12)


def test_ssim_constant_images():
    x = np.full((16, 16), 3.0)
    assert loss_ssim_contrast(x, x + 1.0) == pytest.approx(0.0, abs=1e-12)


def test_ssim_scaled_field_against_window_oracle(rng):
    x = rng.normal(0, 1, (24, 24))
    y = 2.0 * x
    params = SsimParams(window=7, alpha=1.0, c=0.01)
    ours = loss_ssim_contrast(x, y, params)
    oracle = brute_force_contrast_ssim(x, y, 7, 1.0, 0.01)
    assert ours == pytest.approx(oracle, abs=1e-10)
    # substitution sy = 2 sx: SSIM = (4 s^2 + c) / (5 s^2 + c) < 1 wherever s > 0
    assert ours > 0.0


def test_ssim_random_pair_against_window_oracle(rng):
    x = rng.random((20, 20))
    y = rng.random((20, 20))
    params = SsimParams(window=5, alpha=1.5, c=0.02)
    assert loss_ssim_contrast(x, y, params) == pytest.approx(
        brute_force_contrast_ssim(x, y, 5, 1.5, 0.02), abs=1e-10)


def test_ssim_window_larger_than_image():
    with pytest.raises(ShapeError):
        loss_ssim_contrast(np.zeros((8, 8)), np.zeros((8, 8)), SsimParams(window=11))


def test_ssim_param_validation():
    with pytest.raises(ValueError):
        SsimParams(window=4)
    with pytest.raises(ValueError):
        SsimParams(c=-1.0)


# ---------------------------------------------------------------------------
# combined loss
# ---------------------------------------------------------------------------

def test_combined_zero_for_perfect_prediction(rng):
    x = rng.random((2, 16, 16))
    assert loss_combined(x, x, lam=1.0) == pytest.approx(0.0, abs=1e-12)


def test_combined_lambda_zero_is_l1(rng):
    x, y = rng.random((2, 16, 16)), rng.random((2, 16, 16))
    assert loss_combined(x, y, lam=0.0) == loss_l1(x, y)


def test_combined_is_sum_of_parts(rng):
    x, y = rng.random((2, 16, 16)), rng.random((2, 16, 16))
    params = SsimParams(window=5, c=0.01)
    expected = loss_l1(x, y) + 1.0 * loss_ssim_contrast(x, y, params)
    assert loss_combined(x, y, 1.0, params) == pytest.approx(expected, abs=1e-14)


def test_combined_bounded_below_by_l1(rng):
    for _ in range(5):
        x, y = rng.random((16, 16)), rng.random((16, 16))
        assert loss_combined(x, y) >= loss_l1(x, y)


# ---------------------------------------------------------------------------
# FCE
# ---------------------------------------------------------------------------

def test_fce_identity(rng):
    f = make_field(rng.uniform(0.5, 2, (16, 16)), rng.uniform(-3, 3, (16, 16)))
    assert fce(f, f) == pytest.approx(0.0, abs=1e-12)


def test_fce_global_phase_invariance(rng):
    f = make_field(rng.uniform(0.5, 2, (16, 16)), rng.uniform(-3, 3, (16, 16)))
    rotated = ComplexField.from_complex(f.to_complex() * np.exp(1.23j), 0.1, 0.532)
    assert fce(f, rotated) == pytest.approx(0.0, abs=1e-12)


def test_fce_orthogonal_fields():
    n = 32
    x = np.arange(n)[None, :] * np.ones((n, 1))
    a = make_field(np.ones((n, n)), 2 * np.pi * x / n)
    b = make_field(np.ones((n, n)), 4 * np.pi * x / n)
    assert fce(a, b) == pytest.approx(1.0, abs=1e-12)


def test_fce_symmetric_and_scale_invariant(rng):
    a = make_field(rng.uniform(0.5, 2, (8, 8)), rng.uniform(-3, 3, (8, 8)))
    b = make_field(rng.uniform(0.5, 2, (8, 8)), rng.uniform(-3, 3, (8, 8)))
    assert fce(a, b) == pytest.approx(fce(b, a), abs=1e-12)
    scaled = ComplexField.from_complex((0.2 - 1.7j) * b.to_complex(), 0.1, 0.532)
    assert fce(a, scaled) == pytest.approx(fce(a, b), abs=1e-12)


def test_fce_degenerate():
    zero = make_field(np.zeros((4, 4)), np.zeros((4, 4)))
    with pytest.raises(DegenerateField):
        fce(zero, zero)
    one = make_field(np.ones((4, 4)), np.zeros((4, 4)))
    assert fce(one, zero) == 1.0


# ---------------------------------------------------------------------------
# RMSE
# ---------------------------------------------------------------------------

def test_rmse_identity(rng):
    phi = rng.random((8, 8))
    assert rmse_phase(phi, phi) == 0.0


def test_rmse_constant_offset(rng):
    phi = rng.random((8, 8))
    assert rmse_phase(phi + 0.5, phi) == pytest.approx(0.5, abs=1e-12)
    assert rmse_phase(phi + 0.5, phi, remove_offset=True) == pytest.approx(0.0, abs=1e-12)


def test_rmse_hand_arithmetic():
    gt = np.array([0.1, -0.1, 0.1, -0.1])
    assert rmse_phase(gt, np.zeros(4)) == pytest.approx(0.1, abs=1e-14)


def test_rmse_offset_invariance(rng):
    a, b = rng.random((8, 8)), rng.random((8, 8))
    base = rmse_phase(a, b, remove_offset=True)
    assert rmse_phase(a + 3.0, b, remove_offset=True) == pytest.approx(base, abs=1e-12)
    assert rmse_phase(a, b - 2.0, remove_offset=True) == pytest.approx(base, abs=1e-12)


# ---------------------------------------------------------------------------
# error report and histograms
# ---------------------------------------------------------------------------

def test_report_identity(rng):
    f = make_field(rng.uniform(0.5, 2, (32, 32)), rng.uniform(-1, 1, (32, 32)))
    report = error_report(f, f)
    assert report.error_std == 0.0
    assert report.fce == pytest.approx(0.0, abs=1e-12)
    assert report.rmse_phase == 0.0
    assert report.hist_fractions.max() == pytest.approx(1.0)
    assert report.hist_fractions.sum() == pytest.approx(1.0, abs=1e-9)


def test_report_symmetric_errors():
    n = 32
    phase = np.zeros((n, n))
    phase[: n // 2] = 0.25
    phase[n // 2:] = -0.25
    gt = make_field(np.ones((n, n)), phase)
    out = make_field(np.ones((n, n)), np.zeros((n, n)))
    report = error_report(gt, out, bins=10)
    assert np.allclose(report.hist_fractions, report.hist_fractions[::-1])


def test_report_gaussian_error_std(rng):
    n = 256
    noise = rng.normal(0.0, 0.1, (n, n))
    gt = make_field(np.ones((n, n)), noise)
    out = make_field(np.ones((n, n)), np.zeros((n, n)))
    mask = np.zeros((n, n), dtype=bool)
    mask[:, : n // 2] = True
    report = error_report(gt, out, background_mask=mask)
    assert report.error_std == pytest.approx(0.1, rel=0.05)
    assert report.coherent_noise_std == pytest.approx(0.1, rel=0.05)


def test_report_empty_mask(rng):
    f = make_field(np.ones((8, 8)), rng.random((8, 8)))
    with pytest.raises(EmptyMask):
        error_report(f, f, background_mask=np.zeros((8, 8), dtype=bool))


def test_histogram_fractions_sum_and_permutation(rng):
    values = rng.normal(size=1000)
    _, fr1 = fractional_histogram(values, bins=21)
    _, fr2 = fractional_histogram(rng.permutation(values), bins=21)
    assert fr1.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(fr1, fr2)


# ---------------------------------------------------------------------------
# percentile summary
# ---------------------------------------------------------------------------

def test_percentile_uniform_integers():
    assert percentile_summary(list(range(1, 101)), 0.85) == 85


def test_percentile_singleton():
    assert percentile_summary([7.7], 0.3) == 7.7
    assert percentile_summary([7.7], 1.0) == 7.7


def test_percentile_ties_against_sort_oracle(rng):
    values = list(rng.integers(0, 5, size=37).astype(float))
    for p in (0.25, 0.5, 0.85, 1.0):
        # oracle: smallest t among values with #(<= t) >= p * N
        candidates = sorted(values)
        oracle = next(t for t in candidates
                      if sum(v <= t for v in values) >= p * len(values))
        assert percentile_summary(values, p) == oracle


def test_percentile_empty():
    with pytest.raises(EmptyInput):
        percentile_summary([], 0.5)
