"""sklearn-style transformer wrappers over the pipeline stages.

Each stage is a thin estimator with ``fit``/``transform``/``get_params`` so
holographic processing composes with :class:`sklearn.pipeline.Pipeline` and
friends. ``X`` is a single Hologram/ComplexField or a list of them; list in,
list out.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from . import aberration as ab
from . import holography as holo
from . import odt
from .errors import ShapeError
from .field import ComplexField
from .phantom import OpticsConfig, RIVolume
from .unwrap import unwrap_goldstein


def _map_items(x, fn):
    if isinstance(x, (list, tuple)):
        return [fn(item) for item in x]
    return fn(x)


def _check_field(x) -> ComplexField:
    if not isinstance(x, ComplexField):
        raise ShapeError(f"expected a ComplexField, got {type(x).__name__}")
    return x


class SidebandRetriever(BaseEstimator, TransformerMixin):
    """Fourier sideband demodulation of off-axis holograms."""

    def __init__(self, filter_radius: float = 0.12):
        self.filter_radius = filter_radius

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return _map_items(X, lambda h: holo.retrieve_takeda(h, self.filter_radius))


class GoldsteinUnwrapper(BaseEstimator, TransformerMixin):
    """Branch-cut unwrapping of a field's phase channel."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        def unwrap_one(item):
            if isinstance(item, ComplexField):
                return ComplexField(item.amplitude.copy(), unwrap_goldstein(item.phase),
                                    item.pixel_size, item.wavelength)
            return unwrap_goldstein(np.asarray(item))

        return _map_items(X, unwrap_one)


class BackgroundCorrector(BaseEstimator, TransformerMixin):
    """Divide sample fields by a background field learned in ``fit``."""

    def fit(self, X, y=None):
        self.background_ = _check_field(X if not isinstance(X, (list, tuple)) else X[0])
        return self

    def transform(self, X):
        return _map_items(X, lambda f: ab.correct_background(_check_field(f),
                                                             self.background_))


class ZernikeCorrector(BaseEstimator, TransformerMixin):
    """Least-squares Zernike baseline correction of unwrapped phase.

    ``fit`` estimates coefficients from a field (optionally over a mask);
    ``transform`` subtracts the fitted surface from each field.
    """

    def __init__(self, max_noll: int = 15, mask=None):
        self.max_noll = max_noll
        self.mask = mask

    def fit(self, X, y=None):
        fld = _check_field(X if not isinstance(X, (list, tuple)) else X[0])
        self.coefficients_ = ab.fit_zernike(fld.phase, self.max_noll, self.mask)
        return self

    def transform(self, X):
        def correct(f):
            f = _check_field(f)
            surface = ab.zernike_surface(list(enumerate(self.coefficients_, start=1)),
                                         f.height, f.width)
            return ComplexField(f.amplitude.copy(), f.phase - surface,
                                f.pixel_size, f.wavelength)

        return _map_items(X, correct)


class TomographicReconstructor(BaseEstimator, TransformerMixin):
    """Fourier-diffraction reconstruction of a volume from per-angle fields."""

    def __init__(self, optics: OpticsConfig | None = None,
                 regularization_iters: int = odt.DEFAULT_REG_ITERS):
        self.optics = optics
        self.regularization_iters = regularization_iters

    def fit(self, X, y=None):
        return self

    def transform(self, X) -> RIVolume:
        if self.optics is None:
            raise ValueError("TomographicReconstructor requires an OpticsConfig")
        return odt.reconstruct(list(X), self.optics, self.regularization_iters)
