"""Scikit-learn compatible wrapper so the engine composes with the wider
ecosystem (pipelines, metrics, cross-validation harnesses).

Training is out of scope: the classifier wraps an already-built ModelBundle,
and fit() only validates and records the class labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .engine import run_forward
from .model_io import ModelBundle
from .tensor import Tensor3


def _check_images(X, input_shape: tuple[int, int, int]) -> np.ndarray:
    arr = np.asarray(X, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[np.newaxis]
    if arr.ndim != 4 or tuple(arr.shape[1:]) != tuple(input_shape):
        raise ValueError(f"X must have shape (n, {input_shape[0]}, {input_shape[1]}, {input_shape[2]}), got {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("X contains non-finite values")
    if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
        raise ValueError("X values must lie in [0, 1]")
    return arr


class CNNClassifier(BaseEstimator, ClassifierMixin):
    """Predict-only classifier backed by a loaded model bundle.

    Parameters
    ----------
    model : ModelBundle
        The weights and architecture to run. fit() performs no training; it
        validates the bundle and exposes ``classes_``.
    """

    def __init__(self, model: ModelBundle | None = None):
        self.model = model

    def fit(self, X=None, y=None):
        if self.model is None:
            raise ValueError("CNNClassifier requires a ModelBundle; pass model=... at construction")
        self.model.weights.validate_against(self.model.descriptor)
        self.classes_ = np.asarray(self.model.descriptor.class_labels, dtype=object)
        self.n_features_in_ = int(np.prod(self.model.descriptor.input_shape))
        return self

    def _require_fitted(self):
        if not hasattr(self, "classes_"):
            raise ValueError("this CNNClassifier instance is not fitted yet; call fit() first")

    def predict_proba(self, X) -> np.ndarray:
        self._require_fitted()
        arr = _check_images(X, self.model.descriptor.input_shape)
        rows = [run_forward(self.model, Tensor3(sample, copy=False)).probabilities for sample in arr]
        return np.stack(rows)

    def decision_function(self, X) -> np.ndarray:
        self._require_fitted()
        arr = _check_images(X, self.model.descriptor.input_shape)
        rows = [run_forward(self.model, Tensor3(sample, copy=False)).logits for sample in arr]
        return np.stack(rows).astype(np.float64)

    def predict(self, X) -> np.ndarray:
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]
