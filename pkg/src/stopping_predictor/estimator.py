"""scikit-learn style wrapper around :class:`OnlinePredictor`."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils import check_array
from sklearn.utils.validation import check_is_fitted

from .core import EstimatorParams, ParameterError, PendingError, Schedule, SymbolCodec
from .predictor import OnlinePredictor


def check_path(X) -> np.ndarray:
    """Coerce a sequence (or a single-column 2-D array) to a 1-D array."""
    arr = check_array(X, ensure_2d=False, dtype=None, ensure_all_finite=False)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"expected a single sequence, got shape {arr.shape}")
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D sequence, got {arr.ndim} dimensions")
    return arr


def _as_schedule(s) -> Schedule:
    if isinstance(s, Schedule):
        return s
    if isinstance(s, str):
        return Schedule.parse(s)
    raise ParameterError(f"schedule must be a Schedule or a string, got {type(s).__name__}")


class StoppingTimePredictor(BaseEstimator):
    """Next-symbol law estimated along data-driven stopping times.

    Parameters
    ----------
    beta, gamma : float
        Thresholds, with ``2*beta + gamma < 1``.
    schedule : str or Schedule
        ``"identity"``, ``"log"`` or ``"table:1,2,..."``.
    target : TargetFunction or None
        Optional bounded scalar target; ``predict_value`` returns its average.
    max_len : int
        Initial block length tracked by the index (it grows on demand).

    Labels may be any hashable values; they are mapped to integer symbols
    in order of first appearance unless they already are nonnegative
    integers.

    Attributes
    ----------
    classes_ : ndarray
        Labels seen so far, indexed by symbol.
    predictor_ : OnlinePredictor
    n_events_ : int
        Number of completed stopping times.
    """

    def __init__(self, beta=0.3, gamma=0.3, schedule="identity", target=None, max_len=8):
        self.beta = beta
        self.gamma = gamma
        self.schedule = schedule
        self.target = target
        self.max_len = max_len

    def _params(self) -> EstimatorParams:
        return EstimatorParams(beta=float(self.beta), gamma=float(self.gamma),
                               schedule=_as_schedule(self.schedule),
                               target=self.target).validate()

    def _encode(self, arr: np.ndarray) -> list[int]:
        if self._integer_labels:
            if arr.dtype.kind not in "iu" or (arr.size and arr.min() < 0):
                raise ValueError("this estimator was fitted on integer symbols; got other labels")
            return arr.astype(np.int64).tolist()
        return self._codec.encode(arr.tolist())

    def fit(self, X, y=None):
        """Run the estimator over the sequence ``X`` from scratch."""
        arr = check_path(X)
        self._integer_labels = arr.dtype.kind in "iu" and (arr.size == 0 or arr.min() >= 0)
        self._codec = SymbolCodec()
        self.predictor_ = OnlinePredictor(self._params(), max_len=int(self.max_len))
        return self._feed(arr)

    def partial_fit(self, X, y=None):
        """Continue the sequence with the symbols in ``X``."""
        if not hasattr(self, "predictor_"):
            return self.fit(X)
        return self._feed(check_path(X))

    def _feed(self, arr):
        self.predictor_.feed(self._encode(arr))
        p = self.predictor_
        if self._integer_labels:
            top = max(p.path) + 1 if p.path else 0
            self.classes_ = np.arange(top)
        else:
            self.classes_ = np.array(self._codec.labels, dtype=object)
        self.n_events_ = len(p.lambdas) - 1
        self.lambdas_ = np.array(p.lambdas)
        self.kappas_ = np.array(p.kappas)
        self.zetas_ = np.array(p.zetas)
        return self

    def predict_proba(self, X=None) -> np.ndarray:
        """Current estimate as a probability vector over ``classes_``.

        ``X`` is accepted for API symmetry and, if given, appended first."""
        if X is not None:
            self.partial_fit(X)
        check_is_fitted(self, "predictor_")
        est = self.predictor_.estimate()
        if est is None:
            raise PendingError("no stopping time completed yet")
        out = np.zeros(len(self.classes_))
        for s, c in est.counts:
            out[s] = c / est.n
        return out

    def predict(self, X=None):
        """Most probable next label (ties go to the smallest symbol)."""
        proba = self.predict_proba(X)
        return self.classes_[int(np.argmax(proba))]

    def predict_value(self, X=None) -> float:
        """Average of the scalar target over the stopping-time successors."""
        if self.target is None:
            raise ParameterError("no target function was set")
        if X is not None:
            self.partial_fit(X)
        check_is_fitted(self, "predictor_")
        est = self.predictor_.estimate()
        if est is None:
            raise PendingError("no stopping time completed yet")
        labels = self.classes_
        return sum(c * self.target(labels[s] if not self._integer_labels else s)
                   for s, c in est.counts) / est.n
