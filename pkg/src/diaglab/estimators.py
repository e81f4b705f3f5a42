"""scikit-learn style wrappers around sampling and measurement selection.

The inputs are diagnosis problems rather than feature matrices, so only
the parameter protocol (get_params/set_params, clone) and the fit/predict
naming are borrowed.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dpi import Dpi
from .measure import HEURISTICS, MeasurementPoint, generate_mp_pool, score_mp, select_mp
from .sampling import SAMPLE_TYPES, Sample, draw_sample

__all__ = ["DiagnosisSampler", "MeasurementSelector"]


def _check_dpi(dpi):
    if not isinstance(dpi, Dpi):
        raise TypeError(f"expected a Dpi, got {type(dpi).__name__}")
    return dpi


class DiagnosisSampler(BaseEstimator):
    """Draws a sample of minimal diagnoses from a DPI.

    After ``fit``: ``sample_`` holds the :class:`Sample`, ``diagnoses_``
    and ``probabilities_`` its contents.
    """

    def __init__(self, sample_type: str = "bf", k: int = 6, seed: int = 0):
        self.sample_type = sample_type
        self.k = k
        self.seed = seed

    def fit(self, dpi: Dpi, y=None):
        _check_dpi(dpi)
        if self.sample_type not in SAMPLE_TYPES:
            raise ValueError(f"unknown sample type {self.sample_type!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        self.sample_ = draw_sample(dpi, self.sample_type, int(self.k), self.seed)
        self.diagnoses_ = self.sample_.diagnoses
        self.probabilities_ = self.sample_.norm_probs
        return self

    def transform(self, dpi: Dpi | None = None) -> Sample:
        if not hasattr(self, "sample_"):
            raise NotFittedError("DiagnosisSampler is not fitted yet")
        return self.sample_

    def fit_transform(self, dpi: Dpi, y=None) -> Sample:
        return self.fit(dpi).transform(dpi)


class MeasurementSelector(BaseEstimator):
    """Picks the best measurement point for a sample under one heuristic.

    ``fit(dpi, sample)`` builds the pool of informative MPs (``pool_``)
    and stores the choice in ``best_``; ``predict`` returns the best MP of
    a given pool, or of the fitted one.
    """

    def __init__(self, heuristic: str = "ent", mp_limit: int = 50,
                 cautiousness: float = 0.3, seed: int = 0):
        self.heuristic = heuristic
        self.mp_limit = mp_limit
        self.cautiousness = cautiousness
        self.seed = seed

    def _validate(self):
        if self.heuristic.lower() not in HEURISTICS:
            raise ValueError(f"unknown heuristic {self.heuristic!r}")
        if not 0.0 <= self.cautiousness <= 0.5:
            raise ValueError("cautiousness must lie in [0, 0.5]")

    def fit(self, dpi: Dpi, sample: Sample):
        _check_dpi(dpi)
        self._validate()
        if isinstance(sample, DiagnosisSampler):
            sample = sample.transform()
        self.pool_ = generate_mp_pool(dpi, sample, self.mp_limit, self.seed)
        self.best_ = select_mp(self.pool_, self.heuristic, self.cautiousness) if self.pool_ else None
        return self

    def score_samples(self, pool=None) -> list[float]:
        self._validate()
        return [score_mp(mp, self.heuristic, self.cautiousness) for mp in self._pool(pool)]

    def predict(self, pool=None) -> MeasurementPoint:
        self._validate()
        return select_mp(self._pool(pool), self.heuristic, self.cautiousness)

    def _pool(self, pool):
        if pool is not None:
            return list(pool)
        if not hasattr(self, "pool_"):
            raise NotFittedError("MeasurementSelector is not fitted yet")
        return self.pool_
