"""Scikit-learn style front end for the state-space forecaster.

KalmanForecaster plugs the fit/forecast core into the usual estimator
conventions (constructor params stored verbatim, fitted attributes with
trailing underscores, get_params/set_params/clone), so it composes with
pipelines and model-selection tooling that only need fit/predict.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import kalman
from .validation import check_horizon, check_series


class KalmanForecaster(BaseEstimator):
    """Forecast a daily concentration series with a linear-Gaussian model.

    Parameters
    ----------
    kind : "level" or "trend"
        Core structure: random-walk level, or level plus slope.
    seasonal_harmonics : int
        Number of seasonal harmonic blocks added to the state.
    seasonal_period : float
        Season length in days.
    tol : float
        Relative log-likelihood spread below which the simplex search stops.
    max_iter : int
        Simplex iteration cap.

    Examples
    --------
    >>> f = KalmanForecaster().fit([0.5, 0.52, np.nan, 0.55, 0.54] * 4)
    >>> f.predict(horizon=3).shape
    (3,)
    """

    def __init__(
        self,
        kind: str = "level",
        seasonal_harmonics: int = 0,
        seasonal_period: float = kalman.DEFAULT_PERIOD,
        tol: float = 1e-8,
        max_iter: int = 500,
    ):
        self.kind = kind
        self.seasonal_harmonics = seasonal_harmonics
        self.seasonal_period = seasonal_period
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, y, X=None):
        """Fit noise variances to a daily series (NaN marks gap days)."""
        y = check_series(y)
        result = kalman.fit(
            y,
            kind=self.kind,
            seasonal_harmonics=self.seasonal_harmonics,
            seasonal_period=self.seasonal_period,
            tol=self.tol,
            max_iter=self.max_iter,
        )
        run = kalman.kf_filter(y, result.model)
        self.result_ = result
        self.model_ = result.model
        self.state_ = run.states[-1]
        self.log_likelihood_ = result.log_likelihood
        self.n_observed_ = int(np.isfinite(y).sum())
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise NotFittedError(
                "This KalmanForecaster instance is not fitted yet; call fit first."
            )

    def predict(self, horizon=1) -> np.ndarray:
        """Point forecasts (clipped to [0, 1]) for days 1..horizon ahead."""
        self._check_fitted()
        h = check_horizon(horizon)
        return np.array([f.mean_clipped for f in kalman.forecast(self.state_, self.model_, h)])

    def predict_dist(self, horizon=1) -> list[kalman.Forecast]:
        """Full predictive Gaussians (unclipped mean plus variance)."""
        self._check_fitted()
        h = check_horizon(horizon)
        return kalman.forecast(self.state_, self.model_, h)

    def score(self, y=None, X=None) -> float:
        """Training log-likelihood of the fitted model."""
        self._check_fitted()
        return self.log_likelihood_
