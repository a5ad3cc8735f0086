"""Bandwidth and resource-usage forecasting plus congestion-state detection.

The forecaster is a deliberately small three-layer feed-forward network
(window of W recent samples -> H sigmoid units -> one linear output) trained
with plain full-batch gradient descent on squared loss.  Inputs and targets
are min-max normalised with bounds taken from the training data; a
degenerate window (max == min) falls back to identity scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class InsufficientHistoryError(Exception):
    """Training or prediction was asked for with too short a series."""


def _sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


class PredictorModel:
    """One-step-ahead forecaster for a single scalar resource series."""

    def __init__(
        self,
        window: int = 6,
        hidden: int = 8,
        learning_rate: float = 0.05,
        seed: int | None = None,
    ):
        if window < 1 or hidden < 1:
            raise ValueError("window and hidden sizes must be >= 1")
        self.window = window
        self.hidden = hidden
        self.learning_rate = learning_rate
        rng = np.random.default_rng(seed)
        self.w1 = rng.uniform(-0.5, 0.5, size=(window, hidden))
        self.b1 = np.zeros(hidden)
        self.w2 = rng.uniform(-0.5, 0.5, size=hidden)
        self.b2 = 0.0
        # Normalisation bounds; lo == hi means identity scaling.
        self.lo = 0.0
        self.hi = 0.0

    @classmethod
    def zeros(cls, window: int = 6, hidden: int = 8, learning_rate: float = 0.05):
        model = cls(window, hidden, learning_rate, seed=0)
        model.w1[:] = 0.0
        model.w2[:] = 0.0
        return model

    # -- normalisation ---------------------------------------------------

    def set_bounds(self, data: np.ndarray) -> None:
        data = np.asarray(data, dtype=float)
        self.lo = float(data.min())
        self.hi = float(data.max())

    def _norm(self, x: np.ndarray) -> np.ndarray:
        if self.hi > self.lo:
            return (np.asarray(x, dtype=float) - self.lo) / (self.hi - self.lo)
        return np.asarray(x, dtype=float)

    def _denorm(self, y: float) -> float:
        if self.hi > self.lo:
            return y * (self.hi - self.lo) + self.lo
        return y

    # -- forward/backward ------------------------------------------------

    def _forward(self, xn: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h = _sigmoid(xn @ self.w1 + self.b1)
        out = h @ self.w2 + self.b2
        return h, out

    def _gradients(self, xn: np.ndarray, yn: np.ndarray):
        """Analytic gradients of mean squared loss 0.5*(out - y)^2."""
        h, out = self._forward(xn)
        n = xn.shape[0]
        dout = (out - yn) / n
        dw2 = h.T @ dout
        db2 = float(dout.sum())
        dh = np.outer(dout, self.w2)
        dz = dh * h * (1.0 - h)
        dw1 = xn.T @ dz
        db1 = dz.sum(axis=0)
        loss = float(0.5 * np.mean((out - yn) ** 2))
        return dw1, db1, dw2, db2, loss

    def predict(self, window_values) -> float:
        """Forecast the next sample from the last ``window`` raw samples."""
        x = np.asarray(window_values, dtype=float)
        if x.shape != (self.window,):
            raise InsufficientHistoryError(
                "insufficient history: need exactly %d samples" % self.window
            )
        xn = self._norm(x)[None, :]
        _, out = self._forward(xn)
        return max(0.0, self._denorm(float(out[0])))

    def predict_batch(self, windows: np.ndarray) -> np.ndarray:
        """Vectorised forecast; ``windows`` has shape (n, window)."""
        xn = self._norm(np.asarray(windows, dtype=float))
        _, out = self._forward(xn)
        raw = out * (self.hi - self.lo) + self.lo if self.hi > self.lo else out
        return np.maximum(raw, 0.0)


def make_windows(series, window: int) -> tuple[np.ndarray, np.ndarray]:
    """Sliding (window -> next value) pairs from a raw series."""
    s = np.asarray(series, dtype=float)
    if s.size < window + 1:
        raise InsufficientHistoryError(
            "insufficient history: need at least %d samples" % (window + 1)
        )
    count = s.size - window
    x = np.stack([s[i : i + window] for i in range(count)])
    y = s[window:]
    return x, y


def train_on_windows(
    model: PredictorModel, x: np.ndarray, y: np.ndarray, epochs: int = 200
) -> list[float]:
    """Full-batch gradient descent on raw (window, target) pairs."""
    xn = model._norm(np.asarray(x, dtype=float))
    yn = model._norm(np.asarray(y, dtype=float))
    trace = []
    for _ in range(epochs):
        dw1, db1, dw2, db2, loss = model._gradients(xn, yn)
        trace.append(loss)
        lr = model.learning_rate
        model.w1 -= lr * dw1
        model.b1 -= lr * db1
        model.w2 -= lr * dw2
        model.b2 -= lr * db2
    return trace


def train(model: PredictorModel, series, epochs: int = 200) -> list[float]:
    """Fit normalisation bounds on the series and train; returns loss trace."""
    x, y = make_windows(series, model.window)
    model.set_bounds(np.asarray(series, dtype=float))
    return train_on_windows(model, x, y, epochs)


def gradient_check(
    model: PredictorModel, window_values, target: float, step: float = 1e-4
) -> float:
    """Max relative error between analytic and central-difference gradients."""
    x = np.asarray(window_values, dtype=float)[None, :]
    xn = model._norm(x)
    yn = np.asarray([target], dtype=float)
    yn = model._norm(yn)

    dw1, db1, dw2, db2, _ = model._gradients(xn, yn)
    analytic = np.concatenate(
        [dw1.ravel(), db1.ravel(), dw2.ravel(), np.array([db2])]
    )

    params = [model.w1, model.b1, model.w2]

    def loss_now() -> float:
        _, out = model._forward(xn)
        return float(0.5 * np.mean((out - yn) ** 2))

    numeric = []
    for arr in params:
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_now()
            flat[i] = orig - step
            down = loss_now()
            flat[i] = orig
            numeric.append((up - down) / (2.0 * step))
    orig = model.b2
    model.b2 = orig + step
    up = loss_now()
    model.b2 = orig - step
    down = loss_now()
    model.b2 = orig
    numeric.append((up - down) / (2.0 * step))

    numeric = np.asarray(numeric)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


# -- congestion ---------------------------------------------------------


@dataclass(frozen=True)
class CongestionState:
    """Data-centre congestion verdict: 1 overload, -1 underload, 0 steady."""

    value: int
    deviation: float
    dev_threshold: float
    time_threshold: float


def detect_congestion(
    observed_bw: float,
    predicted_bw: float,
    delta_t: float = 1.0,
    dev_threshold: float = 0.0,
    time_threshold: float = 1.0,
) -> CongestionState:
    """Trichotomy on the observed-minus-predicted aggregate bandwidth.

    Overload (1) when deviation * delta_t exceeds dev_threshold *
    time_threshold, underload (-1) on any negative deviation, steady (0)
    otherwise.
    """
    if delta_t <= 0:
        raise ValueError("delta_t must be positive")
    deviation = observed_bw - predicted_bw
    product = deviation * delta_t
    if product > dev_threshold * time_threshold:
        value = 1
    elif product < 0:
        value = -1
    else:
        value = 0
    return CongestionState(value, deviation, dev_threshold, time_threshold)
