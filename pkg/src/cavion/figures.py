"""Figure presets and structural analysis of P_g traces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .hilbert import Preparation

DEFAULT_ETAS = (0.0, 0.05, 0.1, 0.2, 0.3, 0.5)


@dataclass(frozen=True)
class FigurePreset:
    name: str
    prep: Preparation
    tau_max: float
    tau_points: int

    @property
    def tau_grid(self):
        return np.linspace(0.0, self.tau_max, self.tau_points)


FIGURES = {
    # coherent motion, field vacuum
    "cv": FigurePreset("cv", Preparation(alpha=2.0, fock_p=0), 25.0, 2000),
    # coherent motion, coherent field
    "cc": FigurePreset("cc", Preparation(alpha=2.0, beta=2.0), 25.0, 2000),
    # long-time super-revival run
    "sr": FigurePreset("sr", Preparation(alpha=2.0, beta=2.0), 250.0, 20000),
}


def periodicity_score(values, tau=None):
    """Largest autocorrelation of the trace past the first zero crossing.

    The autocorrelation at each lag is the Pearson correlation of the trace
    with its shifted copy, for lags up to half the span.  Lags before the first
    negative value only reflect smoothness and are skipped.  An exactly
    periodic trace scores close to 1, an irregular one much lower, and a trace
    whose autocorrelation never turns negative scores -1.
    """
    y = np.asarray(values, dtype=float)
    best, crossed = -1.0, False
    for lag in range(1, y.size // 2):
        a, b = y[:-lag], y[lag:]
        a = a - a.mean()
        b = b - b.mean()
        den = np.sqrt(np.dot(a, a) * np.dot(b, b))
        c = float(np.dot(a, b) / den) if den > 0 else 0.0
        if crossed:
            best = max(best, c)
        else:
            crossed = c < 0
    return best


def revival_envelope(values, tau, window=np.pi, smooth=5):
    """Envelope of ``|P_g - <P_g>|`` on consecutive windows, lightly smoothed.

    ``<P_g>`` is the mean over the second half of the trace (the collapsed
    level).  Returns window centres and the envelope.
    """
    y = np.asarray(values, dtype=float)
    dt = tau[1] - tau[0]
    w = max(int(round(window / dt)), 1)
    baseline = y[y.size // 2:].mean()
    nb = y.size // w
    env = np.abs(y[: nb * w].reshape(nb, w) - baseline).max(axis=1)
    if smooth > 1:
        env = np.convolve(env, np.ones(smooth) / smooth, mode="same")
    centres = tau[0] + (np.arange(nb) + 0.5) * w * dt
    return centres, env


@dataclass(frozen=True)
class RevivalAnalysis:
    collapse_level: float
    peak_times: np.ndarray
    peak_heights: np.ndarray

    @property
    def contrast(self):
        if self.peak_heights.size == 0 or self.collapse_level <= 0:
            return 0.0
        return float(self.peak_heights.max() / self.collapse_level)


def analyze_long_time_revivals(values, tau, collapse_until=50.0, prominence=0.03):
    """Locate envelope peaks after the initial collapse.

    ``collapse_level`` is the smallest envelope value before ``collapse_until``;
    peaks are the envelope maxima after it with at least ``prominence``.
    """
    centres, env = revival_envelope(values, tau)
    early = centres <= collapse_until
    collapse = float(env[early].min())
    peaks, _ = find_peaks(env, prominence=prominence)
    peaks = peaks[centres[peaks] > collapse_until]
    return RevivalAnalysis(collapse, centres[peaks], env[peaks])
