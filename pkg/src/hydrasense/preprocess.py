"""CFR denoising: zero-phase low-pass + Savitzky-Golay, outlier removal.

Filters run on each subcarrier's magnitude series; phase is left raw
(the feature pipeline uses magnitudes).  Snapshots whose vector norm
deviates from the session median by more than 6 median absolute
deviations are dropped before filtering, as a reproducible surrogate for
manual artifact inspection.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FilterSpec:
    """Denoising parameters.

    Defaults preserve the cardiac band (<= 2 Hz) with wide margin at the
    250 snapshot/s rate.
    """

    lowpass_cutoff: float = 10.0
    lowpass_taps: int = 101
    sg_window: int = 11
    sg_polyorder: int = 3

    def __post_init__(self):
        if self.sg_window % 2 == 0:
            raise ValueError("sg_window must be odd")
        if self.sg_polyorder >= self.sg_window:
            raise ValueError("sg_polyorder must be smaller than sg_window")
        if self.lowpass_taps < 3:
            raise ValueError("lowpass_taps must be at least 3")
        if self.lowpass_cutoff <= 0:
            raise ValueError("lowpass_cutoff must be positive")


def design_lowpass(spec: FilterSpec, rate: float) -> np.ndarray:
    """Hamming-windowed sinc kernel, DC gain exactly 1."""
    if spec.lowpass_cutoff >= rate / 2:
        raise ValueError("lowpass_cutoff must be below the Nyquist rate")
    m = np.arange(spec.lowpass_taps) - (spec.lowpass_taps - 1) / 2.0
    h = np.sinc(2.0 * spec.lowpass_cutoff / rate * m)
    h *= np.hamming(spec.lowpass_taps)
    return h / h.sum()


def kernel_response(kernel: np.ndarray, freq: float, rate: float) -> complex:
    """Analytic frequency response of an FIR kernel at ``freq`` Hz."""
    k = np.arange(len(kernel))
    return np.sum(kernel * np.exp(-2j * np.pi * freq / rate * k))


def _odd_reflect(series: np.ndarray, pad: int) -> np.ndarray:
    """Odd (anti-symmetric about the end points) extension on both sides."""
    left = 2.0 * series[0] - series[pad:0:-1]
    right = 2.0 * series[-1] - series[-2:-pad - 2:-1]
    return np.concatenate([left, series, right])


def lowpass(series: np.ndarray, spec: FilterSpec, rate: float) -> np.ndarray:
    """Zero-phase (forward-backward) windowed-sinc low-pass filter."""
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(series) <= spec.lowpass_taps:
        raise ValueError(
            f"series length {len(series)} must exceed lowpass_taps={spec.lowpass_taps}"
        )
    kernel = design_lowpass(spec, rate)
    pad = spec.lowpass_taps
    x = _odd_reflect(series, pad)
    x = np.convolve(x, kernel, mode="same")
    x = np.convolve(x[::-1], kernel, mode="same")[::-1]
    return x[pad:-pad]


def _sg_coeffs(window: int, order: int) -> np.ndarray:
    """Least-squares coefficients for the central Savitzky-Golay point."""
    half = window // 2
    offs = np.arange(-half, half + 1, dtype=np.float64)
    a = np.vander(offs, order + 1, increasing=True)
    # Row of the projector that evaluates the fitted polynomial at 0.
    return np.linalg.solve(a.T @ a, a.T)[0]


def savitzky_golay(series: np.ndarray, spec: FilterSpec) -> np.ndarray:
    """Local least-squares polynomial smoother.

    Interior points use the central convolution coefficients; each edge is
    handled by fitting one polynomial to the first/last full window and
    evaluating it at the uncovered positions.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise ValueError("series must be one-dimensional")
    w, p = spec.sg_window, spec.sg_polyorder
    if len(series) < w:
        raise ValueError(f"series length {len(series)} is below sg_window={w}")
    half = w // 2
    coeffs = _sg_coeffs(w, p)
    out = np.convolve(series, coeffs[::-1], mode="same")

    offs = np.arange(w, dtype=np.float64)
    a = np.vander(offs, p + 1, increasing=True)
    head_fit = np.linalg.lstsq(a, series[:w], rcond=None)[0]
    tail_fit = np.linalg.lstsq(a, series[-w:], rcond=None)[0]
    out[:half] = a[:half] @ head_fit
    out[-half:] = a[-half:] @ tail_fit
    return out


def denoise_magnitudes(mags: np.ndarray, spec: FilterSpec, rate: float) -> np.ndarray:
    """Low-pass then Savitzky-Golay, column by column (per subcarrier)."""
    out = np.empty_like(mags)
    for j in range(mags.shape[1]):
        out[:, j] = savitzky_golay(lowpass(mags[:, j], spec, rate), spec)
    return out


def outlier_mask(h_matrix: np.ndarray, n_mads: float = 6.0) -> np.ndarray:
    """True for snapshots to KEEP under the median-absolute-deviation rule."""
    norms = np.linalg.norm(h_matrix, axis=1)
    med = np.median(norms)
    mad = np.median(np.abs(norms - med))
    return np.abs(norms - med) <= n_mads * mad


def preprocess_session(session, spec: FilterSpec):
    """Denoise one session: drop outlier snapshots, then filter magnitudes.

    Returns a new session of equal or shorter length with the original
    ordering; ``meta['dropped_snapshots']`` records the drop count.
    """
    from hydrasense.dataset import Session

    if len(session.snapshots) == 0:
        raise ValueError("cannot preprocess an empty session")
    h = session.h_matrix()
    keep = outlier_mask(h)
    dropped = int((~keep).sum())
    h = h[keep]
    frame_indices = session.frame_indices()[keep]
    times = session.times()[keep]

    rate = session.snapshot_rate
    mags = denoise_magnitudes(np.abs(h), spec, rate)
    phases = np.angle(h)
    filtered = mags * np.exp(1j * phases)

    meta = dict(session.meta)
    meta["dropped_snapshots"] = dropped
    meta["filter_spec"] = dataclasses.asdict(spec)
    return Session.from_matrix(
        filtered,
        label=session.label,
        subject_id=session.subject_id,
        session_id=session.session_id,
        method=session.method,
        snapshot_rate=rate,
        frame_indices=frame_indices,
        times=times,
        meta=meta,
    )
