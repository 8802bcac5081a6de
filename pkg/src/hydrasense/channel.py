"""Parametric body channel whose statistics depend on hydration state.

The channel is a static multipath response plus one moving path that is
phase-modulated by breathing and heartbeat and scaled by a reflection
coefficient.  Dehydration shifts the heart rate up, widens the heartbeat
phase swing and weakens the reflection.  All numeric ranges live in the
two default profiles below so they are auditable and swappable; the
geometry presets (chest reflection vs. hand transmission) live in
``scenario``.

The channel is frozen within one 4 ms frame (block fading): the slow
random phase walk advances once per frame, and the deterministic motion
terms are evaluated at the frame timestamp.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ChannelModel:
    """One session's channel realization.

    ``apply`` implements::

        out = conv(static_taps, x) + motion_path_gain * reflection_scale
              * exp(j * phi(t)) * delay(x, motion_delay)

    with ``phi(t) = breathing_amp*sin(2*pi*breathing_rate*t)
    + heart_amp*sin(2*pi*heart_rate*t) + drift`` and drift a Gaussian
    random walk with increment std ``drift_std*sqrt(dt)``, advanced once
    per frame.
    """

    static_taps: np.ndarray
    motion_path_gain: complex
    breathing_rate: float
    heart_rate: float
    breathing_amp: float
    heart_amp: float
    reflection_scale: float
    drift_std: float
    motion_delay: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "static_taps", np.asarray(self.static_taps, dtype=np.complex128)
        )
        if self.breathing_rate <= 0 or self.heart_rate <= 0:
            raise ValueError("motion rates must be positive")
        if min(self.breathing_amp, self.heart_amp, self.drift_std) < 0:
            raise ValueError("amplitudes must be non-negative")
        if self.motion_delay < 0:
            raise ValueError("motion_delay must be non-negative")

    @classmethod
    def identity(cls) -> "ChannelModel":
        return cls(
            static_taps=np.array([1.0 + 0.0j]),
            motion_path_gain=0.0,
            breathing_rate=0.25,
            heart_rate=1.0,
            breathing_amp=0.0,
            heart_amp=0.0,
            reflection_scale=1.0,
            drift_std=0.0,
        )

    @classmethod
    def static(cls, taps) -> "ChannelModel":
        """A time-invariant multipath channel (no moving path)."""
        return replace(cls.identity(), static_taps=np.asarray(taps, dtype=np.complex128))

    @property
    def n_taps(self) -> int:
        return max(len(self.static_taps), self.motion_delay + 1)

    def motion_phase(self, t, drift=0.0):
        """Deterministic motion phase at time ``t`` plus the drift value."""
        t = np.asarray(t, dtype=np.float64)
        return (
            self.breathing_amp * np.sin(TWO_PI * self.breathing_rate * t)
            + self.heart_amp * np.sin(TWO_PI * self.heart_rate * t)
            + drift
        )

    def effective_taps(self, t: float, drift: float = 0.0) -> np.ndarray:
        """Impulse response frozen at time ``t``."""
        taps = np.zeros(self.n_taps, dtype=np.complex128)
        taps[: len(self.static_taps)] = self.static_taps
        motion = (
            self.motion_path_gain
            * self.reflection_scale
            * np.exp(1j * self.motion_phase(t, drift))
        )
        taps[self.motion_delay] += motion
        return taps

    def impulse_response(self, times: np.ndarray, rng) -> np.ndarray:
        """Per-frame taps for a whole frame stream (block fading).

        The drift walk draws one increment per frame with variance
        ``drift_std**2 * dt``; ``rng`` is consumed only when
        ``drift_std > 0`` so noiseless configurations stay reproducible
        under refactoring.
        """
        times = np.asarray(times, dtype=np.float64)
        n = len(times)
        if self.drift_std > 0.0:
            dt = np.diff(times, prepend=0.0)
            drift = np.cumsum(rng.standard_normal(n) * self.drift_std * np.sqrt(dt))
        else:
            drift = np.zeros(n)
        taps = np.zeros((n, self.n_taps), dtype=np.complex128)
        taps[:, : len(self.static_taps)] = self.static_taps
        motion = (
            self.motion_path_gain
            * self.reflection_scale
            * np.exp(1j * self.motion_phase(times, drift))
        )
        taps[:, self.motion_delay] += motion
        return taps

    def apply(self, frame_samples: np.ndarray, t: float, drift: float = 0.0) -> np.ndarray:
        """Pass one frame through the channel frozen at time ``t``."""
        frame_samples = np.asarray(frame_samples, dtype=np.complex128)
        taps = self.effective_taps(t, drift)
        out = np.zeros_like(frame_samples)
        for lag in range(len(taps)):
            if lag == 0:
                out += taps[0] * frame_samples
            else:
                out[lag:] += taps[lag] * frame_samples[:-lag]
        return out

    def analytic_cfr(self, n_subcarriers: int = 64, t: float = 0.0, drift: float = 0.0) -> np.ndarray:
        """Closed-form frequency response: non-unitary DFT of the taps."""
        return np.fft.fft(self.effective_taps(t, drift), n=n_subcarriers)


@dataclass(frozen=True)
class HydrationProfile:
    """Per-class parameter ranges for sampling session channels."""

    label: str
    heart_rate_range: tuple
    reflection_scale_range: tuple
    heart_amp_range: tuple
    jitter_seed: int = 0

    def __post_init__(self):
        for name in ("heart_rate_range", "reflection_scale_range", "heart_amp_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"{name} is empty: ({lo}, {hi})")


DEFAULT_HYDRATED = HydrationProfile(
    label="hydrated",
    heart_rate_range=(1.00, 1.25),
    reflection_scale_range=(0.9, 1.1),
    heart_amp_range=(0.05, 0.15),
)

DEFAULT_DEHYDRATED = HydrationProfile(
    label="dehydrated",
    heart_rate_range=(1.35, 1.70),
    reflection_scale_range=(0.7, 0.9),
    heart_amp_range=(0.08, 0.20),
)

DEFAULT_PROFILES = {"hydrated": DEFAULT_HYDRATED, "dehydrated": DEFAULT_DEHYDRATED}


def validate_profiles(hydrated: HydrationProfile, dehydrated: HydrationProfile):
    """Dehydrated heart rates must sit strictly above the hydrated midpoint."""
    mid = 0.5 * (hydrated.heart_rate_range[0] + hydrated.heart_rate_range[1])
    if dehydrated.heart_rate_range[0] <= mid:
        raise ValueError(
            "dehydrated heart_rate_range must lie strictly above the hydrated midpoint"
        )


@dataclass(frozen=True)
class ScenarioPreset:
    """Reflection-geometry preset: static taps plus the moving path."""

    name: str
    static_taps: np.ndarray
    motion_path_gain: complex
    motion_delay: int
    breathing_rate: float
    breathing_amp: float


# Chest reflection: sparse 3-tap room response, body path at lag 2.
_CBDM = ScenarioPreset(
    name="CBDM",
    static_taps=np.array([0.95 + 0.0j, 0.18 * np.exp(2.1j), 0.28 * np.exp(4.0j)]),
    motion_path_gain=0.08 + 0.0j,
    motion_delay=2,
    breathing_rate=0.25,
    breathing_amp=0.30,
)

# Hand transmission: one dominant through-path, motion modulates it
# directly (no respiratory displacement of the hand, so half the swing).
_HBDM = ScenarioPreset(
    name="HBDM",
    static_taps=np.array([1.0 + 0.0j]),
    motion_path_gain=0.08 + 0.0j,
    motion_delay=0,
    breathing_rate=0.25,
    breathing_amp=0.15,
)


def scenario(kind: str) -> ScenarioPreset:
    """Return the CBDM (chest) or HBDM (hand) geometry preset."""
    try:
        return {"CBDM": _CBDM, "HBDM": _HBDM}[kind]
    except KeyError:
        raise ValueError(f"unknown scenario {kind!r}; expected CBDM or HBDM") from None


DEFAULT_DRIFT_STD = 0.10  # radians per sqrt(second)

_LABEL_CODES = {"hydrated": 0, "dehydrated": 1}


def sample_channel(
    profile: HydrationProfile,
    subject_id: int,
    session_id: int,
    seed: int,
    preset: ScenarioPreset | None = None,
    drift_std: float = DEFAULT_DRIFT_STD,
) -> ChannelModel:
    """Draw one session's channel from the profile's ranges.

    Deterministic given (seed, subject_id, session_id) and the profile:
    the subject stream fixes a per-subject scene baseline shared by both
    hydration states, the session stream adds small jitter and draws the
    physiological parameters.
    """
    preset = preset or _CBDM
    label_code = _LABEL_CODES.get(profile.label, 7)

    subject_rng = np.random.default_rng(
        (9001, seed, profile.jitter_seed, subject_id)
    )
    n_taps = len(preset.static_taps)
    subject_mag = subject_rng.uniform(0.85, 1.15, size=n_taps)
    subject_phase = subject_rng.uniform(0.0, TWO_PI, size=n_taps)

    session_rng = np.random.default_rng(
        (9002, seed, profile.jitter_seed, subject_id, session_id, label_code)
    )
    heart_rate = session_rng.uniform(*profile.heart_rate_range)
    reflection_scale = session_rng.uniform(*profile.reflection_scale_range)
    heart_amp = session_rng.uniform(*profile.heart_amp_range)
    breathing_rate = preset.breathing_rate * session_rng.uniform(0.9, 1.1)
    breathing_amp = preset.breathing_amp * session_rng.uniform(0.8, 1.2)
    session_mag = session_rng.uniform(0.95, 1.05, size=n_taps)
    session_phase = session_rng.uniform(-0.25, 0.25, size=n_taps)
    motion_phase = session_rng.uniform(0.0, TWO_PI)

    static_taps = (
        preset.static_taps
        * subject_mag
        * session_mag
        * np.exp(1j * (subject_phase + session_phase))
    )
    # The direct path keeps its nominal phase so the scene stays anchored.
    static_taps[0] = abs(static_taps[0])

    return ChannelModel(
        static_taps=static_taps,
        motion_path_gain=preset.motion_path_gain * np.exp(1j * motion_phase),
        breathing_rate=breathing_rate,
        heart_rate=heart_rate,
        breathing_amp=breathing_amp,
        heart_amp=heart_amp,
        reflection_scale=reflection_scale,
        drift_std=drift_std,
        motion_delay=preset.motion_delay,
    )
