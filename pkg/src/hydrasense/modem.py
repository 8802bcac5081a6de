"""OFDM/QPSK sounding modem with per-subcarrier CFR estimation.

Frame format: 64 subcarriers, 16-sample cyclic prefix, Gray-coded QPSK,
20 kS/s baseband rate (80 samples, 4 ms per frame, 250 frames/s).  The
IFFT/FFT pair uses the unitary ("ortho") convention, so transform round
trips are exact and Parseval holds between ``tx_symbols`` and the
CP-stripped time samples.  The estimated CFR equals the non-unitary DFT
of the channel impulse response.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

INV_SQRT2 = 1.0 / np.sqrt(2.0)

#: Gray-coded QPSK: adjacent constellation points differ in exactly one bit.
#: Pair (b0, b1) -> ((1 - 2*b1) + 1j*(1 - 2*b0)) / sqrt(2), i.e.
#: 00 -> (+1+1j)/sqrt(2), 01 -> (-1+1j)/sqrt(2),
#: 11 -> (-1-1j)/sqrt(2), 10 -> (+1-1j)/sqrt(2).
QPSK_GRAY = {
    (0, 0): (+1 + 1j) * INV_SQRT2,
    (0, 1): (-1 + 1j) * INV_SQRT2,
    (1, 1): (-1 - 1j) * INV_SQRT2,
    (1, 0): (+1 - 1j) * INV_SQRT2,
}

PILOT_VALUE = 1.0 + 0.0j

#: Pilot positions for the 52-data + 12-pilot layout: every 5th index.
PILOT_INDICES_52_12 = tuple(range(0, 60, 5))


def _default_map():
    return ("data",) * 64


@dataclass(frozen=True)
class OfdmFrameCfg:
    """Frame parameters of the sounding link.

    The default layout carries known QPSK on all 64 subcarriers
    (128 bits/frame).  ``with_pilots`` builds the alternative 52-data +
    12-pilot layout (104 bits/frame) with fixed unit pilots.
    """

    n_subcarriers: int = 64
    cp_len: int = 16
    bits_per_frame: int = 128
    bits_per_symbol: int = 2
    sample_rate: float = 20_000.0
    subcarrier_map: tuple = field(default_factory=_default_map)
    constellation_id: str = "QPSK-Gray"

    def __post_init__(self):
        if self.cp_len >= self.n_subcarriers:
            raise ValueError("cp_len must be smaller than n_subcarriers")
        if len(self.subcarrier_map) != self.n_subcarriers:
            raise ValueError("subcarrier_map length must equal n_subcarriers")
        bad = set(self.subcarrier_map) - {"data", "pilot"}
        if bad:
            raise ValueError(f"unknown subcarrier roles: {sorted(bad)}")
        if self.bits_per_frame != self.bits_per_symbol * len(self.data_indices):
            raise ValueError(
                "bits_per_frame must equal bits_per_symbol x data subcarriers"
            )
        if self.constellation_id != "QPSK-Gray":
            raise ValueError("only the QPSK-Gray constellation is supported")

    @property
    def data_indices(self) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.subcarrier_map) if r == "data"])

    @property
    def pilot_indices(self) -> np.ndarray:
        return np.array([i for i, r in enumerate(self.subcarrier_map) if r == "pilot"])

    @property
    def frame_len(self) -> int:
        return self.n_subcarriers + self.cp_len

    @property
    def frame_duration(self) -> float:
        return self.frame_len / self.sample_rate

    @property
    def snapshot_rate(self) -> float:
        return self.sample_rate / self.frame_len

    @classmethod
    def with_pilots(cls, **kwargs) -> "OfdmFrameCfg":
        roles = ["data"] * 64
        for i in PILOT_INDICES_52_12:
            roles[i] = "pilot"
        kwargs.setdefault("bits_per_frame", 104)
        return cls(subcarrier_map=tuple(roles), **kwargs)


@dataclass(frozen=True)
class OfdmFrame:
    """One time-domain frame plus the known frequency-domain symbols."""

    time_samples: np.ndarray  # length n_subcarriers + cp_len
    tx_symbols: np.ndarray  # length n_subcarriers, unit magnitude


@dataclass(frozen=True)
class CfrSnapshot:
    """One 64-point channel frequency response estimate."""

    h: np.ndarray
    frame_index: int
    time: float


def generate_bits(seed: int, count: int) -> np.ndarray:
    """Deterministic pseudo-random data bits (uniform 0/1)."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=count, dtype=np.uint8)


def qpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Map a bit vector to Gray-coded unit-magnitude QPSK symbols."""
    bits = np.asarray(bits)
    if bits.size % 2 != 0:
        raise ValueError("QPSK needs an even number of bits (malformed frame)")
    b0 = bits[0::2].astype(np.float64)
    b1 = bits[1::2].astype(np.float64)
    return ((1.0 - 2.0 * b1) + 1j * (1.0 - 2.0 * b0)) * INV_SQRT2


def qpsk_demodulate(symbols: np.ndarray) -> np.ndarray:
    """Hard-decision inverse of :func:`qpsk_modulate`."""
    symbols = np.asarray(symbols)
    bits = np.empty(2 * symbols.size, dtype=np.uint8)
    bits[0::2] = symbols.imag < 0
    bits[1::2] = symbols.real < 0
    return bits


def frame_symbols(bits: np.ndarray, cfg: OfdmFrameCfg) -> np.ndarray:
    """Build the full 64-point symbol vector, inserting pilots if mapped."""
    bits = np.asarray(bits)
    if bits.size != cfg.bits_per_frame:
        raise ValueError(f"expected {cfg.bits_per_frame} bits, got {bits.size}")
    symbols = np.full(cfg.n_subcarriers, PILOT_VALUE, dtype=np.complex128)
    symbols[cfg.data_indices] = qpsk_modulate(bits)
    return symbols


def ofdm_modulate(symbols: np.ndarray, cfg: OfdmFrameCfg) -> OfdmFrame:
    """Unitary IFFT plus cyclic prefix (last cp_len samples prepended)."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.shape != (cfg.n_subcarriers,):
        raise ValueError(
            f"expected {cfg.n_subcarriers} symbols, got shape {symbols.shape}"
        )
    body = np.fft.ifft(symbols, norm="ortho")
    time_samples = np.concatenate([body[-cfg.cp_len:], body])
    return OfdmFrame(time_samples=time_samples, tx_symbols=symbols)


def ofdm_demodulate(frame_samples: np.ndarray, cfg: OfdmFrameCfg) -> np.ndarray:
    """Strip the cyclic prefix and apply the unitary FFT."""
    frame_samples = np.asarray(frame_samples)
    if frame_samples.shape != (cfg.frame_len,):
        raise ValueError(
            f"expected {cfg.frame_len} samples, got shape {frame_samples.shape}"
        )
    return np.fft.fft(frame_samples[cfg.cp_len:], norm="ortho")


def estimate_cfr(
    y: np.ndarray,
    x: np.ndarray,
    frame_index: int = 0,
    cfg: OfdmFrameCfg | None = None,
) -> CfrSnapshot:
    """Per-subcarrier channel estimate h_i = y_i / x_i.

    Raises ValueError on degenerate (near-zero) reference symbols; unit
    QPSK symbols can never trigger this, it guards corrupt input.
    """
    y = np.asarray(y, dtype=np.complex128)
    x = np.asarray(x, dtype=np.complex128)
    if y.shape != x.shape:
        raise ValueError("received and reference symbol vectors differ in length")
    if np.any(np.abs(x) < 1e-12):
        raise ValueError("degenerate reference symbol (|x| < 1e-12)")
    cfg = cfg or OfdmFrameCfg()
    return CfrSnapshot(
        h=y / x,
        frame_index=frame_index,
        time=frame_index * cfg.frame_len / cfg.sample_rate,
    )


def _convolve_frames(frames: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Per-frame linear convolution, truncated to the frame length.

    ``taps`` is (n_frames, n_taps): the channel is frozen within a frame
    but may change between frames (block fading).
    """
    n, flen = frames.shape
    out = np.zeros((n, flen), dtype=np.complex128)
    for lag in range(taps.shape[1]):
        out[:, lag:] += taps[:, lag:lag + 1] * frames[:, : flen - lag]
    return out


def run_link(
    cfg: OfdmFrameCfg,
    channel,
    n_frames: int,
    noise_std: float,
    seed,
) -> list[CfrSnapshot]:
    """Simulate the full sounding link and collect one CFR per frame.

    Per frame: bits -> QPSK -> OFDM -> channel -> AWGN -> demodulate ->
    estimate_cfr.  ``channel`` must provide ``impulse_response(times, rng)``
    returning per-frame taps; ``None`` means an ideal unit channel.
    ``noise_std`` is the total standard deviation per complex sample.
    ``seed`` may be an int or a ``numpy.random.SeedSequence``.

    Deterministic for a fixed seed: bit, drift and noise streams come from
    independent spawned child sequences, so parallel sessions with
    distinct seeds never share state.
    """
    if n_frames <= 0:
        raise ValueError("n_frames must be positive")
    if noise_std < 0:
        raise ValueError("noise_std must be non-negative")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    bits_rng, drift_rng, noise_rng = map(np.random.default_rng, ss.spawn(3))

    bits = bits_rng.integers(0, 2, size=(n_frames, cfg.bits_per_frame), dtype=np.uint8)
    symbols = np.full((n_frames, cfg.n_subcarriers), PILOT_VALUE, dtype=np.complex128)
    data_idx = cfg.data_indices
    b0 = bits[:, 0::2].astype(np.float64)
    b1 = bits[:, 1::2].astype(np.float64)
    symbols[:, data_idx] = ((1.0 - 2.0 * b1) + 1j * (1.0 - 2.0 * b0)) * INV_SQRT2

    body = np.fft.ifft(symbols, axis=1, norm="ortho")
    frames = np.concatenate([body[:, -cfg.cp_len:], body], axis=1)
    times = np.arange(n_frames) * cfg.frame_duration

    if channel is None:
        rx = frames.copy()
    else:
        taps = channel.impulse_response(times, drift_rng)
        if taps.shape[1] > cfg.cp_len:
            raise ValueError(
                f"channel spans {taps.shape[1]} taps, exceeding cp_len={cfg.cp_len}"
            )
        rx = _convolve_frames(frames, taps)

    if noise_std > 0:
        scale = noise_std * INV_SQRT2
        rx = rx + scale * (
            noise_rng.standard_normal(rx.shape)
            + 1j * noise_rng.standard_normal(rx.shape)
        )

    rx_freq = np.fft.fft(rx[:, cfg.cp_len:], axis=1, norm="ortho")
    h_all = rx_freq / symbols
    step = cfg.frame_len / cfg.sample_rate
    return [
        CfrSnapshot(h=h_all[i], frame_index=i, time=i * step)
        for i in range(n_frames)
    ]
