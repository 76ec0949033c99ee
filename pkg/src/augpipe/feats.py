"""Log-mel filterbank features, per-conversation normalization, frame stacking.

Features are plain 2-D float arrays, time-major: row t is the feature vector
of frame t, column d is one mel channel. All operations are pure and never
emit NaN or Inf for finite input.
"""

from __future__ import annotations

import math
import struct
import wave
from dataclasses import dataclass

import numpy as np

FMB1_MAGIC = b"FMB1"

_VALID_RATES = (8000, 16000)


@dataclass(frozen=True)
class AudioBuffer:
    """Mono 16-bit PCM audio."""

    samples: np.ndarray  # 1-D int16
    sample_rate: int     # 8000 or 16000
    channel_count: int = 1

    def __post_init__(self):
        if self.channel_count != 1:
            raise ValueError(
                f"audio must be mono, got {self.channel_count} channels"
            )
        if self.sample_rate not in _VALID_RATES:
            raise ValueError(
                f"sample rate must be one of {_VALID_RATES}, got {self.sample_rate}"
            )
        samples = np.asarray(self.samples)
        if samples.ndim != 1:
            raise ValueError("samples must be a 1-D array")
        object.__setattr__(self, "samples", samples.astype(np.int16, copy=False))

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def duration_sec(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 40        # mel channels
    win_ms: float = 25.0    # analysis window
    hop_ms: float = 10.0    # frame shift
    fmin: float = 20.0      # lowest filter edge, Hz
    fmax: float | None = None    # highest filter edge; None = Nyquist
    fft_size: int | None = None  # None = next power of two >= window samples
    log_floor: float = 1e-10     # clamp before log; keeps silence finite

    def __post_init__(self):
        if self.n_mels < 1:
            raise ValueError("n_mels must be >= 1")
        if self.hop_ms > self.win_ms:
            raise ValueError("hop_ms must not exceed win_ms")
        if self.hop_ms <= 0 or self.win_ms <= 0:
            raise ValueError("win_ms and hop_ms must be positive")
        if self.log_floor <= 0:
            raise ValueError("log_floor must be positive")
        if self.fmin < 0:
            raise ValueError("fmin must be non-negative")

    def win_samples(self, sample_rate: int) -> int:
        return int(round(sample_rate * self.win_ms / 1000.0))

    def hop_samples(self, sample_rate: int) -> int:
        return int(round(sample_rate * self.hop_ms / 1000.0))

    def resolve_fmax(self, sample_rate: int) -> float:
        fmax = sample_rate / 2.0 if self.fmax is None else float(self.fmax)
        if not self.fmin < fmax <= sample_rate / 2.0:
            raise ValueError(
                f"need fmin < fmax <= Nyquist, got fmin={self.fmin} "
                f"fmax={fmax} rate={sample_rate}"
            )
        return fmax

    def resolve_fft_size(self, sample_rate: int) -> int:
        win = self.win_samples(sample_rate)
        if self.fft_size is None:
            n = 1
            while n < win:
                n *= 2
            return n
        if self.fft_size < win:
            raise ValueError(
                f"fft_size {self.fft_size} smaller than window of {win} samples"
            )
        if self.fft_size & (self.fft_size - 1):
            raise ValueError("fft_size must be a power of two")
        return self.fft_size


def hz_to_mel(hz):
    return 2595.0 * np.log10(1.0 + np.asarray(hz, dtype=np.float64) / 700.0)


def mel_to_hz(mel):
    return 700.0 * (10.0 ** (np.asarray(mel, dtype=np.float64) / 2595.0) - 1.0)


def mel_filterbank(cfg: MelConfig, sample_rate: int) -> np.ndarray:
    """Triangular mel filters on the HTK mel scale.

    Returns an (n_mels, fft_size // 2 + 1) weight matrix. Filter k rises
    linearly from edge k to center k+1 and falls to edge k+2, with the
    n_mels + 2 edge points equally spaced in mel between fmin and fmax.
    Peak weight is 1 (no area normalization).
    """
    fmax = cfg.resolve_fmax(sample_rate)
    fft_size = cfg.resolve_fft_size(sample_rate)
    edges_hz = mel_to_hz(
        np.linspace(hz_to_mel(cfg.fmin), hz_to_mel(fmax), cfg.n_mels + 2)
    )
    bin_freqs = np.fft.rfftfreq(fft_size, d=1.0 / sample_rate)
    weights = np.zeros((cfg.n_mels, len(bin_freqs)))
    for k in range(cfg.n_mels):
        left, center, right = edges_hz[k], edges_hz[k + 1], edges_hz[k + 2]
        rising = (bin_freqs - left) / (center - left)
        falling = (right - bin_freqs) / (right - center)
        weights[k] = np.maximum(0.0, np.minimum(rising, falling))
    return weights


def frame_count(num_samples: int, win: int, hop: int) -> int:
    """Number of full analysis windows: 1 + floor((len - win) / hop)."""
    if num_samples < win:
        return 0
    return 1 + (num_samples - win) // hop


def extract_logmel(audio: AudioBuffer, cfg: MelConfig | None = None) -> np.ndarray:
    """Extract a (T, n_mels) log-mel feature matrix from mono PCM audio.

    Frames are Hann-windowed with no padding or centering, so
    T = 1 + floor((len - win) / hop). Each output value is the natural log
    of the mel filter energy clamped from below at cfg.log_floor.

    Raises ValueError for audio shorter than one analysis window.
    """
    if cfg is None:
        cfg = MelConfig()
    sr = audio.sample_rate
    win = cfg.win_samples(sr)
    hop = cfg.hop_samples(sr)
    n = len(audio.samples)
    if n < win:
        raise ValueError(
            f"audio too short: {n} samples, need at least one {win}-sample window"
        )
    fft_size = cfg.resolve_fft_size(sr)
    fbank = mel_filterbank(cfg, sr)

    x = audio.samples.astype(np.float64)
    frames = np.lib.stride_tricks.sliding_window_view(x, win)[::hop]
    # periodic Hann, the analysis form
    k = np.arange(win)
    window = 0.5 - 0.5 * np.cos(2.0 * np.pi * k / win)
    spec = np.fft.rfft(frames * window, n=fft_size, axis=1)
    power = spec.real**2 + spec.imag**2
    mel_energy = power @ fbank.T
    return np.log(np.maximum(mel_energy, cfg.log_floor))


@dataclass(frozen=True)
class ConversationStats:
    """Per-channel moments pooled over every frame of one conversation."""

    conversation_id: str
    mean: np.ndarray      # (D,)
    variance: np.ndarray  # (D,) population variance, >= 0
    frame_count: int

    def __post_init__(self):
        if self.frame_count < 1:
            raise ValueError("stats need at least one frame")
        if np.any(self.variance < 0):
            raise ValueError("variance must be non-negative")


def accumulate_stats(features) -> dict[str, ConversationStats]:
    """Pool per-channel mean and population variance per conversation.

    `features` is an iterable of (conversation_id, matrix) pairs; matrices
    of the same conversation are pooled as if concatenated. Sums use
    math.fsum, so the result is bit-identical no matter how an utterance's
    frames are split or ordered.
    """
    groups: dict[str, list[np.ndarray]] = {}
    for conv_id, mat in features:
        mat = np.asarray(mat, dtype=np.float64)
        if mat.ndim != 2:
            raise ValueError(f"conversation '{conv_id}': features must be 2-D")
        groups.setdefault(conv_id, []).append(mat)

    out: dict[str, ConversationStats] = {}
    for conv_id, mats in groups.items():
        total = sum(m.shape[0] for m in mats)
        if total == 0:
            raise ValueError(f"conversation '{conv_id}' has no frames")
        dims = {m.shape[1] for m in mats}
        if len(dims) != 1:
            raise ValueError(f"conversation '{conv_id}': mixed feature dims {dims}")
        all_frames = np.concatenate(mats, axis=0)
        d = all_frames.shape[1]
        mean = np.empty(d)
        var = np.empty(d)
        for j in range(d):
            col = all_frames[:, j]
            mean[j] = math.fsum(col) / total
            var[j] = math.fsum((col - mean[j]) ** 2) / total
        out[conv_id] = ConversationStats(conv_id, mean, var, total)
    return out


def normalize(
    features: np.ndarray, stats: ConversationStats, eps: float = 1e-8
) -> np.ndarray:
    """Standardize each channel: (x - mean) / sqrt(variance + eps)."""
    features = np.asarray(features)
    if features.ndim != 2 or features.shape[1] != stats.mean.shape[0]:
        raise ValueError(
            f"feature dim {features.shape} does not match stats dim "
            f"{stats.mean.shape[0]}"
        )
    return (features - stats.mean) / np.sqrt(stats.variance + eps)


def stack_frames(features: np.ndarray, k: int = 4) -> np.ndarray:
    """Concatenate groups of k consecutive frames into single vectors.

    Output is ceil(T / k) rows of dimension k * D; the final group is
    zero-padded when T is not a multiple of k. k = 1 is the identity.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    features = np.asarray(features)
    if features.ndim != 2:
        raise ValueError("features must be 2-D")
    t, d = features.shape
    pad = (-t) % k
    padded = np.concatenate(
        [features, np.zeros((pad, d), dtype=features.dtype)], axis=0
    )
    return padded.reshape(-1, k * d)


# --- file I/O -----------------------------------------------------------

def read_wav(path) -> AudioBuffer:
    """Read a RIFF WAV file holding uncompressed 16-bit mono PCM."""
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise ValueError(
                    f"{path}: compressed WAV ({wf.getcomptype()}) not supported, "
                    "need uncompressed 16-bit PCM"
                )
            if wf.getsampwidth() != 2:
                raise ValueError(
                    f"{path}: {8 * wf.getsampwidth()}-bit samples not supported, "
                    "need 16-bit PCM"
                )
            channels = wf.getnchannels()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise ValueError(f"{path}: not a readable PCM WAV file ({exc})") from exc
    samples = np.frombuffer(raw, dtype="<i2")
    if channels != 1:
        raise ValueError(f"{path}: audio must be mono, got {channels} channels")
    return AudioBuffer(samples=samples, sample_rate=rate, channel_count=channels)


def write_wav(path, audio: AudioBuffer) -> None:
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate)
        wf.writeframes(audio.samples.astype("<i2").tobytes())


def write_features(path, features: np.ndarray) -> None:
    """Write a feature matrix in the FMB1 container.

    Layout: magic "FMB1", little-endian u32 T, u32 D, then T*D
    little-endian f32 values in row-major order.
    """
    features = np.asarray(features)
    if features.ndim != 2:
        raise ValueError("features must be 2-D")
    t, d = features.shape
    with open(path, "wb") as fh:
        fh.write(FMB1_MAGIC)
        fh.write(struct.pack("<II", t, d))
        fh.write(np.ascontiguousarray(features, dtype="<f4").tobytes())


def read_features(path) -> np.ndarray:
    """Read an FMB1 feature file into a (T, D) float32 matrix."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FMB1_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}, expected {FMB1_MAGIC!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise ValueError(f"{path}: truncated header")
        t, d = struct.unpack("<II", header)
        payload = fh.read(4 * t * d)
        if len(payload) != 4 * t * d:
            raise ValueError(f"{path}: truncated payload, expected {t}x{d} floats")
        if fh.read(1):
            raise ValueError(f"{path}: trailing bytes after payload")
    return np.frombuffer(payload, dtype="<f4").reshape(t, d).copy()
