"""Input-side augmentations: windowed time stretching and band masking.

Both operations are pure: they never mutate their input, never change the
channel count, and consume randomness only through the rng handed to them,
so a fixed draw sequence pins the output bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .rng import SplitRng

#: Window size meaning "one window spanning the whole sequence".
INFINITE = math.inf


@dataclass(frozen=True)
class StretchPolicy:
    """Per-window resampling of the frame axis.

    Each window of `window` frames is stretched by an independent factor
    drawn uniformly from [low, high]; factors below 1 lengthen the window,
    factors above 1 shorten it.
    """

    window: float  # frame count >= 2, or INFINITE
    low: float = 0.8
    high: float = 1.25

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise ValueError(f"need 0 < low <= high, got [{self.low}, {self.high}]")
        if self.window != INFINITE:
            if self.window != int(self.window) or self.window < 2:
                raise ValueError(
                    f"window must be an integer >= 2 or INFINITE, got {self.window}"
                )


@dataclass(frozen=True)
class MaskPolicy:
    """Zero masking of random channel bands and frame bands.

    Per repeat, one band of up to f_max consecutive channels and one band
    of up to t_max consecutive frames are set to mask_value. Widths and
    start positions are drawn uniformly (inclusive ranges); bands wider
    than the axis clamp to the full axis.
    """

    repeats: int          # how many (frequency, time) mask pairs to apply
    f_max: int = 70       # max masked channels per mask
    t_max: int = 7        # max masked frames per mask
    mask_value: float = 0.0

    def __post_init__(self):
        if self.repeats < 0:
            raise ValueError("repeats must be >= 0")
        if self.f_max < 0 or self.t_max < 0:
            raise ValueError("f_max and t_max must be >= 0")


def _round_half_even(values: np.ndarray) -> np.ndarray:
    return np.round(values).astype(np.int64)


def _window_indices(start: int, end: int, s: float) -> np.ndarray:
    """Resampled frame indices for one window [start, end).

    Emits round-half-to-even of start, start + s, start + 2s, ... while the
    value stays below end - 1: the last frame of every window is never
    emitted, so even s = 1 drops one frame per window. Index values are
    computed as start + k*s with scalar IEEE double ops, which is stable
    across platforms and numpy versions.
    """
    n = max(0, math.ceil(((end - 1) - start) / s))
    if n == 0:
        return np.empty(0, dtype=np.int64)
    return _round_half_even(start + np.arange(n, dtype=np.float64) * s)


def time_stretch(seq: np.ndarray, policy: StretchPolicy, rng: SplitRng) -> np.ndarray:
    """Stretch every window of `policy.window` frames by a random factor.

    The sequence is cut into windows [w*i, min(T, w*(i+1))) for
    i = 0 .. T // w (the final window may be empty but still consumes a
    factor draw). Output rows are gathered from input rows; no values are
    interpolated, indices are non-decreasing within a window and always lie
    in [0, T-1]. An empty input yields an empty output.
    """
    seq = np.asarray(seq)
    if seq.ndim != 2:
        raise ValueError("sequence must be 2-D (frames x channels)")
    t = seq.shape[0]
    if policy.window == INFINITE:
        windows = [(0, t)]
    else:
        w = int(policy.window)
        windows = [(w * i, min(t, w * (i + 1))) for i in range(t // w + 1)]
    parts = []
    for start, end in windows:
        s = rng.uniform(policy.low, policy.high)
        parts.append(_window_indices(start, end, s))
    ids = np.concatenate(parts)
    return seq[ids]


def spec_augment(seq: np.ndarray, policy: MaskPolicy, rng: SplitRng) -> np.ndarray:
    """Apply `policy.repeats` pairs of frequency and time masks.

    Draw order per repeat is fixed: f, f0, t, t0, with
    f ~ U[0, f_max], f0 ~ U[0, max(0, D - f)], then t ~ U[0, t_max],
    t0 ~ U[0, max(0, T - t)] (all integer, inclusive). Channels
    [f0, f0 + f) and frames [t0, t0 + t) are set to policy.mask_value;
    every other cell is bit-identical to the input.
    """
    seq = np.asarray(seq)
    if seq.ndim != 2:
        raise ValueError("sequence must be 2-D (frames x channels)")
    out = seq.copy()
    t_len, d = out.shape
    for _ in range(policy.repeats):
        f = rng.integers(0, policy.f_max + 1)
        f0 = rng.integers(0, max(0, d - f) + 1)
        out[:, f0 : f0 + f] = policy.mask_value
        t = rng.integers(0, policy.t_max + 1)
        t0 = rng.integers(0, max(0, t_len - t) + 1)
        out[t0 : t0 + t, :] = policy.mask_value
    return out


def apply_input_augment(
    seq: np.ndarray,
    stretch: StretchPolicy | None,
    mask: MaskPolicy | None,
    rng: SplitRng,
) -> np.ndarray:
    """Compose the input augmentations in fixed order: stretch, then mask.

    Absent policies are skipped without consuming draws, so a single
    enabled policy behaves exactly like calling its operation alone with
    the same rng.
    """
    out = seq
    if stretch is not None:
        out = time_stretch(out, stretch, rng)
    if mask is not None:
        out = spec_augment(out, mask, rng)
    return out
