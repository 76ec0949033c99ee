"""Independent brute-force oracles the library implementations are checked against.

Everything here is deliberately naive: plain Python loops and explicit
set arithmetic, no shared code with the package.
"""

from __future__ import annotations

import math


def round_half_even(x: float) -> int:
    # Python's round() on floats is IEEE round-half-to-even
    return int(round(x))


def stretch_indices_oracle(total_frames: int, window, factors) -> list[int]:
    """Re-derive the per-window resampled index list step by step.

    Windows are [w*i, min(T, w*(i+1))) for i = 0 .. T // w (one window
    [0, T) when the window size is infinite). For each window the emitted
    values are start + k*s for k = 0 .. ceil((end-1-start)/s) - 1, rounded
    half to even.
    """
    if window == math.inf:
        windows = [(0, total_frames)]
    else:
        w = int(window)
        windows = [
            (w * i, min(total_frames, w * (i + 1)))
            for i in range(total_frames // w + 1)
        ]
    assert len(factors) == len(windows), "one factor per window"
    out: list[int] = []
    for (start, end), s in zip(windows, factors):
        count = max(0, math.ceil(((end - 1) - start) / s))
        for k in range(count):
            out.append(round_half_even(start + k * s))
    return out


def mask_union_cells(
    num_frames: int, num_channels: int, rects
) -> set[tuple[int, int]]:
    """Cell set covered by a list of (f, f0, t, t0) mask rectangles."""
    cells: set[tuple[int, int]] = set()
    for f, f0, t, t0 in rects:
        for row in range(num_frames):
            for col in range(f0, min(num_channels, f0 + f)):
                cells.add((row, col))
        for row in range(t0, min(num_frames, t0 + t)):
            for col in range(num_channels):
                cells.add((row, col))
    return cells


def candidates_bruteforce(total_frames, entries, variant, min_fraction=0.5):
    """Every (i, j) entry span passing the variant and length filters.

    `entries` are (start_frame, end_frame) pairs; `variant` is one of
    "prefix", "suffix", "infix". Returns a set of
    (start, end, i, j_exclusive) tuples.
    """
    min_len = math.ceil(min_fraction * total_frames)
    found = set()
    for i in range(len(entries)):
        for j in range(i, len(entries)):
            start = entries[i][0]
            end = entries[j][1]
            length = end - start
            if length < min_len or length >= total_frames:
                continue
            if variant == "prefix" and start != 0:
                continue
            if variant == "suffix" and end != total_frames:
                continue
            if variant == "infix" and not (start > 0 and end < total_frames):
                continue
            found.add((start, end, i, j + 1))
    return found


def pooled_moments(matrices):
    """Exact pooled per-channel mean and population variance via fsum."""
    rows = [row for m in matrices for row in m.tolist()]
    n = len(rows)
    d = len(rows[0])
    mean = [math.fsum(r[j] for r in rows) / n for j in range(d)]
    var = [math.fsum((r[j] - mean[j]) ** 2 for r in rows) / n for j in range(d)]
    return mean, var
