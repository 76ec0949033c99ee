"""Windowed time stretching in the feature domain.

Shows how the frame index axis is resampled window by window: which
indices get emitted, how the output length follows the drawn factors,
and why the same seed always reproduces the same result.
"""

import numpy as np

from augpipe import INFINITE, SplitRng, StretchPolicy, time_stretch

# a feature matrix whose rows carry their own index, so the gather is visible
T = 20
seq = np.arange(T, dtype=np.float64).reshape(T, 1) @ np.ones((1, 3))

print("== fixed factor 1.0: one frame dropped per window ==")


class Fixed:
    def __init__(self, s):
        self.s = s

    def uniform(self, low, high):
        return self.s


for w in (5, 10, INFINITE):
    out = time_stretch(seq, StretchPolicy(window=w, low=1.0, high=1.0), Fixed(1.0))
    print(f"  window={str(w):>4}: {T} -> {out.shape[0]} frames, "
          f"indices {out[:, 0].astype(int).tolist()}")

print("\n== fixed factor 0.8 lengthens, 1.25 shortens ==")
for s in (0.8, 1.25):
    out = time_stretch(seq, StretchPolicy(window=INFINITE, low=s, high=s), Fixed(s))
    print(f"  s={s}: {T} -> {out.shape[0]} frames, "
          f"indices {out[:, 0].astype(int).tolist()}")

print("\n== random factors per window, reproducible from the seed ==")
policy = StretchPolicy(window=8)  # draws in [0.8, 1.25]
for seed in (1, 1, 2):
    out = time_stretch(seq, policy, SplitRng(seed))
    print(f"  seed={seed}: length {out.shape[0]}, "
          f"indices {out[:, 0].astype(int).tolist()}")
print("  (same seed, same indices; different seed, different draws)")

print("\n== every output row is an input row: no values are interpolated ==")
rng = SplitRng(42)
out = time_stretch(seq, policy, rng)
rows_are_gathered = all(any(np.array_equal(r, s) for s in seq) for r in out)
print(f"  gather-only semantics: {rows_are_gathered}")
