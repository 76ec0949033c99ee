"""Log-mel features from raw audio, step by step.

Synthesizes two short telephone-band utterances, extracts 40-channel
log-mel features, pools per-conversation statistics, normalizes, and
stacks frames the way a downsampling encoder front end consumes them.
"""

import math
from pathlib import Path

import numpy as np

from augpipe import (
    AudioBuffer,
    MelConfig,
    accumulate_stats,
    extract_logmel,
    normalize,
    stack_frames,
    write_features,
)

OUT = Path("demo_output")
OUT.mkdir(exist_ok=True)

SR = 8000
cfg = MelConfig()  # 40 mels, 25 ms window, 10 ms hop

print("== synthesize two utterances of one conversation ==")
rng = np.random.default_rng(0)
utterances = {}
for name, freq, dur in [("greeting", 440.0, 1.2), ("reply", 1320.0, 0.8)]:
    t = np.arange(int(dur * SR)) / SR
    tone = 0.4 * np.sin(2 * math.pi * freq * t)
    noise = rng.normal(0, 0.01, size=t.shape)
    samples = ((tone + noise) * 32767).astype(np.int16)
    utterances[name] = AudioBuffer(samples, SR)
    print(f"  {name}: {dur:.1f}s of a {freq:.0f} Hz tone + noise")

print("\n== extract log-mel features ==")
features = {}
for name, audio in utterances.items():
    mat = extract_logmel(audio, cfg)
    features[name] = mat
    win = cfg.win_samples(SR)
    hop = cfg.hop_samples(SR)
    expected = 1 + (len(audio) - win) // hop
    print(f"  {name}: {mat.shape[0]} frames x {mat.shape[1]} channels "
          f"(formula gives {expected})")
    print(f"    value range [{mat.min():.2f}, {mat.max():.2f}] (natural log energies)")

print("\n== per-conversation normalization ==")
stats = accumulate_stats(("conv0", m) for m in features.values())["conv0"]
print(f"  pooled over {stats.frame_count} frames")
for name, mat in features.items():
    normed = normalize(mat, stats)
    print(f"  {name}: normalized mean {normed.mean():+.3f}, "
          f"std {normed.std():.3f} (per channel it is 0/1 across the conversation)")
    features[name] = normed

print("\n== stack frames for a 4x downsampling encoder ==")
for name, mat in features.items():
    stacked = stack_frames(mat, k=4)
    print(f"  {name}: {mat.shape} -> {stacked.shape} "
          f"(last group zero-padded when frames % 4 != 0)")
    write_features(OUT / f"{name}.fmb", stacked)

print(f"\nwrote FMB1 feature files under {OUT}/")
