"""Shared test utilities: scripted rng doubles and toy corpus builders."""

from __future__ import annotations

import json
import math

import numpy as np

from augpipe import feats
from augpipe.corpus import Utterance
from augpipe.subseq import AlignmentEntry, WordAlignment


class ScriptedRng:
    """Draw double that replays fixed values, for forcing specific outcomes."""

    def __init__(self, uniforms=(), ints=()):
        self.uniforms = list(uniforms)
        self.ints = list(ints)

    def uniform(self, low=0.0, high=1.0):
        return self.uniforms.pop(0)

    def integers(self, low, high):
        v = self.ints.pop(0)
        assert low <= v < high, f"scripted int {v} outside [{low}, {high})"
        return v

    def split(self, *parts):
        return self


class ConstantRng:
    """Returns the same uniform value forever; integers always low."""

    def __init__(self, value):
        self.value = value

    def uniform(self, low=0.0, high=1.0):
        return self.value

    def integers(self, low, high):
        return low

    def split(self, *parts):
        return self


def stretch_draw_count(t: int, w) -> int:
    """How many factor draws time_stretch consumes for a length-t sequence."""
    if w == math.inf:
        return 1
    return t // int(w) + 1


def make_alignment(word_frames, first_token=0) -> WordAlignment:
    """Alignment of single-token words from a list of (start, end) spans."""
    return WordAlignment(
        tuple(
            AlignmentEntry((first_token + k,), start, end)
            for k, (start, end) in enumerate(word_frames)
        )
    )


def aligned_utterance(
    utt_id="u1", conv="c1", num_frames=40, word_spans=None, dim=8
) -> Utterance:
    """In-memory utterance with features and a single-token-per-word alignment."""
    if word_spans is None:
        n_words = max(1, num_frames // 10)
        edges = np.linspace(0, num_frames, n_words + 1).astype(int)
        word_spans = list(zip(edges[:-1], edges[1:]))
    align = make_alignment(word_spans)
    rng = np.random.default_rng(abs(hash(utt_id)) % 2**32)
    return Utterance(
        id=utt_id,
        conversation_id=conv,
        tokens=align.token_sequence(),
        features=rng.normal(size=(num_frames, dim)),
        alignment=align,
    )


def tone_samples(freq_hz, duration_sec, sample_rate, amplitude=0.3, phase=0.0):
    t = np.arange(int(duration_sec * sample_rate)) / sample_rate
    return (amplitude * 32767 * np.sin(2 * np.pi * freq_hz * t + phase)).astype(
        np.int16
    )


def build_wav_corpus(
    root,
    n_utterances=8,
    sample_rate=8000,
    seed=123,
    with_alignments=False,
    hop_ms=10.0,
    min_sec=0.6,
    max_sec=1.6,
    min_words=2,
):
    """Write a toy corpus (WAVs + manifest, optionally alignments) to disk.

    Returns the manifest path. Utterances are tones plus noise spread over
    a few conversations; token counts scale with duration so batching has
    something to chew on.
    """
    rng = np.random.default_rng(seed)
    wav_dir = root / "wav"
    wav_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    ali_lines = []
    for i in range(n_utterances):
        dur = float(rng.uniform(min_sec, max_sec))
        freq = float(rng.uniform(200, 3000))
        samples = tone_samples(freq, dur, sample_rate)
        noise = (rng.normal(0, 600, size=len(samples))).astype(np.int16)
        samples = (samples + noise).astype(np.int16)
        utt_id = f"utt{i:03d}"
        conv_id = f"conv{i % 3}"
        wav_path = wav_dir / f"{utt_id}.wav"
        feats.write_wav(wav_path, feats.AudioBuffer(samples, sample_rate))

        n_words = max(min_words, int(dur / 0.3))
        word_dur = dur / n_words - 0.02
        tokens = [100 + i * 10 + k for k in range(n_words)]
        rec = {
            "id": utt_id,
            "conversation_id": conv_id,
            "audio": str(wav_path),
            "tokens": tokens,
        }
        if with_alignments:
            ali_path = root / "alignments.ctm"
            rec["alignment"] = str(ali_path)
            for k, tok in enumerate(tokens):
                start = k * dur / n_words
                ali_lines.append(f"{utt_id} {tok} {start:.3f} {word_dur:.3f}")
        lines.append(json.dumps(rec))
    manifest = root / "manifest.jsonl"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    if with_alignments:
        (root / "alignments.ctm").write_text("\n".join(ali_lines) + "\n", encoding="utf-8")
    return manifest
