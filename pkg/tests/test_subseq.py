"""Sub-sequence enumeration, sampling and static expansion."""

import math

import numpy as np
import pytest

from augpipe import subseq
from augpipe.rng import SplitRng
from augpipe.subseq import (
    AlignmentEntry,
    Mode,
    SubseqPolicy,
    Variant,
    WordAlignment,
    enumerate_candidates,
    expand_static,
    sample_subsequence,
)

from helpers import ScriptedRng, aligned_utterance, make_alignment
from oracles import candidates_bruteforce


FOUR_WORDS = make_alignment([(0, 10), (10, 20), (20, 30), (30, 40)])


def test_prefix_candidates_four_words():
    cands = enumerate_candidates(40, FOUR_WORDS, Variant.PREFIX)
    assert [c.frame_range for c in cands] == [(0, 20), (0, 30)]


def test_infix_candidate_four_words():
    cands = enumerate_candidates(40, FOUR_WORDS, Variant.INFIX)
    assert [c.frame_range for c in cands] == [(10, 30)]


def test_suffix_candidates_four_words():
    cands = enumerate_candidates(40, FOUR_WORDS, Variant.SUFFIX)
    assert [c.frame_range for c in cands] == [(10, 40), (20, 40)]


def test_single_word_has_no_candidates():
    one = make_alignment([(0, 40)])
    for variant in subseq.VARIANTS:
        assert enumerate_candidates(40, one, variant) == []


def test_candidates_match_bruteforce_oracle():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n_words = int(rng.integers(1, 9))
        # random word lengths, optionally not starting at frame 0 and
        # optionally with gaps between words
        pos = int(rng.integers(0, 3))
        spans = []
        for _ in range(n_words):
            length = int(rng.integers(1, 12))
            spans.append((pos, pos + length))
            pos += length + int(rng.integers(0, 3))
        total = pos + int(rng.integers(0, 3))
        align = make_alignment(spans)
        for variant in subseq.VARIANTS:
            got = {
                (c.frame_range[0], c.frame_range[1], *c.entry_range)
                for c in enumerate_candidates(total, align, variant)
            }
            want = candidates_bruteforce(total, spans, variant.value)
            assert got == want


def test_emitted_candidates_satisfy_invariants():
    rng = np.random.default_rng(23)
    for _ in range(200):
        n_words = int(rng.integers(2, 8))
        spans = []
        pos = 0
        for _ in range(n_words):
            length = int(rng.integers(2, 15))
            spans.append((pos, pos + length))
            pos += length
        total = pos
        align = make_alignment(spans)
        boundaries = {s for s, _ in spans} | {e for _, e in spans}
        for variant in subseq.VARIANTS:
            for c in enumerate_candidates(total, align, variant):
                start, end = c.frame_range
                assert end - start >= math.ceil(total / 2)
                assert end - start < total
                assert start in boundaries and end in boundaries
                if variant is Variant.PREFIX:
                    assert start == 0
                elif variant is Variant.SUFFIX:
                    assert end == total
                else:
                    assert 0 < start and end < total
                i, j = c.entry_range
                assert spans[i][0] == start and spans[j - 1][1] == end


def test_alpha_zero_returns_original():
    utt = aligned_utterance()
    policy = SubseqPolicy(alpha=0.0)
    for seed in range(20):
        assert sample_subsequence(utt, policy, SplitRng(seed)) is utt


def test_forced_prefix_first_candidate():
    utt = aligned_utterance(num_frames=40)
    policy = SubseqPolicy(alpha=1.0)
    rng = ScriptedRng(uniforms=[0.0], ints=[0, 0])  # accept, prefix, candidate 0
    out = sample_subsequence(utt, policy, rng)
    assert out.frame_range == (0, 20)
    assert np.array_equal(out.features, utt.features[:20])
    assert out.tokens == utt.tokens[:2]
    assert out.conversation_id == utt.conversation_id


def test_sliced_utterance_keeps_invariants():
    utt = aligned_utterance(num_frames=40)
    policy = SubseqPolicy(alpha=1.0)
    for seed in range(50):
        out = sample_subsequence(utt, policy, SplitRng(seed))
        assert out.features.shape[0] >= 20
        assert out.alignment.token_sequence() == out.tokens
        assert out.alignment.entries[0].start_frame == 0
        assert out.alignment.entries[-1].end_frame <= out.features.shape[0]


def test_missing_alignment_raises_when_replacement_fires():
    utt = aligned_utterance()
    utt.alignment = None
    policy = SubseqPolicy(alpha=1.0)
    with pytest.raises(ValueError, match="requires alignment"):
        sample_subsequence(utt, policy, SplitRng(0))
    # alpha = 0 never attempts a replacement, so no alignment is needed
    assert sample_subsequence(utt, SubseqPolicy(alpha=0.0), SplitRng(0)) is utt


def test_infeasible_variant_falls_back_to_original():
    # two words of 5 frames each: prefix/suffix slices of >= 5 frames exist,
    # infix does not
    utt = aligned_utterance(num_frames=10, word_spans=[(0, 5), (5, 10)])
    policy = SubseqPolicy(alpha=1.0)
    rng = ScriptedRng(uniforms=[0.0], ints=[2])  # accept, infix
    assert sample_subsequence(utt, policy, rng) is utt


def test_variant_distribution_small():
    utt = aligned_utterance(num_frames=40)
    policy = SubseqPolicy(alpha=1.0)
    counts = {v: 0 for v in subseq.VARIANTS}
    trials = 3000
    for i in range(trials):
        out = sample_subsequence(utt, policy, SplitRng("dist", i))
        start, end = out.frame_range
        if start == 0 and end < 40:
            counts[Variant.PREFIX] += 1
        elif start > 0 and end == 40:
            counts[Variant.SUFFIX] += 1
        else:
            counts[Variant.INFIX] += 1
    sigma = math.sqrt(trials * (1 / 3) * (2 / 3))
    for v, n in counts.items():
        assert abs(n - trials / 3) < 4 * sigma, (v, n)


def test_dynamic_mode_required():
    utt = aligned_utterance()
    with pytest.raises(ValueError, match="DYNAMIC"):
        sample_subsequence(utt, SubseqPolicy(alpha=1.0, mode=Mode.STATIC), SplitRng(0))


# --- static expansion ---------------------------------------------------------

def test_expand_single_word_corpus_is_identity():
    utt = aligned_utterance(num_frames=40, word_spans=[(0, 40)])
    out = expand_static([utt], SplitRng(0))
    assert out == [utt]


def test_expand_fully_feasible_utterance_grows_4x():
    utt = aligned_utterance(num_frames=40)
    out = expand_static([utt], SplitRng(0))
    assert len(out) == 4
    assert out[0] is utt
    assert [u.id for u in out[1:]] == ["u1#prefix", "u1#suffix", "u1#infix"]
    for sub_utt in out[1:]:
        assert sub_utt.features.shape[0] >= 20
        assert sub_utt.alignment.token_sequence() == sub_utt.tokens


def test_expand_without_alignment_contributes_only_itself():
    utt = aligned_utterance()
    utt.alignment = None
    assert expand_static([utt], SplitRng(0)) == [utt]


def test_expand_is_stable_across_runs():
    utts = [aligned_utterance(f"u{i}", num_frames=40) for i in range(5)]
    a = expand_static(utts, SplitRng(42))
    b = expand_static(utts, SplitRng(42))
    assert len(a) == len(b) == 20
    for ua, ub in zip(a, b):
        assert ua.id == ub.id
        assert ua.tokens == ub.tokens
        assert ua.frame_range == ub.frame_range
        assert np.array_equal(ua.features, ub.features)


def test_expand_differs_by_seed_somewhere():
    utts = [aligned_utterance(f"u{i}", num_frames=60, dim=4) for i in range(8)]
    a = expand_static(utts, SplitRng(1))
    b = expand_static(utts, SplitRng(2))
    assert any(x.frame_range != y.frame_range for x, y in zip(a, b))


# --- alignment files -----------------------------------------------------------

def test_parse_alignment_file(tmp_path):
    path = tmp_path / "ali.ctm"
    path.write_text(
        "# comment\n"
        "u1 5 0.00 0.30\n"
        "u1 6 0.30 0.25\n"
        "u2 7 0.10 0.40\n",
        encoding="utf-8",
    )
    rows = subseq.parse_alignment_file(path)
    assert rows["u1"] == [(5, 0.0, 0.3), (6, 0.3, 0.25)]
    assert rows["u2"] == [(7, 0.1, 0.4)]


def test_parse_alignment_rejects_unsorted(tmp_path):
    path = tmp_path / "ali.ctm"
    path.write_text("u1 5 0.50 0.30\nu1 6 0.10 0.25\n", encoding="utf-8")
    with pytest.raises(ValueError, match="not sorted"):
        subseq.parse_alignment_file(path)


def test_alignment_from_rows_maps_and_clamps():
    rows = [(5, 0.0, 0.3), (6, 0.3, 0.8)]
    align = subseq.alignment_from_rows(rows, frame_shift_ms=10.0, num_frames=98)
    assert align.entries[0].start_frame == 0
    assert align.entries[0].end_frame == 30
    assert align.entries[1].end_frame == 98  # clamped to feature length


def test_alignment_entry_validation():
    with pytest.raises(ValueError):
        AlignmentEntry((1,), 5, 5)
    with pytest.raises(ValueError):
        AlignmentEntry((), 0, 5)
    with pytest.raises(ValueError):
        WordAlignment((AlignmentEntry((1,), 0, 10), AlignmentEntry((2,), 5, 12)))
