"""Sub-sequence sampling: train on word-aligned slices of an utterance.

A sub-sequence is a proper slice of an utterance that starts and ends on
word-alignment boundaries, keeps at least half the frames, and comes in
three variants: prefix (same start as the utterance), suffix (same end), or
infix (strictly interior). Dynamic mode replaces an utterance with a random
slice with probability alpha at training time; static mode adds one fixed
slice per variant to the corpus up front.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .corpus import Utterance
from .rng import SplitRng


class Variant(enum.Enum):
    PREFIX = "prefix"
    SUFFIX = "suffix"
    INFIX = "infix"


#: Draw order for dynamic sampling picks variants by index in this tuple.
VARIANTS = (Variant.PREFIX, Variant.SUFFIX, Variant.INFIX)


@dataclass(frozen=True)
class AlignmentEntry:
    """One aligned word: its label tokens and frame span [start, end)."""

    token_ids: tuple[int, ...]
    start_frame: int
    end_frame: int

    def __post_init__(self):
        object.__setattr__(self, "token_ids", tuple(int(t) for t in self.token_ids))
        if not self.token_ids:
            raise ValueError("alignment entry needs at least one token")
        if not 0 <= self.start_frame < self.end_frame:
            raise ValueError(
                f"alignment entry needs 0 <= start < end, got "
                f"[{self.start_frame}, {self.end_frame})"
            )


@dataclass(frozen=True)
class WordAlignment:
    entries: tuple[AlignmentEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        for prev, cur in zip(self.entries, self.entries[1:]):
            if cur.start_frame < prev.end_frame:
                raise ValueError(
                    f"alignment entries overlap or are unsorted: "
                    f"[{prev.start_frame}, {prev.end_frame}) then "
                    f"[{cur.start_frame}, {cur.end_frame})"
                )

    def token_sequence(self) -> tuple[int, ...]:
        return tuple(t for e in self.entries for t in e.token_ids)

    def validate_against(self, utt: Utterance, num_frames: int) -> None:
        """Check frame bounds and that entry tokens spell the utterance labels."""
        if self.entries and self.entries[-1].end_frame > num_frames:
            raise ValueError(
                f"utterance '{utt.id}': alignment ends at frame "
                f"{self.entries[-1].end_frame} but features have {num_frames}"
            )
        if self.token_sequence() != utt.tokens:
            raise ValueError(
                f"utterance '{utt.id}': alignment tokens do not match the "
                "utterance token sequence"
            )


class Mode(enum.Enum):
    DYNAMIC = "dynamic"
    STATIC = "static"


@dataclass(frozen=True)
class SubseqPolicy:
    alpha: float                 # replacement probability, dynamic mode
    mode: Mode = Mode.DYNAMIC
    min_fraction: float = 0.5    # minimum slice length as a fraction of T

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 < self.min_fraction <= 1.0:
            raise ValueError("min_fraction must be in (0, 1]")


@dataclass(frozen=True)
class SubSequence:
    """A candidate slice: frame span plus the alignment entries it covers."""

    variant: Variant
    frame_range: tuple[int, int]   # [start, end)
    entry_range: tuple[int, int]   # [first, last) indices into the alignment

    @property
    def num_frames(self) -> int:
        return self.frame_range[1] - self.frame_range[0]


def _variant_ok(variant: Variant, start: int, end: int, total: int) -> bool:
    if variant is Variant.PREFIX:
        return start == 0
    if variant is Variant.SUFFIX:
        return end == total
    return start > 0 and end < total


def enumerate_candidates(
    total_frames: int,
    align: WordAlignment,
    variant: Variant,
    min_fraction: float = 0.5,
) -> list[SubSequence]:
    """All proper sub-sequences of one variant, in (start, end) order.

    A candidate spans alignment entries i..j, covers frames
    [entries[i].start_frame, entries[j].end_frame), is strictly shorter
    than the utterance and no shorter than ceil(min_fraction * T) frames.
    """
    min_len = math.ceil(min_fraction * total_frames)
    entries = align.entries
    out: list[SubSequence] = []
    for i in range(len(entries)):
        start = entries[i].start_frame
        if variant is Variant.PREFIX and start != 0:
            continue
        if variant is Variant.INFIX and start == 0:
            continue
        for j in range(i, len(entries)):
            end = entries[j].end_frame
            length = end - start
            if length >= total_frames or length < min_len:
                continue
            if not _variant_ok(variant, start, end, total_frames):
                continue
            out.append(SubSequence(variant, (start, end), (i, j + 1)))
    return out


def slice_utterance(utt: Utterance, sub: SubSequence, new_id: str | None = None) -> Utterance:
    """Cut an utterance down to one sub-sequence.

    Features must be materialized. The slice keeps the conversation id,
    takes the tokens of the covered alignment entries, rebases the
    alignment to the new frame origin and records the source frame span
    (composed with any existing one) so manifests can reference the
    original feature file.
    """
    if utt.alignment is None:
        raise ValueError(f"utterance '{utt.id}': cannot slice without alignment")
    if utt.features is None:
        raise ValueError(f"utterance '{utt.id}': features not materialized")
    start, end = sub.frame_range
    i, j = sub.entry_range
    covered = utt.alignment.entries[i:j]
    tokens = tuple(t for e in covered for t in e.token_ids)
    rebased = WordAlignment(
        tuple(
            AlignmentEntry(e.token_ids, e.start_frame - start, e.end_frame - start)
            for e in covered
        )
    )
    offset = utt.frame_range[0] if utt.frame_range is not None else 0
    return replace(
        utt,
        id=new_id if new_id is not None else utt.id,
        tokens=tokens,
        features=utt.features[start:end],
        alignment=rebased,
        alignment_path=None,  # the on-disk alignment describes the full utterance
        frame_range=(offset + start, offset + end),
    )


def sample_subsequence(utt: Utterance, policy: SubseqPolicy, rng: SplitRng) -> Utterance:
    """Dynamic sampling: with probability alpha, replace by a random slice.

    Draw order: the accept draw (uniform in [0, 1)), then the variant
    (integer in [0, 3)), then the candidate index. A variant with no
    candidates returns the utterance unchanged instead of re-drawing, which
    keeps every variant's replacement probability at exactly alpha / 3.
    """
    if policy.mode is not Mode.DYNAMIC:
        raise ValueError("sample_subsequence requires a DYNAMIC policy")
    if rng.uniform(0.0, 1.0) >= policy.alpha:
        return utt
    if utt.alignment is None:
        raise ValueError(
            f"utterance '{utt.id}': sub-sequence sampling requires alignment"
        )
    if utt.features is None:
        raise ValueError(f"utterance '{utt.id}': features not materialized")
    variant = VARIANTS[rng.integers(0, 3)]
    candidates = enumerate_candidates(
        utt.features.shape[0], utt.alignment, variant, policy.min_fraction
    )
    if not candidates:
        return utt
    pick = candidates[rng.integers(0, len(candidates))]
    return slice_utterance(utt, pick)


def expand_static(
    manifest_entries: list[Utterance],
    rng: SplitRng,
    min_fraction: float = 0.5,
) -> list[Utterance]:
    """Static mode: add one fixed slice per utterance per feasible variant.

    Every original utterance is kept; after it come its prefix, suffix and
    infix slices, each chosen from the candidate list by an rng split keyed
    on (utterance id, variant), so the expansion is identical across epochs
    and runs. Utterances without an alignment contribute only themselves.
    """
    out: list[Utterance] = []
    for utt in manifest_entries:
        out.append(utt)
        if utt.alignment is None:
            continue
        if utt.features is None:
            raise ValueError(f"utterance '{utt.id}': features not materialized")
        total = utt.features.shape[0]
        for variant in VARIANTS:
            candidates = enumerate_candidates(
                total, utt.alignment, variant, min_fraction
            )
            if not candidates:
                continue
            sub_rng = rng.split(utt.id, variant.value)
            pick = candidates[sub_rng.integers(0, len(candidates))]
            out.append(slice_utterance(utt, pick, new_id=f"{utt.id}#{variant.value}"))
    return out


# --- alignment files ------------------------------------------------------

def parse_alignment_file(path) -> dict[str, list[tuple[int, float, float]]]:
    """Parse an alignment file into per-utterance (token, start, duration) rows.

    Lines are `<utterance_id> <token> <start_seconds> <duration_seconds>`,
    one label token per line, sorted by start time within each utterance.
    """
    rows: dict[str, list[tuple[int, float, float]]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise ValueError(
                    f"{path}:{line_no}: expected 4 fields "
                    "(utterance_id token start duration)"
                )
            utt_id, token_s, start_s, dur_s = parts
            try:
                token = int(token_s)
                start = float(start_s)
                dur = float(dur_s)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: {exc}") from exc
            if start < 0 or dur < 0:
                raise ValueError(f"{path}:{line_no}: negative time")
            per_utt = rows.setdefault(utt_id, [])
            if per_utt and start < per_utt[-1][1]:
                raise ValueError(
                    f"{path}:{line_no}: entries for '{utt_id}' not sorted by start"
                )
            per_utt.append((token, start, dur))
    return rows


def alignment_from_rows(
    rows: list[tuple[int, float, float]],
    frame_shift_ms: float,
    num_frames: int,
) -> WordAlignment:
    """Convert (token, start_s, duration_s) rows to frame-indexed entries.

    Times map to frames by rounding start / shift; entry ends are clamped
    to the feature length (the last word of an utterance usually outlasts
    the final full analysis window).
    """
    entries = []
    for token, start_s, dur_s in rows:
        start = int(round(start_s * 1000.0 / frame_shift_ms))
        end = int(round((start_s + dur_s) * 1000.0 / frame_shift_ms))
        end = min(end, num_frames)
        if start >= num_frames:
            raise ValueError(
                f"alignment entry at {start_s:.3f}s starts beyond the "
                f"{num_frames}-frame feature matrix"
            )
        if end <= start:
            raise ValueError(
                f"alignment entry at {start_s:.3f}s is shorter than one frame"
            )
        entries.append(AlignmentEntry((token,), start, end))
    return WordAlignment(tuple(entries))


def attach_alignment(
    utt: Utterance,
    rows_by_id: dict[str, list[tuple[int, float, float]]],
    frame_shift_ms: float,
    mel_cfg=None,
) -> None:
    """Build, validate and attach an utterance's alignment in place."""
    rows = rows_by_id.get(utt.id)
    if not rows:
        raise ValueError(f"no alignment entries for utterance '{utt.id}'")
    num_frames = utt.materialize(mel_cfg).shape[0]
    align = alignment_from_rows(rows, frame_shift_ms, num_frames)
    align.validate_against(utt, num_frames)
    utt.alignment = align
