"""Utterance records and JSONL manifest I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Optional

import numpy as np

from . import feats

if TYPE_CHECKING:
    from .subseq import WordAlignment


class ManifestError(ValueError):
    """Malformed or inconsistent manifest input."""


# keys accepted in a manifest line; anything else is a typo we want to catch
_MANIFEST_KEYS = {
    "id",
    "conversation_id",
    "audio",
    "features",
    "tokens",
    "alignment",
    "frame_range",
}


@dataclass
class Utterance:
    """One training utterance: label tokens plus a feature source.

    Features come either from a WAV file (extracted on demand), an FMB1
    feature file, or are attached directly. `frame_range` marks a slice of
    the source features, used by statically expanded sub-sequence entries.
    """

    id: str
    conversation_id: str
    tokens: tuple[int, ...]
    audio_path: Optional[str] = None
    feature_path: Optional[str] = None
    alignment_path: Optional[str] = None
    frame_range: Optional[tuple[int, int]] = None
    alignment: Optional["WordAlignment"] = None
    features: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.id:
            raise ManifestError("utterance id must be non-empty")
        if not self.tokens:
            raise ManifestError(f"utterance '{self.id}': tokens must be non-empty")
        self.tokens = tuple(int(t) for t in self.tokens)
        if any(t < 0 or t >= 2**32 for t in self.tokens):
            raise ManifestError(
                f"utterance '{self.id}': token ids must fit in u32"
            )

    def with_features(self, features: np.ndarray) -> "Utterance":
        return replace(self, features=features)

    def materialize(self, mel_cfg: feats.MelConfig | None = None) -> np.ndarray:
        """Return this utterance's feature matrix, extracting or loading it.

        The result is cached on the utterance. `frame_range`, when set, is
        applied to the freshly loaded features.
        """
        if self.features is not None:
            return self.features
        if self.feature_path is not None:
            mat = feats.read_features(self.feature_path)
        elif self.audio_path is not None:
            mat = feats.extract_logmel(feats.read_wav(self.audio_path), mel_cfg)
        else:
            raise ManifestError(
                f"utterance '{self.id}': no features, audio path or feature path"
            )
        if self.frame_range is not None:
            start, end = self.frame_range
            if not 0 <= start < end <= mat.shape[0]:
                raise ManifestError(
                    f"utterance '{self.id}': frame_range {self.frame_range} "
                    f"outside features of length {mat.shape[0]}"
                )
            mat = mat[start:end]
        self.features = mat
        return mat


def _parse_line(obj: dict, line_no: int) -> Utterance:
    if not isinstance(obj, dict):
        raise ManifestError(f"line {line_no}: expected a JSON object")
    unknown = set(obj) - _MANIFEST_KEYS
    if unknown:
        raise ManifestError(f"line {line_no}: unknown fields {sorted(unknown)}")
    for key in ("id", "conversation_id", "tokens"):
        if key not in obj:
            raise ManifestError(f"line {line_no}: missing field '{key}'")
    has_audio = "audio" in obj
    has_feats = "features" in obj
    if has_audio == has_feats:
        raise ManifestError(
            f"line {line_no}: exactly one of 'audio' or 'features' is required"
        )
    if not isinstance(obj["tokens"], list) or not all(
        isinstance(t, int) for t in obj["tokens"]
    ):
        raise ManifestError(f"line {line_no}: 'tokens' must be a list of integers")
    frame_range = None
    if "frame_range" in obj:
        fr = obj["frame_range"]
        if (
            not isinstance(fr, list)
            or len(fr) != 2
            or not all(isinstance(v, int) for v in fr)
            or not 0 <= fr[0] < fr[1]
        ):
            raise ManifestError(
                f"line {line_no}: 'frame_range' must be [start, end] with "
                "0 <= start < end"
            )
        frame_range = (fr[0], fr[1])
    try:
        return Utterance(
            id=str(obj["id"]),
            conversation_id=str(obj["conversation_id"]),
            tokens=tuple(obj["tokens"]),
            audio_path=obj.get("audio"),
            feature_path=obj.get("features"),
            alignment_path=obj.get("alignment"),
            frame_range=frame_range,
        )
    except ManifestError as exc:
        raise ManifestError(f"line {line_no}: {exc}") from exc


def load_manifest(path) -> list[Utterance]:
    """Parse a JSONL manifest, preserving order and rejecting duplicate ids.

    Each line is one object:
    {"id", "conversation_id", "audio" | "features", "tokens": [int, ...],
     "alignment": optional path, "frame_range": optional [start, end]}.
    """
    entries: list[Utterance] = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            utt = _parse_line(obj, line_no)
            if utt.id in seen:
                raise ManifestError(f"line {line_no}: duplicate utterance id '{utt.id}'")
            seen.add(utt.id)
            entries.append(utt)
    return entries


def manifest_record(utt: Utterance) -> dict:
    """JSON-ready dict for one utterance, in canonical key order."""
    rec: dict = {"id": utt.id, "conversation_id": utt.conversation_id}
    if utt.audio_path is not None:
        rec["audio"] = utt.audio_path
    if utt.feature_path is not None:
        rec["features"] = utt.feature_path
    rec["tokens"] = list(utt.tokens)
    if utt.alignment_path is not None:
        rec["alignment"] = utt.alignment_path
    if utt.frame_range is not None:
        rec["frame_range"] = list(utt.frame_range)
    return rec


def save_manifest(entries, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for utt in entries:
            fh.write(json.dumps(manifest_record(utt), separators=(", ", ": ")))
            fh.write("\n")
