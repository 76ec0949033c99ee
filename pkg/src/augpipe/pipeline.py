"""End-to-end orchestration: config, batching, workers, schedules, emission.

The pipeline contract is full determinism: (config, manifest, seed, epoch)
pin every emitted byte, independent of worker count and scheduling. All
randomness flows through rng_for splits keyed on utterance id, epoch and a
per-operation tag; workers share nothing mutable.
"""

from __future__ import annotations

import configparser
import os
import struct
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import augment, feats, subseq
from .corpus import Utterance, load_manifest
from .rng import rng_for

ABB1_MAGIC = b"ABB1"

#: Environment variable that overrides the configured seed.
SEED_ENV_VAR = "AUGPIPE_SEED"

# rng op tags; one independent stream per stage per utterance per epoch
OP_SUBSEQ = "subseq"
OP_STRETCH = "stretch"
OP_MASK = "mask"
CORPUS_ID = "__corpus__"
OP_SHUFFLE = "shuffle"
OP_STATIC = "subseq-static"


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


class PipelineError(RuntimeError):
    """A stage failed; the message names the utterance."""


@dataclass(frozen=True)
class SchedulePolicy:
    """Learning-rate shape: linear warmup, linear decay, stepped exponential."""

    lr_peak: float
    warmup_steps: int
    decay_steps: int
    decay_factor: float = 0.8

    def __post_init__(self):
        if self.lr_peak <= 0:
            raise ConfigError("lr_peak must be positive")
        if self.warmup_steps < 1:
            raise ConfigError("warmup_steps must be >= 1")
        if self.decay_steps < 1:
            raise ConfigError("decay_steps must be >= 1")
        if not 0.0 < self.decay_factor <= 1.0:
            raise ConfigError("decay_factor must be in (0, 1]")


def lr_schedule(step: int, policy: SchedulePolicy, total_steps: int) -> float:
    """Learning rate at one step.

    Rises linearly to lr_peak over warmup_steps, then falls linearly to 0
    at total_steps; the whole curve is additionally multiplied by
    decay_factor ** floor(step / decay_steps). Never negative.
    """
    if step < 0:
        raise ValueError("step must be >= 0")
    if total_steps <= policy.warmup_steps:
        raise ValueError("total_steps must exceed warmup_steps")
    if step <= policy.warmup_steps:
        # ratio first so the value at step == warmup_steps is exactly lr_peak
        base = policy.lr_peak * (step / policy.warmup_steps)
    else:
        base = policy.lr_peak * (
            1.0 - (step - policy.warmup_steps) / (total_steps - policy.warmup_steps)
        )
    base = max(0.0, base)
    return base * policy.decay_factor ** (step // policy.decay_steps)


@dataclass(frozen=True)
class PipelineConfig:
    mel: feats.MelConfig = field(default_factory=feats.MelConfig)
    stretch: augment.StretchPolicy | None = None
    mask: augment.MaskPolicy | None = None
    subseq: subseq.SubseqPolicy | None = None
    stack_k: int = 4
    token_budget: int = 8000
    seed: int = 0
    workers: int = 1
    epoch: int = 0
    length_sort: bool = False  # optional pre-pass: batch long utterances together

    def __post_init__(self):
        if self.token_budget < 1:
            raise ConfigError("token_budget must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.stack_k < 1:
            raise ConfigError("stack_k must be >= 1")
        if self.epoch < 0:
            raise ConfigError("epoch must be >= 0")


@dataclass(frozen=True)
class Batch:
    """Padded-batch descriptor: items plus the pad geometry a trainer needs."""

    items: tuple[tuple[np.ndarray, tuple[int, ...]], ...]
    feature_pad_len: int
    token_pad_len: int
    total_tokens: int

    @classmethod
    def from_items(cls, items) -> "Batch":
        # longest utterance first; ties keep fill order
        ordered = sorted(items, key=lambda it: -it[0].shape[0])
        return cls(
            items=tuple(ordered),
            feature_pad_len=max((it[0].shape[0] for it in ordered), default=0),
            token_pad_len=max((len(it[1]) for it in ordered), default=0),
            total_tokens=sum(len(it[1]) for it in ordered),
        )

    def __len__(self) -> int:
        return len(self.items)


def make_batches(utterances, token_budget: int) -> list[Batch]:
    """Greedy fill in the given order under a label-token budget.

    An utterance joins the current batch unless that would push the batch
    past token_budget; an utterance larger than the whole budget travels
    alone. Every utterance lands in exactly one batch.
    """
    if token_budget < 1:
        raise ValueError("token_budget must be >= 1")
    batches: list[Batch] = []
    current: list = []
    current_tokens = 0
    for item in utterances:
        _, tokens = item
        if current and current_tokens + len(tokens) > token_budget:
            batches.append(Batch.from_items(current))
            current = []
            current_tokens = 0
        current.append(item)
        current_tokens += len(tokens)
    if current:
        batches.append(Batch.from_items(current))
    return batches


def process_utterance(
    utt: Utterance,
    cfg: PipelineConfig,
    stats: dict[str, feats.ConversationStats],
    timings: dict | None = None,
) -> tuple[np.ndarray, tuple[int, ...]]:
    """Run one utterance through the fixed stage order.

    extract (or load) -> normalize -> sub-sequence (dynamic) -> stretch ->
    mask -> stack. Each random stage consumes its own rng_for split, so
    stages cannot perturb each other's draws. Stage errors are re-raised
    with the utterance id attached.
    """

    def timed(tag, fn):
        t0 = time.perf_counter()
        result = fn()
        if timings is not None:
            timings[tag] = timings.get(tag, 0.0) + time.perf_counter() - t0
        return result

    try:
        mat = timed("extract", lambda: utt.materialize(cfg.mel))
        conv_stats = stats.get(utt.conversation_id)
        if conv_stats is None:
            raise ValueError(f"no stats for conversation '{utt.conversation_id}'")
        mat = timed("normalize", lambda: feats.normalize(mat, conv_stats))
        tokens = utt.tokens
        if cfg.subseq is not None and cfg.subseq.mode is subseq.Mode.DYNAMIC:
            sampled = timed(
                "subseq",
                lambda: subseq.sample_subsequence(
                    utt.with_features(mat),
                    cfg.subseq,
                    rng_for(cfg.seed, utt.id, cfg.epoch, OP_SUBSEQ),
                ),
            )
            mat, tokens = sampled.features, sampled.tokens
        if cfg.stretch is not None:
            mat = timed(
                "stretch",
                lambda: augment.time_stretch(
                    mat, cfg.stretch, rng_for(cfg.seed, utt.id, cfg.epoch, OP_STRETCH)
                ),
            )
        if cfg.mask is not None:
            mat = timed(
                "mask",
                lambda: augment.spec_augment(
                    mat, cfg.mask, rng_for(cfg.seed, utt.id, cfg.epoch, OP_MASK)
                ),
            )
        mat = timed("stack", lambda: feats.stack_frames(mat, cfg.stack_k))
        return mat, tokens
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"utterance '{utt.id}': {exc}") from exc


def compute_corpus_stats(
    entries: list[Utterance], cfg: PipelineConfig
) -> dict[str, feats.ConversationStats]:
    """Materialize features and pool per-conversation stats, in parallel."""

    def load(utt: Utterance):
        try:
            return utt.materialize(cfg.mel)
        except Exception as exc:
            raise PipelineError(f"utterance '{utt.id}': {exc}") from exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            mats = list(pool.map(load, entries))
    else:
        mats = [load(u) for u in entries]
    return feats.accumulate_stats(
        (u.conversation_id, m) for u, m in zip(entries, mats)
    )


def _attach_alignments(entries: list[Utterance], cfg: PipelineConfig) -> None:
    cache: dict[str, dict] = {}
    for utt in entries:
        if utt.alignment is not None or utt.alignment_path is None:
            continue
        rows = cache.get(utt.alignment_path)
        if rows is None:
            rows = subseq.parse_alignment_file(utt.alignment_path)
            cache[utt.alignment_path] = rows
        try:
            subseq.attach_alignment(utt, rows, cfg.mel.hop_ms, cfg.mel)
        except Exception as exc:
            raise PipelineError(f"utterance '{utt.id}': {exc}") from exc


def run_pipeline(cfg: PipelineConfig, manifest, sink=None) -> dict:
    """Process a corpus for one epoch and stream batches to a sink.

    `manifest` is a path or a list of Utterances. Steps: materialize
    features, pool per-conversation stats over the original corpus, expand
    statically if configured, process utterances on cfg.workers threads,
    reassemble in manifest order, apply the seeded epoch permutation, fill
    batches and hand each one to `sink`. Returns summary statistics.
    """
    t_start = time.perf_counter()
    if isinstance(manifest, (str, Path)):
        entries = load_manifest(manifest)
    else:
        entries = list(manifest)

    summary = {
        "utterances": 0,
        "batches": 0,
        "input_frames": 0,
        "output_frames": 0,
        "elapsed_sec": 0.0,
        "frames_per_sec": 0.0,
        "per_op_sec": {},
    }
    if not entries:
        summary["elapsed_sec"] = time.perf_counter() - t_start
        return summary

    timings: dict[str, float] = {}

    t0 = time.perf_counter()
    stats = compute_corpus_stats(entries, cfg)
    timings["extract"] = time.perf_counter() - t0

    if cfg.subseq is not None:
        _attach_alignments(entries, cfg)
        if cfg.subseq.mode is subseq.Mode.STATIC:
            t0 = time.perf_counter()
            entries = subseq.expand_static(
                entries,
                rng_for(cfg.seed, CORPUS_ID, 0, OP_STATIC),
                cfg.subseq.min_fraction,
            )
            timings["subseq-static"] = time.perf_counter() - t0

    def work(utt: Utterance):
        local: dict[str, float] = {}
        out = process_utterance(utt, cfg, stats, timings=local)
        return out, local

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(work, entries))  # map preserves order
    else:
        results = [work(u) for u in entries]
    processed = []
    for (item, local) in results:
        processed.append(item)
        for tag, sec in local.items():
            if tag != "extract":  # already counted in the stats pass
                timings[tag] = timings.get(tag, 0.0) + sec

    order = rng_for(cfg.seed, CORPUS_ID, cfg.epoch, OP_SHUFFLE).permutation(
        len(processed)
    )
    shuffled = [processed[i] for i in order]
    if cfg.length_sort:
        shuffled.sort(key=lambda it: -it[0].shape[0])

    t0 = time.perf_counter()
    batches = make_batches(shuffled, cfg.token_budget)
    timings["batch"] = time.perf_counter() - t0

    if sink is not None:
        for batch in batches:
            sink(batch)

    elapsed = time.perf_counter() - t_start
    input_frames = sum(u.features.shape[0] for u in entries)
    summary.update(
        utterances=len(entries),
        batches=len(batches),
        input_frames=input_frames,
        output_frames=sum(mat.shape[0] for mat, _ in processed),
        elapsed_sec=elapsed,
        frames_per_sec=input_frames / elapsed if elapsed > 0 else 0.0,
        per_op_sec={k: round(v, 6) for k, v in sorted(timings.items())},
    )
    return summary


# --- batch emission -------------------------------------------------------

class BatchWriter:
    """Streams batches into an ABB1 container.

    Layout: magic "ABB1", u32 batch count (patched on close), then per
    batch a u32 item count and per item u32 T, u32 D, T*D f32 row-major
    values, u32 token count, then the token ids as u32. All little-endian.
    """

    def __init__(self, path):
        self._fh = open(path, "wb")
        self._fh.write(ABB1_MAGIC)
        self._fh.write(struct.pack("<I", 0))
        self._count = 0

    def __call__(self, batch: Batch) -> None:
        self.write(batch)

    def write(self, batch: Batch) -> None:
        fh = self._fh
        fh.write(struct.pack("<I", len(batch.items)))
        for mat, tokens in batch.items:
            t, d = mat.shape
            fh.write(struct.pack("<II", t, d))
            fh.write(np.ascontiguousarray(mat, dtype="<f4").tobytes())
            fh.write(struct.pack("<I", len(tokens)))
            fh.write(np.asarray(tokens, dtype="<u4").tobytes())
        self._count += 1

    def close(self) -> None:
        self._fh.seek(len(ABB1_MAGIC))
        self._fh.write(struct.pack("<I", self._count))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_batches(path) -> list[list[tuple[np.ndarray, tuple[int, ...]]]]:
    """Read an ABB1 file back into nested (features, tokens) lists."""
    with open(path, "rb") as fh:
        if fh.read(4) != ABB1_MAGIC:
            raise ValueError(f"{path}: bad magic, expected {ABB1_MAGIC!r}")
        (n_batches,) = struct.unpack("<I", fh.read(4))
        batches = []
        for _ in range(n_batches):
            (n_items,) = struct.unpack("<I", fh.read(4))
            items = []
            for _ in range(n_items):
                t, d = struct.unpack("<II", fh.read(8))
                mat = np.frombuffer(fh.read(4 * t * d), dtype="<f4").reshape(t, d)
                (n_tok,) = struct.unpack("<I", fh.read(4))
                tokens = tuple(
                    int(v) for v in np.frombuffer(fh.read(4 * n_tok), dtype="<u4")
                )
                items.append((mat.copy(), tokens))
            batches.append(items)
    return batches


# --- configuration files ----------------------------------------------------

#: Named presets: (stretch policy, mask policy).
PRESETS = {
    # long-window stretching plus two mask repeats
    "lstm-300h": (
        augment.StretchPolicy(window=augment.INFINITE),
        augment.MaskPolicy(repeats=2, f_max=70, t_max=7),
    ),
    # long-window stretching plus a single mask repeat
    "attn-300h": (
        augment.StretchPolicy(window=augment.INFINITE),
        augment.MaskPolicy(repeats=1, f_max=70, t_max=7),
    ),
}


def preset_config(name: str, **overrides) -> PipelineConfig:
    """A ready-made PipelineConfig for one of the named presets."""
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}', have {sorted(PRESETS)}")
    stretch, mask = PRESETS[name]
    return PipelineConfig(stretch=stretch, mask=mask, **overrides)


def _parse_window(value: str) -> float:
    if value.strip().lower() in ("inf", "infinite"):
        return augment.INFINITE
    return int(value)


def load_config(path, seed_override: int | None = None) -> PipelineConfig:
    """Load a PipelineConfig from an INI-style key-value file.

    Sections: [pipeline] (seed, workers, epoch, token_budget, stack_k,
    length_sort, preset), [mel], [stretch], [mask], [subseq]. A preset
    fills the stretch and mask policies; explicit sections replace the
    preset's policy wholesale. The mask section must spell out f_max and
    t_max. AUGPIPE_SEED in the environment overrides the file's seed, and
    `seed_override` (the CLI flag) overrides both.
    """
    parser = configparser.ConfigParser()
    read = parser.read(str(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")

    known = {"pipeline", "mel", "stretch", "mask", "subseq"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")

    try:
        pipe = parser["pipeline"] if parser.has_section("pipeline") else {}
        stretch = mask = None
        if "preset" in pipe:
            stretch, mask = PRESETS.get(pipe["preset"], (None, None))
            if stretch is None:
                raise ConfigError(
                    f"unknown preset '{pipe['preset']}', have {sorted(PRESETS)}"
                )

        mel_kwargs = {}
        if parser.has_section("mel"):
            mel = parser["mel"]
            for key, conv in (
                ("n_mels", int),
                ("win_ms", float),
                ("hop_ms", float),
                ("fmin", float),
                ("fmax", float),
                ("fft_size", int),
                ("log_floor", float),
            ):
                if key in mel:
                    mel_kwargs[key] = conv(mel[key])
        if parser.has_section("stretch"):
            sec = parser["stretch"]
            if "window" not in sec:
                raise ConfigError("[stretch] requires 'window' (frames or 'inf')")
            stretch = augment.StretchPolicy(
                window=_parse_window(sec["window"]),
                low=sec.getfloat("low", 0.8),
                high=sec.getfloat("high", 1.25),
            )
        if parser.has_section("mask"):
            sec = parser["mask"]
            for required in ("f_max", "t_max"):
                if required not in sec:
                    raise ConfigError(
                        f"[mask] requires explicit '{required}'; there is no "
                        "safe default for 40-channel features"
                    )
            mask = augment.MaskPolicy(
                repeats=sec.getint("repeats", 1),
                f_max=sec.getint("f_max"),
                t_max=sec.getint("t_max"),
                mask_value=sec.getfloat("mask_value", 0.0),
            )
        sub = None
        if parser.has_section("subseq"):
            sec = parser["subseq"]
            if "mode" not in sec or "alpha" not in sec:
                raise ConfigError("[subseq] requires 'mode' and 'alpha'")
            try:
                mode = subseq.Mode(sec["mode"].strip().lower())
            except ValueError:
                raise ConfigError(
                    f"subseq mode must be 'dynamic' or 'static', got {sec['mode']!r}"
                ) from None
            sub = subseq.SubseqPolicy(alpha=sec.getfloat("alpha"), mode=mode)

        seed = int(pipe.get("seed", 0))
        env_seed = os.environ.get(SEED_ENV_VAR)
        if env_seed is not None:
            try:
                seed = int(env_seed)
            except ValueError:
                raise ConfigError(
                    f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}"
                ) from None
        if seed_override is not None:
            seed = seed_override

        return PipelineConfig(
            mel=feats.MelConfig(**mel_kwargs),
            stretch=stretch,
            mask=mask,
            subseq=sub,
            stack_k=int(pipe.get("stack_k", 4)),
            token_budget=int(pipe.get("token_budget", 8000)),
            seed=seed,
            workers=int(pipe.get("workers", 1)),
            epoch=int(pipe.get("epoch", 0)),
            length_sort=str(pipe.get("length_sort", "false")).lower()
            in ("1", "true", "yes"),
        )
    except ConfigError:
        raise
    except (ValueError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
