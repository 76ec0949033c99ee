"""Deterministic on-the-fly data augmentation for speech features.

Log-mel feature extraction with per-conversation normalization, windowed
time stretching, frequency/time masking, word-aligned sub-sequence
sampling, frame stacking and token-budget batching, all reproducible
bit-for-bit from a single seed.
"""

from .augment import (
    INFINITE,
    MaskPolicy,
    StretchPolicy,
    apply_input_augment,
    spec_augment,
    time_stretch,
)
from .corpus import ManifestError, Utterance, load_manifest, save_manifest
from .feats import (
    AudioBuffer,
    ConversationStats,
    MelConfig,
    accumulate_stats,
    extract_logmel,
    mel_filterbank,
    normalize,
    read_features,
    read_wav,
    stack_frames,
    write_features,
    write_wav,
)
from .pipeline import (
    Batch,
    BatchWriter,
    ConfigError,
    PipelineConfig,
    PipelineError,
    SchedulePolicy,
    load_config,
    lr_schedule,
    make_batches,
    preset_config,
    process_utterance,
    read_batches,
    run_pipeline,
)
from .rng import SplitRng, rng_for
from .subseq import (
    AlignmentEntry,
    Mode,
    SubSequence,
    SubseqPolicy,
    Variant,
    WordAlignment,
    enumerate_candidates,
    expand_static,
    sample_subsequence,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentEntry",
    "AudioBuffer",
    "Batch",
    "BatchWriter",
    "ConfigError",
    "ConversationStats",
    "INFINITE",
    "ManifestError",
    "MaskPolicy",
    "MelConfig",
    "Mode",
    "PipelineConfig",
    "PipelineError",
    "SchedulePolicy",
    "SplitRng",
    "StretchPolicy",
    "SubSequence",
    "SubseqPolicy",
    "Utterance",
    "Variant",
    "WordAlignment",
    "accumulate_stats",
    "apply_input_augment",
    "enumerate_candidates",
    "expand_static",
    "extract_logmel",
    "load_config",
    "load_manifest",
    "lr_schedule",
    "make_batches",
    "mel_filterbank",
    "normalize",
    "preset_config",
    "process_utterance",
    "read_batches",
    "read_features",
    "read_wav",
    "rng_for",
    "run_pipeline",
    "sample_subsequence",
    "save_manifest",
    "spec_augment",
    "stack_frames",
    "time_stretch",
    "write_features",
    "write_wav",
]
