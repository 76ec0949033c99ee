"""Command-line surface: extract, augment, subseq, run, bench, render.

Exit codes: 0 success, 1 input/data error, 2 configuration or usage error.
Every subcommand is deterministic under a fixed seed, and validates its
inputs before writing any output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import augment, feats, pipeline, subseq
from .corpus import ManifestError, load_manifest, save_manifest
from .pipeline import ConfigError, PipelineError
from .rng import SplitRng, rng_for


class _RecordingRng:
    """Wraps a stream and logs every draw, keeping library ops draw-pure."""

    def __init__(self, inner: SplitRng):
        self._inner = inner
        self.uniforms: list[float] = []
        self.ints: list[int] = []

    def uniform(self, low=0.0, high=1.0) -> float:
        v = self._inner.uniform(low, high)
        self.uniforms.append(v)
        return v

    def integers(self, low: int, high: int) -> int:
        v = self._inner.integers(low, high)
        self.ints.append(v)
        return v


def write_pgm(path, features: np.ndarray) -> None:
    """Render a feature matrix as a P5 PGM image, one pixel per cell.

    Channels are rows, frames are columns, values min-max scaled to 0-255;
    a degenerate (constant) matrix renders as all black.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.size == 0:
        raise ValueError("cannot render an empty feature matrix")
    t, d = features.shape
    vmin, vmax = features.min(), features.max()
    if vmax > vmin:
        scaled = np.round((features - vmin) / (vmax - vmin) * 255.0)
    else:
        scaled = np.zeros_like(features)
    pixels = scaled.astype(np.uint8).T  # (D rows, T columns)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{t} {d}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def _load_cfg(args, need_seed_default=0) -> pipeline.PipelineConfig:
    if args.config:
        cfg = pipeline.load_config(args.config, seed_override=args.seed)
    else:
        cfg = pipeline.PipelineConfig(
            seed=args.seed if args.seed is not None else need_seed_default
        )
    overrides = {}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if getattr(args, "epoch", None) is not None:
        overrides["epoch"] = args.epoch
    if overrides:
        from dataclasses import replace

        cfg = replace(cfg, **overrides)
    return cfg


# --- subcommands ------------------------------------------------------------

def cmd_extract(args) -> int:
    cfg = _load_cfg(args)
    entries = load_manifest(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = []
    pairs = []
    for utt in entries:
        try:
            mat = utt.materialize(cfg.mel)
        except Exception as exc:
            failures.append((utt.id, str(exc)))
            continue
        feats.write_features(out_dir / f"{utt.id}.fmb", mat)
        pairs.append((utt.conversation_id, mat))
    if pairs:
        stats = feats.accumulate_stats(pairs)
        stats_obj = {
            conv: {
                "mean": st.mean.tolist(),
                "variance": st.variance.tolist(),
                "frame_count": st.frame_count,
            }
            for conv, st in sorted(stats.items())
        }
        with open(out_dir / "stats.json", "w", encoding="utf-8") as fh:
            json.dump(stats_obj, fh, indent=1, sort_keys=True)
            fh.write("\n")
    for utt_id, msg in failures:
        print(f"error: utterance '{utt_id}': {msg}", file=sys.stderr)
    print(f"extracted {len(pairs)}/{len(entries)} utterances to {out_dir}")
    return 1 if failures else 0


def _augment_policies(args):
    try:
        stretch = None
        if args.stretch_w is not None and not args.no_stretch:
            window = (
                augment.INFINITE
                if str(args.stretch_w).lower() == "inf"
                else int(args.stretch_w)
            )
            stretch = augment.StretchPolicy(
                window=window, low=args.stretch_low, high=args.stretch_high
            )
        mask = None
        if args.mask_T > 0:
            mask = augment.MaskPolicy(
                repeats=args.mask_T, f_max=args.mask_f_max, t_max=args.mask_t_max
            )
        return stretch, mask
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_augment(args) -> int:
    stretch, mask = _augment_policies(args)
    mat = feats.read_features(args.features_in)
    seed = args.seed if args.seed is not None else 0
    rng = _RecordingRng(SplitRng(int(seed), "cli-augment"))
    out = augment.apply_input_augment(mat, stretch, mask, rng)
    # draw log: enough to replay the run exactly
    for i, s in enumerate(rng.uniforms):
        print(f"draw stretch window={i} s={s!r}")
    for j in range(0, len(rng.ints), 4):
        f, f0, t, t0 = rng.ints[j : j + 4]
        print(f"draw mask repeat={j // 4} f={f} f0={f0} t={t} t0={t0}")
    feats.write_features(args.out, out)
    print(f"augmented {mat.shape[0]}x{mat.shape[1]} -> {out.shape[0]}x{out.shape[1]}")
    return 0


def cmd_subseq(args) -> int:
    cfg = _load_cfg(args)
    if not 0.0 <= args.alpha <= 1.0:
        raise ConfigError(f"alpha must be in [0, 1], got {args.alpha}")
    entries = load_manifest(args.manifest)
    rows_by_id = {}
    if args.alignments:
        rows_by_id = subseq.parse_alignment_file(args.alignments)
    missing = []
    for utt in entries:
        try:
            if args.alignments:
                subseq.attach_alignment(utt, rows_by_id, cfg.mel.hop_ms, cfg.mel)
            elif utt.alignment_path:
                rows = subseq.parse_alignment_file(utt.alignment_path)
                subseq.attach_alignment(utt, rows, cfg.mel.hop_ms, cfg.mel)
            else:
                missing.append(utt.id)
        except ValueError:
            missing.append(utt.id)
    if missing:
        raise ManifestError(
            "missing or invalid alignment for utterances: " + ", ".join(missing)
        )

    seed = args.seed if args.seed is not None else cfg.seed
    if args.mode == "static":
        expanded = subseq.expand_static(
            entries, rng_for(seed, pipeline.CORPUS_ID, 0, pipeline.OP_STATIC)
        )
        save_manifest(expanded, args.out)
        print(f"wrote {len(expanded)} entries ({len(entries)} original) to {args.out}")
    else:
        policy = subseq.SubseqPolicy(alpha=args.alpha, mode=subseq.Mode.DYNAMIC)
        report = []
        replaced = 0
        for utt in entries:
            picked = subseq.sample_subsequence(
                utt, policy, rng_for(seed, utt.id, args.epoch or 0, pipeline.OP_SUBSEQ)
            )
            was_replaced = picked is not utt
            replaced += was_replaced
            report.append(
                {
                    "id": utt.id,
                    "replaced": was_replaced,
                    "frame_range": list(picked.frame_range)
                    if was_replaced and picked.frame_range
                    else None,
                    "num_tokens": len(picked.tokens),
                }
            )
        doc = {
            "mode": "dynamic",
            "alpha": args.alpha,
            "epoch": args.epoch or 0,
            "seed": seed,
            "replaced": replaced,
            "utterances": report,
        }
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        print(f"sampled {replaced}/{len(entries)} replacements, report at {args.out}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    with pipeline.BatchWriter(args.out) as sink:
        summary = pipeline.run_pipeline(cfg, args.manifest, sink)
    print(json.dumps(summary, indent=1))
    return 0


def cmd_bench(args) -> int:
    cfg = _load_cfg(args)
    entries = load_manifest(args.manifest)
    from dataclasses import replace

    per_op: dict[str, float] = {}
    passes = 0
    frames = 0
    utterances = 0
    t_start = time.perf_counter()
    while True:
        epoch_cfg = replace(cfg, epoch=cfg.epoch + passes)
        summary = pipeline.run_pipeline(epoch_cfg, entries)
        passes += 1
        frames += summary["input_frames"]
        utterances += summary["utterances"]
        for tag, sec in summary["per_op_sec"].items():
            per_op[tag] = per_op.get(tag, 0.0) + sec
        if time.perf_counter() - t_start >= args.duration:
            break
    end_to_end = time.perf_counter() - t_start
    audio_sec = frames * cfg.mel.hop_ms / 1000.0

    def rates(sec: float) -> dict:
        return {
            "sec": round(sec, 6),
            "frames_per_sec": round(frames / sec, 1) if sec > 0 else None,
            "real_time_factor": round(audio_sec / sec, 1) if sec > 0 else None,
        }

    report = {
        "passes": passes,
        "utterances": utterances,
        "frames": frames,
        "audio_seconds": round(audio_sec, 3),
        "end_to_end": rates(end_to_end),
        "per_op": {tag: rates(sec) for tag, sec in sorted(per_op.items())},
        "workers": cfg.workers,
    }
    text = json.dumps(report, indent=1)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def cmd_render(args) -> int:
    mat = feats.read_features(args.features_in)
    write_pgm(args.out, mat)
    print(f"rendered {mat.shape[0]}x{mat.shape[1]} to {args.out}")
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="rng seed override")
    common.add_argument("--config", default=None, help="pipeline config file (INI)")
    common.add_argument("--workers", type=int, default=None, help="worker threads")

    parser = argparse.ArgumentParser(
        prog="augpipe",
        description="Deterministic on-the-fly speech feature augmentation pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", parents=[common], help="manifest -> FMB1 features + stats")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("augment", parents=[common], help="augment one FMB1 file")
    p.add_argument("--in", dest="features_in", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stretch-w", default=None, help="stretch window frames, or 'inf'")
    p.add_argument("--stretch-low", type=float, default=0.8)
    p.add_argument("--stretch-high", type=float, default=1.25)
    p.add_argument("--no-stretch", action="store_true")
    p.add_argument("--mask-T", dest="mask_T", type=int, default=0,
                   help="mask repeats; 0 disables masking")
    p.add_argument("--mask-f-max", type=int, default=70)
    p.add_argument("--mask-t-max", type=int, default=7)
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("subseq", parents=[common],
                       help="static expansion or dynamic sampling report")
    p.add_argument("--manifest", required=True)
    p.add_argument("--alignments", default=None, help="alignment file for all utterances")
    p.add_argument("--mode", choices=("static", "dynamic"), required=True)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--epoch", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_subseq)

    p = sub.add_parser("run", parents=[common], help="full pipeline -> ABB1 batches")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--epoch", type=int, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", parents=[common], help="throughput report (JSON)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--duration", type=float, default=1.0,
                   help="minimum seconds to keep processing")
    p.add_argument("--out", default=None, help="write the JSON report here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", parents=[common], help="FMB1 -> PGM grayscale image")
    p.add_argument("--in", dest="features_in", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ManifestError, PipelineError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
