"""Command-line frontend: corners, score, review and bench subcommands.

Every subcommand is a thin wrapper over the library; outputs are byte-equal
to direct library calls with the same parameters. Data goes to stdout or the
--out directory, diagnostics to stderr, exit code 0 only on success.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .bench import bench_report
from .detectors import (
    DETECTOR_KINDS,
    FastParams,
    HarrisParams,
    SusanParams,
    corners_to_csv,
    detect_corners,
)
from .expression import ApproxConfig, DEFAULT_PIPELINE, PipelineConfig, frame_score, load_config
from .gaussian import MODE_EXACT, MODE_TAYLOR
from .imaging import BoundingBox, GrayImage, checkerboard, load_cascade, load_face_annotations, load_pgm
from .review import FrameRecord, aggregate, format_frames_csv, run_session, sample_frames, write_report


def _add_detector_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--detector", choices=DETECTOR_KINDS, default=None, help="detector pipeline")
    parser.add_argument("--k", type=float, default=None, help="corner response coefficient")
    parser.add_argument("--sigma", type=float, default=None, help="smoothing window sigma")
    parser.add_argument("--radius", type=int, default=None, help="window radius (default: per-mode)")
    parser.add_argument("--gaussian", choices=(MODE_EXACT, MODE_TAYLOR), default=None,
                        help="window exponential mode")
    parser.add_argument("--taylor-terms", type=int, default=None, help="series terms for taylor mode")
    parser.add_argument("--nms-radius", type=int, default=None, help="non-max suppression radius")
    parser.add_argument("--threshold", type=float, default=None, help="absolute response threshold")
    parser.add_argument("--max-corners", type=int, default=None, help="keep at most N corners")
    parser.add_argument("--mask-radius", type=int, default=3, help="susan: circular mask radius")
    parser.add_argument("--brightness-threshold", type=float, default=20.0,
                        help="susan: similarity threshold")
    parser.add_argument("--geometric-fraction", type=float, default=0.5, help="susan: g fraction")
    parser.add_argument("--intensity-threshold", type=float, default=20.0,
                        help="fast: circle intensity threshold")
    parser.add_argument("--arc-length", type=int, default=12, help="fast: contiguous arc length")


def _pipeline_from_args(args: argparse.Namespace) -> PipelineConfig:
    base = DEFAULT_PIPELINE
    if getattr(args, "config", None):
        base = load_config(Path(args.config).read_text(encoding="utf-8"))
    harris_updates: dict[str, object] = {}
    if args.k is not None:
        harris_updates["k"] = args.k
    if args.sigma is not None:
        harris_updates["sigma"] = args.sigma
    if args.radius is not None:
        harris_updates["radius"] = args.radius
    if args.gaussian is not None:
        harris_updates["mode"] = args.gaussian
    if args.taylor_terms is not None:
        harris_updates["approx"] = ApproxConfig(term_count=args.taylor_terms)
    if args.nms_radius is not None:
        harris_updates["nms_radius"] = args.nms_radius
    if getattr(args, "threshold", None) is not None:
        harris_updates["response_threshold"] = args.threshold
    if getattr(args, "max_corners", None) is not None:
        harris_updates["max_corners"] = args.max_corners
    harris = dataclasses.replace(base.harris, **harris_updates) if harris_updates else base.harris
    detector = args.detector if args.detector is not None else base.detector
    return PipelineConfig(base.rating, detector, harris)


def _detector_params(args: argparse.Namespace, pipeline: PipelineConfig):
    if pipeline.detector == "susan":
        return SusanParams(args.mask_radius, args.brightness_threshold,
                           args.geometric_fraction, args.max_corners)
    if pipeline.detector == "fast":
        return FastParams(args.intensity_threshold, args.arc_length, args.max_corners)
    return pipeline.harris


def _load_image(path: str) -> GrayImage:
    return load_pgm(Path(path).read_bytes())


def _parse_face(text: str) -> BoundingBox:
    parts = text.split(",")
    if len(parts) != 4:
        raise ValueError(f"--face expects x,y,w,h, got {text!r}")
    x, y, w, h = (int(p) for p in parts)
    return BoundingBox(x, y, w, h)


def _cmd_corners(args: argparse.Namespace) -> int:
    pipeline = _pipeline_from_args(args)
    img = _load_image(args.image)
    corners = detect_corners(img, pipeline.detector, _detector_params(args, pipeline))
    sys.stdout.write(corners_to_csv(corners))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    pipeline = _pipeline_from_args(args)
    img = _load_image(args.image)
    face = _parse_face(args.face)
    scores = frame_score(img, face, pipeline.detector, pipeline.harris, pipeline.rating)
    line = (
        f"label={scores.label} eye_cr={scores.eye_cr:.6g} mouth_cr={scores.mouth_cr:.6g} "
        f"smile={scores.smile:.6g} overall={scores.overall:.6g}"
    )
    if scores.flags:
        line += " flags=" + ",".join(scores.flags)
    print(line)
    if args.csv:
        record = FrameRecord(Path(args.image).stem, scores, True)
        Path(args.csv).write_bytes(format_frames_csv([record]).encode("utf-8"))
    return 0


def _cmd_review(args: argparse.Namespace) -> int:
    pipeline = _pipeline_from_args(args)
    frame_dir = Path(args.frames)
    if not frame_dir.is_dir():
        raise ValueError(f"frame directory not found: {frame_dir}")
    frames = sample_frames(sorted(frame_dir.glob("*.pgm")), args.interval)
    if args.annotations:
        face_source = load_face_annotations(Path(args.annotations).read_text(encoding="utf-8"))
    else:
        face_source = load_cascade(Path(args.cascade).read_text(encoding="utf-8"))
    records = run_session(frames, face_source, pipeline)
    report = aggregate(records, product_id=frame_dir.name)
    frames_path, summary_path = write_report(report, records, args.out)
    print(f"wrote {frames_path} and {summary_path}")
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    images: list[tuple[str, GrayImage]] = []
    if args.images:
        image_dir = Path(args.images)
        if not image_dir.is_dir():
            raise ValueError(f"image directory not found: {image_dir}")
        for path in sorted(image_dir.glob("*.pgm")):
            images.append((path.stem, load_pgm(path.read_bytes())))
    if args.sizes:
        for size in (int(s) for s in args.sizes.split(",")):
            images.append((f"checker{size}", checkerboard(size, size, 8)))
    if not images:
        raise ValueError("no benchmark images: pass an image directory and/or --sizes")
    timing_path, agreement_path = bench_report(images, args.reps, args.out)
    print(f"wrote {timing_path} and {agreement_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expresso",
        description="Feature-point detection and facial-expression scoring toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_corners = sub.add_parser("corners", help="detect corners in a PGM image, CSV to stdout",
                               formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_corners.add_argument("image", help="input PGM image")
    p_corners.add_argument("--config", default=None, help="scoring config file (detector keys apply)")
    _add_detector_flags(p_corners)
    p_corners.set_defaults(func=_cmd_corners)

    p_score = sub.add_parser("score", help="score one frame's expression",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_score.add_argument("image", help="input PGM image")
    p_score.add_argument("--face", required=True, help="face box as x,y,w,h")
    p_score.add_argument("--config", default=None, help="scoring config file")
    p_score.add_argument("--csv", default=None, help="also write the record as CSV to this path")
    _add_detector_flags(p_score)
    p_score.set_defaults(func=_cmd_score)

    p_review = sub.add_parser("review", help="score a frame directory and write a report",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_review.add_argument("frames", help="directory of PGM frames (lexicographic order)")
    source = p_review.add_mutually_exclusive_group(required=True)
    source.add_argument("--annotations", default=None, help="face annotation CSV")
    source.add_argument("--cascade", default=None, help="cascade model file")
    p_review.add_argument("--interval", type=int, default=1, help="sample every Nth frame")
    p_review.add_argument("--out", required=True, help="output directory for the report")
    p_review.add_argument("--config", default=None, help="scoring config file")
    _add_detector_flags(p_review)
    p_review.set_defaults(func=_cmd_review)

    p_bench = sub.add_parser("bench", help="write timing.csv and agreement.csv",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_bench.add_argument("images", nargs="?", default=None, help="directory of PGM images")
    p_bench.add_argument("--sizes", default=None, help="comma-separated checkerboard sizes to add")
    p_bench.add_argument("--reps", type=int, default=5, help="timed repetitions per detector")
    p_bench.add_argument("--out", required=True, help="output directory for the CSV tables")
    p_bench.set_defaults(func=_cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
