"""Frame-sequence sampling, per-session scoring, aggregation and reports.

Frames are pre-extracted grayscale images; sessions never persist pixel data
beyond the scores. Face boxes come either from an annotation table keyed by
filename stem or from a cascade model (largest detection wins, assuming a
single shopper in frame).
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .expression import DEFAULT_PIPELINE, LABELS, ExpressionScores, PipelineConfig, frame_score
from .imaging import BoundingBox, CascadeModel, GrayImage, cascade_detect, integral_image, load_pgm


class SessionError(ValueError):
    """A frame sequence could not be processed; the message names the file."""


@dataclass(frozen=True)
class FrameRecord:
    frame_id: str
    scores: ExpressionScores | None
    face_found: bool


@dataclass(frozen=True)
class ReviewReport:
    product_id: str
    frames_total: int
    frames_with_face: int
    label_fractions: dict[str, float]
    mean_overall: float
    rating: float


def sample_frames(frames: Sequence, interval: int) -> list:
    """Every interval-th frame, starting from the first."""
    if interval < 1:
        raise ValueError(f"interval must be >= 1, got {interval}")
    return list(frames[::interval])


def _face_for_frame(
    img: GrayImage,
    stem: str,
    face_source: Mapping[str, BoundingBox] | CascadeModel,
) -> BoundingBox | None:
    if isinstance(face_source, CascadeModel):
        boxes = cascade_detect(integral_image(img), face_source)
        if not boxes:
            return None
        # largest area wins; the sort order of cascade_detect breaks ties
        return max(boxes, key=lambda b: b.area)
    return face_source.get(stem)


def run_session(
    frames: Sequence[Path | str],
    face_source: Mapping[str, BoundingBox] | CascadeModel,
    config: PipelineConfig = DEFAULT_PIPELINE,
) -> list[FrameRecord]:
    """Score each frame; frames without a resolvable face are kept unscored."""
    records: list[FrameRecord] = []
    for frame in frames:
        path = Path(frame)
        try:
            data = path.read_bytes()
        except OSError as exc:
            raise SessionError(f"cannot read frame {path}: {exc}") from exc
        img = load_pgm(data)
        stem = path.stem
        face = _face_for_frame(img, stem, face_source)
        if face is None:
            records.append(FrameRecord(stem, None, False))
            continue
        scores = frame_score(img, face, config.detector, config.harris, config.rating)
        records.append(FrameRecord(stem, scores, True))
    return records


def aggregate(records: Sequence[FrameRecord], product_id: str = "unknown") -> ReviewReport:
    """Label fractions and mean score over frames with faces; rating on 0..5."""
    scored = [r.scores for r in records if r.face_found and r.scores is not None]
    if not scored:
        return ReviewReport(product_id, len(records), 0, {}, 0.0, 0.0)
    fractions = {label: sum(1 for s in scored if s.label == label) / len(scored) for label in LABELS}
    fractions = {label: f for label, f in fractions.items() if f > 0}
    mean_overall = sum(s.overall for s in scored) / len(scored)
    return ReviewReport(product_id, len(records), len(scored), fractions, mean_overall, 5.0 * mean_overall)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def format_frames_csv(records: Sequence[FrameRecord]) -> str:
    out = io.StringIO()
    out.write("frame,face_found,eye_cr,mouth_cr,smile,overall,label\n")
    for r in records:
        if r.face_found and r.scores is not None:
            s = r.scores
            out.write(
                f"{r.frame_id},true,{_fmt(s.eye_cr)},{_fmt(s.mouth_cr)},"
                f"{_fmt(s.smile)},{_fmt(s.overall)},{s.label}\n"
            )
        else:
            out.write(f"{r.frame_id},false,,,,,\n")
    return out.getvalue()


def format_summary(report: ReviewReport) -> str:
    lines = [
        f"product_id: {report.product_id}",
        f"frames_total: {report.frames_total}",
        f"frames_with_face: {report.frames_with_face}",
        f"rating: {_fmt(report.rating)}",
        f"mean_overall: {_fmt(report.mean_overall)}",
    ]
    for label in LABELS:
        lines.append(f"fraction_{label.lower()}: {_fmt(report.label_fractions.get(label, 0.0))}")
    return "\n".join(lines) + "\n"


def write_report(report: ReviewReport, records: Sequence[FrameRecord], out_dir: Path | str) -> tuple[Path, Path]:
    """Write frames.csv and summary.txt; reruns are byte-identical."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        frames_path = out / "frames.csv"
        summary_path = out / "summary.txt"
        frames_path.write_bytes(format_frames_csv(records).encode("utf-8"))
        summary_path.write_bytes(format_summary(report).encode("utf-8"))
    except OSError as exc:
        raise SessionError(f"cannot write report under {out}: {exc}") from exc
    return frames_path, summary_path
