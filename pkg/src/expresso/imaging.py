"""Grayscale image model, PGM I/O, integral images, Haar features and cascades.

Coordinates follow the shared convention: x (or p) is the column growing
rightward, y (or q) the row growing downward, origin at the top-left pixel.
Intensities are stored as float64 in [0, 255]; writers clamp and round.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels


class PgmError(ValueError):
    """Malformed PGM input; the message names the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CascadeParseError(ValueError):
    """Malformed cascade model file; the message names the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


class AnnotationError(ValueError):
    """Malformed face-annotation CSV; the message names the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


def _round_px(value: float) -> int:
    """Round to the nearest pixel, halves away from zero."""
    return int(math.floor(value + 0.5))


@dataclass(frozen=True)
class GrayImage:
    """Immutable grayscale raster with intensities in [0, 255]."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be a 2-D raster with positive extents")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image intensities must be finite")
        if arr.min() < 0.0 or arr.max() > 255.0:
            raise ValueError("image intensities must lie in [0, 255]")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def crop(self, box: "BoundingBox") -> "GrayImage":
        if not box.fits_within(self.width, self.height):
            raise ValueError(f"crop box {box} exceeds image {self.width}x{self.height}")
        return GrayImage(self.pixels[box.y:box.y + box.h, box.x:box.x + box.w].copy())


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned pixel box: top-left corner plus positive extents."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box extents must be positive, got {self.w}x{self.h}")

    def fits_within(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x + self.w <= width and self.y + self.h <= height

    @property
    def area(self) -> int:
        return self.w * self.h


@dataclass(frozen=True)
class IntegralImage:
    """Summed-area transform: sums[q, p] = sum of pixels with row<=q, col<=p."""

    sums: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.sums, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("integral image must be 2-D")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "sums", arr)

    @property
    def width(self) -> int:
        return self.sums.shape[1]

    @property
    def height(self) -> int:
        return self.sums.shape[0]


def integral_image(img: GrayImage) -> IntegralImage:
    """Cumulative row sums folded into cumulative column sums, one pass."""
    return IntegralImage(kernels.integral(img.pixels))


def rect_sum(ii: IntegralImage, box: BoundingBox) -> float:
    """Sum of source pixels inside box via the four-corner lookup."""
    if not box.fits_within(ii.width, ii.height):
        raise ValueError(f"box {box} out of bounds for {ii.width}x{ii.height} image")
    s = ii.sums
    x0, y0 = box.x - 1, box.y - 1
    x1, y1 = box.x + box.w - 1, box.y + box.h - 1
    total = s[y1, x1]
    if y0 >= 0:
        total -= s[y0, x1]
    if x0 >= 0:
        total -= s[y1, x0]
    if y0 >= 0 and x0 >= 0:
        total += s[y0, x0]
    return float(total)


# ---------------------------------------------------------------------------
# PGM (P2/P5) reader and writer

def load_pgm(data: bytes) -> GrayImage:
    """Parse a binary (P5) or ASCII (P2) PGM byte string, maxval <= 255."""
    if len(data) < 2:
        raise PgmError("not a PGM file: too short", 0)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise PgmError(f"not a PGM file: bad magic {magic!r}", 0)

    pos = 2

    def next_token() -> tuple[bytes, int]:
        nonlocal pos
        while pos < len(data):
            c = data[pos:pos + 1]
            if c == b"#":
                while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                    pos += 1
            elif c.isspace():
                pos += 1
            else:
                break
        if pos >= len(data):
            raise PgmError("unexpected end of header", pos)
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        return data[start:pos], start

    def next_int(name: str) -> tuple[int, int]:
        token, start = next_token()
        try:
            return int(token), start
        except ValueError:
            raise PgmError(f"invalid {name} token {token!r}", start) from None

    width, at = next_int("width")
    if width <= 0:
        raise PgmError(f"width must be positive, got {width}", at)
    height, at = next_int("height")
    if height <= 0:
        raise PgmError(f"height must be positive, got {height}", at)
    maxval, at = next_int("maxval")
    if not 0 < maxval <= 255:
        raise PgmError(f"maxval must be in 1..255, got {maxval}", at)

    count = width * height
    values = np.empty(count, dtype=np.float64)
    if magic == b"P5":
        if pos >= len(data) or not data[pos:pos + 1].isspace():
            raise PgmError("expected single whitespace after maxval", pos)
        pos += 1
        if len(data) - pos < count:
            raise PgmError(f"truncated pixel data: need {count} bytes, found {len(data) - pos}", pos)
        raster = np.frombuffer(data, dtype=np.uint8, count=count, offset=pos)
        if maxval < 255 and raster.max(initial=0) > maxval:
            bad = pos + int(np.argmax(raster > maxval))
            raise PgmError(f"pixel value exceeds maxval {maxval}", bad)
        values[:] = raster
    else:
        for i in range(count):
            try:
                value, at = next_int("pixel")
            except PgmError:
                raise PgmError(f"truncated pixel data: expected {count} values, found {i}", pos) from None
            if not 0 <= value <= maxval:
                raise PgmError(f"pixel value {value} outside 0..{maxval}", at)
            values[i] = value
    return GrayImage(values.reshape(height, width))


def save_pgm(img: GrayImage, binary: bool = True) -> bytes:
    """Encode as P5 (binary) or P2 (ASCII); intensities clamped and rounded."""
    raster = np.clip(np.rint(img.pixels), 0, 255).astype(np.uint8)
    header = f"{'P5' if binary else 'P2'}\n{img.width} {img.height}\n255\n"
    if binary:
        return header.encode("ascii") + raster.tobytes()
    body = "\n".join(" ".join(str(v) for v in row) for row in raster)
    return (header + body + "\n").encode("ascii")


def checkerboard(width: int, height: int, square: int, low: float = 0.0, high: float = 255.0) -> GrayImage:
    """Synthetic checkerboard test pattern with `square`-pixel tiles."""
    ys = np.arange(height) // square
    xs = np.arange(width) // square
    parity = (ys[:, None] + xs[None, :]) % 2
    return GrayImage(np.where(parity == 0, low, high).astype(np.float64))


# ---------------------------------------------------------------------------
# Haar features and cascade evaluation

@dataclass(frozen=True)
class HaarRect:
    """One weighted rectangle, as fractions of the unit detection window."""

    left: float
    top: float
    width: float
    height: float
    weight: float

    def __post_init__(self):
        if not (0.0 <= self.left and 0.0 <= self.top and self.width > 0.0 and self.height > 0.0):
            raise ValueError(f"degenerate haar rectangle {self}")
        if self.left + self.width > 1.0 + 1e-9 or self.top + self.height > 1.0 + 1e-9:
            raise ValueError(f"haar rectangle {self} exceeds the unit window")


@dataclass(frozen=True)
class HaarFeature:
    """Signed sum of rectangles: bright regions minus dark regions."""

    rectangles: tuple[HaarRect, ...]

    def __post_init__(self):
        rects = tuple(self.rectangles)
        if not any(r.weight > 0 for r in rects) or not any(r.weight < 0 for r in rects):
            raise ValueError("haar feature needs at least one positive and one negative rectangle")
        object.__setattr__(self, "rectangles", rects)


@dataclass(frozen=True)
class CascadeFeature:
    feature: HaarFeature
    threshold: float
    polarity: int
    vote: float

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise ValueError(f"polarity must be +1 or -1, got {self.polarity}")


@dataclass(frozen=True)
class CascadeStage:
    features: tuple[CascadeFeature, ...]
    threshold: float


@dataclass(frozen=True)
class CascadeModel:
    """Ordered stages of weighted weak classifiers over a base window size."""

    window_base: int
    stages: tuple[CascadeStage, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.window_base < 1:
            raise ValueError("cascade window base must be >= 1")


def haar_value(ii: IntegralImage, feature: HaarFeature, window: BoundingBox) -> float:
    """Weighted rectangle sums of the feature scaled into the given window.

    Rectangle corners are scaled by the window extent and rounded to the
    nearest pixel; rectangles that round to zero area contribute 0.
    """
    if not window.fits_within(ii.width, ii.height):
        raise ValueError(f"window {window} out of bounds")
    total = 0.0
    for r in feature.rectangles:
        rx = window.x + _round_px(r.left * window.w)
        ry = window.y + _round_px(r.top * window.h)
        rw = min(_round_px(r.width * window.w), window.x + window.w - rx)
        rh = min(_round_px(r.height * window.h), window.y + window.h - ry)
        if rw <= 0 or rh <= 0:
            continue
        total += r.weight * rect_sum(ii, BoundingBox(rx, ry, rw, rh))
    return total


def _stage_passes(ii: IntegralImage, stage: CascadeStage, window: BoundingBox) -> bool:
    total = 0.0
    for cf in stage.features:
        value = haar_value(ii, cf.feature, window)
        if cf.polarity * value < cf.polarity * cf.threshold:
            total += cf.vote
    return total >= stage.threshold


def cascade_detect(
    ii: IntegralImage,
    model: CascadeModel,
    scan: tuple[float, float, float, float] = (1.0, 8.0, 1.25, 0.1),
) -> list[BoundingBox]:
    """Sliding-window scan over scales; windows passing every stage are kept.

    scan = (min_scale, max_scale, scale_step, stride_fraction). Scales whose
    window does not fit in the image are skipped silently. Output is
    duplicate-free and sorted by (y, x, w).
    """
    min_scale, max_scale, scale_step, stride_fraction = scan
    if scale_step <= 1.0:
        raise ValueError("scale_step must be > 1")
    if not 0.0 < stride_fraction <= 1.0:
        raise ValueError("stride_fraction must be in (0, 1]")
    if min_scale <= 0.0:
        raise ValueError("min_scale must be positive")

    hits: set[tuple[int, int, int]] = set()
    scale = min_scale
    while scale <= max_scale * (1.0 + 1e-12):
        side = _round_px(model.window_base * scale)
        scale *= scale_step
        if side < 1 or side > ii.width or side > ii.height:
            continue
        stride = max(1, _round_px(side * stride_fraction))
        for y in range(0, ii.height - side + 1, stride):
            for x in range(0, ii.width - side + 1, stride):
                window = BoundingBox(x, y, side, side)
                if all(_stage_passes(ii, stage, window) for stage in model.stages):
                    hits.add((y, x, side))
    return [BoundingBox(x, y, s, s) for (y, x, s) in sorted(hits)]


# ---------------------------------------------------------------------------
# cascade model file: line oriented
#   window <N>
#   stage <threshold>
#   feature <threshold> <polarity> <vote>
#   rect <left> <top> <width> <height> <weight>

def load_cascade(text: str) -> CascadeModel:
    window_base: int | None = None
    stages: list[CascadeStage] = []
    cur_features: list[CascadeFeature] | None = None
    cur_stage_threshold = 0.0
    cur_feature: tuple[float, int, float] | None = None
    cur_rects: list[HaarRect] = []

    def close_feature(line_no: int) -> None:
        nonlocal cur_feature, cur_rects
        if cur_feature is None:
            return
        thr, pol, vote = cur_feature
        try:
            feat = HaarFeature(tuple(cur_rects))
        except ValueError as exc:
            raise CascadeParseError(str(exc), line_no) from None
        assert cur_features is not None
        cur_features.append(CascadeFeature(feat, thr, pol, vote))
        cur_feature = None
        cur_rects = []

    def close_stage(line_no: int) -> None:
        nonlocal cur_features
        if cur_features is None:
            return
        close_feature(line_no)
        stages.append(CascadeStage(tuple(cur_features), cur_stage_threshold))
        cur_features = None

    line_no = 0
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        keyword, args = parts[0], parts[1:]
        try:
            if keyword == "window":
                if window_base is not None:
                    raise CascadeParseError("duplicate window declaration", line_no)
                (base,) = args
                window_base = int(base)
            elif keyword == "stage":
                if window_base is None:
                    raise CascadeParseError("stage before window declaration", line_no)
                close_stage(line_no)
                (thr,) = args
                cur_stage_threshold = float(thr)
                cur_features = []
            elif keyword == "feature":
                if cur_features is None:
                    raise CascadeParseError("feature outside a stage", line_no)
                close_feature(line_no)
                thr, pol, vote = args
                cur_feature = (float(thr), int(pol), float(vote))
            elif keyword == "rect":
                if cur_feature is None:
                    raise CascadeParseError("rect outside a feature", line_no)
                left, top, width, height, weight = args
                cur_rects.append(HaarRect(float(left), float(top), float(width), float(height), float(weight)))
            else:
                raise CascadeParseError(f"unknown keyword {keyword!r}", line_no)
        except CascadeParseError:
            raise
        except ValueError as exc:
            raise CascadeParseError(f"bad {keyword} line: {exc}", line_no) from None
    close_stage(line_no + 1)
    if window_base is None:
        raise CascadeParseError("missing window declaration", line_no + 1)
    return CascadeModel(window_base, tuple(stages))


def save_cascade(model: CascadeModel) -> str:
    out = io.StringIO()
    out.write(f"window {model.window_base}\n")
    for stage in model.stages:
        out.write(f"stage {stage.threshold:g}\n")
        for cf in stage.features:
            out.write(f"feature {cf.threshold:g} {cf.polarity:+d} {cf.vote:g}\n")
            for r in cf.feature.rectangles:
                out.write(f"rect {r.left:g} {r.top:g} {r.width:g} {r.height:g} {r.weight:g}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# face annotation CSV: header `frame,x,y,w,h`, frame is the filename stem

def load_face_annotations(text: str) -> dict[str, BoundingBox]:
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != ["frame", "x", "y", "w", "h"]:
        raise AnnotationError("expected header 'frame,x,y,w,h'", 1)
    boxes: dict[str, BoundingBox] = {}
    for line_no, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 5:
            raise AnnotationError(f"expected 5 fields, got {len(row)}", line_no)
        frame = row[0].strip()
        try:
            x, y, w, h = (int(v) for v in row[1:])
            boxes[frame] = BoundingBox(x, y, w, h)
        except ValueError as exc:
            raise AnnotationError(f"bad box for frame {frame!r}: {exc}", line_no) from None
    return boxes
