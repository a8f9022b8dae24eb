"""Corner detectors: Harris (exact and fast-window), Shi-Tomasi, SUSAN, FAST.

The Harris family is gradients -> windowed structure tensor -> response map
-> non-max suppression. The fast variant differs only in how the smoothing
window's exponentials are evaluated (see the gaussian module). All per-pixel
planes zero out wherever a kernel or window overhangs the image; outputs are
pure functions of their inputs.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .gaussian import ApproxConfig, GaussianWindow, MODE_EXACT, MODE_TAYLOR, default_radius, gaussian_window
from .imaging import GrayImage

DETECTOR_KINDS = ("harris", "harris-exact", "harris-taylor", "shi-tomasi", "susan", "fast")


@dataclass(frozen=True)
class GradientField:
    """First-order central-difference gradients; borders are exactly 0."""

    X: np.ndarray
    Y: np.ndarray


@dataclass(frozen=True)
class StructureTensorField:
    """Window-smoothed gradient products A = X^2*w, B = Y^2*w, C = XY*w."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


@dataclass(frozen=True)
class CornerPoint:
    x: int
    y: int
    score: float


@dataclass(frozen=True)
class HarrisParams:
    """Settings for the Harris/Shi-Tomasi pipeline.

    radius None means the per-mode default; response_threshold None means
    1% of the image's maximum response, recomputed per image.
    """

    k: float = 0.04
    sigma: float = 1.0
    mode: str = MODE_EXACT
    approx: ApproxConfig = field(default_factory=ApproxConfig)
    radius: int | None = None
    response_threshold: float | None = None
    nms_radius: int = 2
    max_corners: int | None = None

    def __post_init__(self):
        if not 0.0 < self.k < 0.25:
            raise ValueError(f"k must be in (0, 0.25), got {self.k}")
        if self.nms_radius < 1:
            raise ValueError(f"nms_radius must be >= 1, got {self.nms_radius}")


@dataclass(frozen=True)
class SusanParams:
    mask_radius: int = 3
    brightness_threshold: float = 20.0
    geometric_fraction: float = 0.5
    max_corners: int | None = None


@dataclass(frozen=True)
class FastParams:
    intensity_threshold: float = 20.0
    arc_length: int = 12
    max_corners: int | None = None


def gradients(img: GrayImage) -> GradientField:
    """Convolve with the (-1, 0, 1) kernel along rows (X) and columns (Y)."""
    if img.width < 3 or img.height < 3:
        raise ValueError(f"image must be at least 3x3, got {img.width}x{img.height}")
    p = img.pixels
    X = np.zeros_like(p)
    Y = np.zeros_like(p)
    # each kernel overhangs only along its own axis; those borders stay 0
    X[:, 1:-1] = p[:, 2:] - p[:, :-2]
    Y[1:-1, :] = p[2:, :] - p[:-2, :]
    return GradientField(X, Y)


def structure_tensor(g: GradientField, window: GaussianWindow) -> StructureTensorField:
    h, w = g.X.shape
    if window.side > h or window.side > w:
        raise ValueError(f"window side {window.side} exceeds image {w}x{h}")
    A, B, C = kernels.tensor_sums(g.X * g.X, g.Y * g.Y, g.X * g.Y, window.weights)
    return StructureTensorField(A, B, C)


def harris_response(t: StructureTensorField, k: float = 0.04) -> np.ndarray:
    """Det(M) - k * Tr(M)^2 from the tensor planes."""
    if not 0.0 < k < 0.25:
        raise ValueError(f"k must be in (0, 0.25), got {k}")
    return (t.A * t.B - t.C * t.C) - k * (t.A + t.B) ** 2


def eigenvalues(A, B, C):
    """Eigenvalues of [[A, C], [C, B]] in closed form, larger one first.

    Accepts scalars or matching arrays.
    """
    mean = (np.asarray(A, dtype=np.float64) + B) / 2.0
    spread = np.sqrt(((np.asarray(A, dtype=np.float64) - B) / 2.0) ** 2 + np.square(C, dtype=np.float64))
    return mean + spread, mean - spread


def shi_tomasi_response(t: StructureTensorField) -> np.ndarray:
    """The smaller structure-tensor eigenvalue at each pixel."""
    _, lam2 = eigenvalues(t.A, t.B, t.C)
    return lam2


def non_max_suppression(
    response: np.ndarray,
    radius: int,
    threshold: float,
    max_corners: int | None = None,
) -> list[CornerPoint]:
    """Local maxima of the response at or above threshold.

    A pixel survives only if it strictly beats every neighbour in its
    (2 radius + 1)^2 square; equal-valued neighbours are resolved in favour
    of the smaller (y, x). Results sort by descending score, then (y, x).
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    resp = np.asarray(response, dtype=np.float64)
    keep = kernels.nms_keep(resp, radius, threshold)
    ys, xs = np.nonzero(keep)
    scores = resp[ys, xs]
    order = np.lexsort((xs, ys, -scores))
    if max_corners is not None:
        order = order[:max_corners]
    return [CornerPoint(int(xs[i]), int(ys[i]), float(scores[i])) for i in order]


def _relative_threshold(response: np.ndarray, explicit: float | None) -> float:
    if explicit is not None:
        return explicit
    peak = float(response.max())
    if peak <= 0.0:
        # no corner-like response anywhere (flat or pure-edge image)
        return np.inf
    return 0.01 * peak


def _harris_pipeline(img: GrayImage, params: HarrisParams, response_fn) -> list[CornerPoint]:
    g = gradients(img)
    radius = params.radius if params.radius is not None else default_radius(params.sigma, params.mode)
    window = gaussian_window(radius, params.sigma, params.mode, params.approx)
    t = structure_tensor(g, window)
    resp = response_fn(t)
    threshold = _relative_threshold(resp, params.response_threshold)
    return non_max_suppression(resp, params.nms_radius, threshold, params.max_corners)


def susan_detect(
    img: GrayImage,
    mask_radius: int = 3,
    brightness_threshold: float = 20.0,
    geometric_fraction: float = 0.5,
    max_corners: int | None = None,
) -> list[CornerPoint]:
    """USAN-area test inside a circular mask around each nucleus pixel.

    A pixel scores g - USAN when fewer than g = geometric_fraction * mask
    pixels are within brightness_threshold of the nucleus; the nucleus itself
    is not counted. Non-max suppression runs at the mask radius.
    """
    if mask_radius < 1:
        raise ValueError(f"mask_radius must be >= 1, got {mask_radius}")
    if not 0.0 < geometric_fraction < 1.0:
        raise ValueError(f"geometric_fraction must be in (0, 1), got {geometric_fraction}")
    dus, dvs = _disk_offsets(mask_radius)
    g = geometric_fraction * dus.shape[0]
    plane = kernels.susan_score_plane(img.pixels, dus, dvs, mask_radius, float(brightness_threshold), g)
    return non_max_suppression(plane, mask_radius, 1e-9, max_corners)


def _disk_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    dus = []
    dvs = []
    for dv in range(-radius, radius + 1):
        for du in range(-radius, radius + 1):
            if du == 0 and dv == 0:
                continue
            if du * du + dv * dv <= radius * radius:
                dus.append(du)
                dvs.append(dv)
    return np.array(dus, np.int64), np.array(dvs, np.int64)


def fast_detect(
    img: GrayImage,
    intensity_threshold: float = 20.0,
    arc_length: int = 12,
    max_corners: int | None = None,
) -> list[CornerPoint]:
    """Segment test on the 16-pixel circle of radius 3.

    A corner needs >= arc_length contiguous circle pixels all brighter than
    center + threshold or all darker than center - threshold; its score sums
    the per-pixel excess over that arc. 3x3 non-max suppression follows.
    """
    if not 9 <= arc_length <= 16:
        raise ValueError(f"arc_length must be in [9, 16], got {arc_length}")
    plane = kernels.fast_score_plane(img.pixels, float(intensity_threshold), arc_length)
    return non_max_suppression(plane, 1, 1e-9, max_corners)


def detect_corners(img: GrayImage, kind: str = "harris", params=None) -> list[CornerPoint]:
    """Dispatch to a detector pipeline by kind.

    Kinds: harris (window mode from params), harris-exact, harris-taylor,
    shi-tomasi, susan, fast. params defaults per detector when None.
    """
    if kind in ("harris", "harris-exact", "harris-taylor"):
        p = params if params is not None else HarrisParams()
        if kind == "harris-exact" and p.mode != MODE_EXACT:
            p = _replace_mode(p, MODE_EXACT)
        elif kind == "harris-taylor" and p.mode != MODE_TAYLOR:
            p = _replace_mode(p, MODE_TAYLOR)
        return _harris_pipeline(img, p, lambda t: harris_response(t, p.k))
    if kind == "shi-tomasi":
        p = params if params is not None else HarrisParams()
        return _harris_pipeline(img, p, shi_tomasi_response)
    if kind == "susan":
        p = params if params is not None else SusanParams()
        return susan_detect(img, p.mask_radius, p.brightness_threshold, p.geometric_fraction, p.max_corners)
    if kind == "fast":
        p = params if params is not None else FastParams()
        return fast_detect(img, p.intensity_threshold, p.arc_length, p.max_corners)
    raise ValueError(f"unknown detector kind {kind!r}")


def _replace_mode(p: HarrisParams, mode: str) -> HarrisParams:
    import dataclasses

    return dataclasses.replace(p, mode=mode)


def corners_to_csv(corners: list[CornerPoint]) -> str:
    """CSV with header x,y,score, rows in descending-score order."""
    out = io.StringIO()
    out.write("x,y,score\n")
    for c in corners:
        out.write(f"{c.x},{c.y},{c.score:.6g}\n")
    return out.getvalue()
