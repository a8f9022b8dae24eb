"""Per-frame expression scoring from feature points in the eye and mouth ROIs.

A detected face splits into horizontal thirds: the top third holds the eyes,
the bottom third the mouth. Each ROI's feature points yield a "curious
ratio", the vertical extent divided by the horizontal extent of the point
cloud, an openness proxy (raised eyebrows or an open mouth push it up). The
mouth points additionally drive a curve: they become control points of a
Bezier curve whose samples are least-squares fitted to a parabola. Image y
grows downward, so a negative quadratic coefficient means the mouth corners
sit higher than its center, i.e. a smile, and maps to a positive smile score.

All thresholds and weights live in RatingConfig; the shipped defaults are
calibration points, not measured constants, and can be overridden from a
config file.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .detectors import DETECTOR_KINDS, HarrisParams, detect_corners
from .gaussian import ApproxConfig, MODE_EXACT, MODE_TAYLOR
from .imaging import BoundingBox, GrayImage

LABELS = ("Curious", "Excited", "Satisfied", "Disinterested", "Neutral")


class ConfigError(ValueError):
    """Malformed scoring config file; the message names the line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"{message} (line {line})")
        self.line = line


@dataclass(frozen=True)
class FaceROIs:
    face: BoundingBox
    eyes: BoundingBox
    mouth: BoundingBox


def split_rois(face: BoundingBox) -> FaceROIs:
    """Top third for the eyes, bottom third (remainder) for the mouth."""
    if face.h < 3:
        raise ValueError(f"face box must be at least 3 pixels tall, got {face.h}")
    third = round(face.h / 3)
    eyes = BoundingBox(face.x, face.y, face.w, third)
    mouth_h = face.h - 2 * third
    mouth = BoundingBox(face.x, face.y + face.h - mouth_h, face.w, mouth_h)
    return FaceROIs(face, eyes, mouth)


@dataclass(frozen=True)
class FeaturePointSet:
    """Feature points in ROI-local coordinates, tagged by source ROI."""

    points: tuple[tuple[float, float], ...]
    source_roi: str = "mouth"


def curious_ratio(pts: FeaturePointSet) -> float:
    """Vertical extent over horizontal extent of the point set."""
    if len(pts.points) < 2:
        raise ValueError(f"need at least 2 feature points, got {len(pts.points)}")
    xs = [p[0] for p in pts.points]
    ys = [p[1] for p in pts.points]
    span_x = max(xs) - min(xs)
    if span_x == 0:
        raise ValueError("degenerate geometry: all feature points share one x")
    return (max(ys) - min(ys)) / span_x


def bezier_point(control: list[tuple[float, float]], t: float) -> tuple[float, float]:
    """Evaluate the Bezier curve by repeated linear interpolation."""
    if len(control) < 2:
        raise ValueError(f"need at least 2 control points, got {len(control)}")
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must be in [0, 1], got {t}")
    pts = [(float(x), float(y)) for x, y in control]
    while len(pts) > 1:
        pts = [
            ((1.0 - t) * pts[i][0] + t * pts[i + 1][0], (1.0 - t) * pts[i][1] + t * pts[i + 1][1])
            for i in range(len(pts) - 1)
        ]
    return pts[0]


def rasterize_bezier(control: list[tuple[float, float]], samples: int) -> list[tuple[float, float]]:
    """Evaluate at evenly spaced parameters t = i / (samples - 1)."""
    if samples < 2:
        raise ValueError(f"need at least 2 samples, got {samples}")
    return [bezier_point(control, i / (samples - 1)) for i in range(samples)]


@dataclass(frozen=True)
class QuadraticFit:
    """Least-squares y = a x^2 + b x + c with RMS residual."""

    a: float
    b: float
    c: float
    residual: float
    well_posed: bool


def fit_quadratic(pts: list[tuple[float, float]]) -> QuadraticFit:
    """Normal-equation fit; x is rescaled to [-1, 1] for conditioning.

    Fewer than 3 distinct x values make the fit ill-posed: coefficients come
    back zero with well_posed False instead of raising.
    """
    xs = np.array([p[0] for p in pts], dtype=np.float64)
    ys = np.array([p[1] for p in pts], dtype=np.float64)
    if np.unique(xs).size < 3:
        return QuadraticFit(0.0, 0.0, 0.0, 0.0, False)
    mid = float(xs.max() + xs.min()) / 2.0
    half = float(xs.max() - xs.min()) / 2.0
    u = (xs - mid) / half
    V = np.column_stack((u * u, u, np.ones_like(u)))
    # LU with partial pivoting on the 3x3 normal equations
    coef = np.linalg.solve(V.T @ V, V.T @ ys)
    a_u, b_u, c_u = (float(v) for v in coef)
    a = a_u / (half * half)
    b = b_u / half - 2.0 * a_u * mid / (half * half)
    c = a_u * mid * mid / (half * half) - b_u * mid / half + c_u
    pred = V @ coef
    residual = float(np.sqrt(np.mean((ys - pred) ** 2)))
    return QuadraticFit(a, b, c, residual, True)


@dataclass(frozen=True)
class RatingConfig:
    """Weights, thresholds and normalizers for classification."""

    w_eye: float = 0.3
    w_mouth: float = 0.3
    w_smile: float = 0.4
    curious_threshold: float = 0.5
    excited_threshold: float = 0.75
    disinterest_threshold: float = 0.25
    curious_ratio_scale: float = 0.6
    smile_residual_max: float = 2.0
    a_scale: float = 0.05

    def __post_init__(self):
        if min(self.w_eye, self.w_mouth, self.w_smile) < 0:
            raise ValueError("weights must be non-negative")
        if abs(self.w_eye + self.w_mouth + self.w_smile - 1.0) > 1e-9:
            raise ValueError("weights must sum to 1")
        if not self.disinterest_threshold < self.curious_threshold < self.excited_threshold:
            raise ValueError("thresholds must satisfy disinterest < curious < excited")
        if self.curious_ratio_scale <= 0:
            raise ValueError("curious_ratio_scale must be positive")


DEFAULT_RATING = RatingConfig()


def smile_score(fit: QuadraticFit, cfg: RatingConfig = DEFAULT_RATING) -> float:
    """Concavity mapped to [-1, 1]; gated by the fit-residual threshold.

    Negative curvature (corners above center in downward-y coordinates) is a
    smile, hence the sign flip.
    """
    if not fit.well_posed or fit.residual > cfg.smile_residual_max:
        return 0.0
    return max(-1.0, min(1.0, -fit.a / cfg.a_scale))


@dataclass(frozen=True)
class ExpressionScores:
    eye_cr: float
    mouth_cr: float
    smile: float
    overall: float
    label: str
    flags: tuple[str, ...] = ()


def classify_expression(
    eye_cr: float,
    mouth_cr: float,
    smile: float,
    cfg: RatingConfig = DEFAULT_RATING,
) -> ExpressionScores:
    """Weighted blend of normalized ratios and smile into a label.

    Both ratios normalize to [0, 1] against curious_ratio_scale. Excitement
    needs both normalized ratios past the excited threshold; a positive smile
    with enough overall interest reads as satisfaction; otherwise interest
    alone is curiosity, and a low overall is disinterest.
    """
    eye_n = min(eye_cr / cfg.curious_ratio_scale, 1.0)
    mouth_n = min(mouth_cr / cfg.curious_ratio_scale, 1.0)
    overall = cfg.w_eye * eye_n + cfg.w_mouth * mouth_n + cfg.w_smile * (smile + 1.0) / 2.0
    if eye_n > cfg.excited_threshold and mouth_n > cfg.excited_threshold:
        label = "Excited"
    elif smile > 0.0 and overall >= cfg.curious_threshold:
        label = "Satisfied"
    elif overall >= cfg.curious_threshold:
        label = "Curious"
    elif overall < cfg.disinterest_threshold:
        label = "Disinterested"
    else:
        label = "Neutral"
    return ExpressionScores(eye_cr, mouth_cr, smile, overall, label)


def _roi_points(img: GrayImage, roi: BoundingBox, kind: str, params) -> list[tuple[float, float]]:
    try:
        crop = img.crop(roi)
        corners = detect_corners(crop, kind, params)
    except ValueError:
        return []
    return [(float(c.x), float(c.y)) for c in corners]


def frame_score(
    img: GrayImage,
    face: BoundingBox,
    detector: str = "harris",
    params: HarrisParams | None = None,
    cfg: RatingConfig = DEFAULT_RATING,
    curve_samples: int = 50,
    fit_raw_points: bool = False,
) -> ExpressionScores:
    """Score one frame: ROI split, feature points, ratios, mouth curve, label.

    A ROI that yields too few usable points contributes 0 to its component
    and adds a flag; the frame never aborts. With fit_raw_points the parabola
    fits the detected mouth points directly instead of the Bezier samples.
    """
    if not face.fits_within(img.width, img.height):
        raise ValueError(f"face box {face} outside image {img.width}x{img.height}")
    rois = split_rois(face)
    flags: list[str] = []

    eye_pts = _roi_points(img, rois.eyes, detector, params)
    try:
        eye_cr = curious_ratio(FeaturePointSet(tuple(eye_pts), "eyes"))
    except ValueError:
        eye_cr = 0.0
        flags.append("eyes:no-usable-features")

    mouth_pts = _roi_points(img, rois.mouth, detector, params)
    try:
        mouth_cr = curious_ratio(FeaturePointSet(tuple(mouth_pts), "mouth"))
    except ValueError:
        mouth_cr = 0.0
        flags.append("mouth:no-usable-features")

    smile = 0.0
    if len(mouth_pts) >= 2:
        control = sorted(mouth_pts)
        curve = control if fit_raw_points else rasterize_bezier(control, curve_samples)
        fit = fit_quadratic(curve)
        if fit.well_posed:
            smile = smile_score(fit, cfg)
        else:
            flags.append("mouth:degenerate-curve")
    elif "mouth:no-usable-features" not in flags:
        flags.append("mouth:no-usable-features")

    scores = classify_expression(eye_cr, mouth_cr, smile, cfg)
    return replace(scores, flags=tuple(flags))


# ---------------------------------------------------------------------------
# scoring config file: `key = value` lines, '#' comments allowed

_RATING_KEYS = {
    "w_eye", "w_mouth", "w_smile", "curious_threshold", "excited_threshold",
    "disinterest_threshold", "curious_ratio_scale", "smile_residual_max", "a_scale",
}
_DETECTOR_KEYS = {"k", "sigma", "taylor_terms", "gaussian_mode", "nms_radius", "detector"}


@dataclass(frozen=True)
class PipelineConfig:
    """Rating config plus the detector settings used per frame."""

    rating: RatingConfig = field(default_factory=RatingConfig)
    detector: str = "harris"
    harris: HarrisParams = field(default_factory=HarrisParams)


DEFAULT_PIPELINE = PipelineConfig()


def load_config(text: str) -> PipelineConfig:
    """Parse the scoring config; unknown keys are an error."""
    rating_kwargs: dict[str, float] = {}
    detector = "harris"
    harris_kwargs: dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line_no)
        key, _, value = (part.strip() for part in line.partition("="))
        if key in _RATING_KEYS:
            try:
                rating_kwargs[key] = float(value)
            except ValueError:
                raise ConfigError(f"bad numeric value for {key}: {value!r}", line_no) from None
        elif key in _DETECTOR_KEYS:
            try:
                if key == "detector":
                    if value not in DETECTOR_KINDS:
                        raise ConfigError(f"unknown detector {value!r}", line_no)
                    detector = value
                elif key == "gaussian_mode":
                    if value not in (MODE_EXACT, MODE_TAYLOR):
                        raise ConfigError(f"unknown gaussian_mode {value!r}", line_no)
                    harris_kwargs["mode"] = value
                elif key == "taylor_terms":
                    harris_kwargs["approx"] = ApproxConfig(term_count=int(value))
                elif key == "nms_radius":
                    harris_kwargs["nms_radius"] = int(value)
                else:
                    harris_kwargs[key] = float(value)
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"bad value for {key}: {value!r}", line_no) from None
        else:
            raise ConfigError(f"unknown config key {key!r}", line_no)
    try:
        rating = RatingConfig(**rating_kwargs)
        harris = HarrisParams(**harris_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), 0) from None
    return PipelineConfig(rating, detector, harris)
