"""Wall-clock and agreement benchmarks for the detector pipelines.

Timing uses the monotonic high-resolution clock, single-threaded, with one
mandatory untimed warm-up run. The window-churn benchmark isolates the cost
the fast detector actually removes: rebuilding the Gaussian window over and
over (once per image tile), where per-cell exponential evaluation dominates.
Corner-agreement treats the exact-window Harris output as reference truth.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from pathlib import Path
from statistics import mean, stdev
from typing import Sequence

from . import kernels
from .detectors import CornerPoint, HarrisParams, detect_corners
from .gaussian import ApproxConfig, DEFAULT_APPROX
from .imaging import GrayImage

DEFAULT_BENCH_DETECTORS = ("harris-exact", "harris-taylor", "shi-tomasi", "susan", "fast")


@dataclass(frozen=True)
class TimingResult:
    detector_tag: str
    image_tag: str
    repetitions: int
    mean_seconds: float
    std_seconds: float
    min_seconds: float


@dataclass(frozen=True)
class AgreementResult:
    match_radius: float
    top_n: int
    matched_fraction: float


def _timed(fn, repetitions: int) -> tuple[float, float, float]:
    fn()  # warm-up, untimed
    times = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return mean(times), stdev(times), min(times)


def time_detector(
    img: GrayImage,
    kind: str,
    params=None,
    repetitions: int = 5,
    image_tag: str = "",
) -> TimingResult:
    """Per-run wall clock of detect_corners alone, I/O excluded."""
    if repetitions < 3:
        raise ValueError(f"repetitions must be >= 3, got {repetitions}")
    m, s, lo = _timed(lambda: detect_corners(img, kind, params), repetitions)
    return TimingResult(kind, image_tag, repetitions, m, s, lo)


def time_window_churn(
    radius: int,
    sigma: float,
    image_size: int = 512,
    tile: int = 8,
    approx: ApproxConfig = DEFAULT_APPROX,
    repetitions: int = 20,
) -> tuple[TimingResult, TimingResult]:
    """Time per-tile window recomputation over an image, exact vs fast.

    One run rebuilds the window once per tile of an image_size^2 frame into a
    reused buffer: (image_size / tile)^2 constructions, enough for the
    exponential evaluation itself to dominate the measurement.
    """
    if repetitions < 3:
        raise ValueError(f"repetitions must be >= 3, got {repetitions}")
    count = math.ceil(image_size / tile) ** 2
    inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma)
    coefs = approx.coefficients()
    clamp = approx.clamp_non_negative
    tag = f"{image_size}px/{tile}px-tiles"
    m, s, lo = _timed(lambda: kernels.window_churn_exact(count, radius, inv_two_sigma_sq), repetitions)
    exact = TimingResult("gauss-window-exact", tag, repetitions, m, s, lo)
    m, s, lo = _timed(lambda: kernels.window_churn_taylor(count, radius, inv_two_sigma_sq, coefs, clamp), repetitions)
    taylor = TimingResult("gauss-window-taylor", tag, repetitions, m, s, lo)
    return exact, taylor


def corner_agreement(
    reference: Sequence[CornerPoint],
    candidate: Sequence[CornerPoint],
    top_n: int,
    match_radius: float,
) -> AgreementResult:
    """Greedy one-to-one matching of the reference's top corners.

    Each of the reference's top_n corners by score matches the nearest
    unconsumed candidate within match_radius. top_n clips to the reference
    length; an empty reference yields fraction 0.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be >= 1, got {top_n}")
    ranked = sorted(reference, key=lambda c: (-c.score, c.y, c.x))[:top_n]
    effective = len(ranked)
    if effective == 0:
        return AgreementResult(match_radius, 0, 0.0)
    free = list(candidate)
    matched = 0
    for ref in ranked:
        best_i = -1
        best_d = match_radius
        for i, cand in enumerate(free):
            d = math.hypot(cand.x - ref.x, cand.y - ref.y)
            if d <= best_d:
                best_d = d
                best_i = i
        if best_i >= 0:
            free.pop(best_i)
            matched += 1
    return AgreementResult(match_radius, effective, matched / effective)


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def bench_report(
    images: Sequence[tuple[str, GrayImage]],
    repetitions: int,
    out_dir: Path | str,
    detectors: Sequence[str] = DEFAULT_BENCH_DETECTORS,
    harris: HarrisParams | None = None,
    top_n: int = 50,
    match_radius: float = 1.0,
) -> tuple[Path, Path]:
    """Write timing.csv and agreement.csv for the detector grid.

    Harris exact and taylor share the same sigma/radius so the comparison
    isolates the window arithmetic. agreement.csv depends only on detector
    outputs and is byte-identical across reruns.
    """
    if not images:
        raise ValueError("need at least one image")
    if harris is None:
        # radius 1 keeps the truncated window inside its validity domain
        harris = HarrisParams(sigma=1.0, radius=1)

    timing_rows = []
    agreement_rows = []
    for tag, img in images:
        results = {}
        for kind in detectors:
            params = harris if kind not in ("susan", "fast") else None
            results[kind] = time_detector(img, kind, params, repetitions, tag)
        exact_mean = results.get("harris-exact").mean_seconds if "harris-exact" in results else None
        for kind in detectors:
            r = results[kind]
            speedup = _fmt(exact_mean / r.mean_seconds) if exact_mean else ""
            timing_rows.append(
                f"{tag},{kind},{img.width}x{img.height},"
                f"{_fmt(r.mean_seconds)},{_fmt(r.std_seconds)},{_fmt(r.min_seconds)},{speedup}"
            )
        reference = detect_corners(img, "harris-exact", harris)
        candidate = detect_corners(img, "harris-taylor", harris)
        agr = corner_agreement(reference, candidate, top_n, match_radius)
        agreement_rows.append(f"{tag},{agr.top_n},{_fmt(agr.match_radius)},{_fmt(agr.matched_fraction)}")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    timing_path = out / "timing.csv"
    agreement_path = out / "agreement.csv"
    timing_path.write_bytes(
        ("image,detector,size,mean_s,std_s,min_s,speedup_vs_exact\n" + "\n".join(timing_rows) + "\n").encode()
    )
    agreement_path.write_bytes(
        ("image,top_n,radius,matched_fraction\n" + "\n".join(agreement_rows) + "\n").encode()
    )
    return timing_path, agreement_path
