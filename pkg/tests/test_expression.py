import math

import numpy as np
import pytest

from expresso import (
    BoundingBox,
    FeaturePointSet,
    QuadraticFit,
    RatingConfig,
    bezier_point,
    classify_expression,
    curious_ratio,
    fit_quadratic,
    frame_score,
    load_config,
    rasterize_bezier,
    smile_score,
    split_rois,
)
from expresso.expression import ConfigError

from synth import FACE_BOX, blank_face, smile_face


class TestSplitRois:
    def test_exact_thirds(self):
        rois = split_rois(BoundingBox(0, 0, 90, 90))
        assert rois.eyes == BoundingBox(0, 0, 90, 30)
        assert rois.mouth == BoundingBox(0, 60, 90, 30)

    def test_rounding_rule(self):
        rois = split_rois(BoundingBox(0, 0, 10, 100))
        assert rois.eyes.h == 33
        assert rois.mouth == BoundingBox(0, 66, 10, 34)

    def test_mouth_bottom_meets_face_bottom(self):
        for h in range(3, 40):
            rois = split_rois(BoundingBox(5, 7, 20, h))
            assert rois.mouth.y + rois.mouth.h == 7 + h
            assert rois.eyes.y == 7

    def test_too_short_face(self):
        with pytest.raises(ValueError, match="3 pixels"):
            split_rois(BoundingBox(0, 0, 10, 2))


class TestCuriousRatio:
    def test_example(self):
        pts = FeaturePointSet(((0, 0), (4, 0), (2, 3)), "eyes")
        assert curious_ratio(pts) == 0.75

    def test_collinear_horizontal_is_zero(self):
        assert curious_ratio(FeaturePointSet(((0, 5), (3, 5), (9, 5)))) == 0.0

    def test_single_point_rejected(self):
        with pytest.raises(ValueError, match="at least 2"):
            curious_ratio(FeaturePointSet(((1, 1),)))

    def test_vertical_stack_rejected(self):
        with pytest.raises(ValueError, match="degenerate"):
            curious_ratio(FeaturePointSet(((2, 0), (2, 9))))

    def test_translation_invariant(self, rng):
        pts = [(float(x), float(y)) for x, y in rng.integers(0, 50, size=(8, 2))]
        if len({p[0] for p in pts}) < 2:
            pts.append((99.0, 0.0))
        base = curious_ratio(FeaturePointSet(tuple(pts)))
        moved = curious_ratio(FeaturePointSet(tuple((x + 13.0, y - 7.0) for x, y in pts)))
        assert moved == pytest.approx(base, rel=1e-12)

    def test_anisotropic_scaling(self):
        pts = ((0.0, 0.0), (4.0, 2.0), (8.0, 1.0))
        base = curious_ratio(FeaturePointSet(pts))
        scaled = curious_ratio(FeaturePointSet(tuple((3.0 * x, 5.0 * y) for x, y in pts)))
        assert scaled == pytest.approx(base * 5.0 / 3.0, rel=1e-12)


def bernstein_point(control, t):
    """Independent oracle: explicit Bernstein-basis evaluation."""
    n = len(control) - 1
    x = sum(math.comb(n, i) * (1 - t) ** (n - i) * t ** i * control[i][0] for i in range(n + 1))
    y = sum(math.comb(n, i) * (1 - t) ** (n - i) * t ** i * control[i][1] for i in range(n + 1))
    return x, y


class TestBezier:
    def test_endpoints(self):
        control = [(0.0, 0.0), (1.0, 2.0), (5.0, 1.0)]
        assert bezier_point(control, 0.0) == (0.0, 0.0)
        assert bezier_point(control, 1.0) == (5.0, 1.0)

    def test_linear_midpoint(self):
        assert bezier_point([(0.0, 0.0), (2.0, 2.0)], 0.5) == (1.0, 1.0)

    def test_quadratic_midpoint(self):
        # lerp pairs then lerp again: (0.5, 1), (1.5, 1) -> (1, 1)
        assert bezier_point([(0.0, 0.0), (1.0, 2.0), (2.0, 0.0)], 0.5) == (1.0, 1.0)

    def test_inside_control_bounding_box(self, rng):
        control = [(float(x), float(y)) for x, y in rng.uniform(-10, 10, size=(5, 2))]
        xs = [p[0] for p in control]
        ys = [p[1] for p in control]
        for t in np.linspace(0, 1, 23):
            x, y = bezier_point(control, float(t))
            assert min(xs) - 1e-9 <= x <= max(xs) + 1e-9
            assert min(ys) - 1e-9 <= y <= max(ys) + 1e-9

    def test_matches_bernstein_oracle(self, rng):
        control = [(float(x), float(y)) for x, y in rng.uniform(-5, 5, size=(6, 2))]
        for t in np.linspace(0, 1, 101):
            got = bezier_point(control, float(t))
            want = bernstein_point(control, float(t))
            assert got[0] == pytest.approx(want[0], abs=1e-12)
            assert got[1] == pytest.approx(want[1], abs=1e-12)

    def test_t_out_of_range(self):
        with pytest.raises(ValueError, match="t must be"):
            bezier_point([(0.0, 0.0), (1.0, 1.0)], 1.5)

    def test_needs_two_points(self):
        with pytest.raises(ValueError, match="control points"):
            bezier_point([(0.0, 0.0)], 0.5)


class TestRasterize:
    def test_two_samples_are_endpoints(self):
        control = [(0.0, 0.0), (3.0, 1.0), (6.0, 0.0)]
        assert rasterize_bezier(control, 2) == [(0.0, 0.0), (6.0, 0.0)]

    def test_straight_controls_stay_collinear(self):
        control = [(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]
        samples = rasterize_bezier(control, 17)
        for (x0, y0), (x1, y1) in zip(samples, samples[1:]):
            assert abs(x1 * y0 - y1 * x0) < 1e-9

    def test_sample_count_validated(self):
        with pytest.raises(ValueError, match="samples"):
            rasterize_bezier([(0.0, 0.0), (1.0, 1.0)], 1)


class TestFitQuadratic:
    def test_exact_parabola(self):
        fit = fit_quadratic([(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)])
        assert fit.well_posed
        assert fit.a == pytest.approx(1.0, abs=1e-12)
        assert fit.b == pytest.approx(0.0, abs=1e-12)
        assert fit.c == pytest.approx(0.0, abs=1e-12)
        assert fit.residual < 1e-12

    def test_linear_data_zero_curvature(self):
        pts = [(float(x), 3.0 * x - 2.0) for x in range(7)]
        fit = fit_quadratic(pts)
        assert abs(fit.a) < 1e-9
        assert fit.b == pytest.approx(3.0, abs=1e-9)

    def test_planted_coefficients_recovered(self, rng):
        xs = rng.uniform(-10, 30, size=50)
        pts = [(float(x), 2.0 * x * x - 3.0 * x + 1.0) for x in xs]
        fit = fit_quadratic(pts)
        assert fit.a == pytest.approx(2.0, abs=1e-9)
        assert fit.b == pytest.approx(-3.0, abs=1e-9)
        assert fit.c == pytest.approx(1.0, abs=1e-9)
        assert fit.residual < 1e-9

    def test_few_distinct_x_not_well_posed(self):
        fit = fit_quadratic([(1.0, 0.0), (1.0, 5.0), (2.0, 3.0), (2.0, 4.0)])
        assert fit == QuadraticFit(0.0, 0.0, 0.0, 0.0, False)

    def test_curvature_translation_invariant(self, rng):
        xs = rng.uniform(0, 20, size=30)
        pts = [(float(x), -0.5 * x * x + 2.0 * x + rng.normal() * 0.1) for x in xs]
        fit = fit_quadratic(pts)
        shifted = fit_quadratic([(x + 100.0, y) for x, y in pts])
        assert shifted.a == pytest.approx(fit.a, abs=1e-9)
        assert shifted.residual == pytest.approx(fit.residual, abs=1e-9)


class TestSmileScore:
    def test_flat_mouth(self):
        assert smile_score(QuadraticFit(0.0, 1.0, 2.0, 0.0, True)) == 0.0

    def test_full_smile_saturation(self):
        assert smile_score(QuadraticFit(-0.05, 0.0, 0.0, 0.1, True)) == 1.0
        assert smile_score(QuadraticFit(-0.5, 0.0, 0.0, 0.1, True)) == 1.0

    def test_frown_is_negative(self):
        assert smile_score(QuadraticFit(0.025, 0.0, 0.0, 0.1, True)) == -0.5

    def test_residual_gate(self):
        assert smile_score(QuadraticFit(-0.05, 0.0, 0.0, 3.0, True)) == 0.0

    def test_ill_posed_scores_zero(self):
        assert smile_score(QuadraticFit(0.0, 0.0, 0.0, 0.0, False)) == 0.0


class TestClassify:
    def test_saturated_ratios_excited(self):
        cfg = RatingConfig()
        for smile in (-1.0, 0.0, 1.0):
            s = classify_expression(cfg.curious_ratio_scale, cfg.curious_ratio_scale, smile, cfg)
            assert s.label == "Excited"

    def test_all_zero_disinterested(self):
        s = classify_expression(0.0, 0.0, 0.0)
        assert s.overall == pytest.approx(0.2, abs=1e-12)
        assert s.label == "Disinterested"

    def test_satisfied_example(self):
        # normalized ratios 0.6 with a full smile
        s = classify_expression(0.36, 0.36, 1.0)
        assert s.overall == pytest.approx(0.76, abs=1e-12)
        assert s.label == "Satisfied"

    def test_curious_without_smile(self):
        s = classify_expression(0.48, 0.48, 0.0)
        # normalized 0.8 each: overall = 0.3*0.8*2 + 0.2 = 0.68 >= 0.5, no smile
        assert s.label == "Excited"  # both normalized ratios 0.8 > 0.75
        s = classify_expression(0.42, 0.36, 0.0)
        # normalized 0.7/0.6: overall = 0.21 + 0.18 + 0.2 = 0.59, not excited
        assert s.overall == pytest.approx(0.59, abs=1e-12)
        assert s.label == "Curious"

    def test_neutral_band(self):
        s = classify_expression(0.12, 0.12, 0.0)
        # normalized 0.2 each: overall = 0.06 + 0.06 + 0.2 = 0.32
        assert s.label == "Neutral"

    def test_normalization_saturates(self):
        a = classify_expression(0.6, 0.6, 0.5)
        b = classify_expression(6000.0, 60.0, 0.5)
        assert a.label == b.label == "Excited"
        assert a.overall == b.overall

    def test_branch_invariance_under_saturating_scaling(self):
        # scaling both ratios while staying on the same side of every
        # threshold leaves the label unchanged
        for scale in (1.0, 1.1, 2.0, 10.0):
            s = classify_expression(0.5 * scale, 0.5 * scale, 1.0)
            assert s.label == "Excited"
        for scale in (0.01, 0.05):
            low = classify_expression(0.6 * scale, 0.6 * scale, 0.0)
            assert low.label == "Disinterested"

    def test_weights_validation(self):
        with pytest.raises(ValueError, match="sum to 1"):
            RatingConfig(w_eye=0.5, w_mouth=0.5, w_smile=0.5)
        with pytest.raises(ValueError, match="thresholds"):
            RatingConfig(curious_threshold=0.2, disinterest_threshold=0.3)


class TestFrameScore:
    def test_blank_face_disinterested(self):
        scores = frame_score(blank_face(), FACE_BOX)
        assert scores.label == "Disinterested"
        assert scores.eye_cr == 0.0 and scores.mouth_cr == 0.0 and scores.smile == 0.0
        assert "eyes:no-usable-features" in scores.flags
        assert "mouth:no-usable-features" in scores.flags

    def test_smile_face_satisfied(self):
        scores = frame_score(smile_face(), FACE_BOX)
        assert scores.label == "Satisfied"
        assert scores.smile > 0.0
        assert scores.flags == ()

    def test_smile_face_ratios_match_hand_recomputation(self):
        from expresso import detect_corners, split_rois as split

        img = smile_face()
        rois = split(FACE_BOX)
        scores = frame_score(img, FACE_BOX)
        for roi, got in ((rois.eyes, scores.eye_cr), (rois.mouth, scores.mouth_cr)):
            pts = [(c.x, c.y) for c in detect_corners(img.crop(roi), "harris")]
            xs = [p[0] for p in pts]
            ys = [p[1] for p in pts]
            assert got == pytest.approx((max(ys) - min(ys)) / (max(xs) - min(xs)), rel=1e-12)

    def test_deterministic(self):
        a = frame_score(smile_face(), FACE_BOX)
        b = frame_score(smile_face(), FACE_BOX)
        assert a == b

    def test_face_outside_image_rejected(self):
        with pytest.raises(ValueError, match="outside image"):
            frame_score(blank_face(64), BoundingBox(10, 10, 90, 90))

    def test_fit_raw_points_option(self):
        # raw bead corners zigzag vertically, so the default residual gate
        # zeroes the smile; widening it recovers the planted concavity
        gated = frame_score(smile_face(), FACE_BOX, fit_raw_points=True)
        assert gated.smile == 0.0
        cfg = RatingConfig(smile_residual_max=5.0)
        scores = frame_score(smile_face(), FACE_BOX, cfg=cfg, fit_raw_points=True)
        assert scores.smile > 0.0


class TestConfigFile:
    def test_full_round(self):
        text = """
        # scoring weights
        w_eye = 0.25
        w_mouth = 0.25
        w_smile = 0.5
        curious_threshold = 0.4
        excited_threshold = 0.8
        disinterest_threshold = 0.2
        curious_ratio_scale = 0.5
        smile_residual_max = 1.5
        a_scale = 0.04
        k = 0.05
        sigma = 1.5
        taylor_terms = 6
        gaussian_mode = taylor
        nms_radius = 3
        detector = harris-taylor
        """
        cfg = load_config("\n".join(line.strip() for line in text.splitlines()))
        assert cfg.rating.w_smile == 0.5
        assert cfg.rating.a_scale == 0.04
        assert cfg.detector == "harris-taylor"
        assert cfg.harris.k == 0.05
        assert cfg.harris.sigma == 1.5
        assert cfg.harris.mode == "taylor"
        assert cfg.harris.approx.term_count == 6
        assert cfg.harris.nms_radius == 3

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            load_config("w_eye = 0.3\nbogus = 1\n")

    def test_error_names_line(self):
        with pytest.raises(ConfigError) as err:
            load_config("k = 0.05\nsigma = abc\n")
        assert err.value.line == 2

    def test_invalid_combination_reported(self):
        with pytest.raises(ConfigError, match="sum to 1"):
            load_config("w_eye = 0.9\n")
