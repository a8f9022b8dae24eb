"""Fast feature-point detection and facial-expression scoring toolkit."""

from .bench import (
    AgreementResult,
    TimingResult,
    bench_report,
    corner_agreement,
    time_detector,
    time_window_churn,
)
from .detectors import (
    CornerPoint,
    FastParams,
    GradientField,
    HarrisParams,
    StructureTensorField,
    SusanParams,
    corners_to_csv,
    detect_corners,
    eigenvalues,
    fast_detect,
    gradients,
    harris_response,
    non_max_suppression,
    shi_tomasi_response,
    structure_tensor,
    susan_detect,
)
from .expression import (
    ExpressionScores,
    FaceROIs,
    FeaturePointSet,
    PipelineConfig,
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
from .gaussian import ApproxConfig, GaussianWindow, default_radius, exp_taylor, gaussian_window
from .imaging import (
    BoundingBox,
    CascadeModel,
    GrayImage,
    HaarFeature,
    HaarRect,
    IntegralImage,
    cascade_detect,
    checkerboard,
    haar_value,
    integral_image,
    load_cascade,
    load_face_annotations,
    load_pgm,
    rect_sum,
    save_cascade,
    save_pgm,
)
from .kernels import BACKEND
from .review import (
    FrameRecord,
    ReviewReport,
    aggregate,
    run_session,
    sample_frames,
    write_report,
)

__version__ = "0.1.0"
