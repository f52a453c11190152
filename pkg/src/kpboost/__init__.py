"""Object-category recognition with boosted keypoint-presence features.

The pipeline is integer-only end to end: box-filter blob detection on
summed-area tables, 64-integer patch descriptors, L1 (sum of absolute
differences) matching, AdaBoost over "does this image contain a
keypoint near this reference descriptor?" weak classifiers, and
Hough-style vote accumulation for localization.  Fixed-point encodings
(8, 20, or 32 fractional bits) stand in for floating point throughout,
so every result is bit-reproducible from its seeds.

Functional layers live in the submodules; :mod:`kpboost.estimators`
wraps them in scikit-learn compatible fit/predict classes, and
:mod:`kpboost.cli` exposes the ``kpboost`` command.
"""

from .boosting import (
    StrongClassifier,
    TrainResult,
    WeakClassifier,
    load_model,
    save_model,
    strong_score,
    train_adaboost,
    weak_eval,
)
from .corpus import (
    Corpus,
    generate_frames,
    generate_labeled,
    generate_synthetic,
    load_corpus,
    load_truth_csv,
    split_corpus,
    template_rect,
    write_corpus,
)
from .descriptor import (
    DESCRIPTOR_L1,
    DESCRIPTOR_SIZE,
    Descriptor,
    compute_descriptor,
    sad,
)
from .detector import (
    DEFAULT_RESPONSE_THRESHOLD,
    DetectorParams,
    Keypoint,
    detect_keypoints,
)
from .errors import ContractError, FileFormatError, KpboostError, TrainingError
from .estimators import HoughLocalizer, KeypointBoostClassifier, KeypointExtractor
from .evaluate import (
    PRCurve,
    PRRow,
    error_curve,
    eval_pr,
    pr_from_scores,
    prefix_error_counts,
    read_error_csv,
    read_pr_csv,
    write_error_csv,
    write_pr_csv,
)
from .fixedpoint import FP8_ONE, FP20_ONE, FP32_ONE, rdiv
from .image import (
    GrayImage,
    IntegralImage,
    Rect,
    box_sum,
    integral,
    load_pgm,
    write_pgm,
)
from .localization import (
    Detection,
    HoughParams,
    VoteEntry,
    VoteTable,
    hough_detect,
    learn_votes,
    load_votes,
    save_votes,
)
from .matching import (
    MAX_DISTANCE,
    DistanceMatrix,
    ImageFeatures,
    build_distance_matrix,
    dist_to_image,
    extract_features,
)
from .rng import SplitMix64

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "Corpus",
    "DEFAULT_RESPONSE_THRESHOLD",
    "DESCRIPTOR_L1",
    "DESCRIPTOR_SIZE",
    "Descriptor",
    "Detection",
    "DetectorParams",
    "DistanceMatrix",
    "FP20_ONE",
    "FP32_ONE",
    "FP8_ONE",
    "FileFormatError",
    "GrayImage",
    "HoughLocalizer",
    "HoughParams",
    "ImageFeatures",
    "IntegralImage",
    "Keypoint",
    "KeypointBoostClassifier",
    "KeypointExtractor",
    "KpboostError",
    "MAX_DISTANCE",
    "PRCurve",
    "PRRow",
    "Rect",
    "SplitMix64",
    "StrongClassifier",
    "TrainResult",
    "TrainingError",
    "VoteEntry",
    "VoteTable",
    "WeakClassifier",
    "box_sum",
    "build_distance_matrix",
    "compute_descriptor",
    "detect_keypoints",
    "dist_to_image",
    "error_curve",
    "eval_pr",
    "extract_features",
    "generate_frames",
    "generate_labeled",
    "generate_synthetic",
    "hough_detect",
    "integral",
    "learn_votes",
    "load_corpus",
    "load_model",
    "load_pgm",
    "load_truth_csv",
    "load_votes",
    "pr_from_scores",
    "prefix_error_counts",
    "rdiv",
    "read_error_csv",
    "read_pr_csv",
    "sad",
    "save_model",
    "save_votes",
    "split_corpus",
    "strong_score",
    "template_rect",
    "train_adaboost",
    "weak_eval",
    "write_corpus",
    "write_error_csv",
    "write_pgm",
    "write_pr_csv",
]
