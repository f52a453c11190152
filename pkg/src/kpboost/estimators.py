"""Estimator layer: scikit-learn compatible wrappers over the
functional keypoint/boosting/localization core.

``KeypointExtractor`` is a stateless transformer (images to feature
sets), ``KeypointBoostClassifier`` trains the boosted keypoint-presence
model, and ``HoughLocalizer`` learns geometric votes on top of a fitted
classifier.  All constructor arguments are plain values so
``get_params``/``set_params``/``clone`` behave as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .boosting import StrongClassifier, strong_score, train_adaboost
from .detector import (
    DEFAULT_FILTER_SIZES,
    DEFAULT_RESPONSE_THRESHOLD,
    DEFAULT_STRIDE,
    DetectorParams,
)
from .errors import ContractError
from .localization import (
    DEFAULT_CELL_SIZE,
    DEFAULT_MIN_MASS,
    HoughParams,
    hough_detect,
    learn_votes,
)
from .matching import ImageFeatures, build_distance_matrix, extract_features
from .validation import (
    check_fitted,
    check_image,
    check_images,
    check_labels,
    check_rect,
)


def _detector_params(est) -> DetectorParams:
    return DetectorParams(
        filter_sizes=tuple(est.filter_sizes),
        stride=est.stride,
        response_threshold=est.response_threshold,
        max_keypoints=est.max_keypoints,
    )


def _as_features(item, params: DetectorParams, index: int) -> ImageFeatures:
    if isinstance(item, ImageFeatures):
        return item
    img = check_image(item)
    return extract_features(img, params, image_id=img.path or f"image-{index}")


class KeypointExtractor(TransformerMixin, BaseEstimator):
    """Transform grayscale images into per-image keypoint feature sets."""

    def __init__(
        self,
        filter_sizes=DEFAULT_FILTER_SIZES,
        stride=DEFAULT_STRIDE,
        response_threshold=DEFAULT_RESPONSE_THRESHOLD,
        max_keypoints=None,
    ):
        self.filter_sizes = filter_sizes
        self.stride = stride
        self.response_threshold = response_threshold
        self.max_keypoints = max_keypoints

    def fit(self, X, y=None):
        _detector_params(self)
        self.n_images_in_ = len(list(X))
        return self

    def transform(self, X):
        params = _detector_params(self)
        images = check_images(X)
        return [
            extract_features(img, params, image_id=img.path or f"image-{i}")
            for i, img in enumerate(images)
        ]


class KeypointBoostClassifier(ClassifierMixin, BaseEstimator):
    """AdaBoost over keypoint-presence features.

    ``fit`` accepts grayscale images (or precomputed ``ImageFeatures``)
    with 0/1 labels; prediction thresholds the alpha-weighted vote at
    the model's theta.
    """

    def __init__(
        self,
        rounds=50,
        filter_sizes=DEFAULT_FILTER_SIZES,
        stride=DEFAULT_STRIDE,
        response_threshold=DEFAULT_RESPONSE_THRESHOLD,
        max_keypoints=None,
    ):
        self.rounds = rounds
        self.filter_sizes = filter_sizes
        self.stride = stride
        self.response_threshold = response_threshold
        self.max_keypoints = max_keypoints

    def fit(self, X, y):
        params = _detector_params(self)
        items = list(X)
        labels = check_labels(y, len(items))
        feats = [_as_features(o, params, i) for i, o in enumerate(items)]
        positives = [f for f, l in zip(feats, labels) if l == 1]
        negatives = [f for f, l in zip(feats, labels) if l == 0]
        matrix = build_distance_matrix(positives, negatives)
        self.result_ = train_adaboost(matrix, rounds=self.rounds)
        self.classifier_ = self.result_.classifier
        self.classes_ = np.array([0, 1], dtype=np.int64)
        return self

    def _scores(self, X) -> np.ndarray:
        check_fitted(self, "classifier_")
        params = _detector_params(self)
        feats = [_as_features(o, params, i) for i, o in enumerate(X)]
        return np.array(
            [strong_score(self.classifier_, f) for f in feats], dtype=np.int64
        )

    def decision_function(self, X) -> np.ndarray:
        """Integer margins: alpha-weighted vote minus theta."""
        return self._scores(X) - self.classifier_.theta

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0).astype(np.int64)


class HoughLocalizer(BaseEstimator):
    """Learn per-weak geometric votes and detect object boxes.

    ``classifier`` is a fitted :class:`KeypointBoostClassifier` or a
    bare :class:`StrongClassifier`; ``fit`` takes positive images with
    their truth boxes, ``predict`` returns per-image detection lists.
    """

    def __init__(
        self,
        classifier=None,
        cell_size=DEFAULT_CELL_SIZE,
        min_mass=DEFAULT_MIN_MASS,
        filter_sizes=DEFAULT_FILTER_SIZES,
        stride=DEFAULT_STRIDE,
        response_threshold=DEFAULT_RESPONSE_THRESHOLD,
        max_keypoints=None,
    ):
        self.classifier = classifier
        self.cell_size = cell_size
        self.min_mass = min_mass
        self.filter_sizes = filter_sizes
        self.stride = stride
        self.response_threshold = response_threshold
        self.max_keypoints = max_keypoints

    def _model(self) -> StrongClassifier:
        c = self.classifier
        if isinstance(c, StrongClassifier):
            return c
        if isinstance(c, KeypointBoostClassifier):
            check_fitted(c, "classifier_")
            return c.classifier_
        raise ContractError(
            "classifier must be a StrongClassifier or fitted "
            "KeypointBoostClassifier"
        )

    def fit(self, X, y):
        model = self._model()
        params = _detector_params(self)
        items = list(X)
        boxes = [check_rect(b) for b in y]
        if len(boxes) != len(items):
            raise ContractError(
                f"{len(items)} images but {len(boxes)} truth boxes"
            )
        pairs = [
            (_as_features(o, params, i), box)
            for i, (o, box) in enumerate(zip(items, boxes))
        ]
        self.votes_ = learn_votes(model, pairs)
        return self

    def predict(self, X):
        check_fitted(self, "votes_")
        model = self._model()
        params = _detector_params(self)
        hough = HoughParams(cell_size=self.cell_size, min_mass=self.min_mass)
        out = []
        for i, item in enumerate(X):
            img = check_image(item)
            feats = _as_features(img, params, i)
            if len(self.votes_) == 0:
                out.append([])
                continue
            out.append(
                hough_detect(
                    model, self.votes_, feats, img.width, img.height, hough
                )
            )
        return out
