"""Estimator-layer tests: scikit-learn protocol compliance (get_params,
clone, pipeline), fit/predict behaviour, and validation errors.
"""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import Pipeline

from kpboost.corpus import generate_frames, generate_labeled
from kpboost.errors import ContractError
from kpboost.estimators import (
    HoughLocalizer,
    KeypointBoostClassifier,
    KeypointExtractor,
)
from kpboost.matching import ImageFeatures
from kpboost.validation import check_image, check_labels, check_rect


@pytest.fixture(scope="module")
def small_dataset():
    corpus, truths = generate_labeled(14, 14, seed=606)
    images = [img for _, img in corpus.positives + corpus.negatives]
    labels = np.array([1] * 14 + [0] * 14)
    return images, labels, truths


@pytest.fixture(scope="module")
def fitted_clf(small_dataset):
    images, labels, _ = small_dataset
    clf = KeypointBoostClassifier(rounds=4)
    clf.fit(images, labels)
    return clf


class TestSklearnProtocol:
    def test_get_set_params_round_trip(self):
        ext = KeypointExtractor(stride=1, response_threshold=123)
        params = ext.get_params()
        assert params["stride"] == 1
        assert params["response_threshold"] == 123
        ext2 = KeypointExtractor().set_params(**params)
        assert ext2.get_params() == params

    def test_clone_preserves_params(self):
        clf = KeypointBoostClassifier(rounds=7, stride=1)
        c = clone(clf)
        assert c.rounds == 7 and c.stride == 1

    def test_clone_drops_fitted_state(self, fitted_clf):
        c = clone(fitted_clf)
        assert not hasattr(c, "classifier_")

    def test_pipeline_extract_then_classify(self, small_dataset):
        images, labels, _ = small_dataset
        pipe = Pipeline(
            [
                ("keypoints", KeypointExtractor()),
                ("boost", KeypointBoostClassifier(rounds=3)),
            ]
        )
        pipe.fit(images, labels)
        preds = pipe.predict(images)
        assert set(np.unique(preds)) <= {0, 1}


class TestKeypointExtractor:
    def test_transform_returns_features(self, small_dataset):
        images, _, _ = small_dataset
        feats = KeypointExtractor().fit(images).transform(images[:3])
        assert len(feats) == 3
        assert all(isinstance(f, ImageFeatures) for f in feats)
        assert any(len(f) > 0 for f in feats)

    def test_accepts_raw_arrays(self):
        arr = np.full((40, 100), 140, dtype=np.uint8)
        feats = KeypointExtractor().fit([arr]).transform([arr])
        assert len(feats[0]) == 0

    def test_invalid_params_rejected_at_fit(self):
        with pytest.raises(ContractError):
            KeypointExtractor(filter_sizes=(8, 15)).fit([])


class TestKeypointBoostClassifier:
    def test_separates_training_classes(self, small_dataset, fitted_clf):
        images, labels, _ = small_dataset
        accuracy = fitted_clf.score(images, labels)
        assert accuracy >= 0.9

    def test_decision_function_margin_sign(self, small_dataset, fitted_clf):
        images, labels, _ = small_dataset
        margins = fitted_clf.decision_function(images)
        preds = fitted_clf.predict(images)
        assert np.array_equal(preds, (margins >= 0).astype(np.int64))

    def test_accepts_precomputed_features(self, small_dataset):
        images, labels, _ = small_dataset
        feats = KeypointExtractor().fit(images).transform(images)
        clf = KeypointBoostClassifier(rounds=2).fit(feats, labels)
        assert len(clf.classifier_.weaks) == 2

    def test_label_validation(self, small_dataset):
        images, _, _ = small_dataset
        with pytest.raises(ContractError, match="labels"):
            KeypointBoostClassifier(rounds=1).fit(images, [2] * len(images))
        with pytest.raises(ContractError, match="expected"):
            KeypointBoostClassifier(rounds=1).fit(images, [1, 0])

    def test_predict_before_fit_rejected(self, small_dataset):
        images, _, _ = small_dataset
        with pytest.raises(ContractError, match="fitted"):
            KeypointBoostClassifier().predict(images[:1])


class TestHoughLocalizer:
    def test_fit_predict_finds_object(self, small_dataset, fitted_clf):
        images, labels, truths = small_dataset
        positives = images[:14]
        loc = HoughLocalizer(classifier=fitted_clf)
        loc.fit(positives, truths)
        assert len(loc.votes_) > 0
        frames = generate_frames(3, seed=11, with_object=True)
        dets = loc.predict([img for _, img, _ in frames])
        assert len(dets) == 3
        assert any(len(d) > 0 for d in dets)

    def test_accepts_tuple_boxes(self, small_dataset, fitted_clf):
        images, _, truths = small_dataset
        boxes = [(r.x, r.y, r.w, r.h) for r in truths]
        loc = HoughLocalizer(classifier=fitted_clf).fit(images[:14], boxes)
        assert len(loc.votes_) > 0

    def test_requires_fitted_classifier(self, small_dataset):
        images, _, truths = small_dataset
        loc = HoughLocalizer(classifier=KeypointBoostClassifier())
        with pytest.raises(ContractError, match="fitted"):
            loc.fit(images[:14], truths)

    def test_box_count_mismatch(self, small_dataset, fitted_clf):
        images, _, truths = small_dataset
        loc = HoughLocalizer(classifier=fitted_clf)
        with pytest.raises(ContractError, match="truth boxes"):
            loc.fit(images[:3], truths[:2])


class TestValidationHelpers:
    def test_check_image_passthrough_and_coerce(self, small_dataset):
        images, _, _ = small_dataset
        assert check_image(images[0]) is images[0]
        arr = np.zeros((4, 6), dtype=np.uint8)
        img = check_image(arr)
        assert img.pixels.shape == (4, 6)

    def test_check_labels_floats_that_are_integral(self):
        out = check_labels(np.array([0.0, 1.0]), 2)
        assert out.dtype == np.int64

    def test_check_rect_coercion(self):
        r = check_rect([1, 2, 3, 4])
        assert (r.x, r.y, r.w, r.h) == (1, 2, 3, 4)
        with pytest.raises(ContractError):
            check_rect((1, 2, 3))
