"""Evaluation harness: precision-recall sweeps, per-round error curves,
and their integer-only CSV serialization.

Scores and vote thresholds are FP20 fixed-point integers throughout, so
every CSV field is a plain integer and identical runs produce identical
bytes.  Fixed-point columns carry a ``_fp20`` suffix in the header.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .boosting import StrongClassifier, TrainResult, strong_score
from .corpus import Corpus
from .detector import DetectorParams
from .errors import ContractError, FileFormatError
from .fixedpoint import FP20_ONE, rdiv
from .matching import dist_to_image, extract_features

PR_HEADER = ("theta_fp20", "precision_fp20", "recall_fp20", "tp", "fp", "fn")
ERROR_HEADER = ("round", "train_error", "test_error")


@dataclass(frozen=True)
class PRRow:
    theta: int
    precision_fp20: int
    recall_fp20: int
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class PRCurve:
    """Precision-recall sweep rows, theta strictly descending.

    The first row sits above every achievable score (recall 0, precision
    1 by convention) and the last at theta 0, below or at every score,
    so the endpoints of the sweep are always covered.
    """

    rows: tuple

    def __post_init__(self):
        rows = tuple(self.rows)
        if not rows:
            raise ContractError("a PR curve needs at least one row")
        n_pos = rows[0].tp + rows[0].fn
        prev_theta = None
        prev_recall = None
        for r in rows:
            if prev_theta is not None and r.theta >= prev_theta:
                raise ContractError("curve thetas must be strictly descending")
            if r.tp + r.fn != n_pos:
                raise ContractError("tp + fn must equal the positive count")
            if prev_recall is not None and r.recall_fp20 < prev_recall:
                raise ContractError("recall must not decrease as theta falls")
            prev_theta, prev_recall = r.theta, r.recall_fp20
        object.__setattr__(self, "rows", rows)

    @property
    def n_pos(self) -> int:
        return self.rows[0].tp + self.rows[0].fn


def pr_from_scores(pos_scores, neg_scores) -> PRCurve:
    """Sweep every distinct achievable theta over given FP20 scores.

    An image is declared positive iff its score >= theta.  Scores are
    non-negative, so theta 0 plays the role of the low endpoint; the
    high endpoint is one above the maximum score.
    """
    pos = np.asarray(list(pos_scores), dtype=np.int64)
    neg = np.asarray(list(neg_scores), dtype=np.int64)
    if pos.size == 0:
        raise ContractError("PR evaluation needs at least one positive")
    if (pos < 0).any() or (neg < 0).any():
        raise ContractError("scores must be non-negative")
    top = int(max(pos.max(), neg.max() if neg.size else 0)) + 1
    thetas = {top, 0}
    thetas.update(int(v) for v in pos)
    thetas.update(int(v) for v in neg)
    rows = []
    for theta in sorted(thetas, reverse=True):
        tp = int((pos >= theta).sum())
        fp = int((neg >= theta).sum())
        fn = pos.size - tp
        precision = FP20_ONE if tp + fp == 0 else rdiv(tp * FP20_ONE, tp + fp)
        recall = rdiv(tp * FP20_ONE, pos.size)
        rows.append(PRRow(theta, precision, recall, tp, fp, fn))
    return PRCurve(tuple(rows))


def _corpus_scores(model: StrongClassifier, corpus: Corpus, params: DetectorParams):
    pos = [
        strong_score(model, extract_features(img, params, image_id=path))
        for path, img in corpus.positives
    ]
    neg = [
        strong_score(model, extract_features(img, params, image_id=path))
        for path, img in corpus.negatives
    ]
    return pos, neg


def eval_pr(
    model: StrongClassifier,
    corpus: Corpus,
    params: DetectorParams = DetectorParams(),
) -> PRCurve:
    """Score every test image once and sweep theta over distinct scores."""
    pos, neg = _corpus_scores(model, corpus, params)
    return pr_from_scores(pos, neg)


def prefix_error_counts(
    model: StrongClassifier,
    corpus: Corpus,
    params: DetectorParams = DetectorParams(),
):
    """Misclassified-image count of every weak-classifier prefix.

    Entry k-1 evaluates the first k weaks at that prefix's own default
    theta (half its alpha sum); on the training corpus this reproduces
    the recorded training trace.
    """
    weaks = model.weaks
    feats = [
        extract_features(img, params, image_id=path)
        for path, img in corpus.positives + corpus.negatives
    ]
    labels = np.array([1] * corpus.n_pos + [0] * corpus.n_neg, dtype=np.int64)
    fires = np.array(
        [[dist_to_image(w.descriptor, f) < w.threshold for w in weaks] for f in feats],
        dtype=np.int64,
    ).reshape(len(feats), len(weaks))
    alphas = np.array([w.alpha for w in weaks], dtype=np.int64)
    scores = np.cumsum(fires * alphas[None, :], axis=1)
    thetas = np.cumsum(alphas) // 2
    return tuple(
        int(((scores[:, k] >= thetas[k]) != (labels == 1)).sum())
        for k in range(len(weaks))
    )


def error_curve(
    result: TrainResult,
    test_corpus: Corpus,
    params: DetectorParams = DetectorParams(),
):
    """Per-round (round, train_error, test_error) misclassification counts.

    Round k uses the first k selected weak classifiers with that
    prefix's own default theta (half its alpha sum), matching the
    training trace; errors are image counts, not rates.
    """
    weaks = result.classifier.weaks
    if len(result.train_errors) != len(weaks):
        raise ContractError("training trace length must match round count")
    test_errors = prefix_error_counts(result.classifier, test_corpus, params)
    return tuple(
        (k + 1, result.train_errors[k], test_errors[k])
        for k in range(len(weaks))
    )


def write_pr_csv(curve: PRCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PR_HEADER)
        for r in curve.rows:
            w.writerow(
                (r.theta, r.precision_fp20, r.recall_fp20, r.tp, r.fp, r.fn)
            )


def read_pr_csv(path) -> PRCurve:
    rows = []
    for lineno, fields in _read_int_csv(path, PR_HEADER):
        rows.append(PRRow(*fields))
    return PRCurve(tuple(rows))


def write_error_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ERROR_HEADER)
        for r in rows:
            if len(r) != 3:
                raise ContractError("error-curve rows have 3 fields")
            w.writerow(r)


def read_error_csv(path):
    return tuple(tuple(fields) for _, fields in _read_int_csv(path, ERROR_HEADER))


def _read_int_csv(path, header):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first != list(header):
            raise FileFormatError(path, f"expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FileFormatError(
                    path, f"line {lineno}: expected {len(header)} fields"
                )
            try:
                yield lineno, tuple(int(v) for v in row)
            except ValueError as exc:
                raise FileFormatError(
                    path, f"line {lineno}: non-integer field"
                ) from exc
