"""Feature-selecting discrete AdaBoost over keypoint-presence features.

A weak classifier is a reference descriptor D plus a distance threshold
d: it answers 1 on an image iff the image contains a keypoint whose
descriptor is strictly closer than d to D.  Training sweeps every row of
the distance matrix per round, choosing the (row, midpoint-threshold)
pair of least weighted error, in the classic beta-update form with all
weight algebra in FP32 integers (budget 2**32) so runs are bit-exact
everywhere.

Candidate thresholds are the floored midpoints of successive distinct
finite distances in a row.  Because midpoints of gap-1 pairs collapse
onto the lower value, the sweep counts strictly-smaller entries via
first-occurrence indices instead of assuming midpoints split the sorted
row between positions.
"""

from dataclasses import dataclass

import numpy as np

from .descriptor import SAD_MAX, Descriptor
from .errors import ContractError, FileFormatError, TrainingError
from .fixedpoint import FP32_ONE, ln_ratio_fp20
from .matching import MAX_DISTANCE, DistanceMatrix, ImageFeatures, dist_to_image

MODEL_MAGIC = "KPBOOST/1"

_ERR_SENTINEL = 1 << 62


@dataclass(frozen=True)
class WeakClassifier:
    """Presence test: answers 1 iff some image descriptor is strictly
    within ``threshold`` of ``descriptor``.
    """

    descriptor: Descriptor
    threshold: int
    alpha: int
    source_image: str
    source_x: int
    source_y: int
    source_scale: int

    def __post_init__(self):
        if not 0 <= self.threshold <= SAD_MAX:
            raise ContractError("threshold must lie in [0, 8192]")
        if self.alpha <= 0:
            raise ContractError("alpha must be positive")


@dataclass(frozen=True)
class StrongClassifier:
    weaks: tuple
    theta: int

    def __post_init__(self):
        object.__setattr__(self, "weaks", tuple(self.weaks))
        if not self.weaks:
            raise ContractError("strong classifier needs at least one weak")
        if self.theta != sum(w.alpha for w in self.weaks) // 2:
            raise ContractError("theta must equal half the alpha sum")

    @property
    def alpha_sum(self) -> int:
        return sum(w.alpha for w in self.weaks)


@dataclass(frozen=True)
class TrainResult:
    classifier: StrongClassifier
    train_errors: tuple  # per-round misclassified-image counts
    selections: tuple  # per-round (row index, threshold)


def weak_eval(w: WeakClassifier, feats: ImageFeatures) -> int:
    return 1 if dist_to_image(w.descriptor, feats) < w.threshold else 0


def strong_score(s: StrongClassifier, feats: ImageFeatures) -> int:
    """Alpha-weighted vote in FP20; classify as positive iff >= theta."""
    return sum(w.alpha * weak_eval(w, feats) for w in s.weaks)


def candidate_thresholds(row) -> list:
    """Floored midpoints of successive distinct values of a sorted row."""
    distinct = []
    for v in row:
        if distinct and v < distinct[-1]:
            raise ContractError("row must be sorted ascending")
        if not distinct or v != distinct[-1]:
            distinct.append(int(v))
    return [(a + b) // 2 for a, b in zip(distinct, distinct[1:])]


def best_threshold(row_order, m_row, weights, labels):
    """Least-weighted-error midpoint threshold of one row, O(N).

    Returns (threshold, error); with no usable candidates (fewer than
    two distinct finite distances) returns (0, error of answering 0
    everywhere).  Ties take the smallest threshold.
    """
    order = np.asarray(row_order)
    vs = np.asarray(m_row, dtype=np.int64)[order]
    ws = np.asarray(weights, dtype=np.int64)[order]
    ls = np.asarray(labels, dtype=np.int64)[order]
    t, e, _ = _sweep_rows(vs[None], ws[None], ls[None])
    return int(t[0]), int(e[0])


def _sweep_rows(vs, ws, ls):
    """Vectorised midpoint sweep over pre-sorted rows.

    vs/ws/ls: (Q, N) int64 of row-sorted distances, weights, labels.
    Returns per-row (threshold, error) int64 arrays.
    """
    q, n = vs.shape
    w_pos_total = (ws * ls).sum(axis=1)
    # cumulative misclassification cost of cutting before position m:
    # negatives below the cut plus positives at or above it
    cum_neg = np.zeros((q, n + 1), dtype=np.int64)
    cum_pos = np.zeros((q, n + 1), dtype=np.int64)
    np.cumsum(ws * (1 - ls), axis=1, out=cum_neg[:, 1:])
    np.cumsum(ws * ls, axis=1, out=cum_pos[:, 1:])
    cut_err = cum_neg + (w_pos_total[:, None] - cum_pos)

    idx = np.arange(n, dtype=np.int64)
    is_first = np.ones((q, n), dtype=bool)
    is_first[:, 1:] = vs[:, 1:] != vs[:, :-1]
    first_occ = np.maximum.accumulate(np.where(is_first, idx[None, :], 0), axis=1)

    # boundary between sorted positions m and m+1, both finite
    lo, hi = vs[:, :-1], vs[:, 1:]
    usable = (hi > lo) & (hi < MAX_DISTANCE)
    thr = (lo + hi) >> 1
    cuts = np.where(thr > lo, idx[None, 1:], first_occ[:, :-1])
    errs = np.take_along_axis(cut_err, cuts, axis=1)
    errs = np.where(usable, errs, _ERR_SENTINEL)

    best = np.argmin(errs, axis=1)  # first min = smallest threshold
    rows = np.arange(q)
    best_err = errs[rows, best]
    best_thr = thr[rows, best]
    none = best_err == _ERR_SENTINEL
    best_thr = np.where(none, 0, best_thr)
    best_err = np.where(none, w_pos_total, best_err)
    return best_thr, best_err, ~none


def _renormalize(weights):
    """Scale integer weights to sum exactly FP32_ONE (largest remainder)."""
    total = sum(weights)
    if total <= 0:
        raise TrainingError("weight mass vanished")
    base = [w * FP32_ONE // total for w in weights]
    rems = [w * FP32_ONE - b * total for w, b in zip(weights, base)]
    deficit = FP32_ONE - sum(base)
    order = sorted(range(len(weights)), key=lambda j: (-rems[j], j))
    for j in order[:deficit]:
        base[j] += 1
    return base


def _uniform_weights(n):
    base = [FP32_ONE // n] * n
    for j in range(FP32_ONE % n):
        base[j] += 1
    return base


def train_adaboost(matrix: DistanceMatrix, rounds: int, labels=None) -> TrainResult:
    """Boost ``rounds`` keypoint-presence weak classifiers.

    Per round every row's best midpoint threshold is evaluated against
    the current example weights; the global argmin (ties: smaller row,
    then smaller threshold) becomes the round's weak classifier.  Weights
    of correctly classified images shrink by beta = eps/(1-eps) with eps
    clamped away from 0 and 1/2, then renormalise to the 2**32 budget.
    """
    if rounds < 1:
        raise ContractError("rounds must be >= 1")
    q, n = matrix.shape
    if labels is None:
        labels = [1] * matrix.n_pos + [0] * (n - matrix.n_pos)
    labels = [int(bool(l)) for l in labels]
    if len(labels) != n:
        raise ContractError("one label per matrix column required")
    if len(set(labels)) < 2:
        raise TrainingError("training needs both classes")

    values = matrix.values.astype(np.int64)
    rows_idx = np.arange(q)[:, None]
    vs = values[rows_idx, matrix.row_order]
    ls_sorted_base = np.asarray(labels, dtype=np.int64)[matrix.row_order]
    labels_arr = np.asarray(labels, dtype=np.int64)

    err_lo = FP32_ONE // (4 * n)
    err_hi = FP32_ONE // 2 - err_lo

    weights = _uniform_weights(n)
    weaks = []
    selections = []
    trace = []
    scores = np.zeros(n, dtype=np.int64)
    alpha_sum = 0

    for round_no in range(rounds):
        w_arr = np.asarray(weights, dtype=np.int64)
        ws = w_arr[matrix.row_order]
        thr_by_row, err_by_row, has_candidates = _sweep_rows(vs, ws, ls_sorted_base)
        if round_no == 0 and not bool(has_candidates.any()):
            raise TrainingError("no candidate thresholds in any matrix row")
        i_star = int(np.argmin(err_by_row))
        t_star = int(thr_by_row[i_star])
        err = int(err_by_row[i_star])

        err_c = min(max(err, err_lo), err_hi)
        alpha = ln_ratio_fp20(FP32_ONE - err_c, err_c)
        h = (values[i_star] < t_star).astype(np.int64)
        source_id, kp = matrix.provenance[i_star]
        weaks.append(
            WeakClassifier(
                descriptor=matrix.descriptors[i_star],
                threshold=t_star,
                alpha=alpha,
                source_image=source_id,
                source_x=kp.x,
                source_y=kp.y,
                source_scale=kp.scale,
            )
        )
        selections.append((i_star, t_star))

        beta_num, beta_den = err_c, FP32_ONE - err_c
        miss = h != labels_arr
        weights = [
            w if miss[j] else w * beta_num // beta_den
            for j, w in enumerate(weights)
        ]
        weights = _renormalize(weights)

        scores += alpha * h
        alpha_sum += alpha
        theta = alpha_sum // 2
        decisions = (scores >= theta).astype(np.int64)
        trace.append(int((decisions != labels_arr).sum()))

    strong = StrongClassifier(tuple(weaks), alpha_sum // 2)
    return TrainResult(strong, tuple(trace), tuple(selections))


def save_model(s: StrongClassifier, path) -> None:
    """Write the line-oriented text model format."""
    lines = [f"{MODEL_MAGIC} T={len(s.weaks)} DNORM=4096"]
    for w in s.weaks:
        if any(ch.isspace() for ch in w.source_image) or not w.source_image:
            raise ContractError(
                f"source image id {w.source_image!r} not serializable"
            )
        vals = " ".join(str(int(v)) for v in w.descriptor.values)
        lines.append(
            f"W {w.alpha} {w.threshold} {w.source_image} "
            f"{w.source_x} {w.source_y} {w.source_scale} {vals}"
        )
    lines.append(f"THETA {s.theta}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> StrongClassifier:
    """Parse a model file, validating structure line by line."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    def fail(lineno, message):
        raise FileFormatError(str(path), f"line {lineno}: {message}")

    if not lines:
        fail(1, "empty model file")
    head = lines[0].split()
    if len(head) != 3 or not head[1].startswith("T=") or head[2] != "DNORM=4096":
        if head and head[0] != MODEL_MAGIC:
            fail(1, f"unsupported version {head[0] if head else ''!r}")
        fail(1, "malformed header")
    if head[0] != MODEL_MAGIC:
        fail(1, f"unsupported version {head[0]!r}")
    try:
        t = int(head[1][2:])
    except ValueError:
        fail(1, "malformed round count")

    weaks = []
    theta = None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            fail(lineno, "blank line")
        if parts[0] == "W":
            if theta is not None:
                fail(lineno, "weak classifier after THETA")
            if len(parts) != 7 + 64:
                fail(lineno, f"expected 64 descriptor values, got {len(parts) - 7}")
            try:
                alpha = int(parts[1])
                threshold = int(parts[2])
                src = parts[3]
                kx, ky, kscale = int(parts[4]), int(parts[5]), int(parts[6])
                vals = np.array([int(v) for v in parts[7:]], dtype=np.int64)
            except ValueError:
                fail(lineno, "non-integer field")
            if np.any(np.abs(vals) > 4096):
                fail(lineno, "descriptor value out of range")
            try:
                weaks.append(
                    WeakClassifier(
                        Descriptor(vals.astype(np.int16)), threshold, alpha,
                        src, kx, ky, kscale,
                    )
                )
            except ContractError as exc:
                fail(lineno, str(exc))
        elif parts[0] == "THETA":
            if len(parts) != 2:
                fail(lineno, "malformed THETA line")
            try:
                theta = int(parts[1])
            except ValueError:
                fail(lineno, "non-integer THETA")
        else:
            fail(lineno, f"unknown record {parts[0]!r}")
    if theta is None:
        fail(len(lines), "missing THETA line")
    if len(weaks) != t:
        fail(1, f"header claims {t} weak classifiers, found {len(weaks)}")
    if theta != sum(w.alpha for w in weaks) // 2:
        fail(len(lines), "THETA does not equal half the alpha sum")
    return StrongClassifier(tuple(weaks), theta)
