"""Keypoint-to-image distances and the Q x N training distance matrix.

Each row of the matrix is one keypoint harvested from a positive image;
each column is one training image (positives first, then negatives).  An
entry is the smallest SAD between the row's descriptor and any
descriptor of the column's image, so every row has a zero in the column
of the image it came from.  Images with no descriptors get the MAX
sentinel, which no finite threshold can undercut.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .descriptor import Descriptor, compute_descriptor
from .detector import DetectorParams, Keypoint, detect_keypoints
from .errors import ContractError, TrainingError
from .image import GrayImage, IntegralImage, integral

MAX_DISTANCE = 2**31 - 1

_CHUNK_ROWS = 1024


@dataclass(frozen=True)
class ImageFeatures:
    """All usable keypoints of one image with their descriptors."""

    image_id: str
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        for kp, d in self.pairs:
            if not isinstance(kp, Keypoint) or not isinstance(d, Descriptor):
                raise ContractError("pairs must contain (Keypoint, Descriptor)")

    def __len__(self):
        return len(self.pairs)

    @cached_property
    def descriptor_matrix(self) -> np.ndarray:
        """(n, 64) int16 stack of all descriptors; (0, 64) when empty."""
        if not self.pairs:
            return np.zeros((0, 64), dtype=np.int16)
        return np.stack([d.values for _, d in self.pairs]).astype(np.int16)


@dataclass(frozen=True)
class DistanceMatrix:
    """Q x N distances, per-row ascending column order, and provenance.

    ``values[i, j]`` is dist_to_image(row i's descriptor, image j);
    ``row_order[i]`` is a stable ascending argsort of row i;
    ``provenance[i]`` is (source image id, source Keypoint);
    columns [0, n_pos) are the positive images.
    """

    values: np.ndarray = field(repr=False)
    row_order: np.ndarray = field(repr=False)
    provenance: tuple
    descriptors: tuple
    n_pos: int

    @property
    def shape(self):
        return self.values.shape


def extract_features(
    img: GrayImage,
    params: DetectorParams = DetectorParams(),
    image_id: str = "",
) -> ImageFeatures:
    """Detect keypoints and compute descriptors, skipping border ones."""
    ii = integral(img)
    pairs = []
    for kp in detect_keypoints(ii, params):
        d = compute_descriptor(ii, kp)
        if d is not None:
            pairs.append((kp, d))
    return ImageFeatures(image_id, tuple(pairs))


def dist_to_image(d: Descriptor, feats: ImageFeatures) -> int:
    """Smallest SAD from ``d`` to any descriptor of the image; MAX
    sentinel when the image has none.
    """
    m = feats.descriptor_matrix
    if m.shape[0] == 0:
        return MAX_DISTANCE
    diffs = np.abs(m.astype(np.int32) - d.values.astype(np.int32)).sum(axis=1)
    return int(diffs.min())


def _min_sad_per_row(rows: np.ndarray, m: np.ndarray) -> np.ndarray:
    """For each of Q row descriptors, min SAD against image stack m."""
    q = rows.shape[0]
    out = np.empty(q, dtype=np.int32)
    if m.shape[0] == 0:
        out[:] = MAX_DISTANCE
        return out
    m32 = m.astype(np.int32)
    for start in range(0, q, _CHUNK_ROWS):
        chunk = rows[start : start + _CHUNK_ROWS].astype(np.int32)
        d = np.abs(chunk[:, None, :] - m32[None, :, :]).sum(axis=2)
        out[start : start + _CHUNK_ROWS] = d.min(axis=1)
    return out


def build_distance_matrix(positives, negatives) -> DistanceMatrix:
    """Assemble the Q x N matrix from per-image features.

    Rows are the concatenated keypoints of the positive images in the
    given order; raises TrainingError when no positive keypoints exist.
    """
    positives = list(positives)
    negatives = list(negatives)
    provenance = []
    descriptors = []
    for feats in positives:
        for kp, d in feats.pairs:
            provenance.append((feats.image_id, kp))
            descriptors.append(d)
    if not descriptors:
        raise TrainingError("no keypoints in any positive image")
    rows = np.stack([d.values for d in descriptors]).astype(np.int16)
    columns = [
        _min_sad_per_row(rows, feats.descriptor_matrix)
        for feats in positives + negatives
    ]
    values = np.stack(columns, axis=1)
    row_order = np.argsort(values, axis=1, kind="stable").astype(np.int32)
    return DistanceMatrix(
        values=values,
        row_order=row_order,
        provenance=tuple(provenance),
        descriptors=tuple(descriptors),
        n_pos=len(positives),
    )
