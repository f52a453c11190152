"""Synthetic corpus generation, dataset splitting, and disk layout.

The synthetic object is a light rectangular plate carrying a dark
horizontal bar and two dark circular dimples ("wheels").  The dimple
profile and vertical placement are calibrated so that on a 100x40 image
each dimple yields a detector keypoint whose interpolated scale keeps
the full descriptor window inside the frame: only keypoints near
y = 20 with scale below roughly 1.7 survive the border check there, so
the template row is fixed and the horizontal position randomized on the
detector's stride lattice.  Backgrounds are smooth integer value noise:
a coarse random lattice bilinearly upsampled with exact integer
arithmetic, so every image is reproducible bit-for-bit from the seed.

Disk layout: ``DIR/pos/*.pgm`` and ``DIR/neg/*.pgm``, ingested in
lexicographic order; optional ``DIR/truth.csv`` records implanted
object boxes for localization training and scoring.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FileFormatError
from .image import GrayImage, Rect, load_pgm, write_pgm
from .rng import SplitMix64

IMAGE_W, IMAGE_H = 100, 40
FRAME_W, FRAME_H = 160, 120

NOISE_CELL = 10
NOISE_LO, NOISE_HI = 120, 190

TEMPLATE_W, TEMPLATE_H = 48, 30
TEMPLATE_Y = 4
PLATE_VALUE = 168
BAR_VALUE = 100
BAR_BOX = (2, 2, 46, 5)
DISC_CENTRES = ((14, 16), (34, 16))

# Bell-shaped 11x11 darkening profile of one 9-px "wheel" dimple.  The
# width is tuned so the blob's scale interpolates low enough for its
# descriptor window to fit a 40-px-tall image (see module docstring).
DISC_PROFILE = np.array(
    (
        (0, 0, 0, 0, 0, 11, 0, 0, 0, 0, 0),
        (0, 0, 11, 18, 23, 26, 23, 18, 11, 0, 0),
        (0, 11, 21, 34, 46, 50, 46, 34, 21, 11, 0),
        (0, 18, 34, 56, 74, 82, 74, 56, 34, 18, 0),
        (0, 23, 46, 74, 99, 109, 99, 74, 46, 23, 0),
        (11, 26, 50, 82, 109, 120, 109, 82, 50, 26, 11),
        (0, 23, 46, 74, 99, 109, 99, 74, 46, 23, 0),
        (0, 18, 34, 56, 74, 82, 74, 56, 34, 18, 0),
        (0, 11, 21, 34, 46, 50, 46, 34, 21, 11, 0),
        (0, 0, 11, 18, 23, 26, 23, 18, 11, 0, 0),
        (0, 0, 0, 0, 0, 11, 0, 0, 0, 0, 0),
    ),
    dtype=np.int64,
)

TRUTH_FILE = "truth.csv"


@dataclass(frozen=True)
class Corpus:
    """Labelled image collection: (path, image) pairs per class."""

    positives: tuple
    negatives: tuple
    seed: int = 0

    def __post_init__(self):
        for name in ("positives", "negatives"):
            pairs = tuple(getattr(self, name))
            for p in pairs:
                if len(p) != 2 or not isinstance(p[1], GrayImage):
                    raise ContractError(f"{name} must be (path, GrayImage) pairs")
            object.__setattr__(self, name, pairs)

    @property
    def n_pos(self) -> int:
        return len(self.positives)

    @property
    def n_neg(self) -> int:
        return len(self.negatives)


def split_corpus(corpus: Corpus, n_pos_train: int, n_neg_train: int, seed: int):
    """Shuffle each class with the seeded generator; first n go to train.

    Returns ``(train, test)`` :class:`Corpus` partitions.  The same seed
    always reproduces the same partition.
    """
    if n_pos_train < 0 or n_neg_train < 0:
        raise ContractError("training counts must be >= 0")
    if n_pos_train > corpus.n_pos:
        raise ContractError(
            f"requested {n_pos_train} positive training images "
            f"but corpus has {corpus.n_pos}"
        )
    if n_neg_train > corpus.n_neg:
        raise ContractError(
            f"requested {n_neg_train} negative training images "
            f"but corpus has {corpus.n_neg}"
        )
    rng = SplitMix64(seed)
    pos = list(corpus.positives)
    neg = list(corpus.negatives)
    rng.shuffle(pos)
    rng.shuffle(neg)
    train = Corpus(tuple(pos[:n_pos_train]), tuple(neg[:n_neg_train]), seed)
    test = Corpus(tuple(pos[n_pos_train:]), tuple(neg[n_neg_train:]), seed)
    return train, test


def _value_noise(rng: SplitMix64, width: int, height: int) -> np.ndarray:
    """Smooth random background: integer bilinear upsample of a lattice."""
    c = NOISE_CELL
    rows = (height - 1) // c + 2
    cols = (width - 1) // c + 2
    span = NOISE_HI - NOISE_LO + 1
    nodes = np.array(
        [[NOISE_LO + rng.below(span) for _ in range(cols)] for _ in range(rows)],
        dtype=np.int64,
    )
    ys = np.arange(height)
    xs = np.arange(width)
    cy, fy = ys // c, ys % c
    cx, fx = xs // c, xs % c
    n00 = nodes[np.ix_(cy, cx)]
    n01 = nodes[np.ix_(cy, cx + 1)]
    n10 = nodes[np.ix_(cy + 1, cx)]
    n11 = nodes[np.ix_(cy + 1, cx + 1)]
    wx1 = fx[None, :]
    wx0 = c - wx1
    wy1 = fy[:, None]
    wy0 = c - wy1
    return ((n00 * wx0 + n01 * wx1) * wy0 + (n10 * wx0 + n11 * wx1) * wy1) // (c * c)


def _implant_template(canvas: np.ndarray, tx: int, ty: int) -> None:
    canvas[ty : ty + TEMPLATE_H, tx : tx + TEMPLATE_W] = PLATE_VALUE
    bx0, by0, bx1, by1 = BAR_BOX
    canvas[ty + by0 : ty + by1, tx + bx0 : tx + bx1] = BAR_VALUE
    for dcx, dcy in DISC_CENTRES:
        y0, x0 = ty + dcy - 5, tx + dcx - 5
        canvas[y0 : y0 + 11, x0 : x0 + 11] -= DISC_PROFILE
    np.clip(canvas, 0, 255, out=canvas)


def template_rect(tx: int, ty: int) -> Rect:
    return Rect(tx, ty, TEMPLATE_W, TEMPLATE_H)


def generate_labeled(n_pos: int, n_neg: int, seed: int):
    """Like :func:`generate_synthetic` but also returns the truth boxes.

    Returns ``(corpus, truths)`` where ``truths[i]`` is the implanted
    template's :class:`Rect` in ``corpus.positives[i]``.
    """
    if n_pos < 0 or n_neg < 0:
        raise ContractError("image counts must be >= 0")
    if n_pos + n_neg < 1:
        raise ContractError("corpus must contain at least one image")
    rng = SplitMix64(seed)
    positives = []
    truths = []
    for i in range(n_pos):
        canvas = _value_noise(rng, IMAGE_W, IMAGE_H)
        tx = 6 + 2 * rng.below(21)
        _implant_template(canvas, tx, TEMPLATE_Y)
        path = f"pos/{i:04d}.pgm"
        positives.append((path, GrayImage(canvas, path=path)))
        truths.append(template_rect(tx, TEMPLATE_Y))
    negatives = []
    for i in range(n_neg):
        canvas = _value_noise(rng, IMAGE_W, IMAGE_H)
        path = f"neg/{i:04d}.pgm"
        negatives.append((path, GrayImage(canvas, path=path)))
    return Corpus(tuple(positives), tuple(negatives), seed), tuple(truths)


def generate_synthetic(n_pos: int, n_neg: int, seed: int) -> Corpus:
    """Deterministic 100x40 corpus: noise negatives, implanted positives."""
    corpus, _ = generate_labeled(n_pos, n_neg, seed)
    return corpus


def generate_frames(n_frames: int, seed: int, with_object: bool):
    """Deterministic 160x120 localization frames.

    Returns a list of ``(path, GrayImage, Rect-or-None)`` triples; the
    rect is the implanted object box, present iff ``with_object``.
    """
    if n_frames < 1:
        raise ContractError("frame count must be >= 1")
    rng = SplitMix64(seed)
    frames = []
    for i in range(n_frames):
        canvas = _value_noise(rng, FRAME_W, FRAME_H)
        truth = None
        if with_object:
            tx = 6 + 2 * rng.below(51)
            ty = 4 + 2 * rng.below(41)
            _implant_template(canvas, tx, ty)
            truth = template_rect(tx, ty)
        path = f"frame/{i:04d}.pgm"
        frames.append((path, GrayImage(canvas, path=path), truth))
    return frames


def write_corpus(corpus: Corpus, out_dir, truths=None) -> None:
    """Write ``out_dir/pos``, ``out_dir/neg`` PGMs and optional truth CSV."""
    for sub, pairs in (("pos", corpus.positives), ("neg", corpus.negatives)):
        d = os.path.join(out_dir, sub)
        os.makedirs(d, exist_ok=True)
        for path, img in pairs:
            write_pgm(img, os.path.join(d, os.path.basename(path)))
    if truths is not None:
        if len(truths) != corpus.n_pos:
            raise ContractError(
                f"{len(truths)} truth boxes for {corpus.n_pos} positives"
            )
        with open(os.path.join(out_dir, TRUTH_FILE), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("path", "x", "y", "w", "h"))
            for (path, _), r in zip(corpus.positives, truths):
                w.writerow((os.path.basename(path), r.x, r.y, r.w, r.h))


def load_corpus(root, seed: int = 0) -> Corpus:
    """Read ``root/pos/*.pgm`` and ``root/neg/*.pgm`` lexicographically."""
    classes = []
    for sub in ("pos", "neg"):
        d = os.path.join(root, sub)
        if not os.path.isdir(d):
            raise FileNotFoundError(f"missing corpus directory: {d}")
        pairs = []
        for name in sorted(os.listdir(d)):
            if not name.endswith(".pgm"):
                continue
            full = os.path.join(d, name)
            pairs.append((full, load_pgm(full)))
        classes.append(tuple(pairs))
    return Corpus(classes[0], classes[1], seed)


def load_truth_csv(path):
    """Read a truth CSV back into an ``{image filename: Rect}`` mapping."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["path", "x", "y", "w", "h"]:
            raise FileFormatError(path, "bad truth header")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 5:
                raise FileFormatError(path, f"line {lineno}: expected 5 fields")
            try:
                x, y, w, h = (int(v) for v in row[1:])
            except ValueError as exc:
                raise FileFormatError(
                    path, f"line {lineno}: non-integer box field"
                ) from exc
            if row[0] in out:
                raise FileFormatError(path, f"line {lineno}: duplicate {row[0]}")
            out[row[0]] = Rect(x, y, w, h)
    return out
