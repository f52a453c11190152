"""Hough-style localization: weak classifiers vote for object boxes.

Training positives teach each weak classifier where the object sits
relative to the keypoints it matches: the mean offset to the truth-box
centre and the mean box extent, in units of keypoint scale (FP8).  On a
detection frame every matching keypoint casts its weak classifier's
alpha as vote mass at the predicted centre in a coarse accumulator;
smoothed local maxima above a mass floor become scored detections whose
geometry is the vote-weighted mean over the peak's 3x3 support.
Overlapping boxes (IoU > 0.5) merge greedily, strongest first.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .boosting import StrongClassifier
from .errors import ContractError, FileFormatError
from .fixedpoint import FP20_ONE, rdiv, rdiv_array
from .image import Rect
from .matching import ImageFeatures

logger = logging.getLogger(__name__)

VOTES_MAGIC = "KPVOTES/1"

DEFAULT_CELL_SIZE = 8
DEFAULT_MIN_MASS = 3 * FP20_ONE


@dataclass(frozen=True)
class VoteEntry:
    """Mean geometric vote of one weak classifier, FP8, scale units."""

    weak_index: int
    vx: int
    vy: int
    vw: int
    vh: int
    support: int

    def __post_init__(self):
        if self.weak_index < 0:
            raise ContractError("weak index must be >= 0")
        if self.support < 1:
            raise ContractError("vote entries need support >= 1")
        if self.vw < 0 or self.vh < 0:
            raise ContractError("vote extents must be non-negative")


@dataclass(frozen=True)
class VoteTable:
    entries: tuple

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: e.weak_index))
        seen = set()
        for e in entries:
            if e.weak_index in seen:
                raise ContractError(f"duplicate vote entry for weak {e.weak_index}")
            seen.add(e.weak_index)
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class Detection:
    box: Rect
    score: int


@dataclass(frozen=True)
class HoughParams:
    cell_size: int = DEFAULT_CELL_SIZE
    min_mass: int = DEFAULT_MIN_MASS

    def __post_init__(self):
        if self.cell_size < 1:
            raise ContractError("cell_size must be >= 1")
        if self.min_mass < 1:
            raise ContractError("min_mass must be >= 1")


def _match_mask(model: StrongClassifier, feats: ImageFeatures) -> np.ndarray:
    """(T, n) bools: weak t matches keypoint k (strict SAD test)."""
    n = len(feats)
    t = len(model.weaks)
    if n == 0:
        return np.zeros((t, 0), dtype=bool)
    refs = np.stack([w.descriptor.values for w in model.weaks]).astype(np.int32)
    mat = feats.descriptor_matrix.astype(np.int32)
    sads = np.abs(refs[:, None, :] - mat[None, :, :]).sum(axis=2)
    thresholds = np.array([w.threshold for w in model.weaks], dtype=np.int32)
    return sads < thresholds[:, None]


def learn_votes(model: StrongClassifier, positives) -> VoteTable:
    """Average box votes per weak classifier over training positives.

    ``positives`` yields (ImageFeatures, truth Rect) pairs.  A keypoint
    at (x, y, s) matching weak t contributes ((cx-x)/s, (cy-y)/s, w/s,
    h/s) in FP8, where (cx, cy) is the truth-box centre.  Weak
    classifiers with no matches anywhere are dropped; an entirely empty
    table disables detection and is logged as a warning.
    """
    t_count = len(model.weaks)
    sums = np.zeros((t_count, 4), dtype=np.int64)
    counts = np.zeros(t_count, dtype=np.int64)
    for feats, box in positives:
        if not isinstance(box, Rect):
            raise ContractError("each positive needs a truth Rect")
        if len(feats) == 0:
            continue
        mask = _match_mask(model, feats)
        kx = np.array([kp.x for kp, _ in feats.pairs], dtype=np.int64)
        ky = np.array([kp.y for kp, _ in feats.pairs], dtype=np.int64)
        ks = np.array([kp.scale for kp, _ in feats.pairs], dtype=np.int64)
        # centre offsets in half-pixels avoid losing the w/2 fraction
        vx = rdiv_array((2 * box.x + box.w - 2 * kx) * 65536, 2 * ks)
        vy = rdiv_array((2 * box.y + box.h - 2 * ky) * 65536, 2 * ks)
        vw = rdiv_array(np.full_like(ks, box.w) * 65536, ks)
        vh = rdiv_array(np.full_like(ks, box.h) * 65536, ks)
        samples = np.stack([vx, vy, vw, vh], axis=1)
        for t in range(t_count):
            hit = mask[t]
            if hit.any():
                sums[t] += samples[hit].sum(axis=0)
                counts[t] += int(hit.sum())
    entries = []
    for t in range(t_count):
        if counts[t] >= 1:
            c = int(counts[t])
            entries.append(
                VoteEntry(
                    t,
                    rdiv(int(sums[t, 0]), c),
                    rdiv(int(sums[t, 1]), c),
                    rdiv(int(sums[t, 2]), c),
                    rdiv(int(sums[t, 3]), c),
                    c,
                )
            )
    if not entries:
        logger.warning(
            "no weak classifier matched any training keypoint; "
            "vote table is empty and detection is disabled"
        )
    return VoteTable(tuple(entries))


def _merge_overlapping(detections):
    """Greedy keep-strongest merge of boxes overlapping by IoU > 0.5."""
    ordered = sorted(detections, key=lambda d: (-d.score, d.box.y, d.box.x))
    kept = []
    for cand in ordered:
        drop = False
        for ref in kept:
            inter = _intersection_area(cand.box, ref.box)
            # IoU > 1/2  <=>  3 * I > area_a + area_b
            if 3 * inter > cand.box.w * cand.box.h + ref.box.w * ref.box.h:
                drop = True
                break
        if not drop:
            kept.append(cand)
    return kept


def _intersection_area(a: Rect, b: Rect) -> int:
    w = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    h = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    return w * h if w > 0 and h > 0 else 0


def hough_detect(
    model: StrongClassifier,
    votes: VoteTable,
    frame: ImageFeatures,
    frame_width: int,
    frame_height: int,
    params: HoughParams = HoughParams(),
) -> list:
    """Detect object boxes on one frame from accumulated keypoint votes.

    Votes whose predicted centre falls outside the frame are discarded.
    Peak cells must reach ``params.min_mass`` after 3x3 box smoothing
    and be 8-neighbourhood maxima; plateaus of equal smoothed mass
    resolve to the first cell in row-major order.
    """
    if len(votes) == 0:
        raise ContractError("empty vote table cannot localize")
    if len(frame) == 0:
        return []
    cell = params.cell_size
    nx = (frame_width + cell - 1) // cell
    ny = (frame_height + cell - 1) // cell

    by_index = {e.weak_index: e for e in votes.entries}
    rows = [t for t in range(len(model.weaks)) if t in by_index]
    mask = _match_mask(model, frame)

    kx = np.array([kp.x for kp, _ in frame.pairs], dtype=np.int64)
    ky = np.array([kp.y for kp, _ in frame.pairs], dtype=np.int64)
    ks = np.array([kp.scale for kp, _ in frame.pairs], dtype=np.int64)

    mass = np.zeros((ny, nx), dtype=np.int64)
    wcx = np.zeros((ny, nx), dtype=np.int64)
    wcy = np.zeros((ny, nx), dtype=np.int64)
    wpw = np.zeros((ny, nx), dtype=np.int64)
    wph = np.zeros((ny, nx), dtype=np.int64)

    for t in rows:
        hit = mask[t]
        if not hit.any():
            continue
        e = by_index[t]
        alpha = model.weaks[t].alpha
        cx = kx[hit] * 256 + rdiv_array(ks[hit] * e.vx, 256)
        cy = ky[hit] * 256 + rdiv_array(ks[hit] * e.vy, 256)
        pw = rdiv_array(ks[hit] * e.vw, 256)
        ph = rdiv_array(ks[hit] * e.vh, 256)
        inside = (
            (cx >= 0)
            & (cx < frame_width * 256)
            & (cy >= 0)
            & (cy < frame_height * 256)
        )
        if not inside.any():
            continue
        cx, cy, pw, ph = cx[inside], cy[inside], pw[inside], ph[inside]
        ix = cx // (cell * 256)
        iy = cy // (cell * 256)
        np.add.at(mass, (iy, ix), alpha)
        np.add.at(wcx, (iy, ix), alpha * cx)
        np.add.at(wcy, (iy, ix), alpha * cy)
        np.add.at(wpw, (iy, ix), alpha * pw)
        np.add.at(wph, (iy, ix), alpha * ph)

    pad = np.zeros((ny + 2, nx + 2), dtype=np.int64)
    pad[1:-1, 1:-1] = mass

    def box3(a):
        return (
            a[:-2, :-2] + a[:-2, 1:-1] + a[:-2, 2:]
            + a[1:-1, :-2] + a[1:-1, 1:-1] + a[1:-1, 2:]
            + a[2:, :-2] + a[2:, 1:-1] + a[2:, 2:]
        )

    smooth = box3(pad)  # (ny, nx)
    spad = np.zeros((ny + 2, nx + 2), dtype=np.int64)
    spad[1:-1, 1:-1] = smooth
    centre = spad[1:-1, 1:-1]
    # Maxima with earlier-wins plateau resolution: a cell must strictly
    # beat neighbours that precede it in row-major order and at least tie
    # the ones that follow, so a flat run of equal smoothed mass (e.g.
    # every vote landing in a single cell) yields exactly one peak
    # instead of none.
    is_peak = centre >= params.min_mass
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            if dy == 1 and dx == 1:
                continue
            shifted = spad[dy : dy + ny, dx : dx + nx]
            if (dy, dx) < (1, 1):
                is_peak &= centre > shifted
            else:
                is_peak &= centre >= shifted

    detections = []
    for iy, ix in np.argwhere(is_peak):
        iy, ix = int(iy), int(ix)
        y0, y1 = max(0, iy - 1), min(ny, iy + 2)
        x0, x1 = max(0, ix - 1), min(nx, ix + 2)
        m = int(mass[y0:y1, x0:x1].sum())
        if m <= 0:
            continue
        mx = rdiv(int(wcx[y0:y1, x0:x1].sum()), m)
        my = rdiv(int(wcy[y0:y1, x0:x1].sum()), m)
        mw = rdiv(int(wpw[y0:y1, x0:x1].sum()), m)
        mh = rdiv(int(wph[y0:y1, x0:x1].sum()), m)
        w_px = max(1, rdiv(mw, 256))
        h_px = max(1, rdiv(mh, 256))
        left = rdiv(2 * mx - mw, 512)
        top = rdiv(2 * my - mh, 512)
        detections.append(
            Detection(Rect(left, top, w_px, h_px), int(centre[iy, ix]))
        )
    return _merge_overlapping(detections)


def save_votes(votes: VoteTable, path) -> None:
    lines = [VOTES_MAGIC]
    for e in votes.entries:
        lines.append(f"V {e.weak_index} {e.vx} {e.vy} {e.vw} {e.vh} {e.support}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_votes(path) -> VoteTable:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    def fail(lineno, message):
        raise FileFormatError(str(path), f"line {lineno}: {message}")

    if not lines:
        fail(1, "empty votes file")
    if lines[0].split() != [VOTES_MAGIC]:
        fail(1, f"unsupported votes header {lines[0]!r}")
    entries = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            fail(lineno, "blank line")
        if parts[0] != "V" or len(parts) != 7:
            fail(lineno, "malformed vote line")
        try:
            nums = [int(p) for p in parts[1:]]
        except ValueError:
            fail(lineno, "non-integer field")
        try:
            entries.append(VoteEntry(*nums))
        except ContractError as exc:
            fail(lineno, str(exc))
    try:
        return VoteTable(tuple(entries))
    except ContractError as exc:
        fail(len(lines), str(exc))
