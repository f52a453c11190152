"""64-element integer keypoint descriptors and their SAD distance.

A keypoint of FP8 scale ``s256`` (true scale s = s256/256) owns a square
window of side W = round(20*s) centred on it.  Gradients are sampled on a
20x20 lattice with Haar box filters of side 2*round(s); each sample's
four quantities (dx, |dx|, dy, |dy|) are distributed bilinearly into the
4x4 sub-region grid in FP8 integer weights, and the 16 * 4 accumulated
values are L1-normalised to the fixed budget 4096 with a deterministic
integer residual repair.

Because the lattice always has 20x20 samples at sub-region coordinates
(i + 0.5)/5, the bilinear weights are a constant 400x16 matrix shared by
all keypoints; only the sample pixel positions depend on scale.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .image import IntegralImage

DESCRIPTOR_SIZE = 64
DESCRIPTOR_L1 = 4096
SAD_MAX = 2 * DESCRIPTOR_L1

_GRID = 20  # lattice samples per axis
_CELLS = 4  # sub-regions per axis


@dataclass(frozen=True)
class Descriptor:
    """Normalised descriptor: 16 sub-regions x (dx, |dx|, dy, |dy|)."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int16)
        if v.shape != (DESCRIPTOR_SIZE,):
            raise ContractError(f"descriptor must have {DESCRIPTOR_SIZE} values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, Descriptor):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    def __hash__(self):
        return hash(self.values.tobytes())

    @property
    def is_zero(self) -> bool:
        return not self.values.any()


def _axis_weights():
    """Per-lattice-index (cell, low weight, high weight) in FP8.

    Sample i sits at sub-region coordinate (2i + 1)/10; cell centres sit
    at 0.5 .. 3.5.  Samples bracketed by a single edge cell deposit all
    256 units into it.
    """
    cells = np.empty(_GRID, dtype=np.int64)
    w_lo = np.empty(_GRID, dtype=np.int64)
    w_hi = np.empty(_GRID, dtype=np.int64)
    for i in range(_GRID):
        off = i - 2  # (u - 0.5) in fifths
        c, m = divmod(off, 5)
        f = (256 * m) // 5
        lo, hi = 256 - f, f
        if c < 0:
            lo, hi = 0, 256
        elif c >= _CELLS - 1 and hi:
            lo, hi = 256, 0
        cells[i] = c
        w_lo[i] = lo
        w_hi[i] = hi
    return cells, w_lo, w_hi


def bilinear_weight_matrix() -> np.ndarray:
    """Constant (400, 16) FP8 weight matrix; every row sums to 256.

    Row s = 20*j + i is the lattice sample at column i, row j; column
    4*r + c is sub-region row r, column c.  The three lower-index cell
    products are floored and the last bracketing cell absorbs the
    rounding residual, so each sample distributes exactly 256 units.
    """
    cu, ulo, uhi = _axis_weights()
    cv, vlo, vhi = _axis_weights()
    out = np.zeros((_GRID * _GRID, _CELLS * _CELLS), dtype=np.int64)
    for j in range(_GRID):
        for i in range(_GRID):
            s = j * _GRID + i
            w00 = (vlo[j] * ulo[i]) >> 8
            w01 = (vlo[j] * uhi[i]) >> 8
            w10 = (vhi[j] * ulo[i]) >> 8
            w11 = 256 - w00 - w01 - w10
            for w, r, c in (
                (w00, cv[j], cu[i]),
                (w01, cv[j], cu[i] + 1),
                (w10, cv[j] + 1, cu[i]),
                (w11, cv[j] + 1, cu[i] + 1),
            ):
                if w:
                    out[s, r * _CELLS + c] += w
    return out


_WEIGHTS = bilinear_weight_matrix()


def haar_gradient(ii: IntegralImage, cx: int, cy: int, size: int):
    """Horizontal/vertical Haar responses of an even ``size`` box.

    The support covers pixels [c - size/2, c + size/2 - 1] on each axis;
    dx = right half - left half, dy = bottom half - top half.
    """
    if size < 2 or size % 2:
        raise ContractError("haar size must be even and >= 2")
    h = size // 2
    x0, y0 = cx - h, cy - h
    if x0 < 0 or y0 < 0 or cx + h > ii.width or cy + h > ii.height:
        raise ContractError("haar support out of bounds")
    p = ii.padded

    def s(xa, ya, xb, yb):  # pixel box [xa, xb) x [ya, yb)
        return int(p[yb, xb] - p[ya, xb] - p[yb, xa] + p[ya, xa])

    dx = s(cx, y0, cx + h, y0 + size) - s(x0, y0, cx, y0 + size)
    dy = s(x0, cy, x0 + size, cy + h) - s(x0, y0, x0 + size, cy)
    return dx, dy


def _window_geometry(scale: int):
    w = (20 * scale + 128) // 256
    haar = 2 * max(1, (scale + 128) // 256)
    pad = (2 * scale + 128) // 256
    return w, haar, pad


def compute_descriptor(ii: IntegralImage, kp) -> Descriptor | None:
    """Descriptor of ``kp``, or None when its window leaves the image.

    The window of side round(20*scale/256), padded on every side by
    round(2*scale/256) for the Haar supports, must fit entirely in the
    image; border keypoints are skipped rather than clipped.
    """
    if kp.scale < 256:
        raise ContractError("keypoint scale must be >= 256 (FP8)")
    win, haar, pad = _window_geometry(kp.scale)
    x0 = kp.x - win // 2
    y0 = kp.y - win // 2
    if x0 - pad < 0 or y0 - pad < 0:
        return None
    if x0 + win - 1 + pad > ii.width - 1 or y0 + win - 1 + pad > ii.height - 1:
        return None

    offs = (win * (2 * np.arange(_GRID, dtype=np.int64) + 1)) // 40
    xs = x0 + offs
    ys = y0 + offs
    h = haar // 2
    p = ii.padded

    def s(xa, ya, xb, yb):
        # pixel boxes [xa, xb) x [ya, yb) for 1-D coordinate arrays
        return (
            p[np.ix_(yb, xb)] - p[np.ix_(ya, xb)] - p[np.ix_(yb, xa)] + p[np.ix_(ya, xa)]
        )

    dx = s(xs, ys - h, xs + h, ys + h) - s(xs - h, ys - h, xs, ys + h)
    dy = s(xs - h, ys, xs + h, ys + h) - s(xs - h, ys - h, xs + h, ys)
    quads = np.stack(
        [dx.ravel(), np.abs(dx).ravel(), dy.ravel(), np.abs(dy).ravel()], axis=1
    )
    raw = (_WEIGHTS.T @ quads).reshape(DESCRIPTOR_SIZE)
    return Descriptor(_normalize(raw))


def _normalize(raw: np.ndarray) -> np.ndarray:
    """Scale to L1 = 4096 exactly: truncate toward zero, then add one
    unit at a time to the largest-magnitude elements (ties by index).
    """
    mags = np.abs(raw)
    l1 = int(mags.sum())
    if l1 == 0:
        return np.zeros(DESCRIPTOR_SIZE, dtype=np.int16)
    signs = np.where(raw < 0, -1, 1).astype(np.int64)
    scaled = signs * ((mags * DESCRIPTOR_L1) // l1)
    resid = DESCRIPTOR_L1 - int(np.abs(scaled).sum())
    if resid:
        order = np.lexsort((np.arange(DESCRIPTOR_SIZE), -np.abs(scaled)))
        order = order[mags[order] > 0]
        scaled[order[:resid]] += signs[order[:resid]]
    return scaled.astype(np.int16)


def sad(a: Descriptor, b: Descriptor) -> int:
    """Sum of absolute element differences; at most 8192 when both
    operands are normalised (or zero) descriptors.
    """
    return int(
        np.abs(a.values.astype(np.int32) - b.values.astype(np.int32)).sum()
    )
