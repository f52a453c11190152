"""Blob keypoint detection: determinant-of-Hessian box filters over a
discrete scale ladder, 3x3x3 non-maximum suppression, fixed-point scale
interpolation, and suppression of imbricated (concentric) blobs.

All arithmetic is integer, so identical inputs give bit-identical
keypoints on every platform.  Filter layouts follow the classic 9x9
second-derivative box approximations, scaled to side L (L odd, divisible
by 3, so the three lobes tile evenly):

* Dxx: three vertical bands, width L/3, height 2L/3 - 1, weights +1 -2 +1
* Dyy: transpose of Dxx
* Dxy: four (L/3)^2 squares one pixel off the centre lines, weights
  +1 (top-left, bottom-right) and -1 (top-right, bottom-left)

Each response is area-normalised to the 9x9 reference in FP8 before the
determinant is formed, so responses are comparable across scales.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .fixedpoint import rdiv_array
from .image import IntegralImage

DEFAULT_FILTER_SIZES = (9, 15, 21, 27, 33, 39)
DEFAULT_STRIDE = 2
# calibrated so a 100x40 corpus image yields roughly 10-40 keypoints
DEFAULT_RESPONSE_THRESHOLD = 1_000_000_000

# determinant cross-term weight, approx 0.9 in FP8
DOH_WEIGHT_FP8 = 230

_INVALID = np.iinfo(np.int64).min


@dataclass(frozen=True)
class Keypoint:
    """Blob centre with FP8 scale (integer = true scale x 256)."""

    x: int
    y: int
    scale: int
    response: int


@dataclass(frozen=True)
class DetectorParams:
    filter_sizes: tuple = DEFAULT_FILTER_SIZES
    stride: int = DEFAULT_STRIDE
    response_threshold: int = DEFAULT_RESPONSE_THRESHOLD
    max_keypoints: int | None = None

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.filter_sizes)
        object.__setattr__(self, "filter_sizes", sizes)
        if not sizes:
            raise ContractError("filter_sizes must be non-empty")
        for s in sizes:
            _check_filter_size(s)
        if any(b >= a for a, b in zip(sizes[1:], sizes)):
            raise ContractError("filter_sizes must be strictly increasing")
        if self.stride < 1:
            raise ContractError("stride must be >= 1")
        if self.max_keypoints is not None and self.max_keypoints < 0:
            raise ContractError("max_keypoints must be >= 0 or None")


@dataclass(frozen=True)
class ResponseMap:
    """Hessian responses sampled on the shared stride lattice.

    The grid covers every lattice point (multiples of ``stride``) whose
    L x L filter support fits in the image; ``x0``/``y0`` are the pixel
    coordinates of the top-left grid cell.
    """

    filter_size: int
    stride: int
    x0: int
    y0: int
    responses: np.ndarray = field(repr=False)
    laplacian: np.ndarray = field(repr=False)

    @property
    def shape(self):
        return self.responses.shape


def _check_filter_size(length: int) -> None:
    if length < 3 or length % 2 == 0 or length % 6 != 3:
        raise ContractError(
            f"filter size must be odd and divisible by 3 (9, 15, 21, ...), got {length}"
        )


def base_scale_fp8(length: int) -> int:
    """FP8 scale of filter side ``length``: 1.2 * L / 9, round half up."""
    return (1024 * length + 15) // 30


def _lattice_range(half: int, dim: int, stride: int):
    """Lattice indices i with half <= stride*i <= dim-1-half."""
    lo = (half + stride - 1) // stride
    hi = (dim - 1 - half) // stride
    return lo, hi


def doh_response_map(ii: IntegralImage, length: int, stride: int = DEFAULT_STRIDE) -> ResponseMap:
    """Determinant-of-Hessian responses of filter side ``length``.

    Returns an empty map when the filter does not fit in the image.
    """
    _check_filter_size(length)
    if stride < 1:
        raise ContractError("stride must be >= 1")
    b = length // 3
    half = (length - 1) // 2
    ix_lo, ix_hi = _lattice_range(half, ii.width, stride)
    iy_lo, iy_hi = _lattice_range(half, ii.height, stride)
    if ix_hi < ix_lo or iy_hi < iy_lo:
        empty = np.zeros((0, 0), dtype=np.int64)
        return ResponseMap(length, stride, 0, 0, empty, empty.astype(np.uint8))

    xs = np.arange(ix_lo, ix_hi + 1, dtype=np.int64) * stride
    ys = np.arange(iy_lo, iy_hi + 1, dtype=np.int64) * stride
    p = ii.padded

    def box(dx0, dy0, w, h):
        y0 = ys + dy0
        x0 = xs + dx0
        return (
            p[np.ix_(y0 + h, x0 + w)]
            - p[np.ix_(y0, x0 + w)]
            - p[np.ix_(y0 + h, x0)]
            + p[np.ix_(y0, x0)]
        )

    band_h = 2 * b - 1
    dxx = (
        box(-half, -(b - 1), b, band_h)
        + box(-half + 2 * b, -(b - 1), b, band_h)
        - 2 * box(-half + b, -(b - 1), b, band_h)
    )
    dyy = (
        box(-(b - 1), -half, band_h, b)
        + box(-(b - 1), -half + 2 * b, band_h, b)
        - 2 * box(-(b - 1), -half + b, band_h, b)
    )
    dxy = (
        box(-b, -b, b, b)
        + box(1, 1, b, b)
        - box(1, -b, b, b)
        - box(-b, 1, b, b)
    )

    dxx_n = rdiv_array(dxx * (15 * 256), b * band_h)
    dyy_n = rdiv_array(dyy * (15 * 256), b * band_h)
    dxy_n = rdiv_array(dxy * (9 * 256), b * b)
    wxy = rdiv_array(DOH_WEIGHT_FP8 * dxy_n, 256)
    det = dxx_n * dyy_n - wxy * wxy
    lap = (dxx_n + dyy_n >= 0).astype(np.uint8)
    return ResponseMap(length, stride, int(xs[0]), int(ys[0]), det, lap)


def _trunc_div(num: int, den: int) -> int:
    """C-style integer division: round toward zero."""
    q = abs(num) // abs(den)
    return q if (num >= 0) == (den >= 0) else -q


def interpolate_scale(r_prev, r_mid, r_next, s_prev, s_mid, s_next) -> int:
    """Quadratic-vertex scale refinement, integer-only.

    The parabola through the three responses has its vertex at offset
    ``(r_prev - r_next) * 128 // (r_prev - 2*r_mid + r_next)`` in 1/256
    steps, clamped to one half-step either side; the scale is the linear
    blend of the bracketing scales at that offset.
    """
    if r_mid < r_prev or r_mid < r_next:
        raise ContractError("middle response must be a local maximum across scales")
    den = r_prev - 2 * r_mid + r_next
    if den == 0:
        delta = 0
    else:
        delta = _trunc_div((r_prev - r_next) * 128, den)
        delta = max(-128, min(128, delta))
    return s_mid + _trunc_div(delta * (s_next - s_prev), 512)


def suppress_imbricated(kps) -> list:
    """Drop concentric multi-scale blobs, keeping the strongest.

    Greedy in descending response order: a keypoint is dropped iff an
    already-kept one lies within 2 * min(scale)/256 pixels of its centre.
    No transitive suppression.
    """
    ordered = sorted(kps, key=lambda k: (-k.response, k.y, k.x, k.scale))
    kept = []
    for cand in ordered:
        ok = True
        for ref in kept:
            dx = cand.x - ref.x
            dy = cand.y - ref.y
            smin = min(cand.scale, ref.scale)
            if (dx * dx + dy * dy) * 65536 <= 4 * smin * smin:
                ok = False
                break
        if ok:
            kept.append(cand)
    return kept


def detect_keypoints(ii: IntegralImage, params: DetectorParams = DetectorParams()) -> list:
    """Find blob keypoints as strict 3x3x3 scale-space maxima.

    Response maps for every filter size share one stride lattice; a cell
    is a candidate iff its whole 3x3x3 neighbourhood is inside the valid
    support of the three bracketing maps, its response exceeds the
    threshold, and it is strictly greater than all 26 neighbours.  The
    first and last scale indices never yield keypoints.
    """
    sizes = params.filter_sizes
    stride = params.stride
    nx = (ii.width - 1) // stride + 1
    ny = (ii.height - 1) // stride + 1
    n_scales = len(sizes)
    volume = np.full((n_scales, ny, nx), _INVALID, dtype=np.int64)
    valid = np.zeros((n_scales, ny, nx), dtype=bool)

    maps = []
    for k, length in enumerate(sizes):
        m = doh_response_map(ii, length, stride)
        maps.append(m)
        if m.responses.size == 0:
            continue
        iy0 = m.y0 // stride
        ix0 = m.x0 // stride
        gh, gw = m.responses.shape
        volume[k, iy0 : iy0 + gh, ix0 : ix0 + gw] = m.responses
        valid[k, iy0 : iy0 + gh, ix0 : ix0 + gw] = True

    keypoints = []
    scales = [base_scale_fp8(s) for s in sizes]
    for k in range(1, n_scales - 1):
        if ny < 3 or nx < 3:
            break
        win_valid = np.ones((ny - 2, nx - 2), dtype=bool)
        for dk in (-1, 0, 1):
            layer = valid[k + dk]
            for dy in (0, 1, 2):
                for dx in (0, 1, 2):
                    win_valid &= layer[dy : dy + ny - 2, dx : dx + nx - 2]
        centre = volume[k, 1:-1, 1:-1]
        is_max = win_valid & (centre > params.response_threshold)
        for dk in (-1, 0, 1):
            layer = volume[k + dk]
            for dy in (0, 1, 2):
                for dx in (0, 1, 2):
                    if dk == 0 and dy == 1 and dx == 1:
                        continue
                    is_max &= centre > layer[dy : dy + ny - 2, dx : dx + nx - 2]
        for iy, ix in np.argwhere(is_max):
            iy, ix = int(iy) + 1, int(ix) + 1
            scale = interpolate_scale(
                int(volume[k - 1, iy, ix]),
                int(volume[k, iy, ix]),
                int(volume[k + 1, iy, ix]),
                scales[k - 1],
                scales[k],
                scales[k + 1],
            )
            keypoints.append(
                Keypoint(x=ix * stride, y=iy * stride, scale=scale,
                         response=int(volume[k, iy, ix]))
            )

    kept = suppress_imbricated(keypoints)
    if params.max_keypoints is not None:
        kept = kept[: params.max_keypoints]
    return kept
