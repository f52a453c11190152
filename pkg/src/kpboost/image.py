"""Grayscale rasters, integral images, and exact box sums.

Everything downstream (detector, descriptor) reduces to rectangle sums
over an 8-bit luminance raster, so this module keeps the arithmetic
exact: integral entries are 64-bit and ``box_sum`` is integer-equal to a
brute-force pixel loop for every in-bounds rectangle.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, FileFormatError


@dataclass(frozen=True)
class GrayImage:
    """8-bit luminance raster.

    Args:
        pixels: (height, width) uint8 array, row-major.
        path: optional provenance label (file path or synthetic id).
    """

    pixels: np.ndarray
    path: str = ""

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2 or px.size == 0:
            raise ContractError("image must be a non-empty 2-D array")
        if px.dtype != np.uint8:
            if not np.issubdtype(px.dtype, np.integer):
                raise ContractError("image values must be integers")
            if px.min() < 0 or px.max() > 255:
                raise ContractError("image values must lie in [0, 255]")
            px = px.astype(np.uint8)
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class IntegralImage:
    """Summed-area table of a :class:`GrayImage`.

    ``sums[y, x]`` is the sum of all source pixels with row <= y and
    col <= x.  A zero-padded copy is kept internally so box sums are a
    branch-free 4-corner lookup.
    """

    width: int
    height: int
    padded: np.ndarray = field(repr=False)

    @property
    def sums(self) -> np.ndarray:
        return self.padded[1:, 1:].astype(np.uint64)


@dataclass(frozen=True)
class Rect:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ContractError(f"rect extent must be >= 1, got {self.w}x{self.h}")


def integral(img: GrayImage) -> IntegralImage:
    """Build the summed-area table of ``img`` (exact 64-bit arithmetic)."""
    h, w = img.pixels.shape
    padded = np.zeros((h + 1, w + 1), dtype=np.int64)
    np.cumsum(np.cumsum(img.pixels, axis=0, dtype=np.int64), axis=1, out=padded[1:, 1:])
    padded.setflags(write=False)
    return IntegralImage(width=w, height=h, padded=padded)


def box_sum(ii: IntegralImage, r: Rect) -> int:
    """Sum of the pixels inside ``r`` via the 4-corner identity (exact)."""
    if r.x < 0 or r.y < 0 or r.x + r.w > ii.width or r.y + r.h > ii.height:
        raise ContractError(
            f"rect {r} outside {ii.width}x{ii.height} image bounds"
        )
    p = ii.padded
    return int(
        p[r.y + r.h, r.x + r.w]
        - p[r.y, r.x + r.w]
        - p[r.y + r.h, r.x]
        + p[r.y, r.x]
    )


def _tokenize_pnm_header(data: bytes, path, want: int):
    """Yield ``want`` whitespace-separated header tokens, skipping # comments.

    Returns (tokens, offset_after_last_token_separator).
    """
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < want:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        if i >= n:
            raise FileFormatError(path, "truncated header", offset=i)
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i] != ord("#"):
            i += 1
        tokens.append(data[start:i])
    # exactly one whitespace byte separates the header from P5 payload
    if i < n and data[i : i + 1].isspace():
        i += 1
    return tokens, i


def load_pgm(path) -> GrayImage:
    """Load a binary (P5) or ASCII (P2) PGM file with maxval <= 255.

    Header comments (``#`` to end of line) are skipped.  Anything else —
    other magics, maxval > 255, short payloads — raises
    :class:`FileFormatError` naming the file and offset.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 2:
        raise FileFormatError(path, "not a PGM file", offset=0)
    magic = data[:2]
    if magic not in (b"P5", b"P2"):
        raise FileFormatError(path, f"unsupported magic {magic!r}", offset=0)
    fields, payload_off = _tokenize_pnm_header(data[2:], path, 3)
    payload_off += 2
    try:
        width, height, maxval = (int(t) for t in fields)
    except ValueError:
        raise FileFormatError(path, "malformed header (non-numeric field)", offset=2)
    if width < 1 or height < 1:
        raise FileFormatError(path, f"bad dimensions {width}x{height}", offset=2)
    if maxval < 1 or maxval > 255:
        raise FileFormatError(path, f"maxval {maxval} not in [1, 255]", offset=2)

    count = width * height
    if magic == b"P5":
        payload = data[payload_off : payload_off + count]
        if len(payload) < count:
            raise FileFormatError(
                path, f"truncated payload: {len(payload)} of {count} bytes",
                offset=payload_off,
            )
        px = np.frombuffer(payload, dtype=np.uint8, count=count)
    else:
        body = data[payload_off:]
        # comments are legal between P2 samples as well
        body = b"\n".join(
            line.split(b"#", 1)[0] for line in body.split(b"\n")
        )
        parts = body.split()
        if len(parts) < count:
            raise FileFormatError(
                path, f"truncated payload: {len(parts)} of {count} samples",
                offset=payload_off,
            )
        try:
            vals = [int(p) for p in parts[:count]]
        except ValueError:
            raise FileFormatError(path, "non-numeric P2 sample", offset=payload_off)
        if any(v < 0 or v > maxval for v in vals):
            raise FileFormatError(path, "sample exceeds maxval", offset=payload_off)
        px = np.asarray(vals, dtype=np.uint8)
    if magic == b"P5" and px.max(initial=0) > maxval:
        raise FileFormatError(path, "sample exceeds maxval", offset=payload_off)
    return GrayImage(px.reshape(height, width), path=str(path))


def write_pgm(img: GrayImage, path) -> None:
    """Write ``img`` as binary P5 (used by the synthetic-corpus generator)."""
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
        fh.write(img.pixels.tobytes())
