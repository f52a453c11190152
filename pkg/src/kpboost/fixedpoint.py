"""Fixed-point helpers used by the integer-only pipeline.

Conventions used throughout the package:

* FP8  — integer value = real value x 256 (scales, bilinear weights, votes)
* FP20 — integer value = real value x 2**20 (classifier weights alpha, scores)
* FP32 — integer value = real value x 2**32 (boosting example weights)

All divisions in the pipeline are one of exactly two kinds so that every
platform produces the same bits:

* ``floor`` division (Python ``//``), used where operands are non-negative,
* :func:`rdiv` symmetric round-half-away-from-zero, used for signed values.
"""

from decimal import Decimal, getcontext

import numpy as np

FP8_ONE = 256
FP20_ONE = 1 << 20
FP32_ONE = 1 << 32

_LN_TABLE_BITS = 10
_LN_TABLE_SIZE = 1 << _LN_TABLE_BITS  # 1024 intervals over [1, 2)


def rdiv(a: int, d: int) -> int:
    """Divide ``a`` by positive ``d``, rounding half away from zero.

    Symmetric in the sign of ``a``: ``rdiv(-a, d) == -rdiv(a, d)``.
    """
    if d <= 0:
        raise ValueError("divisor must be positive")
    if a >= 0:
        return (2 * a + d) // (2 * d)
    return -((-2 * a + d) // (2 * d))


def rdiv_array(a, d):
    """Vectorised :func:`rdiv` for int64 arrays (``d`` scalar or array)."""
    a = np.asarray(a, dtype=np.int64)
    mag = (2 * np.abs(a) + d) // (2 * d)
    return np.where(a >= 0, mag, -mag)


def _build_ln_table():
    # decimal.ln() is correctly rounded by spec, so the table is identical
    # on every platform; math.log would depend on the host libm.
    getcontext().prec = 40
    scale = Decimal(FP20_ONE)
    table = []
    for k in range(_LN_TABLE_SIZE + 1):
        x = Decimal(1) + Decimal(k) / Decimal(_LN_TABLE_SIZE)
        table.append(int((x.ln() * scale).to_integral_value(rounding="ROUND_HALF_EVEN")))
    ln2 = int((Decimal(2).ln() * scale).to_integral_value(rounding="ROUND_HALF_EVEN"))
    return tuple(table), ln2

_LN_TABLE, LN2_FP20 = _build_ln_table()


def ln_ratio_fp20(num: int, den: int) -> int:
    """``ln(num/den)`` in FP20 for integers ``num >= den >= 1``.

    Table lookup over [1, 2) with linear interpolation plus ``e * ln 2``
    for the power-of-two exponent; error below 2**-10 in real terms.
    """
    if den < 1 or num < den:
        raise ValueError("requires num >= den >= 1")
    r = (num << 20) // den
    e = r.bit_length() - 21
    m = r >> e if e > 0 else r << -e
    off = m - FP20_ONE
    idx = off >> _LN_TABLE_BITS
    frac = off & (_LN_TABLE_SIZE - 1)
    lo = _LN_TABLE[idx]
    hi = _LN_TABLE[idx + 1]
    return e * LN2_FP20 + lo + (((hi - lo) * frac) >> _LN_TABLE_BITS)
