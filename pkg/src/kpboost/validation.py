"""Input validation helpers shared by the estimator layer."""

import numpy as np

from .errors import ContractError
from .image import GrayImage, Rect


def check_image(obj) -> GrayImage:
    """Coerce one input into a :class:`GrayImage`."""
    if isinstance(obj, GrayImage):
        return obj
    return GrayImage(np.asarray(obj))


def check_images(X) -> list:
    """Coerce a sequence of images; rejects empty input."""
    items = list(X)
    if not items:
        raise ContractError("expected at least one image")
    return [check_image(o) for o in items]


def check_labels(y, n: int) -> np.ndarray:
    """Validate 0/1 labels of length ``n``."""
    arr = np.asarray(y)
    if arr.shape != (n,):
        raise ContractError(f"expected {n} labels, got shape {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ContractError("labels must be integers")
        arr = arr.astype(np.int64)
    values = set(np.unique(arr).tolist())
    if not values <= {0, 1}:
        raise ContractError(f"labels must be 0 or 1, got {sorted(values)}")
    return arr.astype(np.int64)


def check_rect(obj) -> Rect:
    """Coerce a truth box given as Rect or an (x, y, w, h) quadruple."""
    if isinstance(obj, Rect):
        return obj
    seq = tuple(int(v) for v in obj)
    if len(seq) != 4:
        raise ContractError("a box needs exactly (x, y, w, h)")
    return Rect(*seq)


def check_fitted(estimator, attribute: str) -> None:
    if not hasattr(estimator, attribute):
        raise ContractError(
            f"{type(estimator).__name__} must be fitted before use"
        )
