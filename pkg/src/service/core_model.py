import math
from typing import Sequence, Union

import numpy as np

from src.exception.client_exception import InvalidArgumentError
from src.schemas.matrix import SDataMatrix, SDyadicGrid, SPairedMatrix, SSparsityGrid

MatrixLike = Union[SDataMatrix, np.ndarray]


def as_array(X: MatrixLike) -> np.ndarray:
    if isinstance(X, (SDataMatrix, SPairedMatrix)):
        return X.values
    return SDataMatrix(values=X).values


def loglog8n(n: int) -> float:
    return math.log(math.log(8 * n))


def dyadic_grid(n: int) -> SDyadicGrid:
    if n < 2:
        raise InvalidArgumentError(detail=f"dyadic grid needs n >= 2, got {n}")
    top = (n // 2).bit_length() - 1
    return SDyadicGrid(scales=tuple(2**k for k in range(top + 1)))


def sparsity_grid(p: int) -> SSparsityGrid:
    if p < 1:
        raise InvalidArgumentError(detail=f"sparsity grid needs p >= 1, got {p}")
    if p == 1:
        return SSparsityGrid(levels=(1,))
    top = (p - 1).bit_length() - 1
    return SSparsityGrid(levels=tuple(2**k for k in range(top + 1)))


def pair_differences(X: MatrixLike) -> SPairedMatrix:
    values = as_array(X)
    n = values.shape[1]
    m = n // 2
    # odd n: middle column dropped
    Z = (values[:, :m] - values[:, : n - m - 1 : -1]) / math.sqrt(2.0)
    return SPairedMatrix(values=Z)


def upper_median(v: Sequence[float]) -> float:
    array = np.asarray(v, dtype=float).ravel()
    if array.size == 0:
        raise InvalidArgumentError(detail="upper_median of an empty list")
    k = array.size // 2
    return float(np.partition(array, k)[k])


def upper_median_rows(values: np.ndarray) -> np.ndarray:
    """Row-wise upper median of a 2-d array."""
    k = values.shape[-1] // 2
    return np.partition(values, k, axis=-1)[..., k]


def mom_delta(n: int, offset: int = 3) -> int:
    return 2 ** max(offset + math.ceil(math.log2(loglog8n(n))), 0)
