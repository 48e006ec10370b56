from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.exception.client_exception import InvalidArgumentError


def _frozen_array(value, ndim: int, name: str) -> np.ndarray:
    try:
        array = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise InvalidArgumentError(detail=f"{name} must be numeric")
    if array.ndim != ndim:
        raise InvalidArgumentError(
            detail=f"{name} must be {ndim}-dimensional, got shape {array.shape}"
        )
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(detail=f"{name} has non-finite entries")
    array.setflags(write=False)
    return array


class SDataMatrix(BaseModel):
    """p x n observation matrix; column t is the time-t observation."""

    values: np.ndarray = Field(..., description="p x n finite reals")
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v) -> np.ndarray:
        array = _frozen_array(v, 2, "DataMatrix")
        p, n = array.shape
        if p < 1 or n < 2:
            raise InvalidArgumentError(
                detail=f"DataMatrix needs p >= 1 and n >= 2, got p={p}, n={n}"
            )
        return array

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


class SPairedMatrix(BaseModel):
    """Z_i = (X_i - X_{n+1-i}) / sqrt(2) for i = 1..floor(n/2)."""

    values: np.ndarray = Field(..., description="p x m finite reals")
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    @field_validator("values", mode="before")
    @classmethod
    def validate_values(cls, v) -> np.ndarray:
        array = _frozen_array(v, 2, "PairedMatrix")
        if array.shape[0] < 1 or array.shape[1] < 1:
            raise InvalidArgumentError(detail="PairedMatrix needs p >= 1 and m >= 1")
        return array

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]


def _powers_of_two(v: Tuple[int, ...], name: str) -> Tuple[int, ...]:
    if not v:
        raise InvalidArgumentError(detail=f"{name} must not be empty")
    for k in v:
        if k < 1 or k & (k - 1):
            raise InvalidArgumentError(detail=f"{name} entry {k} is not a power of two")
    if list(v) != sorted(set(v)):
        raise InvalidArgumentError(detail=f"{name} must be strictly increasing")
    return tuple(v)


class SDyadicGrid(BaseModel):
    scales: Tuple[int, ...] = Field(..., description="1, 2, 4, ... <= n/2")
    model_config = ConfigDict(frozen=True)

    @field_validator("scales")
    @classmethod
    def validate_scales(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        return _powers_of_two(v, "DyadicGrid")

    def __contains__(self, t: int) -> bool:
        return t in self.scales

    def __len__(self) -> int:
        return len(self.scales)


class SSparsityGrid(BaseModel):
    levels: Tuple[int, ...] = Field(..., description="1, 2, 4, ... < p")
    model_config = ConfigDict(frozen=True)

    @field_validator("levels")
    @classmethod
    def validate_levels(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        return _powers_of_two(v, "SparsityGrid")

    def __len__(self) -> int:
        return len(self.levels)


class SCusumVector(BaseModel):
    t: int
    values: np.ndarray
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class SSplitCusumPair(BaseModel):
    t: int = Field(..., ge=2)
    y1: np.ndarray = Field(..., description="odd-indexed half, used for aggregation")
    y2: np.ndarray = Field(..., description="even-indexed half, used for selection")
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)
