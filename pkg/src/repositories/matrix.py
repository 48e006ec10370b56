import logging
import re
from pathlib import Path
from typing import Optional, Union

import numpy as np
import pandas as pd

from src.exception.client_exception import DataError
from src.schemas.matrix import SDataMatrix

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_PARSER_LINE = re.compile(r"line (\d+)")


class MatrixRepository:
    """p x n matrices as CSV: one row per coordinate, header t1..tn."""

    def __init__(self, path: PathLike):
        self.path = Path(path)

    def read(self, p: Optional[int] = None, n: Optional[int] = None) -> SDataMatrix:
        if not self.path.is_file():
            raise DataError(detail=f"matrix file {self.path} does not exist")
        try:
            frame = pd.read_csv(self.path, header=0, dtype=str, skip_blank_lines=True)
        except pd.errors.ParserError as exc:
            match = _PARSER_LINE.search(str(exc))
            row = int(match.group(1)) - 1 if match else None
            raise DataError(detail=f"malformed CSV row {row} in {self.path}: {exc}", row=row)
        except pd.errors.EmptyDataError:
            raise DataError(detail=f"matrix file {self.path} is empty")

        values = frame.apply(pd.to_numeric, errors="coerce")
        bad = values.isna().any(axis=1) | ~np.isfinite(values.fillna(0.0)).all(axis=1)
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0]) + 1
            logger.warning(f"matrix {self.path}: non-numeric or missing value in row {row}")
            raise DataError(detail=f"malformed CSV row {row} in {self.path}", row=row)

        matrix = values.to_numpy(dtype=float)
        if (p is not None and matrix.shape[0] != p) or (n is not None and matrix.shape[1] != n):
            raise DataError(
                detail=f"matrix {self.path} has shape {matrix.shape}, config expects ({p}, {n})"
            )
        return SDataMatrix(values=matrix)

    def write(self, X: SDataMatrix) -> Path:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(X.values, columns=[f"t{i + 1}" for i in range(X.n)])
        frame.to_csv(self.path, index=False, float_format="%.17g")
        return self.path
