"""CSV and JSON artifact writers.

CSV files carry a header row, '.' decimals, UTF-8 and LF line endings. Reals are
preformatted strings (17 significant digits at 53 bits, mpmath.nstr above) so
the bytes never depend on pandas float formatting.
"""

import logging
import math
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Type, TypeVar, Union

import numpy as np
import pandas as pd
from mpmath import mp
from pydantic import BaseModel

from .indeterminacy import BlockJacobiModel
from .weights import CoefficientVector, OperatorParams, weights_frame

logger = logging.getLogger(__name__)

ModelT = TypeVar("ModelT", bound=BaseModel)
PathLike = Union[str, Path]


def format_real(value: Any) -> str:
    """Deterministic text for a real number at the working precision"""
    if value is None:
        return ""
    if isinstance(value, Fraction):
        value = mp.mpf(value.numerator) / value.denominator
    if mp.prec <= 53:
        return format(float(value), ".17g")
    digits = int(mp.prec * math.log10(2)) + 2
    return mp.nstr(mp.mpf(value), digits)


def _rational_parts(value: Optional[Fraction]) -> List[str]:
    if value is None:
        return ["", ""]
    return [str(value.numerator), str(value.denominator)]


def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def weights_table(params: OperatorParams, k_from: int, k_to: int) -> pd.DataFrame:
    rows = []
    for row in weights_frame(params, k_from, k_to):
        up_num, up_den = _rational_parts(row["up_sq"])
        down_num, down_den = _rational_parts(row["down_sq"])
        rows.append({
            "k": row["k"],
            "up_sq_numerator": up_num,
            "up_sq_denominator": up_den,
            "down_sq_numerator": down_num,
            "down_sq_denominator": down_den,
            "up": format_real(row["up"]),
            "down": format_real(row["down"]),
        })
    return pd.DataFrame(rows, columns=["k", "up_sq_numerator", "up_sq_denominator", "down_sq_numerator",
                                       "down_sq_denominator", "up", "down"])


def write_weights_csv(params: OperatorParams, k_from: int, k_to: int, path: PathLike) -> Path:
    return _write_frame(weights_table(params, k_from, k_to), path)


def write_matrix_csv(matrix: np.ndarray, first_index: int, path: PathLike) -> Path:
    """Dense matrix with basis-index labels; row label column first"""
    labels = [str(first_index + i) for i in range(matrix.shape[1])]
    frame = pd.DataFrame([[format(float(x), ".17g") for x in row] for row in matrix], columns=labels)
    frame.insert(0, "index", [first_index + i for i in range(matrix.shape[0])])
    return _write_frame(frame, path)


def write_block_norms_csv(model: BlockJacobiModel, i_to: int, path: PathLike) -> Path:
    rows = []
    for row in model.norm_rows(i_to):
        num, den = _rational_parts(row["norm_sq"])
        rows.append({"i": row["i"], "norm_sq_numerator": num, "norm_sq_denominator": den,
                     "norm_float": format_real(row["norm"])})
    frame = pd.DataFrame(rows, columns=["i", "norm_sq_numerator", "norm_sq_denominator", "norm_float"])
    return _write_frame(frame, path)


def series_table(values: Iterable[Any], first_index: int = 1) -> pd.DataFrame:
    """Columns n, value_re, value_im, partial_norm (running l2 norm)"""
    rows = []
    running = mp.mpf(0)
    for n, value in enumerate(values, start=first_index):
        z = mp.mpc(value)
        running += abs(z) ** 2
        rows.append({"n": n, "value_re": format_real(z.real), "value_im": format_real(z.imag),
                     "partial_norm": format_real(mp.sqrt(running))})
    return pd.DataFrame(rows, columns=["n", "value_re", "value_im", "partial_norm"])


def write_series_csv(values: Iterable[Any], path: PathLike, first_index: int = 1) -> Path:
    return _write_frame(series_table(values, first_index), path)


def write_vector_csv(v: CoefficientVector, path: PathLike) -> Path:
    """Coefficient vector as a series indexed by basis index"""
    return write_series_csv(v.coeffs, path, first_index=v.offset)


def write_json(model: BaseModel, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(model.model_dump_json(indent=2))
        f.write("\n")
    logger.debug(f"Wrote {type(model).__name__} to {path}")
    return path


def read_json(path: PathLike, model_type: Type[ModelT]) -> ModelT:
    with open(path, "r", encoding="utf-8") as f:
        return model_type.model_validate_json(f.read())


def write_summary_json(payload: Dict[str, Any], path: PathLike) -> Path:
    """Plain dict summaries (sweep results) through the same deterministic writer"""
    return write_json(_SummaryPayload(payload=payload), path)


class _SummaryPayload(BaseModel):
    payload: Dict[str, Any]
