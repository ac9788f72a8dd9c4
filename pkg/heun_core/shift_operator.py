"""Backward weighted shift on B_p: H e_k = omega(k-1) e_{k-1}, with adjoint and right inverse."""

import logging
import threading
from fractions import Fraction
from typing import Dict, Tuple

import numpy as np
from mpmath import mp

from .exceptions import DomainError
from .weights import CoefficientVector, OperatorParams, _require_finite, weight_table

logger = logging.getLogger(__name__)


class ShiftOperator:
    """omega(k) = sqrt(up^2(k)) for k >= p; the bottom vector e_p is annihilated"""

    def __init__(self, params: OperatorParams):
        self.params = params
        self.offset = params.p
        self._table = weight_table(params)
        self._omega: Dict[Tuple[int, int], object] = {}
        self._lock = threading.Lock()

    def omega_sq(self, k: int) -> Fraction:
        return Fraction(self._table.up_sq_int(k))

    def omega(self, k: int):
        key = (k, mp.prec)
        value = self._omega.get(key)
        if value is None:
            value = self._table.omega(k)
            with self._lock:
                self._omega[key] = value
        return value

    def weight_product(self, k: int, n: int):
        """omega(k) omega(k+1) ... omega(k+n-1)"""
        return mp.fprod(self.omega(j) for j in range(k, k + n))

    def _check(self, v: CoefficientVector, operation: str) -> None:
        _require_finite(v, operation)
        if v.coeffs and v.offset < self.offset:
            raise DomainError(f"{operation}: vector starts at e_{v.offset}, below the offset e_{self.offset}")

    def apply(self, v: CoefficientVector) -> CoefficientVector:
        """Backward shift; the coefficient at k becomes omega(k) v(k+1)"""
        self._check(v, "apply_shift")
        lo = max(self.offset, v.offset - 1)
        values = tuple(self.omega(k) * v.coefficient(k + 1) for k in range(lo, v.end - 1))
        if not values:
            return CoefficientVector.zero(self.offset)
        return CoefficientVector(offset=lo, coeffs=values)

    def apply_adjoint(self, v: CoefficientVector) -> CoefficientVector:
        """Forward shift e_k -> omega(k) e_{k+1}"""
        self._check(v, "apply_shift_adjoint")
        if not v.coeffs:
            return CoefficientVector.zero(self.offset)
        return CoefficientVector(offset=v.offset + 1,
                                 coeffs=tuple(self.omega(k) * c for k, c in v.items()))

    def apply_right_inverse(self, v: CoefficientVector) -> CoefficientVector:
        """S e_k = e_{k+1} / omega(k)"""
        self._check(v, "apply_right_inverse")
        if not v.coeffs:
            return CoefficientVector.zero(self.offset)
        return CoefficientVector(offset=v.offset + 1,
                                 coeffs=tuple(c / self.omega(k) for k, c in v.items()))

    def power(self, v: CoefficientVector, n: int) -> CoefficientVector:
        """H^n v; the coefficient at k is omega(k)...omega(k+n-1) v(k+n)"""
        if n < 0:
            raise DomainError(f"power must be nonnegative, got {n}")
        self._check(v, "apply_shift")
        lo = max(self.offset, v.offset - n)
        values = tuple(self.weight_product(k, n) * v.coefficient(k + n) for k in range(lo, v.end - n))
        if not values:
            return CoefficientVector.zero(self.offset)
        return CoefficientVector(offset=lo, coeffs=values)

    def right_inverse_power(self, v: CoefficientVector, n: int) -> CoefficientVector:
        """S^n v, shifting e_k to e_{k+n} / (omega(k)...omega(k+n-1))"""
        if n < 0:
            raise DomainError(f"power must be nonnegative, got {n}")
        self._check(v, "apply_right_inverse")
        if not v.coeffs:
            return CoefficientVector.zero(self.offset)
        return CoefficientVector(offset=v.offset + n,
                                 coeffs=tuple(c / self.weight_product(k, n) for k, c in v.items()))

    def symmetric_matrix(self, N: int) -> np.ndarray:
        """H + H* on (e_p, ..., e_{p+N-1}): scalar Jacobi matrix with off-diagonal omega(k)"""
        if N < 1:
            raise DomainError(f"N must be positive, got {N}")
        matrix = np.zeros((N, N), dtype=np.float64)
        for i in range(N - 1):
            value = float(self.omega(self.offset + i))
            matrix[i, i + 1] = value
            matrix[i + 1, i] = value
        return matrix


_operators: Dict[OperatorParams, ShiftOperator] = {}


def shift_operator(params: OperatorParams) -> ShiftOperator:
    op = _operators.get(params)
    if op is None:
        op = _operators.setdefault(params, ShiftOperator(params))
    return op


def apply_shift(v: CoefficientVector, params: OperatorParams) -> CoefficientVector:
    return shift_operator(params).apply(v)


def apply_shift_adjoint(v: CoefficientVector, params: OperatorParams) -> CoefficientVector:
    return shift_operator(params).apply_adjoint(v)


def apply_right_inverse(v: CoefficientVector, params: OperatorParams) -> CoefficientVector:
    return shift_operator(params).apply_right_inverse(v)
