"""Exact factorial weights of H^{p,m} = a*^p (a^m + a*^m) a^p and its truncated action.

Squared weights are kept as exact integers (returned as ``Fraction``); square
roots only appear in floating outputs, evaluated at the mpmath working
precision configured in ``heun_core.config``.
"""

import logging
import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from mpmath import mp
from pydantic import BaseModel, ConfigDict, Field

from .config import toolkit_config  # noqa: F401  (sets the working precision)
from .exceptions import DomainError

logger = logging.getLogger(__name__)

WEIGHT_CONVENTION = "omega_k^2 = up^2(k) = k!(k+m)!/((k-p)!)^2"


class OperatorParams(BaseModel):
    """Powers (p, m) of the generalized Heun operator"""

    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=0, description="creation/annihilation power")
    m: int = Field(ge=1, description="shift step")

    @property
    def degree(self) -> int:
        """2p + m, the polynomial degree of H^{p,m} in (a*, a)"""
        return 2 * self.p + self.m

    @property
    def label(self) -> str:
        return f"p{self.p}_m{self.m}"


def _falling(n: int, r: int) -> int:
    """n (n-1) ... (n-r+1), i.e. n!/(n-r)!"""
    return math.prod(range(n - r + 1, n + 1))


class WeightTable:
    """Memoized squared weights up^2(k) for one (p, m).

    The table is a prefix list indexed by k - p. Appends happen under a lock;
    readers only index entries below the length they observed, so they never
    see a partially written value.
    """

    def __init__(self, params: OperatorParams):
        self.params = params
        self._up_sq: List[int] = []
        self._lock = threading.Lock()

    def up_sq_int(self, k: int) -> int:
        p, m = self.params.p, self.params.m
        if k < p:
            raise DomainError(f"weight undefined below p: k={k} < p={p}")
        idx = k - p
        table = self._up_sq
        if idx < len(table):
            return table[idx]
        with self._lock:
            while len(table) <= idx:
                k_new = p + len(table)
                # k!/(k-p)! * (k+m)!/(k-p)!
                table.append(_falling(k_new, p) * _falling(k_new + m, p + m))
        return table[idx]

    def down_sq_int(self, k: int) -> int:
        p, m = self.params.p, self.params.m
        if k < p + m:
            raise DomainError(f"down weight undefined below p+m: k={k} < {p + m}")
        return self.up_sq_int(k - m)

    def omega(self, k: int):
        """sqrt(up^2(k)) at working precision"""
        return mp.sqrt(mp.mpf(self.up_sq_int(k)))

    @property
    def size(self) -> int:
        return len(self._up_sq)


_tables: Dict[OperatorParams, WeightTable] = {}
_tables_lock = threading.Lock()


def weight_table(params: OperatorParams) -> WeightTable:
    """Shared memo table for params"""
    table = _tables.get(params)
    if table is None:
        with _tables_lock:
            table = _tables.setdefault(params, WeightTable(params))
    return table


def weight_up_sq(k: int, params: OperatorParams) -> Fraction:
    """k!(k+m)!/((k-p)!)^2, the squared coefficient of e_{k+m} in H e_k"""
    return Fraction(weight_table(params).up_sq_int(k))


def weight_down_sq(k: int, params: OperatorParams) -> Fraction:
    """k!(k-m)!/((k-p-m)!)^2, the squared coefficient of e_{k-m} in H e_k"""
    return Fraction(weight_table(params).down_sq_int(k))


def ladder_weight_sq(k: int, r: int, s: int) -> Fraction:
    """Squared weight of a*^r a^s on e_k (image lands on e_{k-s+r}); zero if k < s"""
    if k < s:
        return Fraction(0)
    return Fraction(_falling(k, s) * _falling(k - s + r, r))


def asymptotic_exponent(params: OperatorParams) -> Fraction:
    """(2p+m)/2: sqrt(up^2(k)) grows like k to this power"""
    return Fraction(params.degree, 2)


def loglog_slope(params: OperatorParams, k_lo: int, k_hi: int, samples: int = 200) -> float:
    """Least-squares slope of log sqrt(up^2(k)) against log k on [k_lo, k_hi]"""
    k_lo = max(k_lo, params.p, 2)
    if k_hi <= k_lo:
        raise DomainError(f"empty fitting window [{k_lo}, {k_hi}]")
    ks = np.unique(np.geomspace(k_lo, k_hi, samples).astype(int))
    table = weight_table(params)
    y = np.array([0.5 * math.log(table.up_sq_int(int(k))) for k in ks])
    slope, _ = np.polyfit(np.log(ks), y, 1)
    return float(slope)


def power_envelope(params: OperatorParams, k_lo: int, k_hi: int) -> Tuple[Fraction, Fraction]:
    """Exact min and max of up^2(k) / k^(2p+m) over k in [k_lo, k_hi]"""
    k_lo = max(k_lo, params.p, 1)
    if k_hi < k_lo:
        raise DomainError(f"empty envelope window [{k_lo}, {k_hi}]")
    table = weight_table(params)
    ratios = [Fraction(table.up_sq_int(k), k ** params.degree) for k in range(k_lo, k_hi + 1)]
    return min(ratios), max(ratios)


def _factor_constants(params: OperatorParams, shift: int) -> List[int]:
    # up^2(k) = prod_{c<p} (k - c) * prod_{d=1-p}^{m} (k + d), evaluated at k = step*t + shift
    p, m = params.p, params.m
    return [shift - c for c in range(p)] + [shift + d for d in range(1 - p, m + 1)]


def growth_floor(params: OperatorParams, step: int, shift: int, T: int) -> Fraction:
    """Exact rho with up^2(step*t+shift) >= up^2(step*T+shift) * (t/T)^(2p+m) * rho for all t >= T.

    Each of the 2p+m linear factors step*t + c satisfies
    (step*t + c)/(step*T + c) >= t/T when c <= 0 and >= (t/T) * step*T/(step*T + c) when c > 0.
    """
    if step < 1 or T < 1:
        raise DomainError(f"growth floor needs step >= 1 and T >= 1, got step={step}, T={T}")
    rho = Fraction(1)
    for c in _factor_constants(params, shift):
        if step * T + c <= 0:
            raise DomainError(f"factor {step}*t{c:+d} is not positive at t={T}")
        if c > 0:
            rho *= Fraction(step * T, step * T + c)
    return rho


def inverse_sqrt_tail_bound(params: OperatorParams, step: int, shift: int, J: int):
    """Certified bound on sum_{i>J} up^2(step*i+shift)^(-1/2); None when 2p+m <= 2.

    With w(i) >= w(J) rho (i/J)^(2 sigma) and sigma = (2p+m)/2 > 1, integral comparison gives
    sum_{i>J} w(i)^(-1/2) <= J / ((sigma - 1) sqrt(w(J) rho)).
    """
    sigma = asymptotic_exponent(params)
    if sigma <= 1:
        return None
    rho = growth_floor(params, step, shift, J)
    w_J = weight_table(params).up_sq_int(step * J + shift)
    bound = mp.mpf(J) / (to_mpf(sigma - 1) * mp.sqrt(mp.mpf(w_J) * to_mpf(rho)))
    # round outward
    return bound * (1 + 8 * mp.eps)


def to_mpf(value: Fraction):
    """Fraction to mpf, one rounding at working precision"""
    return mp.mpf(value.numerator) / value.denominator


def to_mpc(value: Any):
    """Coerce an int, float, complex, Fraction or mpmath number to an mpc"""
    if isinstance(value, Fraction):
        return mp.mpc(to_mpf(value))
    return mp.mpc(value)


@dataclass(frozen=True)
class CoefficientVector:
    """Finite-support coefficients over e_offset, e_offset+1, ...

    tail_bound is a certified bound on the l2 norm of the dropped infinite tail:
    0 for genuinely finite vectors, None when no finite bound is available.
    """

    offset: int
    coeffs: Tuple[Any, ...] = ()
    tail_bound: Any = 0

    def __post_init__(self):
        if self.offset < 0:
            raise DomainError(f"offset must be nonnegative, got {self.offset}")
        object.__setattr__(self, "coeffs", tuple(to_mpc(c) for c in self.coeffs))
        if self.tail_bound is not None:
            object.__setattr__(self, "tail_bound", mp.mpf(self.tail_bound))

    @classmethod
    def basis(cls, k: int, scale: Any = 1) -> "CoefficientVector":
        return cls(offset=k, coeffs=(scale,))

    @classmethod
    def zero(cls, offset: int = 0) -> "CoefficientVector":
        return cls(offset=offset, coeffs=())

    @classmethod
    def from_mapping(cls, values: Dict[int, Any]) -> "CoefficientVector":
        if not values:
            return cls.zero()
        lo, hi = min(values), max(values)
        return cls(offset=lo, coeffs=tuple(values.get(k, 0) for k in range(lo, hi + 1)))

    @property
    def end(self) -> int:
        """One past the highest stored index"""
        return self.offset + len(self.coeffs)

    @property
    def is_finite(self) -> bool:
        return self.tail_bound is not None and self.tail_bound == 0

    def indices(self) -> range:
        return range(self.offset, self.end)

    def coefficient(self, k: int):
        if self.offset <= k < self.end:
            return self.coeffs[k - self.offset]
        return mp.mpc(0)

    def support_top(self) -> Optional[int]:
        """Highest index carrying a nonzero coefficient"""
        for i in range(len(self.coeffs) - 1, -1, -1):
            if self.coeffs[i] != 0:
                return self.offset + i
        return None

    def items(self) -> Iterable[Tuple[int, Any]]:
        return zip(self.indices(), self.coeffs)

    def norm_sq(self):
        return mp.fsum(abs(c) ** 2 for c in self.coeffs)

    def norm(self):
        return mp.sqrt(self.norm_sq())

    def inner(self, other: "CoefficientVector"):
        """<self, other>, linear in self and antilinear in other"""
        lo, hi = max(self.offset, other.offset), min(self.end, other.end)
        return mp.fsum(self.coefficient(k) * mp.conj(other.coefficient(k)) for k in range(lo, hi))

    def _combine(self, other: "CoefficientVector", sign: int) -> "CoefficientVector":
        if not self.coeffs:
            return other.scaled(sign) if sign < 0 else other
        if not other.coeffs:
            return self
        lo, hi = min(self.offset, other.offset), max(self.end, other.end)
        values = tuple(self.coefficient(k) + sign * other.coefficient(k) for k in range(lo, hi))
        tail = None if self.tail_bound is None or other.tail_bound is None else self.tail_bound + other.tail_bound
        return CoefficientVector(offset=lo, coeffs=values, tail_bound=tail)

    def __add__(self, other: "CoefficientVector") -> "CoefficientVector":
        return self._combine(other, 1)

    def __sub__(self, other: "CoefficientVector") -> "CoefficientVector":
        return self._combine(other, -1)

    def scaled(self, factor: Any) -> "CoefficientVector":
        factor = to_mpc(factor)
        tail = None if self.tail_bound is None else abs(factor) * self.tail_bound
        return CoefficientVector(offset=self.offset, coeffs=tuple(factor * c for c in self.coeffs),
                                 tail_bound=tail)

    def restricted(self, lo: int, hi: int) -> "CoefficientVector":
        """Coefficients with lo <= k <= hi (tail bound dropped)"""
        lo = max(lo, self.offset)
        hi = min(hi, self.end - 1)
        if hi < lo:
            return CoefficientVector.zero(max(lo, 0))
        return CoefficientVector(offset=lo, coeffs=self.coeffs[lo - self.offset:hi - self.offset + 1])

    def as_numpy(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=np.complex128)


def _require_finite(v: CoefficientVector, operation: str) -> None:
    if not v.is_finite:
        raise DomainError(f"{operation} needs a finite-support vector (tail_bound = 0)")


def apply_H(v: CoefficientVector, params: OperatorParams) -> CoefficientVector:
    """Image of a finite vector under H^{p,m} (three-case rule on e_k)"""
    _require_finite(v, "apply_H")
    p, m = params.p, params.m
    table = weight_table(params)
    out: Dict[int, Any] = {}
    for k, a_k in v.items():
        if k < p or a_k == 0:
            continue
        out[k + m] = out.get(k + m, 0) + table.omega(k) * a_k
        if k >= p + m:
            out[k - m] = out.get(k - m, 0) + mp.sqrt(mp.mpf(table.down_sq_int(k))) * a_k
    if not out:
        return CoefficientVector.zero(max(v.offset, p))
    return CoefficientVector.from_mapping(out)


def quadratic_form(v: CoefficientVector, params: OperatorParams):
    """<H phi, phi> for finite phi"""
    return apply_H(v, params).inner(v)


def truncated_matrix(params: OperatorParams, N: int) -> np.ndarray:
    """N x N matrix of H^{p,m} on (e_p, ..., e_{p+N-1}); only the bands at offset +-m are nonzero"""
    if N < 1:
        raise DomainError(f"N must be positive, got {N}")
    table = weight_table(params)
    matrix = np.zeros((N, N), dtype=np.float64)
    for i in range(N - params.m):
        value = float(table.omega(params.p + i))
        matrix[i, i + params.m] = value
        matrix[i + params.m, i] = value
    return matrix


def weights_frame(params: OperatorParams, k_from: int, k_to: int) -> List[Dict[str, Any]]:
    """Rows of exact and floating weights for k in [k_from, k_to] (export helper)"""
    table = weight_table(params)
    rows = []
    for k in range(max(k_from, params.p), k_to + 1):
        up = table.up_sq_int(k)
        down = table.down_sq_int(k) if k >= params.p + params.m else None
        rows.append({
            "k": k,
            "up_sq": Fraction(up),
            "down_sq": Fraction(down) if down is not None else None,
            "up": mp.sqrt(mp.mpf(up)),
            "down": mp.sqrt(mp.mpf(down)) if down is not None else None,
        })
    return rows

