"""Block-Jacobi model of H^{p,m} and the complete-indeterminacy certificate.

Block i is the diagonal m x m matrix with squared entries up^2(k) for the basis
indices k = p + (i-1)m, ..., p + im - 1, so block 1 acts on (e_p, ..., e_{p+m-1}).
Every comparison on squared quantities is exact; only the summability partial
sums and the tail bounds are evaluated at working precision.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp

from .exceptions import DomainError
from .reports import IndeterminacyReport, KernelBranchSummary, SummabilityWitness
from .weights import (
    OperatorParams,
    growth_floor,
    inverse_sqrt_tail_bound,
    to_mpf,
    weight_table,
)

logger = logging.getLogger(__name__)


class BlockJacobiModel:
    """Zero-diagonal block Jacobi model with diagonal off-diagonal blocks B_i.

    Blocks are computed on demand for every i >= 1; i_max is only the default
    length of the dense assembly and the norm export.
    """

    def __init__(self, params: OperatorParams, i_max: int):
        if i_max < 1:
            raise DomainError(f"i_max must be at least 1, got {i_max}")
        self.params = params
        self.i_max = i_max
        self._table = weight_table(params)

    def _check_block(self, i: int) -> None:
        if i < 1:
            raise DomainError(f"block index must be at least 1, got {i}")

    def basis_index(self, i: int, r: int) -> int:
        """Absolute basis index of diagonal entry r (0-based) of block i"""
        return self.params.p + (i - 1) * self.params.m + r

    def block(self, i: int) -> List[Fraction]:
        """Squared diagonal entries of B_i, increasing along the diagonal"""
        self._check_block(i)
        return [Fraction(self._table.up_sq_int(self.basis_index(i, r))) for r in range(self.params.m)]

    def norm_sq(self, i: int) -> Fraction:
        """||B_i||^2, the largest squared entry up^2(p + im - 1)"""
        self._check_block(i)
        return Fraction(self._table.up_sq_int(self.basis_index(i, self.params.m - 1)))

    def norm(self, i: int):
        return mp.sqrt(to_mpf(self.norm_sq(i)))

    def block_matrix(self, i: int) -> np.ndarray:
        return np.diag([math.sqrt(float(x)) for x in self.block(i)])

    def assemble(self, n_blocks: Optional[int] = None) -> np.ndarray:
        """Dense (n_blocks*m)^2 float matrix with zero diagonal blocks and B_i off the diagonal"""
        n_blocks = n_blocks or self.i_max
        m = self.params.m
        matrix = np.zeros((n_blocks * m, n_blocks * m), dtype=np.float64)
        for i in range(1, n_blocks):
            b = self.block_matrix(i)
            rows = slice((i - 1) * m, i * m)
            cols = slice(i * m, (i + 1) * m)
            matrix[rows, cols] = b
            matrix[cols, rows] = b
        return matrix

    def norm_rows(self, i_to: Optional[int] = None) -> List[Dict[str, Any]]:
        """Block norms for i = 1..i_to (CSV export)"""
        rows = []
        for i in range(1, (i_to or self.i_max) + 1):
            value = self.norm_sq(i)
            rows.append({"i": i, "norm_sq": value, "norm": self.norm(i)})
        return rows


def build_blocks(params: OperatorParams, i_max: int) -> BlockJacobiModel:
    return BlockJacobiModel(params, i_max)


def check_logconcavity(model: BlockJacobiModel, i_from: int, i_to: int) -> List[bool]:
    """Exact norm_sq(i-1) * norm_sq(i+1) <= norm_sq(i)^2 for i in [i_from, i_to]"""
    if i_from < 2:
        raise DomainError(f"log-concavity starts at i = 2, got i_from={i_from}")
    verdicts = []
    for i in range(i_from, i_to + 1):
        verdicts.append(model.norm_sq(i - 1) * model.norm_sq(i + 1) <= model.norm_sq(i) ** 2)
    return verdicts


def first_failure(verdicts: Sequence[bool], i_from: int) -> Optional[int]:
    for offset, holds in enumerate(verdicts):
        if not holds:
            return i_from + offset
    return None


def check_summability(model: BlockJacobiModel, J: int) -> SummabilityWitness:
    """Partial sum of 1/||B_i|| for i <= J with a certified tail when 2p+m > 2"""
    if J < 1:
        raise DomainError(f"J must be at least 1, got {J}")
    params = model.params
    partial = mp.fsum(1 / model.norm(i) for i in range(1, J + 1))
    # ||B_i||^2 = up^2(m*i + p - 1)
    tail = inverse_sqrt_tail_bound(params, params.m, params.p - 1, J)
    return SummabilityWitness(
        J=J,
        partial_sum=float(partial),
        tail_bound=None if tail is None else float(tail),
        converges=params.degree > 2,
        growth_floor=growth_floor(params, params.m, params.p - 1, J),
    )


def partial_sums(model: BlockJacobiModel, J: int) -> np.ndarray:
    """S(1), ..., S(J) of sum 1/||B_i|| as float64"""
    terms = np.array([float(1 / model.norm(i)) for i in range(1, J + 1)])
    return np.cumsum(terms)


def divergence_witness(model: BlockJacobiModel, J_values: Sequence[int],
                       margin: float = 0.9) -> Dict[str, Any]:
    """Fit S(J) ~ a log J + b and report the constant C with S(J) >= margin * a * log J - C.

    Meant for the negative control 2p + m = 2, where ||B_i|| grows linearly.
    """
    J_values = sorted(set(J_values))
    if len(J_values) < 2 or J_values[0] < 2:
        raise DomainError("divergence witness needs at least two window sizes >= 2")
    sums = partial_sums(model, J_values[-1])
    values = np.array([sums[J - 1] for J in J_values])
    logs = np.log(np.array(J_values, dtype=np.float64))
    slope, intercept = np.polyfit(logs, values, 1)
    offset = float(np.max(margin * slope * logs - values))
    return {
        "J_values": J_values,
        "partial_sums": values.tolist(),
        "slope": float(slope),
        "intercept": float(intercept),
        "margin": margin,
        "offset": max(offset, 0.0),
    }


@dataclass
class KernelTerm:
    """phi_i on one branch: alternating sign and exact squared magnitude per component"""

    block_index: int
    sign: int
    magnitude_sq: Tuple[Fraction, ...]

    @property
    def norm_sq(self) -> Fraction:
        return sum(self.magnitude_sq, Fraction(0))


@dataclass
class KernelSolution:
    """Solution of B_{i-1} phi_{i-1} + B_i phi_{i+1} = 0 seeded at block 1 (odd) or 2 (even)"""

    parity: str
    seed_sq: Tuple[Fraction, ...]
    terms: List[KernelTerm] = field(default_factory=list)
    tail_bound_sq: Optional[Any] = None
    boundary_prefactor_sq: Optional[Tuple[Fraction, ...]] = None

    @property
    def start(self) -> int:
        return 1 if self.parity == "odd" else 2

    def partial_norm_sq(self, J: Optional[int] = None) -> Fraction:
        """Exact sum of the squared term norms for j = 0..J"""
        terms = self.terms if J is None else self.terms[:J + 1]
        return sum((t.norm_sq for t in terms), Fraction(0))

    def residual_zero(self, model: BlockJacobiModel) -> bool:
        """Recheck every nontrivial recurrence row exactly"""
        for prev, nxt in zip(self.terms, self.terms[1:]):
            i = prev.block_index
            below, above = model.block(i), model.block(i + 1)
            if nxt.sign != -prev.sign:
                return False
            for r in range(model.params.m):
                if above[r] * nxt.magnitude_sq[r] != below[r] * prev.magnitude_sq[r]:
                    return False
        return True

    def domination_holds(self, model: BlockJacobiModel) -> bool:
        """|phi_{i0+2j}|^2 <= seed^2 * sqrt(x_{i0} / x_{i0+2j}) componentwise, squared out exactly"""
        first = model.block(self.start)
        for term in self.terms:
            x = model.block(term.block_index)
            for r in range(model.params.m):
                if term.magnitude_sq[r] ** 2 * x[r] > self.seed_sq[r] ** 2 * first[r]:
                    return False
        return True

    def decay_exponent(self) -> Optional[float]:
        """Fitted slope of log ||phi_{i0+2j}||^2 against log j on [J/10, J]"""
        J = len(self.terms) - 1
        lo = max(1, J // 10)
        if J - lo < 4:
            return None
        js = np.arange(lo, J + 1)
        ys = np.array([math.log(float(self.terms[j].norm_sq)) for j in js])
        slope, _ = np.polyfit(np.log(js), ys, 1)
        return float(slope)


def _kernel_branch(model: BlockJacobiModel, parity: str, J: int,
                   seed_sq: Tuple[Fraction, ...]) -> KernelSolution:
    params = model.params
    m = params.m
    solution = KernelSolution(parity=parity, seed_sq=seed_sq)
    i = solution.start
    magnitude = tuple(seed_sq)
    sign = 1
    for _ in range(J + 1):
        solution.terms.append(KernelTerm(block_index=i, sign=sign, magnitude_sq=magnitude))
        below, above = model.block(i), model.block(i + 1)
        magnitude = tuple(magnitude[r] * below[r] / above[r] for r in range(m))
        sign = -sign
        i += 2

    if parity == "even":
        # row 1 reads B_0 phi_0 + B_1 phi_2 = 0; report |B_1 phi_2|^2
        b1 = model.block(1)
        solution.boundary_prefactor_sq = tuple(b1[r] * seed_sq[r] for r in range(m))

    # term j sits on block start + 2j, i.e. basis index 2m*j + m*(start-1) + p + r
    bounds = []
    first = model.block(solution.start)
    for r in range(m):
        shift = m * (solution.start - 1) + params.p + r
        tail = inverse_sqrt_tail_bound(params, 2 * m, shift, J)
        if tail is None:
            bounds = None
            break
        bounds.append(to_mpf(seed_sq[r]) * mp.sqrt(to_mpf(first[r])) * tail)
    solution.tail_bound_sq = None if bounds is None else mp.fsum(bounds)
    return solution


def kernel_solutions(model: BlockJacobiModel, J: int,
                     seed: Optional[Sequence[Any]] = None) -> Tuple[KernelSolution, KernelSolution]:
    """Odd (phi_1-seeded) and even (phi_2-seeded) solutions of the kernel recurrence, j = 0..J"""
    if J < 1:
        raise DomainError(f"J must be at least 1, got {J}")
    m = model.params.m
    if seed is None:
        seed_sq = tuple(Fraction(1) for _ in range(m))
    else:
        if len(seed) != m:
            raise DomainError(f"seed must have {m} components, got {len(seed)}")
        seed_sq = tuple(Fraction(s) ** 2 for s in seed)
        if any(s == 0 for s in seed_sq):
            raise DomainError("seed components must be nonzero")
    return _kernel_branch(model, "odd", J, seed_sq), _kernel_branch(model, "even", J, seed_sq)


def summarize_branch(model: BlockJacobiModel, solution: KernelSolution) -> KernelBranchSummary:
    partial = solution.partial_norm_sq()
    residual_zero = solution.residual_zero(model)
    domination = solution.domination_holds(model)
    tail = solution.tail_bound_sq
    boundary = solution.boundary_prefactor_sq
    return KernelBranchSummary(
        parity=solution.parity,
        terms=len(solution.terms),
        partial_norm_sq=partial,
        partial_norm_sq_float=float(to_mpf(partial)),
        tail_bound_sq=None if tail is None else float(tail),
        residual_zero=residual_zero,
        domination_holds=domination,
        decay_exponent=solution.decay_exponent(),
        boundary_prefactor_sq=None if boundary is None else list(boundary),
        in_l2=residual_zero and domination and tail is not None,
    )


def verdict(params: OperatorParams, J: int) -> IndeterminacyReport:
    """Combine log-concavity, summability and the kernel solutions into one report"""
    if J < params.m:
        raise DomainError(f"J must be at least m={params.m}, got {J}")
    model = build_blocks(params, J + 1)

    i_from = max(2, params.m)
    lc = check_logconcavity(model, i_from, J) if J >= i_from else []
    lc_failure = first_failure(lc, i_from)
    verified_up_to = J if lc_failure is None else lc_failure - 1

    summability = check_summability(model, J)
    odd, even = kernel_solutions(model, max(1, J // 2))
    branches = [summarize_branch(model, odd), summarize_branch(model, even)]

    analytic = params.degree > 2
    finite_evidence = (
        lc_failure is None
        and summability.converges
        and summability.tail_bound is not None
        and all(b.in_l2 for b in branches)
    )
    if not analytic:
        outcome = "criterion_failed"
    elif finite_evidence:
        outcome = "completely_indeterminate"
    else:
        outcome = "inconclusive"
        logger.warning(f"Finite checks failed for {params.label} at J={J} although 2p+m > 2")

    report = IndeterminacyReport(
        params=params,
        J=J,
        logconcavity_verified_up_to=verified_up_to,
        logconcavity_first_failure=lc_failure,
        summability=summability,
        kernel_branches=branches,
        kernel_in_l2={b.parity: b.in_l2 for b in branches},
        analytic_criterion=analytic,
        finite_evidence=finite_evidence,
        verdict=outcome,
        claimed_defect_numbers=(params.m, params.m) if outcome == "completely_indeterminate" else None,
    )
    logger.info(f"Indeterminacy verdict for {params.label} (J={J}): {outcome}")
    return report
