"""Pydantic report models; their field order is the documented JSON schema.

Rationals travel as "numerator/denominator" strings so nothing is lost in
JSON. Magnitudes that can leave float range travel as decimal strings.
Unbounded quantities (no finite certified tail) are None.
"""

from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

from mpmath import mp, mpf
from mpmath.libmp import repr_dps
from pydantic import BaseModel, ConfigDict, Field, PlainSerializer, PlainValidator, WithJsonSchema

from .weights import OperatorParams, WEIGHT_CONVENTION

SCHEMA_VERSION = "1.0"


def _parse_rational(value: Any) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise ValueError(f"cannot read an exact rational from {value!r}")


ExactRational = Annotated[
    Fraction,
    PlainValidator(_parse_rational),
    PlainSerializer(lambda f: f"{f.numerator}/{f.denominator}", return_type=str),
    WithJsonSchema({"type": "string", "pattern": r"^-?\d+/\d+$"}),
]


def _parse_magnitude(value: Any):
    if isinstance(value, bool):
        raise ValueError("booleans are not magnitudes")
    if not isinstance(value, (int, float, str, mpf)):
        raise ValueError(f"cannot read a magnitude from {value!r}")
    x = mp.mpf(value)
    if not mp.isfinite(x):
        raise ValueError(f"magnitude must be finite, got {value!r}")
    return x


# mpf keeps its exponent where a float overflows (eigenvector norms at large |lam|);
# the decimal string carries enough digits to read back the same value.
Magnitude = Annotated[
    Any,
    PlainValidator(_parse_magnitude),
    PlainSerializer(lambda x: mp.nstr(x, repr_dps(mp.prec)), return_type=str),
    WithJsonSchema({"type": "string", "pattern": r"^-?\d+(\.\d+)?(e[+-]?\d+)?$"}),
]


class ReportModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)


class SummabilityWitness(ReportModel):
    """Partial sum of 1/||B_i|| (or 1/omega_n) with a certified tail"""
    J: int
    partial_sum: float
    tail_bound: Optional[float] = None
    converges: bool
    growth_floor: ExactRational


class KernelBranchSummary(ReportModel):
    parity: Literal["odd", "even"]
    terms: int
    partial_norm_sq: ExactRational
    partial_norm_sq_float: float
    tail_bound_sq: Optional[float] = None
    residual_zero: bool
    domination_holds: bool
    decay_exponent: Optional[float] = None
    boundary_prefactor_sq: Optional[List[ExactRational]] = None
    in_l2: bool


class IndeterminacyReport(ReportModel):
    schema_version: str = SCHEMA_VERSION
    params: OperatorParams
    weight_convention: str = WEIGHT_CONVENTION
    index_alignment: str = "block entry k acts on basis index p + k - 1"
    J: int
    logconcavity_verified_up_to: int
    logconcavity_first_failure: Optional[int] = None
    summability: SummabilityWitness
    kernel_branches: List[KernelBranchSummary]
    kernel_in_l2: Dict[str, bool]
    analytic_criterion: bool
    finite_evidence: bool
    verdict: Literal["completely_indeterminate", "criterion_failed", "inconclusive"]
    claimed_defect_numbers: Optional[Tuple[int, int]] = None


class WindowCheck(ReportModel):
    name: str
    index: int
    value: float
    threshold: float
    holds: bool


class Hyp2Witness(ReportModel):
    verified_up_to: int
    first_failure: Optional[int] = None


class Hyp3Witness(ReportModel):
    alpha: float
    beta: float
    a: float
    gamma_spec: str
    gamma_series: str
    inverse_gamma_sq_sum: float
    inverse_gamma_sq_tail: float
    window_checks: List[WindowCheck] = Field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return all(check.holds for check in self.window_checks)


class HypothesesWitness(ReportModel):
    params: OperatorParams
    window: int
    hyp1: SummabilityWitness
    hyp2: Hyp2Witness
    hyp3: Hyp3Witness
    gamma_candidates: Dict[str, bool] = Field(default_factory=dict)
    analytic_flag: bool
    proven_region: Literal["proven", "special_case", "outside_proven_region"]


class EigenvectorSummary(ReportModel):
    lam_re: float
    lam_im: float
    N: int
    norm: Magnitude
    tail_bound: Optional[Magnitude] = None
    residual: Magnitude
    relative_residual: float
    cauchy_gap: Optional[Magnitude] = None


class PeriodicSummary(ReportModel):
    s: int
    period: int
    J: int
    residual: float
    spill_over: float
    tail_bound: Optional[float] = None


class DensitySummary(ReportModel):
    scale: float
    period: int
    distance: float
    epsilon: float
    J: int


class ApproximantSummary(ReportModel):
    epsilon: float
    hit_times: List[int]
    errors: List[float]
    max_error: float


class RecurrenceSummary(ReportModel):
    lam_re: float
    lam_im: float
    N: int
    partial_norm_sq: Magnitude
    gap_indices: List[int]
    cauchy_gaps: List[Magnitude]
    gaps_monotone: bool
    max_resubstitution_error: float


class ChaosReport(ReportModel):
    schema_version: str = SCHEMA_VERSION
    params: OperatorParams
    weight_convention: str = WEIGHT_CONVENTION
    chaotic_status: Literal["proven", "special_case", "outside_proven_region", "not_chaotic_self_adjoint"]
    hypotheses: Optional[HypothesesWitness] = None
    eigenvectors: List[EigenvectorSummary] = Field(default_factory=list)
    periodic: List[PeriodicSummary] = Field(default_factory=list)
    density: Optional[DensitySummary] = None
    approximant: Optional[ApproximantSummary] = None
    recurrences: List[RecurrenceSummary] = Field(default_factory=list)
    notes: List[str] = Field(default_factory=list)


class BoundCertificate(ReportModel):
    schema_version: str = SCHEMA_VERSION
    params: OperatorParams
    j: int
    epsilon: float
    c0: float
    c1: float
    c1_sq: ExactRational
    kappa_j: ExactRational
    delta: float
    c_delta: float
    C_eps: float
    K_max: int
    majorant_holds: bool
    verified_on: str
