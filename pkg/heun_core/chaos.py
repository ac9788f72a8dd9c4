"""Eigenvectors, periodic points, hypercyclic approximants and the Hyp1-Hyp3 checker.

Everything here works with the shift in ``shift_operator``; the recurrence and
the hypothesis checker index its weights as omega_n := omega(p + n - 1), n >= 1.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp

from .config import toolkit_config
from .exceptions import BudgetExhaustedError, DomainError, UnsupportedParametersError
from .reports import (
    ApproximantSummary,
    ChaosReport,
    DensitySummary,
    EigenvectorSummary,
    Hyp2Witness,
    Hyp3Witness,
    HypothesesWitness,
    PeriodicSummary,
    RecurrenceSummary,
    SummabilityWitness,
    WindowCheck,
)
from .shift_operator import ShiftOperator, shift_operator
from .weights import CoefficientVector, OperatorParams, growth_floor, inverse_sqrt_tail_bound, to_mpc

logger = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = (0, 1, 1j, 2 + 3j)
GAMMA_SPECS = ("power_log", "sqrt_log")


def _truncated(v: CoefficientVector) -> CoefficientVector:
    return v.restricted(v.offset, v.end - 1)


def _cauchy_gap(coeffs: Sequence[Any], J: int):
    """S(2J) - S(J) for S(J) the sum of the first J squared moduli"""
    return mp.fsum(abs(c) ** 2 for c in coeffs[J:2 * J])


# Eigenvectors

def eigenvector(lam: Any, params: OperatorParams, N: int) -> CoefficientVector:
    """a_k = prod_{j=p}^{k-1} lam / omega(j) for p <= k <= p + N, with a geometric tail bound"""
    if N < 1:
        raise DomainError(f"N must be at least 1, got {N}")
    op = shift_operator(params)
    lam = to_mpc(lam)
    coeffs = [mp.mpc(1)]
    for k in range(params.p, params.p + N):
        coeffs.append(coeffs[-1] * lam / op.omega(k))
    ratio = abs(lam) / op.omega(params.p + N)
    tail = abs(coeffs[-1]) * ratio / (1 - ratio) if ratio < 1 else None
    return CoefficientVector(offset=params.p, coeffs=tuple(coeffs), tail_bound=tail)


def eigenvector_residual(phi: CoefficientVector, lam: Any, params: OperatorParams):
    """||(H - lam) phi|| on the indices below the last retained one"""
    op = shift_operator(params)
    head = _truncated(phi)
    image = op.apply(head)
    kept = head.restricted(head.offset, head.end - 2)
    return (image - kept.scaled(lam)).norm()


def summarize_eigenvector(lam: Any, params: OperatorParams, N: int, gap_J: int = 128) -> EigenvectorSummary:
    lam = complex(lam)
    phi = eigenvector(lam, params, N)
    norm = phi.norm()
    residual = eigenvector_residual(phi, lam, params)
    long_phi = phi if len(phi.coeffs) >= 2 * gap_J else eigenvector(lam, params, 2 * gap_J)
    return EigenvectorSummary(
        lam_re=lam.real,
        lam_im=lam.imag,
        N=N,
        norm=norm,
        tail_bound=phi.tail_bound,
        residual=residual,
        relative_residual=float(residual / norm),
        cauchy_gap=_cauchy_gap(long_phi.coeffs, gap_J),
    )


# Periodic points

def _check_period(s: int, N: int, params: OperatorParams, J: int) -> None:
    if s < params.p:
        raise DomainError(f"s must be at least p={params.p}, got {s}")
    if N < max(s, s - params.p + 1, 1):
        raise DomainError(f"period N={N} must satisfy N >= s and N > s - p (s={s}, p={params.p})")
    if J < 1:
        raise DomainError("J = 0 leaves only e_s, which is not periodic; J must be at least 1")


def _periodic_coefficients(op: ShiftOperator, s: int, N: int, J: int) -> List[Any]:
    # c_k = prod_{j=s}^{kN+s-1} 1/omega(j)
    coeffs = []
    c = mp.mpf(1)
    for k in range(1, J + 1):
        c = c / op.weight_product((k - 1) * N + s, N)
        coeffs.append(c)
    return coeffs


def periodic_point(s: int, N: int, params: OperatorParams, J: int) -> CoefficientVector:
    """e_s + sum_{k=1..J} c_k e_{kN+s}: an N-periodic point of the shift, truncated after J terms"""
    _check_period(s, N, params, J)
    op = shift_operator(params)
    coeffs = _periodic_coefficients(op, s, N, J)
    values = {s: 1}
    for k, c in enumerate(coeffs, start=1):
        values[k * N + s] = c
    # c_{k+1}/c_k <= omega(kN+s)^(-N) <= omega(JN+s)^(-N) for k >= J
    ratio = op.omega(J * N + s) ** (-N)
    tail = coeffs[-1] * ratio / (1 - ratio) if ratio < 1 else None
    return CoefficientVector(offset=s, coeffs=CoefficientVector.from_mapping(values).coeffs, tail_bound=tail)


def periodic_residual(phi: CoefficientVector, s: int, N: int, params: OperatorParams, J: int):
    """||H^N phi - phi|| restricted to indices <= (J-1)N + s"""
    op = shift_operator(params)
    head = _truncated(phi)
    diff = op.power(head, N) - head
    return diff.restricted(params.p, (J - 1) * N + s).norm()


def summarize_periodic(s: int, N: int, params: OperatorParams, J: int) -> PeriodicSummary:
    phi = periodic_point(s, N, params, J)
    residual = periodic_residual(phi, s, N, params, J)
    return PeriodicSummary(
        s=s,
        period=N,
        J=J,
        residual=float(residual),
        # H^N of the truncation misses exactly c_J at index JN + s
        spill_over=float(abs(phi.coefficient(J * N + s))),
        tail_bound=None if phi.tail_bound is None else float(phi.tail_bound),
    )


def density_scale(target: CoefficientVector, params: OperatorParams, rescale_target: float) -> float:
    """1 if every |a_s| omega(p)...omega(s-1) is below 1, else the factor bringing the largest to rescale_target"""
    op = shift_operator(params)
    largest = max(abs(a) * op.weight_product(params.p, k - params.p) for k, a in target.items())
    if largest < 1:
        return 1.0
    return float(rescale_target / largest)


def density_search(target: CoefficientVector, epsilon: float, params: OperatorParams, J: int = 30,
                   max_period: Optional[int] = None,
                   rescale_target: Optional[float] = None) -> Tuple[CoefficientVector, DensitySummary]:
    """Find a periodic psi = sum a_s phi_{s,N} within epsilon of the (rescaled) target"""
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if not target.is_finite or target.offset < params.p:
        raise DomainError("density search needs a finite target supported at or above e_p")
    top = target.support_top()
    if top is None:
        raise DomainError("density search needs a nonzero target")
    max_period = max_period or toolkit_config.density_max_period
    rescale_target = rescale_target or toolkit_config.periodic_rescale_target

    scale = density_scale(target, params, rescale_target)
    scaled = target.scaled(scale)
    distance = None
    N = max(top, top - params.p + 1, 1)
    while N <= max_period:
        psi = CoefficientVector.zero(params.p)
        tail = mp.mpf(0)
        for s, a in scaled.items():
            if a == 0:
                continue
            phi = periodic_point(s, N, params, J)
            psi = psi + _truncated(phi).scaled(a)
            tail += abs(a) * phi.tail_bound if phi.tail_bound is not None else mp.inf
        distance = (scaled - psi).norm() + tail
        logger.debug(f"Density search {params.label}: N={N} distance={float(distance):.3e}")
        if distance <= epsilon:
            logger.info(f"Periodic point within {epsilon:g} found for {params.label} at N={N}")
            return psi, DensitySummary(scale=scale, period=N, distance=float(distance), epsilon=epsilon, J=J)
        N += 1
    raise BudgetExhaustedError(
        f"no periodic point within {epsilon:g} for periods up to {max_period}",
        achieved_error=float(distance) if distance is not None else float("inf"),
        depth=max_period,
    )


# Hypercyclic approximants

@dataclass
class ApproximantResult:
    phi: CoefficientVector
    hit_times: List[int] = field(default_factory=list)
    errors: List[Any] = field(default_factory=list)

    def summary(self, epsilon: float) -> ApproximantSummary:
        errors = [float(e) for e in self.errors]
        return ApproximantSummary(epsilon=epsilon, hit_times=list(self.hit_times), errors=errors,
                                  max_error=max(errors, default=0.0))


def approximant(targets: Sequence[CoefficientVector], epsilon: float, params: OperatorParams,
                max_depth: Optional[int] = None) -> ApproximantResult:
    """phi = sum_j S^{k_j} psi_j with H^{k_j} phi within epsilon of psi_j.

    k_j is the smallest depth that (a) exceeds every k_i + top(psi_i) - p for i < j, so
    H^{k_j} annihilates the earlier summands exactly, and (b) keeps
    ||S^{k_j - k_i} psi_j|| below epsilon / (2 * len(targets)) for every i < j.
    """
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if not targets:
        return ApproximantResult(phi=CoefficientVector.zero(params.p))
    for index, psi in enumerate(targets):
        if not psi.is_finite or (psi.coeffs and psi.offset < params.p):
            raise DomainError(f"target {index} must be finite and supported at or above e_{params.p}")
    max_depth = max_depth or toolkit_config.approximant_max_depth
    op = shift_operator(params)
    p = params.p
    budget = mp.mpf(epsilon) / (2 * len(targets))

    tops = [psi.support_top() if psi.support_top() is not None else psi.offset for psi in targets]
    hit_times: List[int] = []
    for j, psi in enumerate(targets):
        if j == 0:
            k = max(tops[0] - p + 1, 1)
        else:
            k = max(max(hit_times[i] + tops[i] - p + 1 for i in range(j)), hit_times[-1] + 1)
            moved = op.right_inverse_power(psi, k - hit_times[-1])
            while moved.norm() >= budget:
                k += 1
                if k > max_depth:
                    raise BudgetExhaustedError(
                        f"target {j} needs a hit time beyond the depth limit {max_depth}",
                        achieved_error=float(moved.norm()), depth=k, target_index=j)
                moved = op.apply_right_inverse(moved)
        if k > max_depth:
            raise BudgetExhaustedError(f"target {j} needs a hit time beyond the depth limit {max_depth}",
                                       achieved_error=float("inf"), depth=k, target_index=j)
        hit_times.append(k)

    phi = CoefficientVector.zero(p)
    for k, psi in zip(hit_times, targets):
        phi = phi + op.right_inverse_power(psi, k)

    # measure H^{k_j} phi - psi_j along one orbit
    errors = []
    image, depth = phi, 0
    for k, psi in zip(hit_times, targets):
        while depth < k:
            image = op.apply(image)
            depth += 1
        errors.append((image - psi).norm())

    worst = max(errors)
    if worst >= epsilon:
        raise BudgetExhaustedError(f"approximant error {float(worst):.3e} exceeds {epsilon:g}",
                                   achieved_error=float(worst), depth=hit_times[-1])
    logger.info(f"Approximant for {params.label}: hit times {hit_times}, max error {float(worst):.3e}")
    return ApproximantResult(phi=phi, hit_times=hit_times, errors=errors)


# Three-term recurrence

@dataclass
class RecurrenceSolution:
    """u_1 = 1, u_2 = lam/omega_1, omega_n u_{n+1} = lam u_n - omega_{n-1} u_{n-1}"""

    lam: complex
    u: List[Any]
    gap_indices: List[int]
    cauchy_gaps: List[Any]
    max_resubstitution_error: float

    @property
    def partial_norm_sq(self):
        return mp.fsum(abs(x) ** 2 for x in self.u)

    @property
    def gaps_monotone(self) -> bool:
        pairs = [(J, g) for J, g in zip(self.gap_indices, self.cauchy_gaps) if J >= 32]
        if len(pairs) < 2:
            pairs = list(zip(self.gap_indices, self.cauchy_gaps))
        return all(b[1] < a[1] for a, b in zip(pairs, pairs[1:]))

    def summary(self, params: OperatorParams) -> RecurrenceSummary:
        return RecurrenceSummary(
            lam_re=self.lam.real,
            lam_im=self.lam.imag,
            N=len(self.u),
            partial_norm_sq=self.partial_norm_sq,
            gap_indices=list(self.gap_indices),
            cauchy_gaps=list(self.cauchy_gaps),
            gaps_monotone=self.gaps_monotone,
            max_resubstitution_error=self.max_resubstitution_error,
        )


def recurrence_u(lam: Any, params: OperatorParams, N: int) -> RecurrenceSolution:
    """u_1..u_N of the eigenvalue recurrence of H + H*; resubstitution error in units of mp.eps"""
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N}")
    op = shift_operator(params)
    lam_c = to_mpc(lam)

    def w(n):
        return op.omega(params.p + n - 1)

    u = [mp.mpc(1), lam_c / w(1)]
    for n in range(2, N):
        u.append((lam_c * u[n - 1] - w(n - 1) * u[n - 2]) / w(n))

    worst = 0.0
    for n in range(2, N):
        left, middle, right = w(n - 1) * u[n - 2], lam_c * u[n - 1], w(n) * u[n]
        scale = max(abs(left), abs(middle), abs(right))
        if scale == 0:
            continue
        worst = max(worst, float(abs(left + right - middle) / (scale * mp.eps)))

    gap_indices = []
    J = 2
    while 2 * J <= N:
        gap_indices.append(J)
        J *= 2
    gaps = [_cauchy_gap(u, J) for J in gap_indices]
    return RecurrenceSolution(lam=complex(lam_c), u=u, gap_indices=gap_indices, cauchy_gaps=gaps,
                              max_resubstitution_error=worst)


# Hypotheses Hyp1-Hyp3

def _gamma(spec: str, params: OperatorParams, n: int):
    if spec == "power_log":
        return params.p * mp.mpf(n) ** (mp.mpf(params.m) / 2) * mp.log(n)
    if spec == "sqrt_log":
        return mp.sqrt(n) * mp.log(n)
    raise DomainError(f"unknown gamma specification {spec!r}; expected one of {GAMMA_SPECS}")


def _inverse_gamma_sq_series(spec: str, params: OperatorParams, window: int) -> Tuple[str, Any, Any]:
    """Partial sum over 2 <= n <= window of 1/gamma_n^2 and an integral bound on the rest"""
    partial = mp.fsum(1 / _gamma(spec, params, n) ** 2 for n in range(2, window + 1))
    log_w = mp.log(window)
    if spec == "sqrt_log" or params.m == 1:
        # sum 1/(c n log^2 n): Bertrand series, tail <= 1/(c log W)
        c = 1 if spec == "sqrt_log" else params.p ** 2
        return "bertrand (n log^2 n)", partial, 1 / (c * log_w)
    m = params.m
    tail = mp.mpf(window) ** (1 - m) / (params.p ** 2 * (m - 1) * log_w ** 2)
    return f"p-series (n^{m} log^2 n)", partial, tail


def _hyp3(params: OperatorParams, window: int, spec: str) -> Hyp3Witness:
    op = shift_operator(params)

    def w(n):
        return op.omega(params.p + n - 1)

    def g(n):
        return _gamma(spec, params, n)

    checks: List[WindowCheck] = []
    # growth condition: omega_n gamma_n / gamma_{n+1} >= n^(1+alpha)
    n0 = max(3, window // 10)
    exponents = {n: mp.log(w(n) * g(n) / g(n + 1)) / mp.log(n) - 1 for n in range(n0, window + 1)}
    argmin = min(exponents, key=lambda n: exponents[n])
    alpha = exponents[argmin]
    checks.append(WindowCheck(name="growth:alpha", index=argmin, value=float(alpha), threshold=0.0,
                              holds=bool(alpha > 0)))
    samples = sorted(set(int(n) for n in np.geomspace(n0, window, 6).round()) | {argmin})
    for n in samples:
        value = w(n) * g(n) / g(n + 1)
        threshold = mp.mpf(n) ** (1 + alpha)
        checks.append(WindowCheck(name="growth", index=n, value=float(value), threshold=float(threshold),
                                  holds=bool(value >= threshold * (1 - mp.mpf(10) ** -12))))

    # ratio expansion 1 - a/n + O(n^-(1+beta)): Richardson on y_n = n (1 - R_n)
    def y(n):
        ratio = (w(n - 1) / w(n)) * (g(n + 1) / g(n - 1))
        return n * (1 - ratio)

    n1 = max(3, window // 4)
    y1, y2, y3 = y(n1), y(2 * n1), y(4 * n1)
    d1, d2 = y2 - y1, y3 - y2
    if d1 != 0 and 0 < d2 / d1 < 1:
        r = d2 / d1
        beta = -mp.log(r) / mp.log(2)
        a = y3 + d2 * r / (1 - r)
    else:
        beta = mp.mpf(0)
        a = y3
    checks.append(WindowCheck(name="ratio:a", index=4 * n1, value=float(a), threshold=0.0, holds=bool(a > 0)))
    checks.append(WindowCheck(name="ratio:beta", index=2 * n1, value=float(beta), threshold=0.0,
                              holds=bool(beta > 0)))

    series, partial, tail = _inverse_gamma_sq_series(spec, params, window)
    checks.append(WindowCheck(name="inverse_gamma_sq:tail", index=window, value=float(tail), threshold=float(partial),
                              holds=bool(tail <= partial)))

    return Hyp3Witness(
        alpha=float(alpha),
        beta=float(beta),
        a=float(a),
        gamma_spec=spec,
        gamma_series=series,
        inverse_gamma_sq_sum=float(partial),
        inverse_gamma_sq_tail=float(tail),
        window_checks=checks,
    )


def check_hyp2(params: OperatorParams, window: int) -> Hyp2Witness:
    """Exact omega_{n-1}^2 omega_{n+1}^2 <= omega_n^4 for 2 <= n <= window"""
    op = shift_operator(params)
    for n in range(2, window + 1):
        k = params.p + n - 1
        if op.omega_sq(k - 1) * op.omega_sq(k + 1) > op.omega_sq(k) ** 2:
            return Hyp2Witness(verified_up_to=n - 1, first_failure=n)
    return Hyp2Witness(verified_up_to=window)


def proven_region(params: OperatorParams) -> str:
    if 2 * params.p + params.m > 4:
        return "proven"
    if (params.p, params.m) == (1, 1):
        return "special_case"
    return "outside_proven_region"


def check_hypotheses(params: OperatorParams, window: int,
                     gamma_spec: Optional[str] = None) -> HypothesesWitness:
    """Finite-window evidence for Hyp1-Hyp3 of the chaos criterion.

    Hyp3 asks for some gamma; without an explicit gamma_spec the candidates are tried in
    order (sqrt_log first at (1, 1)) and the first one passing every window check is reported.
    """
    if params.p == 0:
        raise UnsupportedParametersError("gamma_k = p k^(m/2) log k degenerates at p = 0")
    if window < 10:
        raise DomainError(f"window must be at least 10, got {window}")
    op = shift_operator(params)

    partial = mp.fsum(1 / op.omega(params.p + n - 1) for n in range(1, window + 1))
    tail = inverse_sqrt_tail_bound(params, 1, params.p - 1, window)
    hyp1 = SummabilityWitness(
        J=window,
        partial_sum=float(partial),
        tail_bound=None if tail is None else float(tail),
        converges=params.degree > 2,
        growth_floor=growth_floor(params, 1, params.p - 1, window),
    )

    hyp2 = check_hyp2(params, window)

    if gamma_spec is not None:
        candidates = [gamma_spec]
    elif (params.p, params.m) == (1, 1):
        candidates = ["sqrt_log", "power_log"]
    else:
        candidates = list(GAMMA_SPECS)
    results = {spec: _hyp3(params, window, spec) for spec in candidates}
    passing = [spec for spec in candidates if results[spec].all_pass]
    chosen = passing[0] if passing else candidates[0]
    if not passing:
        logger.warning(f"No gamma candidate passes every window check for {params.label}")

    return HypothesesWitness(
        params=params,
        window=window,
        hyp1=hyp1,
        hyp2=hyp2,
        hyp3=results[chosen],
        gamma_candidates={spec: results[spec].all_pass for spec in candidates},
        analytic_flag=2 * params.p + params.m > 4,
        proven_region=proven_region(params),
    )


# Report assembly

def build_chaos_report(params: OperatorParams, window: int = 1000,
                       lambdas: Sequence[Any] = DEFAULT_LAMBDA_GRID, N: int = 200,
                       periodic_J: int = 30, epsilon: float = 1e-6,
                       recurrence_N: int = 2048) -> ChaosReport:
    """Hypotheses plus the constructive witnesses for one (p, m)"""
    notes: List[str] = []
    p = params.p
    if p == 0:
        status = "not_chaotic_self_adjoint"
        hypotheses = None
        notes.append("p = 0: recorded as non-chaotic from self-adjointness; not re-proven numerically")
    else:
        hypotheses = check_hypotheses(params, window)
        status = hypotheses.proven_region
        if status == "outside_proven_region":
            notes.append("1 < p + m/2 <= 2 outside (1, 1): chaoticity is not settled; window checks are evidence only")
    notes.append("Chaoticity with nonzero defect numbers in general remains open and is not computed")

    eigenvectors = [summarize_eigenvector(lam, params, N) for lam in lambdas]

    periodic = []
    for s in (p, p + 1):
        for period in (3, 5):
            if period >= max(s, s - p + 1):
                periodic.append(summarize_periodic(s, period, params, periodic_J))

    target = CoefficientVector(offset=p, coeffs=(1, 0.1))
    density = None
    try:
        _, density = density_search(target, epsilon, params, J=periodic_J)
    except BudgetExhaustedError as e:
        notes.append(f"density search stopped: {e}")

    targets = [CoefficientVector.basis(p), CoefficientVector.basis(p + 1, 2)]
    approx = None
    try:
        approx = approximant(targets, epsilon, params).summary(epsilon)
    except BudgetExhaustedError as e:
        notes.append(f"approximant stopped: {e} (achieved {e.achieved_error:.3e})")

    recurrences = [recurrence_u(lam, params, recurrence_N).summary(params) for lam in lambdas]

    report = ChaosReport(
        params=params,
        chaotic_status=status,
        hypotheses=hypotheses,
        eigenvectors=eigenvectors,
        periodic=periodic,
        density=density,
        approximant=approx,
        recurrences=recurrences,
        notes=notes,
    )
    logger.info(f"✅ Chaos report for {params.label}: {status}")
    return report
