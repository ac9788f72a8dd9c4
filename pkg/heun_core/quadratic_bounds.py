"""Explicit constants for |<H phi, phi>| <= eps ||a^j phi||^2 + C_eps ||phi||^2 and their verification.

Proof chain, with u_k = sqrt(up^2(k)) and s = (2p+m)/2 < j:
  |<H phi, phi>| <= sum_k (u_{k-m} + u_k) |a_k|^2 <= sum_k 2 u_k |a_k|^2
  u_k <= c0 + c1 k^s                         (certified on [p, K_max], monotone tail beyond)
  k^s <= delta k^j + c_delta                 (Young, maximized at t* = (s/(j delta))^(1/(j-s)))
  k^j <= (k)_j / kappa_j for k >= j,         kappa_j = j!/j^j
so with delta = eps kappa_j / (2 c1) the constant C_eps = max(2 (c0 + c1 c_delta), 2 max_{k<j} u_k)
works; ||a^j phi||^2 = sum_k (k)_j |a_k|^2.
"""

import logging
import math
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np
from mpmath import iv, mp

from .config import toolkit_config
from .exceptions import DomainError, HypothesisViolationError
from .reports import BoundCertificate
from .weights import (
    CoefficientVector,
    OperatorParams,
    _falling,
    _require_finite,
    quadratic_form,
    weight_table,
)

logger = logging.getLogger(__name__)


def _sqrt_up(value: Fraction) -> float:
    """Float square root rounded up until its exact square covers value"""
    root = math.sqrt(float(value))
    while Fraction(root) ** 2 < value:
        root = math.nextafter(root, math.inf)
    return root


def derive_constants(params: OperatorParams, j: int, epsilon: float, K_max: int = 1000) -> BoundCertificate:
    """Certificate of the relative-form bound for a^j with every constant explicit"""
    s = Fraction(params.degree, 2)
    if j <= s:
        raise HypothesisViolationError(f"need j > p + m/2 = {float(s)}, got j={j}")
    if epsilon <= 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    k_lo = max(params.p, 1)
    if K_max <= k_lo:
        raise DomainError(f"K_max must exceed {k_lo}, got {K_max}")
    table = weight_table(params)
    degree = params.degree

    # beyond K_max, up^2(k)/k^(2p+m) <= prod_{d=1}^m (1 + d/k) <= prod_{d=1}^m (1 + d/K_max)
    window_max = max(Fraction(table.up_sq_int(k), k ** degree) for k in range(k_lo, K_max + 1))
    tail_max = math.prod((1 + Fraction(d, K_max) for d in range(1, params.m + 1)), start=Fraction(1))
    c1_sq = max(window_max, tail_max)
    c1 = _sqrt_up(c1_sq)
    c0 = _sqrt_up(Fraction(table.up_sq_int(0))) if params.p == 0 else 1.0

    majorant_holds = all(
        table.up_sq_int(k) <= c1_sq * k ** degree for k in range(k_lo, K_max + 1)
    ) and (params.p > 0 or table.up_sq_int(0) <= Fraction(c0) ** 2)

    kappa = Fraction(math.factorial(j), j ** j)
    delta = epsilon * float(kappa) / (2 * c1)
    s_f = float(s)
    t_star = (s_f / (j * delta)) ** (1 / (j - s_f))
    c_delta = t_star ** s_f * (1 - s_f / j)
    low_weights = [math.sqrt(table.up_sq_int(k)) for k in range(params.p, j)]
    C_eps = max(2 * (c0 + c1 * c_delta), 2 * max(low_weights, default=0.0))

    cert = BoundCertificate(
        params=params,
        j=j,
        epsilon=epsilon,
        c0=c0,
        c1=c1,
        c1_sq=c1_sq,
        kappa_j=kappa,
        delta=delta,
        c_delta=c_delta,
        C_eps=C_eps,
        K_max=K_max,
        majorant_holds=majorant_holds,
        verified_on=f"exact majorant on k in [{k_lo}, {K_max}], monotone ratio bound beyond",
    )
    logger.debug(f"Bound certificate {params.label} j={j} eps={epsilon:g}: C_eps={C_eps:.6g}")
    return cert


def young_objective(t: float, s: float, j: int, delta: float) -> float:
    """t^s - delta t^j, maximized by c_delta"""
    return t ** s - delta * t ** j


def verify_bound(cert: BoundCertificate, phi: CoefficientVector) -> Dict[str, Any]:
    """Evaluate both sides of the bound on a finite vector at working precision"""
    _require_finite(phi, "verify_bound")
    lhs = abs(quadratic_form(phi, cert.params))
    weighted = mp.fsum(_falling(k, cert.j) * abs(a) ** 2 for k, a in phi.items())
    rhs = cert.epsilon * weighted + cert.C_eps * phi.norm_sq()
    return {"lhs": float(lhs), "rhs": float(rhs), "holds": bool(lhs <= rhs)}


def verify_bound_exact(cert: BoundCertificate, coefficients: Dict[int, Any]) -> Dict[str, Any]:
    """Rational coefficients: interval enclosure of the left side against the exact right side"""
    coeffs = {k: Fraction(v) for k, v in coefficients.items() if Fraction(v) != 0}
    p, m = cert.params.p, cert.params.m
    table = weight_table(cert.params)
    weighted = sum((_falling(k, cert.j) * a * a for k, a in coeffs.items()), Fraction(0))
    norm_sq = sum((a * a for a in coeffs.values()), Fraction(0))
    rhs = Fraction(cert.epsilon) * weighted + Fraction(cert.C_eps) * norm_sq

    saved = iv.prec
    iv.prec = max(mp.prec, 53)
    try:
        # <H phi, phi> = 2 sum_k u_k a_{k+m} a_k for real coefficients
        total = iv.mpf(0)
        for k, a in coeffs.items():
            b = coeffs.get(k + m)
            if k < p or b is None:
                continue
            product = a * b
            total += iv.sqrt(iv.mpf(table.up_sq_int(k))) * iv.mpf(product.numerator) / product.denominator
        lhs = abs(2 * total)
        rhs_enclosure = iv.mpf(rhs.numerator) / rhs.denominator
        # True only when the whole enclosure lies below the right side
        holds = (lhs <= rhs_enclosure) is True
        lhs_upper = float(lhs.b)
    finally:
        iv.prec = saved
    return {"lhs_upper": lhs_upper, "rhs": rhs, "holds": holds}


def random_bound_sweep(cert: BoundCertificate, samples: Optional[int] = None, seed: Optional[int] = None,
                       max_support: int = 50, max_offset: int = 100) -> Dict[str, Any]:
    """Seeded random finite vectors with coefficients uniform in the unit disc"""
    samples = samples if samples is not None else toolkit_config.bound_sample_count
    seed = seed if seed is not None else toolkit_config.random_seed
    rng = np.random.default_rng(seed)
    violations = 0
    worst_ratio = 0.0
    for _ in range(samples):
        size = int(rng.integers(1, max_support + 1))
        offset = int(rng.integers(0, max_offset + 1))
        radii = np.sqrt(rng.uniform(0.0, 1.0, size))
        angles = rng.uniform(0.0, 2 * np.pi, size)
        values = radii * np.exp(1j * angles)
        phi = CoefficientVector(offset=offset, coeffs=tuple(complex(v) for v in values))
        result = verify_bound(cert, phi)
        if not result["holds"]:
            violations += 1
        if result["rhs"] > 0:
            worst_ratio = max(worst_ratio, result["lhs"] / result["rhs"])
    if violations:
        logger.warning(f"{violations} of {samples} samples violate the bound for {cert.params.label}")
    return {"samples": samples, "seed": seed, "violations": violations, "worst_ratio": worst_ratio}
