#!/usr/bin/env python3
"""
Tests for the block-Jacobi model and the complete-indeterminacy verdict
"""

from fractions import Fraction

import numpy as np
import pytest

from heun_core.exceptions import DomainError
from heun_core.indeterminacy import (
    build_blocks,
    check_logconcavity,
    check_summability,
    divergence_witness,
    first_failure,
    kernel_solutions,
    partial_sums,
    summarize_branch,
    verdict,
)
from heun_core.reports import IndeterminacyReport
from heun_core.weights import OperatorParams, truncated_matrix


def test_block_entries_heun_11(heun_11):
    model = build_blocks(heun_11, 10)
    for i in range(1, 11):
        assert model.block(i) == [Fraction(i * i * (i + 1))]
    assert model.norm_sq(3) == 36


def test_block_shape_and_order():
    model = build_blocks(OperatorParams(p=1, m=2), 5)
    entries = model.block(1)
    assert len(entries) == 2
    assert entries[0] < entries[1]
    assert model.norm_sq(1) == entries[-1]
    assert model.basis_index(1, 0) == 1


def test_assembled_model_is_the_truncated_matrix():
    params = OperatorParams(p=1, m=2)
    model = build_blocks(params, 4)
    assert np.allclose(model.assemble(4), truncated_matrix(params, 8))


def test_build_blocks_rejects_empty(heun_11):
    with pytest.raises(DomainError):
        build_blocks(heun_11, 0)


def test_i_max_sets_only_the_default_lengths(heun_11):
    model = build_blocks(heun_11, 3)
    assert model.assemble().shape == (3, 3)
    assert len(model.norm_rows()) == 3
    assert model.block(12) == [Fraction(12 * 12 * 13)]
    assert model.norm_sq(12) == 12 * 12 * 13


def test_logconcavity_example(heun_11):
    model = build_blocks(heun_11, 3)
    assert model.norm_sq(1) * model.norm_sq(3) == 72
    assert model.norm_sq(2) ** 2 == 144
    assert check_logconcavity(model, 2, 2) == [True]


def test_logconcavity_sweep(grid):
    """norm^2(i-1) norm^2(i+1) <= norm^2(i)^2 for i in [max(2, m), 2000]"""
    for params in grid:
        model = build_blocks(params, 2001)
        i_from = max(2, params.m)
        verdicts = check_logconcavity(model, i_from, 2000)
        assert first_failure(verdicts, i_from) is None, params.label


def test_logconcavity_needs_a_predecessor(heun_11):
    with pytest.raises(DomainError):
        check_logconcavity(build_blocks(heun_11, 5), 1, 3)


def test_summability_heun_11_is_cauchy(heun_11):
    model = build_blocks(heun_11, 200)
    witness = check_summability(model, 100)
    sums = partial_sums(model, 200)
    assert witness.converges
    assert 0 < sums[199] - sums[99] <= witness.tail_bound
    assert np.all(np.diff(sums) > 0)


def test_summability_flags():
    assert not check_summability(build_blocks(OperatorParams(p=0, m=2), 10), 10).converges
    assert check_summability(build_blocks(OperatorParams(p=0, m=2), 10), 10).tail_bound is None
    assert check_summability(build_blocks(OperatorParams(p=2, m=1), 10), 10).converges


def test_summability_rejects_empty_window(heun_11):
    with pytest.raises(DomainError):
        check_summability(build_blocks(heun_11, 5), 0)


def test_summability_tail_is_small_and_decreasing(grid):
    for params in grid:
        if params.degree <= 2:
            continue
        model = build_blocks(params, 10000)
        large = check_summability(model, 10000)
        small = check_summability(model, 1000)
        assert large.tail_bound < 0.1 * large.partial_sum, params.label
        assert large.tail_bound < small.tail_bound, params.label


def test_divergence_witness_for_boundary_case():
    model = build_blocks(OperatorParams(p=0, m=2), 8192)
    witness = divergence_witness(model, [2 ** k for k in range(4, 14)])
    assert 0.45 < witness["slope"] < 0.55
    for J, value in zip(witness["J_values"], witness["partial_sums"]):
        assert value >= 0.9 * witness["slope"] * np.log(J) - witness["offset"] - 1e-12
    assert witness["partial_sums"][-1] > witness["partial_sums"][0] + 2


def test_kernel_first_step_heun_11(heun_11):
    odd, even = kernel_solutions(build_blocks(heun_11, 10), 5)
    assert odd.terms[0].magnitude_sq == (Fraction(1),)
    assert odd.terms[1].magnitude_sq == (Fraction(1, 6),)
    assert odd.terms[1].sign == -1
    # odd branch lives on odd blocks only (phi_{2j} = 0)
    assert all(t.block_index % 2 == 1 for t in odd.terms)
    assert all(t.block_index % 2 == 0 for t in even.terms)
    assert even.boundary_prefactor_sq == (Fraction(2),)


def test_kernel_residual_and_domination(grid):
    for params in grid:
        model = build_blocks(params, 500)
        for solution in kernel_solutions(model, 200):
            assert solution.residual_zero(model), params.label
            assert solution.domination_holds(model), params.label


def test_kernel_decay_exponent():
    """squared terms decay like j^(-(2p+m)/2)"""
    for params in [OperatorParams(p=1, m=1), OperatorParams(p=1, m=3), OperatorParams(p=2, m=2)]:
        model = build_blocks(params, 1100)
        odd, _ = kernel_solutions(model, 500)
        assert abs(odd.decay_exponent() + params.degree / 2) < 0.15, params.label


def test_kernel_tail_bound_dominates_more_terms(heun_11):
    model = build_blocks(heun_11, 2000)
    short, _ = kernel_solutions(model, 50)
    long, _ = kernel_solutions(model, 400)
    extra = long.partial_norm_sq() - short.partial_norm_sq()
    assert float(extra) <= short.tail_bound_sq


def test_kernel_custom_seed(heun_11):
    odd, _ = kernel_solutions(build_blocks(heun_11, 10), 3, seed=[2])
    assert odd.terms[1].magnitude_sq == (Fraction(4, 6),)
    with pytest.raises(DomainError):
        kernel_solutions(build_blocks(heun_11, 10), 3, seed=[0])


def test_branch_summary(heun_11):
    model = build_blocks(heun_11, 100)
    odd, even = kernel_solutions(model, 20)
    summary = summarize_branch(model, even)
    assert summary.parity == "even"
    assert summary.in_l2
    assert summary.terms == 21


def test_verdict_examples():
    report = verdict(OperatorParams(p=1, m=1), 2000)
    assert report.verdict == "completely_indeterminate"
    assert report.claimed_defect_numbers == (1, 1)
    assert report.logconcavity_verified_up_to == 2000
    assert verdict(OperatorParams(p=0, m=2), 100).verdict == "criterion_failed"
    report = verdict(OperatorParams(p=1, m=3), 300)
    assert report.verdict == "completely_indeterminate"
    assert report.claimed_defect_numbers == (3, 3)


def test_verdict_across_grid(grid):
    for params in grid:
        report = verdict(params, 200)
        assert report.verdict != "inconclusive", params.label
        if 2 * params.p + params.m > 2:
            assert report.verdict == "completely_indeterminate", params.label
            assert report.claimed_defect_numbers == (params.m, params.m)
            assert all(report.kernel_in_l2.values())
        else:
            assert report.verdict == "criterion_failed", params.label
            assert report.claimed_defect_numbers is None


def test_verdict_window_must_cover_a_block():
    with pytest.raises(DomainError):
        verdict(OperatorParams(p=1, m=3), 2)


def test_report_json_round_trip(heun_11):
    report = verdict(heun_11, 100)
    again = IndeterminacyReport.model_validate_json(report.model_dump_json())
    assert again == report
    assert '"weight_convention"' in report.model_dump_json()
