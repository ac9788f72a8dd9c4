#!/usr/bin/env python3
"""
Tests for the backward weighted shift, its adjoint and its right inverse
"""

import numpy as np
import pytest
from mpmath import mp

from heun_core.exceptions import DomainError
from heun_core.shift_operator import (
    apply_right_inverse,
    apply_shift,
    apply_shift_adjoint,
    shift_operator,
)
from heun_core.weights import CoefficientVector, OperatorParams, truncated_matrix


def random_vector(rng, offset, size):
    radius = np.sqrt(rng.uniform(0, 1, size))
    angle = rng.uniform(0, 2 * np.pi, size)
    return CoefficientVector(offset=offset, coeffs=tuple(complex(z) for z in radius * np.exp(1j * angle)))


def close(a, b, tol=1e-12):
    return abs(a - b) <= tol * max(1, abs(a), abs(b))


def test_bottom_vector_is_annihilated(heun_11):
    assert apply_shift(CoefficientVector.basis(1), heun_11).support_top() is None
    p3 = OperatorParams(p=3, m=2)
    assert apply_shift(CoefficientVector.basis(3), p3).support_top() is None


def test_shift_example(heun_11):
    image = apply_shift(CoefficientVector.basis(2), heun_11)
    assert image.support_top() == 1
    assert close(image.coefficient(1), mp.sqrt(2))


def test_shift_square_kills_e2(heun_11):
    op = shift_operator(heun_11)
    assert op.power(CoefficientVector.basis(2), 2).support_top() is None
    assert op.power(CoefficientVector.basis(2), 0).coefficient(2) == 1


def test_adjoint_example(heun_11):
    image = apply_shift_adjoint(CoefficientVector.basis(1), heun_11)
    assert image.offset == 2
    assert close(image.coefficient(2), shift_operator(heun_11).omega(1))


def test_adjoint_duality(grid, rng):
    for params in grid:
        op = shift_operator(params)
        for _ in range(5):
            u = random_vector(rng, params.p + int(rng.integers(0, 5)), int(rng.integers(1, 20)))
            v = random_vector(rng, params.p + int(rng.integers(0, 5)), int(rng.integers(1, 20)))
            assert close(op.apply_adjoint(u).inner(v), u.inner(op.apply(v))), params.label


def test_symmetric_matrix_is_the_m1_jacobi_matrix():
    for p in range(4):
        params = OperatorParams(p=p, m=1)
        assert np.array_equal(shift_operator(params).symmetric_matrix(12), truncated_matrix(params, 12))


def test_symmetric_matrix_rejects_empty(heun_11):
    with pytest.raises(DomainError):
        shift_operator(heun_11).symmetric_matrix(0)


def test_right_inverse_is_a_right_inverse(heun_11):
    for k in range(1, 52):
        image = apply_shift(apply_right_inverse(CoefficientVector.basis(k), heun_11), heun_11)
        assert image.offset == k
        assert abs(image.coefficient(k) - 1) <= 4 * mp.eps
        assert image.support_top() == k


def test_right_inverse_powers_decay(heun_11):
    op = shift_operator(heun_11)
    image = op.right_inverse_power(CoefficientVector.basis(1), 60)
    assert image.offset == 61
    assert abs(image.coefficient(61)) < 1e-30
    assert close(image.coefficient(61), 1 / op.weight_product(1, 60))


def test_right_inverse_of_zero(heun_11):
    assert apply_right_inverse(CoefficientVector.zero(1), heun_11).support_top() is None
    assert shift_operator(heun_11).right_inverse_power(CoefficientVector.zero(1), 5).support_top() is None


def test_powers_match_repeated_application(rng):
    params = OperatorParams(p=1, m=2)
    op = shift_operator(params)
    v = random_vector(rng, 3, 15)
    stepped, inverse_stepped = v, v
    for _ in range(4):
        stepped = op.apply(stepped)
        inverse_stepped = op.apply_right_inverse(inverse_stepped)
    direct, inverse_direct = op.power(v, 4), op.right_inverse_power(v, 4)
    for k in range(params.p, 30):
        assert close(direct.coefficient(k), stepped.coefficient(k))
        assert close(inverse_direct.coefficient(k), inverse_stepped.coefficient(k))


def test_shift_undoes_right_inverse_on_random_vectors(grid, rng):
    for trial in range(100):
        params = grid[trial % len(grid)]
        op = shift_operator(params)
        psi = random_vector(rng, params.p + int(rng.integers(0, 10)), int(rng.integers(1, 30)))
        n = int(rng.integers(1, 8))
        back = op.power(op.right_inverse_power(psi, n), n)
        for k in psi.indices():
            assert close(back.coefficient(k), psi.coefficient(k)), params.label
        assert (back - psi).norm() <= 1e-12 * max(1, psi.norm())


def test_vectors_below_the_offset_are_rejected(heun_11):
    with pytest.raises(DomainError):
        apply_shift(CoefficientVector.basis(0), heun_11)
    with pytest.raises(DomainError):
        apply_right_inverse(CoefficientVector.basis(0), heun_11)


def test_infinite_vectors_are_rejected(heun_11):
    v = CoefficientVector(offset=1, coeffs=(1,), tail_bound=None)
    with pytest.raises(DomainError):
        apply_shift_adjoint(v, heun_11)


def test_negative_powers_are_rejected(heun_11):
    with pytest.raises(DomainError):
        shift_operator(heun_11).power(CoefficientVector.basis(1), -1)


def test_operator_registry_is_shared(heun_11):
    assert shift_operator(heun_11) is shift_operator(OperatorParams(p=1, m=1))
