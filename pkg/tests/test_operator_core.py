from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_hermitian, random_matrix
from floquet_forge.models import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z, annihilation, number
from floquet_forge.operator_core import (
    BlockPartition,
    Conjugation,
    DimensionError,
    Operator,
    adjoint,
    bandwidth,
    commutator,
    conjugation_defect,
    frobenius,
    hermiticity_defect,
    interior,
    is_hermitian,
    matexp,
    operator_from_json,
    operator_to_json,
    unitarity_defect,
    unitary_exp,
)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
seeds = st.integers(min_value=0, max_value=2**32 - 1)


class TestOperator:
    def test_rejects_non_square_and_non_finite(self):
        with pytest.raises(DimensionError):
            Operator(np.zeros((2, 3)))
        with pytest.raises(ValueError):
            Operator(np.array([[np.nan, 0], [0, 1]]))

    def test_is_read_only(self):
        op = Operator(np.eye(2))
        with pytest.raises(ValueError):
            op.matrix[0, 0] = 5

    def test_json_layout_is_row_major(self):
        m = np.array([[1 + 2j, 3], [4, 5 - 1j]])
        data = operator_to_json(m, "spin")
        assert data == {"dim": 2, "basis_label": "spin", "re": [1.0, 3.0, 4.0, 5.0], "im": [2.0, 0.0, 0.0, -1.0]}
        np.testing.assert_array_equal(operator_from_json(json.loads(json.dumps(data))), m)

    def test_json_round_trip(self, rng):
        op = Operator(random_matrix(rng, 5), "fock")
        back = Operator.from_json(op.to_json())
        assert back.basis_label == "fock"
        np.testing.assert_array_equal(back.matrix, op.matrix)

    def test_json_length_mismatch(self):
        with pytest.raises(DimensionError):
            operator_from_json({"dim": 2, "re": [0.0] * 3, "im": [0.0] * 3})


class TestAdjoint:
    def test_identity(self):
        np.testing.assert_array_equal(adjoint(np.eye(3)), np.eye(3))

    def test_raising_to_lowering(self):
        np.testing.assert_array_equal(adjoint([[0, 1], [0, 0]]), [[0, 0], [1, 0]])

    def test_inner_product_oracle(self, rng):
        a = random_matrix(rng, 4)
        x, y = rng.standard_normal(4) + 1j * rng.standard_normal(4), rng.standard_normal(4) + 0j
        assert abs(np.vdot(adjoint(a) @ x, y) - np.vdot(x, a @ y)) <= 1e-13

    @given(seeds, st.integers(1, 8))
    def test_involution_and_commutator_adjoint(self, seed, dim):
        rng = np.random.default_rng(seed)
        a, b = random_matrix(rng, dim), random_matrix(rng, dim)
        np.testing.assert_array_equal(adjoint(adjoint(a)), a)
        np.testing.assert_allclose(adjoint(commutator(a, b)), commutator(adjoint(b), adjoint(a)), atol=1e-12)


class TestCommutator:
    def test_self_commutator_vanishes(self, rng):
        a = random_matrix(rng, 4)
        np.testing.assert_array_equal(commutator(a, a), np.zeros((4, 4)))

    def test_number_and_annihilation(self):
        # [N, a] = -a holds on rows/cols 0..2 of a dim-5 truncation
        n, a = number(5), annihilation(5)
        np.testing.assert_allclose(interior(commutator(n, a), range(3)), -interior(a, range(3)), atol=1e-15)

    def test_pauli(self):
        np.testing.assert_array_equal(commutator(SIGMA_Z, SIGMA_PLUS), 2 * SIGMA_PLUS)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            commutator(np.eye(2), np.eye(3))

    @given(seeds)
    def test_antisymmetry(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_matrix(rng, 3), random_matrix(rng, 3)
        np.testing.assert_allclose(commutator(a, b), -commutator(b, a), atol=1e-13)


class TestMatexp:
    def test_zero(self):
        np.testing.assert_array_equal(matexp(np.zeros((3, 3)), 2.5), np.eye(3))

    def test_diagonal(self):
        np.testing.assert_allclose(matexp(SIGMA_Z, 1j * np.pi / 2), np.diag([1j, -1j]), atol=1e-15)

    def test_eigendecomposition_oracle(self, rng):
        h = random_hermitian(rng, 6)
        w, v = np.linalg.eigh(h)
        expected = v @ np.diag(np.exp(-0.3j * w)) @ v.conj().T
        assert frobenius(matexp(h, -0.3j) - expected) <= 1e-11

    @given(seeds, st.integers(1, 64), st.floats(-10, 10))
    def test_unitary_for_hermitian(self, seed, dim, t):
        h = random_hermitian(np.random.default_rng(seed), dim)
        assert unitarity_defect(matexp(h, -1j * t)) <= 1e-12 * dim

    def test_huge_hermitian_falls_back_to_spectral_route(self):
        h = np.diag([1e12, -1e12])
        u = matexp(h, -1j)
        np.testing.assert_allclose(np.abs(np.diag(u)), 1.0)

    def test_overflow_is_reported(self):
        with pytest.raises(OverflowError):
            matexp(np.array([[1e12, 1.0], [0.0, 1.0]]), 1.0)

    def test_unitary_exp_batches(self, rng):
        hs = np.stack([random_hermitian(rng, 4) for _ in range(3)])
        us = unitary_exp(hs, 0.7)
        for h, u in zip(hs, us):
            np.testing.assert_allclose(u, matexp(h, -0.7j), atol=1e-13)


class TestHermiticity:
    def test_hermitian_zero(self, rng):
        assert hermiticity_defect(random_hermitian(rng, 5)) == 0.0

    def test_i_sigma_plus(self):
        assert hermiticity_defect(1j * SIGMA_PLUS) == pytest.approx(np.sqrt(2), abs=1e-15)

    def test_is_hermitian_relative(self):
        assert is_hermitian(1e6 * SIGMA_Z + 1e-8 * SIGMA_PLUS)
        assert not is_hermitian(SIGMA_PLUS)


class TestBandwidth:
    def test_block_diagonal(self, rng):
        part = BlockPartition((2, 3))
        a = np.zeros((5, 5), dtype=complex)
        a[:2, :2] = random_matrix(rng, 2)
        a[2:, 2:] = random_matrix(rng, 3)
        assert bandwidth(a, part) == 0

    def test_position_operator_is_tridiagonal(self):
        a = annihilation(10)
        assert bandwidth(a + a.conj().T, BlockPartition.unit(10)) == 1

    def test_below_threshold_is_ignored(self):
        a = np.eye(4, dtype=complex)
        a[0, 3] = 1e-15
        assert bandwidth(a, BlockPartition.unit(4)) == 0

    def test_inconsistent_partition(self):
        with pytest.raises(DimensionError):
            bandwidth(np.eye(4), BlockPartition((1, 2)))

    def test_ordering_reorders_blocks(self):
        # blocks {2}, {0, 1}: the (0,2) coupling sits in adjacent blocks
        part = BlockPartition((1, 2), ordering=(2, 0, 1))
        a = np.zeros((3, 3))
        a[0, 2] = a[2, 0] = 1.0
        assert bandwidth(a, part) == 1
        assert bandwidth(a, BlockPartition.unit(3)) == 2

    @given(seeds, st.integers(0, 3), st.integers(0, 3))
    def test_commutator_subadditive(self, seed, ka, kb):
        rng = np.random.default_rng(seed)
        part = BlockPartition((2, 1, 3, 2, 2))
        blocks = np.repeat(np.arange(5), part.block_sizes)
        dist = np.abs(blocks[:, None] - blocks[None, :])
        a = np.where(dist <= ka, random_matrix(rng, 10), 0)
        b = np.where(dist <= kb, random_matrix(rng, 10), 0)
        assert bandwidth(commutator(a, b), part) <= bandwidth(a, part) + bandwidth(b, part)


class TestConjugation:
    def test_real_symmetric(self, rng):
        a = rng.standard_normal((4, 4))
        assert conjugation_defect(a + a.T, Conjugation.plain(4)) == 0.0

    def test_purely_imaginary_entries(self):
        # sigma_y has purely imaginary entries: conj flips its sign
        assert conjugation_defect(SIGMA_Y, Conjugation.plain(2)) == pytest.approx(2 * np.sqrt(2), abs=1e-15)

    def test_must_square_to_identity(self):
        with pytest.raises(ValueError):
            Conjugation((1, 2, 0))
        with pytest.raises(ValueError):
            Conjugation((1, 0), (1j, 1.0))

    @given(seeds)
    def test_applying_twice_is_identity(self, seed):
        rng = np.random.default_rng(seed)
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
        j = Conjugation((1, 0, 2), (phases[0], phases[0], 1.0))
        v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        np.testing.assert_allclose(j.apply(j.apply(v)), v, atol=1e-14)

    def test_operator_action_matches_vector_action(self, rng):
        j = Conjugation(np.arange(5), (-1.0) ** np.arange(5))
        a = random_matrix(rng, 5)
        v = rng.standard_normal(5) + 1j * rng.standard_normal(5)
        np.testing.assert_allclose(j.conjugate_operator(a) @ v, j.apply(a @ j.apply(v)), atol=1e-13)

    def test_spin_sigma_minus_real(self):
        assert conjugation_defect(SIGMA_MINUS, Conjugation.plain(2)) == 0.0
