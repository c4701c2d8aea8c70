import numpy as np
import pytest
import scipy.sparse as sp

from spinad.fock import (
    Kind,
    SparseOperator,
    Spin,
    SpinOrbital,
    all_sectors,
    alpha,
    apply_string,
    beta,
    block_diagonal,
    build_sector_basis,
    compose_number_conserving,
    elementary,
    make_determinant,
    spin_counts,
)


class TestSpinOrbital:
    def test_interleaved_index(self):
        assert alpha(0).index == 0
        assert beta(0).index == 1
        assert alpha(3).index == 6
        assert beta(3).index == 7

    def test_round_trip(self):
        for k in range(12):
            assert SpinOrbital.from_index(k).index == k

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            SpinOrbital(-1, Spin.ALPHA)


class TestSectorBasis:
    @pytest.mark.parametrize(("args", "size"), [((2, 1, 1), 4), ((1, 0, 0), 1), ((4, 2, 2), 36), ((4, 3, 1), 16)])
    def test_sizes(self, args, size):
        assert build_sector_basis(*args).size == size

    def test_sorted_and_counts(self):
        basis = build_sector_basis(4, 2, 1)
        dets = list(basis.determinants)
        assert dets == sorted(dets)
        assert all(spin_counts(d) == (2, 1) for d in dets)
        for k, d in enumerate(dets):
            assert basis.index(d) == k

    @pytest.mark.parametrize("args", [(2, 3, 0), (2, -1, 0), (3, 0, 4), (-1, 0, 0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            build_sector_basis(*args)

    def test_all_sectors_cover_fock_space(self):
        assert sum(b.size for b in all_sectors(3)) == 4**3

    def test_basis_vector(self):
        basis = build_sector_basis(2, 1, 1)
        det = make_determinant([0], [1])
        v = basis.basis_vector(det)
        assert v[basis.index(det)] == 1 and v.sum() == 1


class TestElementary:
    def test_create_on_empty(self):
        empty = build_sector_basis(2, 0, 0)
        one = build_sector_basis(2, 1, 0)
        M = elementary(Kind.CREATE, alpha(0), empty, one).toarray()
        col = M[:, 0]
        assert col[one.index(make_determinant([0], []))] == 1.0
        assert np.count_nonzero(col) == 1

    def test_annihilate_unoccupied_gives_zero_column(self):
        src = build_sector_basis(2, 1, 0)
        dst = build_sector_basis(2, 0, 0)
        M = elementary(Kind.ANNIHILATE, alpha(1), src, dst).toarray()
        assert not M[:, src.index(make_determinant([0], []))].any()

    def test_sign_counts_occupied_below(self):
        # 0a, 0b, 1a occupied: three occupied bits sit below bit 3 (1b)
        src = build_sector_basis(2, 2, 1)
        dst = build_sector_basis(2, 2, 2)
        M = elementary(Kind.CREATE, beta(1), src, dst).toarray()
        det = make_determinant([0, 1], [0])
        assert M[dst.index(make_determinant([0, 1], [0, 1])), src.index(det)] == -1.0

    def test_sector_mismatch(self):
        with pytest.raises(ValueError):
            elementary(Kind.CREATE, alpha(0), build_sector_basis(2, 0, 0), build_sector_basis(2, 0, 1))

    def test_anticommutation(self):
        n = 3
        # {a_p, a+_q} = delta_pq on the (1,1) -> (1,1) composite
        basis = build_sector_basis(n, 1, 1)
        for p in range(2 * n):
            for q in range(2 * n):
                op_p, op_q = SpinOrbital.from_index(p), SpinOrbital.from_index(q)
                if op_p.spin != op_q.spin:
                    continue
                ab = compose_number_conserving([(Kind.ANNIHILATE, op_p), (Kind.CREATE, op_q)], basis)
                ba = compose_number_conserving([(Kind.CREATE, op_q), (Kind.ANNIHILATE, op_p)], basis)
                expected = SparseOperator.identity(basis.size) if p == q else SparseOperator.zeros(basis.size)
                assert (ab + ba - expected).max_abs() == 0


class TestCompose:
    def test_empty_string_is_identity(self):
        basis = build_sector_basis(3, 1, 2)
        assert compose_number_conserving([], basis) == SparseOperator.identity(basis.size)

    def test_non_conserving_rejected(self):
        basis = build_sector_basis(2, 1, 1)
        with pytest.raises(ValueError):
            compose_number_conserving([(Kind.CREATE, alpha(1)), (Kind.ANNIHILATE, beta(0))], basis)

    def test_number_operator(self):
        basis = build_sector_basis(3, 2, 1)
        n0 = compose_number_conserving([(Kind.CREATE, alpha(0)), (Kind.ANNIHILATE, alpha(0))], basis)
        diag = np.array([(d >> alpha(0).index) & 1 for d in basis.determinants], float)
        assert np.array_equal(n0.toarray(), np.diag(diag))

    def test_apply_string_rightmost_first(self):
        det = make_determinant([0], [])
        res = apply_string([(Kind.CREATE, alpha(1)), (Kind.ANNIHILATE, alpha(0))], det)
        assert res == (1, make_determinant([1], []))
        assert apply_string([(Kind.ANNIHILATE, alpha(1))], det) is None


class TestSparseOperator:
    def test_algebra(self, rng):
        A = rng.normal(size=(4, 4))
        B = rng.normal(size=(4, 4))
        SA, SB = SparseOperator(A), SparseOperator(B)
        np.testing.assert_allclose((SA @ SB).toarray(), A @ B)
        np.testing.assert_allclose((SA + SB - 2.0 * SA).toarray(), B - A)
        np.testing.assert_allclose((-SA / 2).toarray(), -A / 2)
        np.testing.assert_allclose(SA.T.toarray(), A.T)
        np.testing.assert_allclose(SA.commutator(SB).toarray(), A @ B - B @ A)
        assert SA.inner(SB) == pytest.approx(np.sum(A * B))
        assert SA.frobenius() == pytest.approx(np.linalg.norm(A))

    def test_apply_dimension_check(self):
        with pytest.raises(ValueError):
            SparseOperator.identity(3).apply(np.ones(4))

    def test_canonical_equality(self):
        a = SparseOperator.from_triplets([0, 0], [1, 1], [1.0, 2.0], (2, 2))
        b = SparseOperator(sp.csr_array(np.array([[0, 3.0], [0, 0]])))
        assert a == b

    def test_block_diagonal(self):
        blocks = [SparseOperator.identity(2), 3.0 * SparseOperator.identity(1)]
        assert np.array_equal(block_diagonal(blocks).toarray(), np.diag([1, 1, 3.0]))
