import json
import math
from fractions import Fraction

import numpy as np
import pytest

from spinad.closedform import (
    PUBLISHED_ELEVENTH,
    PUBLISHED_NINTH,
    PUBLISHED_QUINTIC,
    ClosedFormCoefficients,
    DegenerateSpectrumError,
    PolynomialRelation,
    RelationNotFoundError,
    _frequency_operators,
    apply_exponential,
    closed_form_for,
    derive_closed_form,
    exponential_matrix,
    family_relation,
    find_minimal_polynomial,
    golden_coefficients,
    quintic_recurrence_functions,
    quintic_recurrence_roots,
    verify_relation,
)
from spinad.families import ClosedFormFamily
from spinad.fock import SparseOperator, alpha, all_sectors, block_diagonal, build_sector_basis
from spinad.operators import build_fermionic_G, build_generator
from spinad.oracle import expm_dense

from conftest import THETAS, representative_ids

R2, R3 = math.sqrt(2), math.sqrt(3)
TABULATED = [ClosedFormFamily.QUINTIC, ClosedFormFamily.NINTH, ClosedFormFamily.ELEVENTH]
FAMILY_CASE = {"aiai": ClosedFormFamily.CUBIC, "aiaj": ClosedFormFamily.QUINTIC, "aibi": ClosedFormFamily.QUINTIC, "aibj": ClosedFormFamily.NINTH, "prime": ClosedFormFamily.ELEVENTH}


def union(name, n_orb=4):
    gid = representative_ids(n_orb)[name]
    return block_diagonal([build_generator(gid, b).matrix for b in all_sectors(n_orb)])


class TestPolynomialRelation:
    def test_parse(self):
        rel = PolynomialRelation.parse("-1/2, -3/2")
        assert rel.coeffs == (-0.5, -1.5) and rel.exact == (Fraction(-1, 2), Fraction(-3, 2))
        assert rel.order == 5

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            PolynomialRelation.parse("a,b")

    def test_lowest_power_form(self):
        rel = PolynomialRelation.from_lowest_power_form(PUBLISHED_ELEVENTH)
        assert rel.exact == (Fraction(-1, 48), Fraction(-113, 288), Fraction(-587, 288), Fraction(-613, 144), Fraction(-11, 3))

    def test_monic_polynomial(self):
        np.testing.assert_array_equal(PolynomialRelation((-1,)).monic_odd_polynomial(), [0, 1, 0, 1])


class TestRelations:
    @pytest.mark.parametrize("name", ["aiai", "aiaj", "aibi", "aibj", "prime"])
    def test_family_relation_on_union(self, name):
        assert verify_relation(union(name), family_relation(FAMILY_CASE[name]), relative=True) <= 1e-12

    def test_published_coefficients(self):
        assert family_relation("quintic").exact == PUBLISHED_QUINTIC
        assert family_relation("ninth").exact == PUBLISHED_NINTH

    def test_eleventh_literal_placement_fails(self):
        literal = PolynomialRelation(PUBLISHED_ELEVENTH)
        assert verify_relation(union("prime"), literal, relative=True) > 0.5

    def test_aiai_cubic(self):
        basis = build_sector_basis(4, 2, 2)
        G = build_generator(representative_ids(4)["aiai"], basis)
        assert verify_relation(G, PolynomialRelation((-1,))) <= 1e-13

    def test_zero_generator(self):
        assert verify_relation(SparseOperator.zeros(5), family_relation("ninth")) == 0.0
        assert verify_relation(SparseOperator.zeros(5), family_relation("ninth"), relative=True) == 0.0

    def test_sa_single_pair_has_no_relation(self):
        with pytest.raises(ValueError):
            family_relation(ClosedFormFamily.SA_SINGLE_PAIR)


class TestMinimalPolynomial:
    def test_fermionic_single(self):
        G = build_fermionic_G((alpha(2), alpha(0)), build_sector_basis(3, 1, 1))
        rel = find_minimal_polynomial(G)
        assert rel.m == 1 and rel.coeffs[0] == pytest.approx(-1, abs=1e-12)

    def test_aiaj_union(self):
        rel = find_minimal_polynomial(union("aiaj", 3))
        np.testing.assert_allclose(rel.coeffs, [-0.5, -1.5], atol=1e-10)

    def test_prime_eleventh(self):
        rel = find_minimal_polynomial(union("prime", 4))
        np.testing.assert_allclose(rel.coeffs, family_relation("eleventh").coeffs, atol=1e-8, rtol=1e-10)

    def test_not_found(self):
        with pytest.raises(RelationNotFoundError):
            find_minimal_polynomial(union("prime", 4), max_order=9)


class TestSynthesis:
    def test_quintic_examples(self):
        c = derive_closed_form(family_relation("quintic"))
        np.testing.assert_allclose(c.S, [1, R2 / 2], atol=1e-15)
        assert c.amplitudes(1)[0] == pytest.approx(-1, abs=1e-14)
        assert c.amplitudes(1)[1] == pytest.approx(2 * R2, abs=1e-14)
        assert c.amplitudes(3)[0] == pytest.approx(-2, abs=1e-14)
        assert c.amplitudes(4)[1] == pytest.approx(-4, abs=1e-14)

    @pytest.mark.parametrize("family", TABULATED)
    def test_matches_tables(self, family):
        derived = derive_closed_form(family_relation(family), family)
        golden = golden_coefficients(family)
        np.testing.assert_allclose(derived.S, golden.S, atol=1e-12, rtol=0)
        np.testing.assert_allclose(derived.k, golden.k, atol=1e-12, rtol=0)

    def test_table_spot_values(self):
        q = golden_coefficients("quintic")
        assert q.S[1] == pytest.approx(R2 / 2) and list(q.k[1]) == pytest.approx([2 * R2, -4, 2 * R2, -4])
        n = golden_coefficients("ninth")
        assert n.S.tolist() == pytest.approx([R2, 1, R2 / 2, 0.5])
        row = list(n.S).index(pytest.approx(R2 / 2))
        assert n.amplitudes(1)[row] == pytest.approx(-8 * R2 / 3) and n.amplitudes(8)[row] == pytest.approx(32 / 3)
        assert n.amplitudes(1)[1] == pytest.approx(2 / 3) and n.amplitudes(8)[3] == pytest.approx(-256 / 21)
        e = golden_coefficients("eleventh")
        last = int(np.argmin(e.S))
        assert e.S[last] == pytest.approx(R3 / 6) and e.amplitudes(2)[last] == pytest.approx(-2592 / 115)
        assert e.amplitudes(10)[last] == pytest.approx(-10368 / 115)
        assert e.amplitudes(1)[0] == pytest.approx(R2 / 1150)

    def test_table_value_counts(self):
        # 2x(4+1), 4x(8+1), 5x(10+1) entries including the S column
        sizes = [golden_coefficients(f).k.size + golden_coefficients(f).S.size for f in TABULATED]
        assert sizes == [10, 36, 55]

    @pytest.mark.parametrize("family", ["cubic", "sa_single_pair"])
    def test_golden_rejects_elementary_families(self, family):
        with pytest.raises(ValueError):
            golden_coefficients(family)

    def test_cubic(self):
        c = derive_closed_form(PolynomialRelation((-1,)))
        np.testing.assert_allclose(c.S, [1.0])
        np.testing.assert_allclose(c.k, [[1.0, -1.0]])

    @pytest.mark.parametrize("family", [ClosedFormFamily.CUBIC, *TABULATED])
    def test_sum_rule_and_taylor(self, family):
        c = closed_form_for(family)
        assert float(c.amplitudes(1) @ c.S) == pytest.approx(1.0, abs=1e-12)
        assert c.taylor_residual() <= 1e-10

    def test_quintic_sum_rule_exact(self):
        assert (-1) * 1 + (2 * R2) * (R2 / 2) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("coeffs", ["-1,-2", "1", "0,0", "-4,-4"])
    def test_degenerate(self, coeffs):
        with pytest.raises(DegenerateSpectrumError) as info:
            derive_closed_form(PolynomialRelation.parse(coeffs))
        assert len(info.value.roots) == PolynomialRelation.parse(coeffs).m

    def test_rows_sorted_descending(self):
        for family in TABULATED:
            S = closed_form_for(family).S
            assert np.all(np.diff(S) < 0)

    def test_json_round_trip(self):
        for family in TABULATED:
            c = closed_form_for(family)
            text = c.to_json()
            data = json.loads(text)
            assert set(data) == {"family", "relation", "entries"}
            back = ClosedFormCoefficients.from_json(text)
            np.testing.assert_array_equal(back.S, c.S)
            np.testing.assert_array_equal(back.k, c.k)
            assert back.family is family and back.relation == c.relation

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ClosedFormCoefficients([1.0, 2.0], np.zeros((2, 3)))


class TestRecurrence:
    def test_roots(self):
        lam1, lam2, c1, c2 = quintic_recurrence_roots(-0.5, -1.5)
        assert (lam1, lam2) == pytest.approx((-1.0, -0.5))
        assert (c1, c2) == pytest.approx((2.0, -1.0))
        assert c1 + c2 == pytest.approx(1.0)

    def test_cross_check(self):
        theta = 0.37
        f1, f3, f2, f4 = quintic_recurrence_functions(-0.5, -1.5, theta, 12)
        f = closed_form_for("quintic").functions(theta)
        np.testing.assert_allclose([f1, f2, f3, f4], f, atol=1e-10, rtol=0)


class TestApply:
    def test_theta_zero(self, rng):
        G = build_generator(representative_ids(4)["prime"], build_sector_basis(4, 2, 2))
        v = rng.normal(size=G.dim)
        out = apply_exponential(G, 0.0, v)
        assert np.array_equal(out, v) and out is not v

    def test_dimension_mismatch(self):
        G = build_generator(representative_ids(4)["aibj"], build_sector_basis(4, 2, 2))
        with pytest.raises(ValueError):
            apply_exponential(G, 0.3, np.ones(G.dim + 1))

    def test_cubic_at_pi(self, rng):
        G = build_generator(representative_ids(4)["fermionic_single"], build_sector_basis(4, 2, 2))
        v = rng.normal(size=G.dim)
        D = G.matrix.toarray()
        expected = v + 2 * D @ D @ v
        np.testing.assert_allclose(apply_exponential(G, np.pi, v), expected, atol=1e-13)
        np.testing.assert_allclose(expected, expm_dense(np.pi * D) @ v, atol=1e-12)

    def test_quintic_oracle(self, rng):
        G = build_generator(representative_ids(3)["aiaj"], build_sector_basis(3, 1, 1))
        v = rng.normal(size=G.dim)
        v /= np.linalg.norm(v)
        assert np.linalg.norm(apply_exponential(G, 0.37, v) - expm_dense(0.37 * G.matrix.toarray()) @ v) <= 1e-12

    def test_block_vectors(self, rng):
        G = build_generator(representative_ids(4)["aibj"], build_sector_basis(4, 2, 2))
        V = rng.normal(size=(G.dim, 3))
        out = apply_exponential(G, 0.8, V)
        for c in range(3):
            np.testing.assert_allclose(out[:, c], apply_exponential(G, 0.8, V[:, c]), atol=1e-14)

    @pytest.mark.parametrize("name", ["aiaj", "aibj", "prime"])
    def test_frequency_operators_match_table_powers(self, name):
        """The grouped operators are the table amplitudes times generator powers."""
        G = build_generator(representative_ids(4)[name], build_sector_basis(4, 2, 2))
        S, stacked = _frequency_operators(G)
        golden = golden_coefficients(G.family)
        m = golden.m
        np.testing.assert_allclose(S, golden.S, atol=1e-12)
        powers = [np.linalg.matrix_power(G.matrix.toarray(), p) for p in range(2 * m + 1)]
        blocks = stacked.toarray().reshape(2 * m, G.dim, G.dim)
        for n in range(m):
            C = sum(golden.k[n, p - 1] * powers[p] for p in range(1, 2 * m + 1, 2))
            D = sum(golden.k[n, p - 1] * powers[p] for p in range(2, 2 * m + 1, 2))
            np.testing.assert_allclose(blocks[n], C, atol=1e-9)
            np.testing.assert_allclose(blocks[m + n], D, atol=1e-9)

    @pytest.mark.parametrize("name", list(representative_ids(4)))
    def test_oracle_all_sectors(self, name):
        gid = representative_ids(4)[name]
        for basis in all_sectors(4):
            G = build_generator(gid, basis)
            D = G.matrix.toarray()
            for theta in THETAS:
                U = exponential_matrix(G, theta)
                assert np.max(np.linalg.norm(U - expm_dense(theta * D), axis=0)) <= 1e-12

    @pytest.mark.parametrize("name", ["aiaj", "aibj", "prime", "sa_single"])
    def test_derivative_second_order(self, name, rng):
        G = build_generator(representative_ids(4)[name], build_sector_basis(4, 2, 2))
        v = rng.normal(size=G.dim)
        theta = 0.7
        exact = G.matrix @ apply_exponential(G, theta, v)
        errs = []
        for h in (1e-3, 1e-4):
            fd = (apply_exponential(G, theta + h, v) - apply_exponential(G, theta - h, v)) / (2 * h)
            errs.append(np.linalg.norm(fd - exact))
        # O(h^2): a tenfold smaller step cuts the error about a hundredfold
        assert errs[1] < errs[0] / 50
        h = 1e-5
        fd = (apply_exponential(G, theta + h, v) - apply_exponential(G, theta - h, v)) / (2 * h)
        assert np.linalg.norm(fd - exact) <= 1e-8
