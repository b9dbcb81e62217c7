import cmath
import itertools
import logging
import math

import pytest

from core.combinatorics import (
    AL_CAP,
    C,
    D_of_P,
    MultiIndex,
    admissible_pairs,
    al_matrix,
    al_min_eigenvalue,
    b_pq,
    check_bpq_factorization,
    d_sigma,
    enumerate_H,
    g_coefficient_diagonal,
    g_taylor,
    multiset_permutations,
    permutation_count,
    strong_form_quadratic,
    tau_power_diagonal,
    tau_power_general,
)
from core.errors import EnumerationCapError, NormalizationError, NotSelfAdjointError, PreconditionError
from core.lattice import (
    DiagonalElement,
    TorusElement,
    dilate,
    graded_trace,
    half_phase,
    power_graded,
)
from core.verify import GeneratorSpec, gen_random_diagonal, random_self_adjoint_diagonal
from tests.conftest import symmetrize


def general_element(theta, reps, rng, scale=0.1):
    a = TorusElement.constant(theta)
    for m, n in reps:
        c = scale * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        a = a + symmetrize(TorusElement.monomial(theta, m, n, c))
    return a


def close(value, ref, rel=1e-10, floor=1e-13):
    return abs(value - ref) <= rel * abs(ref) + floor


class TestEnumerateH:
    def test_single(self):
        assert [P.as_dict() for P in enumerate_H(1, 3, {3})] == [{3: 1}]

    def test_empty(self):
        assert enumerate_H(3, 2, {1, 2}) == []

    def test_order(self):
        assert [P.as_dict() for P in enumerate_H(2, 4, {1, 2, 3})] == [{2: 2}, {1: 1, 3: 1}]

    def test_against_brute_force(self):
        support = [1, 2, 3]
        for t in range(0, 5):
            for l in range(0, 9):
                found = {tuple(sorted(P.as_dict().items())) for P in enumerate_H(t, l, support)}
                expected = set()
                for counts in itertools.product(range(t + 1), repeat=3):
                    if sum(counts) == t and sum(c * n for c, n in zip(counts, support)) == l:
                        expected.add(tuple((n, c) for n, c in zip(support, counts) if c))
                assert found == expected
                assert len(enumerate_H(t, l, support)) == len(expected)

    def test_positive_support(self):
        with pytest.raises(PreconditionError):
            enumerate_H(1, 1, {0, 1})


class TestDAndC:
    @pytest.fixture
    def element(self, rng, golden):
        return random_self_adjoint_diagonal(rng, golden, 2, [1, 2, 3])

    def test_empty_multi_index(self, element):
        assert D_of_P(MultiIndex(), element) == 1

    def test_single_mode(self, element):
        theta = element.theta.value
        for n in (1, 2, 3):
            expected = -element[n] * cmath.exp(1j * math.pi * 2 * n * n * theta)
            assert D_of_P(MultiIndex.of({n: 1}), element) == pytest.approx(expected, abs=1e-13)

    def test_square(self, element):
        c = element[1]
        expected = c * c / 2 * cmath.exp(2j * math.pi * 2 * element.theta.value)
        assert D_of_P(MultiIndex.of({1: 2}), element) == pytest.approx(expected, abs=1e-13)

    def test_missing_mode(self, element):
        with pytest.raises(PreconditionError):
            D_of_P(MultiIndex.of({4: 1}), element)

    def test_c_one_closed_form(self, rng, golden):
        for _ in range(100):
            slope = int(rng.choice([-3, -1, 1, 2]))
            a = random_self_adjoint_diagonal(rng, golden, slope, [1, 2, 3])
            for l in (1, 2, 3):
                residual = C(1, l, a) + a[l] * half_phase(slope * l * l, golden.value)
                assert abs(residual) == 0.0

    def test_c_vanishes(self, element):
        assert C(1, 4, element) == 0
        assert C(5, 4, element) == 0

    def test_c_two_two(self, golden):
        c = 0.2 + 0.1j
        a = DiagonalElement(1, {0: 1.0, 1: c, -1: c.conjugate() * cmath.exp(-2j * math.pi * golden.value)}, golden)
        expected = c * c / 2 * cmath.exp(2j * math.pi * golden.value)
        assert C(2, 2, a) == pytest.approx(expected, abs=1e-13)


class TestAlMatrix:
    def test_two(self):
        A = al_matrix(2, 1)
        assert A.entries == ((3, 1), (1, 1))
        assert al_min_eigenvalue(A) == pytest.approx(2 - math.sqrt(2), abs=1e-12)

    def test_entries(self):
        A = al_matrix(4, -2)
        assert A.entry(1, 1) == 11
        assert A.entry(2, 3) == 2
        assert A.entry(4, 4) == math.factorial(5)
        assert A.max_entry == math.factorial(5)

    @pytest.mark.parametrize("slope", [-3, -2, -1, 1, 2, 3])
    def test_positive_semidefinite(self, slope):
        for l in range(2, 21):
            A = al_matrix(l, slope)
            assert al_min_eigenvalue(A) >= -1e-10 * A.max_entry

    def test_bounds(self):
        with pytest.raises(PreconditionError):
            al_matrix(1, 1)
        with pytest.raises(PreconditionError):
            al_matrix(3, 0)
        with pytest.raises(EnumerationCapError):
            al_matrix(AL_CAP + 1, 1)


class TestGCoefficientDiagonal:
    def test_identity(self, golden):
        a = DiagonalElement(1, {0: 1.0}, golden)
        assert all(g_coefficient_diagonal(l, a) == 0.0 for l in (2, 3, 4))

    def test_single_mode(self, golden):
        c = 0.3
        a = DiagonalElement(1, {0: 1.0, 1: c, -1: c * cmath.exp(-2j * math.pi * golden.value)}, golden)
        assert g_coefficient_diagonal(2, a) == pytest.approx(c**4 / 2, rel=1e-12)

    @pytest.mark.parametrize("slope", [1, -1, 2, 3])
    def test_matches_taylor_extraction(self, rng, golden, slope):
        step = 2 * (1 + abs(slope))
        for _ in range(3):
            a = random_self_adjoint_diagonal(rng, golden, slope, [1, 2, 3], scale=0.1)
            coeffs = g_taylor(a.to_torus(), 4 * step)
            assert coeffs.mode == "diagonal"
            for l in (2, 3, 4):
                assert g_coefficient_diagonal(l, a) == pytest.approx(coeffs.by_degree[l * step], rel=1e-8, abs=1e-14)

    def test_needs_trace_one(self, golden):
        with pytest.raises(NormalizationError):
            g_coefficient_diagonal(2, DiagonalElement(1, {0: 2.0}, golden))


class TestTauPowerDiagonal:
    @pytest.mark.parametrize("slope", [1, -1, 2, -2, 3])
    @pytest.mark.parametrize("k", [3, 4, 5, 6])
    def test_matches_graded_oracle(self, rng, golden, slope, k):
        step = 2 * (1 + abs(slope))
        a = random_self_adjoint_diagonal(rng, golden, slope, [1, 2, 3], scale=0.2)
        closed = tau_power_diagonal(a, k, max_l=5)
        oracle = graded_trace(power_graded(dilate(a.to_torus(), slope), k))
        assert all(d % step == 0 for d in oracle)
        for l, value in closed.items():
            assert close(value, oracle.get(l * step, 0j))

    def test_vanishes_below_half_power(self, rng, golden):
        a = random_self_adjoint_diagonal(rng, golden, 1, [1, 2])
        assert tau_power_diagonal(a, 5, max_l=2)[2] == 0

    def test_single_mode_fourth_power(self, golden):
        c = 0.3 - 0.2j
        a = DiagonalElement(1, {0: 1.0, 1: c, -1: c.conjugate() * cmath.exp(-2j * math.pi * golden.value)}, golden)
        assert tau_power_diagonal(a, 4, max_l=2)[2] == pytest.approx(6 * abs(c) ** 4, rel=1e-12)
        assert tau_power_diagonal(a, 3, max_l=2)[2] == 0

    def test_needs_k_three(self, golden):
        with pytest.raises(PreconditionError):
            tau_power_diagonal(DiagonalElement(1, {0: 1.0}, golden), 2, max_l=3)


class TestGTaylor:
    def test_identity(self, golden):
        coeffs = g_taylor(TorusElement.constant(golden), 8)
        assert coeffs.mode == "general"
        assert coeffs.by_degree == {2: 0.0, 4: 0.0, 6: 0.0, 8: 0.0}

    def test_lowest_diagonal_degree(self, golden):
        c = 0.2
        a = DiagonalElement(2, {0: 1.0, 1: c, -1: c * cmath.exp(-4j * math.pi * golden.value)}, golden)
        coeffs = g_taylor(a.to_torus(), 12)
        assert coeffs.label == "diagonal(2)"
        assert coeffs.by_degree[6] == pytest.approx(2 * 2 * c * c, rel=1e-12)
        assert coeffs.by_degree[2] == 0.0
        assert coeffs.theorem_degrees() == [12]
        assert coeffs.checked_degrees() == [6, 12]

    def test_general_is_real_and_even(self, rng, golden, caplog):
        a = general_element(golden, [(1, 0), (0, 1), (1, -1)], rng)
        with caplog.at_level(logging.WARNING, logger="core.combinatorics"):
            coeffs = g_taylor(a, 10)
        assert not caplog.records
        assert coeffs.imag_residual <= 1e-9
        assert all(d % 2 == 0 for d in coeffs.by_degree)
        assert coeffs.theorem_degrees() == []

    def test_quadratic_part(self, rng, golden):
        a = general_element(golden, [(1, 0), (2, 1)], rng)
        quad = strong_form_quadratic(a)
        coeffs = g_taylor(a, 6)
        assert set(quad) == {2, 6}
        assert coeffs.by_degree[2] == pytest.approx(0.0, abs=1e-15)
        assert 2 not in coeffs.checked_degrees()
        assert quad[2] == 0.0
        # a single commuting direction: tau(x^4) at degree 4 is 6 |a_10|^4, weighted by 2 / 4!
        assert coeffs.by_degree[4] == pytest.approx(abs(a[(1, 0)]) ** 4 / 2, rel=1e-10)

    def test_theorem_degrees_nonnegative(self, golden):
        for seed in range(10):
            spec = GeneratorSpec(kind="diagonal", slope=1, support_radius=2, magnitude=0.3, seed=seed)
            a = gen_random_diagonal(spec)
            coeffs = g_taylor(a.to_torus(), 20)
            assert coeffs.negative_degrees() == []

    def test_preconditions(self, golden):
        with pytest.raises(NormalizationError):
            g_taylor(TorusElement.constant(golden, 2.0), 4)
        with pytest.raises(NotSelfAdjointError):
            g_taylor(TorusElement(golden, {(0, 0): 1.0, (1, 0): 0.1}), 4)

    def test_to_dict(self, golden):
        doc = g_taylor(TorusElement.constant(golden), 4).to_dict()
        assert doc == {
            "mode": "general",
            "coeffs": [{"degree": 2, "value": 0.0}, {"degree": 4, "value": 0.0}],
            "imag_residual": 0.0,
        }

    def test_checked_degrees_fall_back_to_all(self, golden):
        assert g_taylor(TorusElement.constant(golden), 4).checked_degrees() == [2, 4]


class TestDSigma:
    def test_basic(self):
        assert d_sigma([(1, 0)]) == 0
        assert d_sigma([(1, 0), (0, 1)]) == 1
        assert d_sigma([(0, 1), (1, 0)]) == -1

    def test_reversal_negates(self, rng):
        alphabet = [(1, 0), (0, 1), (-1, 1)]
        for k in range(1, 6):
            for word in itertools.product(alphabet, repeat=k):
                assert d_sigma(list(reversed(word))) == -d_sigma(list(word))
        for word in itertools.product([(2, -1), (1, 3)], repeat=6):
            assert d_sigma(list(reversed(word))) == -d_sigma(list(word))

    def test_empty(self):
        with pytest.raises(PreconditionError):
            d_sigma([])


class TestMultisetPermutations:
    def test_small(self):
        assert list(multiset_permutations([2, 1, 1])) == [(1, 1, 2), (1, 2, 1), (2, 1, 1)]

    def test_counts(self):
        items = [(1, 0), (1, 0), (0, 1), (-1, 0), (-1, 0)]
        perms = list(multiset_permutations(items))
        assert len(perms) == len(set(perms)) == math.factorial(5) // (2 * 2)


class TestBpq:
    def test_single(self, golden):
        assert b_pq(MultiIndex.of({(1, 0): 1}), MultiIndex(), golden) == 1

    def test_pair(self, golden):
        P = MultiIndex.of({(1, 0): 1})
        assert b_pq(P, P, golden) == pytest.approx(2.0)

    def test_zero_theta_counts(self):
        P = MultiIndex.of({(1, 0): 2, (0, 1): 1})
        Q = MultiIndex.of({(1, 1): 1, (0, 1): 1})
        assert b_pq(P, Q, 0.0) == pytest.approx(permutation_count(P, Q))

    def test_real(self, rng, golden):
        reps = [(1, 0), (0, 1)]
        for k in range(1, 7):
            for P, Q in admissible_pairs(reps, k):
                value = b_pq(P, Q, golden)
                assert abs(value.imag) <= 1e-12 * permutation_count(P, Q)

    def test_cap(self, golden):
        with pytest.raises(EnumerationCapError):
            b_pq(MultiIndex.of({(1, 0): 5}), MultiIndex.of({(1, 0): 4}), golden)


class TestTauPowerGeneral:
    @pytest.mark.parametrize("reps", [[(1, 0), (0, 1)], [(1, 1), (1, -1)], [(1, 0), (1, 1)], [(2, 1)]])
    @pytest.mark.parametrize("k", [3, 4, 5])
    def test_matches_graded_oracle(self, rng, golden, reps, k):
        a = general_element(golden, reps, rng)
        closed = tau_power_general(a, k)
        oracle = graded_trace(power_graded(dilate(a), k))
        for d in set(closed) | set(oracle):
            assert close(closed.get(d, 0j), oracle.get(d, 0j), rel=1e-9, floor=1e-14)

    def test_degrees(self, rng, golden):
        a = general_element(golden, [(1, 0), (0, 1)], rng)
        for k in (3, 4, 5, 6):
            for d, value in tau_power_general(a, k).items():
                if abs(value) > 1e-15:
                    assert d % 2 == 0
                    assert d >= 2 * math.ceil(k / 2)

    def test_caps(self, rng, golden):
        a = general_element(golden, [(1, 0), (0, 1)], rng)
        with pytest.raises(EnumerationCapError):
            tau_power_general(a, 7)
        wide = general_element(golden, [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0)], rng)
        with pytest.raises(EnumerationCapError):
            tau_power_general(wide, 3)


class TestFactorization:
    def test_single_direction(self, golden):
        report = check_bpq_factorization([(1, 0), (-1, 0)], 4, golden)
        assert len(report.blocks) == 1
        assert report.rank == 1
        assert report.blocks[0].singular_values[0] == pytest.approx(6.0)

    def test_zero_theta_report_is_consistent(self):
        report = check_bpq_factorization([(1, 0), (0, 1), (1, 1)], 4, 0.0)
        assert report.theta == 0.0
        assert report.blocks
        for block in report.blocks:
            # at theta = 0 every cell is a plain permutation count
            for P in block.rows:
                for Q in block.cols:
                    assert b_pq(P, Q, 0.0) == pytest.approx(permutation_count(P, Q))
            sv = block.singular_values
            assert list(sv) == sorted(sv, reverse=True)
            assert block.rank == sum(v > 1e-9 * sv[0] for v in sv)
            assert 0.0 <= block.sigma_ratio <= 1.0
            if block.counterexample is not None:
                assert block.rank > 1
        assert report.rank == max(b.rank for b in report.blocks)
        assert report.to_dict()["rank"] == report.rank

    def test_diagonal_support(self, golden):
        report = check_bpq_factorization([(1, 1), (2, 2)], 4, golden)
        assert report.diagonal_consistent is True
        assert report.rank == 1

    def test_general_support(self, golden):
        report = check_bpq_factorization([(1, 0), (0, 1)], 4, golden)
        assert report.diagonal_consistent is None
        for block in report.blocks:
            assert block.rank <= min(len(block.rows), len(block.cols))
            if block.counterexample is not None:
                assert block.rank > 1
                assert len(block.counterexample) == 4
        doc = report.to_dict()
        assert doc["k"] == 4
        assert len(doc["blocks"]) == len(report.blocks)

    def test_cap(self, golden):
        with pytest.raises(EnumerationCapError):
            check_bpq_factorization([(1, 0)], 9, golden)
