import cmath
import math

import pytest
from pydantic import ValidationError

from core.errors import PositivityError, PreconditionError
from core.lattice import DiagonalElement, TorusElement, diagonal_view, is_self_adjoint, trace
from core.serialization import dumps
from core.spectral import is_positive
from core.verify import (
    GeneratorSpec,
    decide_verdict,
    gen_random_diagonal,
    gen_random_positive,
    gen_random_trig_polynomial,
    run_selftest,
    sample_circle,
    verify_diagonal,
    verify_general,
    verify_weissler_baseline,
)


class TestGeneratorSpec:
    def test_defaults(self):
        spec = GeneratorSpec()
        assert spec.kind == "diagonal"
        assert spec.theta_param().value == pytest.approx((math.sqrt(5) - 1) / 2)

    @pytest.mark.parametrize(
        "kwargs",
        [{"slope": 0}, {"support_radius": 0}, {"magnitude": -0.1}, {"positivity_floor": 0.0}, {"seed": -1}, {"theta": 1.0}],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValidationError):
            GeneratorSpec(**kwargs)


class TestGenerators:
    def test_zero_magnitude_is_identity(self):
        a = gen_random_positive(GeneratorSpec(magnitude=0.0))
        assert dict(a.coeffs) == {(0, 0): pytest.approx(1.0)}

    def test_deterministic(self):
        spec = GeneratorSpec(kind="general", support_radius=1, seed=7)
        assert dumps(gen_random_positive(spec)) == dumps(gen_random_positive(spec))
        assert dumps(gen_random_positive(spec)) != dumps(gen_random_positive(spec.model_copy(update={"seed": 8})))

    def test_general_draw(self):
        a = gen_random_positive(GeneratorSpec(kind="general", support_radius=1, seed=3))
        assert trace(a) == pytest.approx(1.0)
        assert is_self_adjoint(a, 1e-12)
        assert a.support_radius <= 2

    @pytest.mark.parametrize("slope", [1, -2, 3])
    def test_diagonal_draws_are_positive(self, slope):
        for seed in range(10):
            spec = GeneratorSpec(kind="diagonal", slope=slope, support_radius=2, seed=seed)
            a = gen_random_diagonal(spec)
            assert a.slope == slope
            assert diagonal_view(a.to_torus(), slope) is not None
            ok, margin = is_positive(a.to_torus(), q_max=300)
            assert ok
            assert margin > 0

    def test_diagonal_needs_diagonal_kind(self):
        with pytest.raises(PreconditionError):
            gen_random_diagonal(GeneratorSpec(kind="general"))

    def test_trig_polynomial(self):
        for seed in range(10):
            f = gen_random_trig_polynomial(seed, degree=4)
            assert f[0] == pytest.approx(1.0)
            for n in range(1, 5):
                assert f[-n] == pytest.approx(f[n].conjugate())
            assert sample_circle(f, 257).real.min() > 0


class TestDecideVerdict:
    @pytest.mark.parametrize(
        "slack,err,expected",
        [
            (0.0, 0.0, "holds"),
            (1e-3, 0.0, "holds"),
            (-1e-8, 0.0, "holds"),
            (-1e-3, 0.0, "violated"),
            (-1e-9, 1e-8, "inconclusive"),
            (1e-9, 1e-8, "inconclusive"),
            (-1e-3, 1e-8, "violated"),
            (1e-3, 1e-8, "holds"),
        ],
    )
    def test_precedence(self, slack, err, expected):
        assert decide_verdict(slack, err, 1e-7) == expected


class TestVerifyDiagonal:
    def test_identity(self, golden):
        report = verify_diagonal(DiagonalElement(1, {0: 1.0}, golden), q_max=100)
        assert report.slack == pytest.approx(0.0, abs=1e-12)
        assert report.verdict == "holds"
        assert report.label == "theorem"
        assert report.strong_slack == pytest.approx(0.0, abs=1e-12)

    def test_scalar(self, golden):
        c = 2.5
        report = verify_diagonal(DiagonalElement(1, {0: c}, golden), q_max=100, max_degree=None)
        assert report.entropy == pytest.approx(c * c * math.log(c), abs=1e-12)
        assert report.slack == pytest.approx(0.0, abs=1e-9)
        assert report.verdict in ("holds", "inconclusive")
        assert report.coefficient_signs is None
        assert report.min_coeff_sign is None

    def test_cosine(self, golden):
        a = DiagonalElement(1, {0: 1.0, 1: 0.45, -1: 0.45 * cmath.exp(-2j * math.pi * golden.value)}, golden)
        report = verify_diagonal(a, q_max=400, max_degree=16)
        assert report.energy == pytest.approx(2 * 2 * 0.45**2)
        assert report.slack > 0
        assert report.verdict == "holds"
        assert report.q == 377

    @pytest.mark.parametrize("slope", [1, -2])
    def test_random_draws_hold(self, slope):
        for seed in range(8):
            a = gen_random_diagonal(GeneratorSpec(kind="diagonal", slope=slope, support_radius=2, seed=seed))
            report = verify_diagonal(a, q_max=400, max_degree=2 * (1 + abs(slope)) * 4)
            assert report.slack >= -1e-7
            assert report.strong_slack >= -1e-7
            assert report.verdict != "violated"
            assert report.coefficient_signs.negative_degrees == []
            assert report.min_coeff_sign == 1

    def test_matches_general_pipeline(self):
        a = gen_random_diagonal(GeneratorSpec(kind="diagonal", slope=1, support_radius=1, seed=11))
        diagonal = verify_diagonal(a, q_max=300, max_degree=None)
        general = verify_general(a.to_torus(), q_max=300, max_degree=None)
        assert general.label == "conjecture"
        assert diagonal.slack == pytest.approx(general.slack, abs=1e-9)
        assert diagonal.element_digest == general.element_digest

    def test_not_positive(self, golden):
        a = DiagonalElement(1, {0: 1.0, 1: 1.0, -1: cmath.exp(-2j * math.pi * golden.value)}, golden)
        with pytest.raises(PositivityError):
            verify_diagonal(a, q_max=100)


class TestVerifyGeneral:
    def test_identity(self, golden):
        report = verify_general(TorusElement.constant(golden), q_max=100)
        assert report.slack == pytest.approx(0.0, abs=1e-12)
        assert report.verdict == "holds"

    def test_random_draw(self):
        a = gen_random_positive(GeneratorSpec(kind="general", support_radius=1, seed=5))
        report = verify_general(a, q_max=200, max_degree=8)
        assert report.suite == "general"
        assert math.isfinite(report.slack)
        assert report.coefficient_signs.mode == "general"
        assert report.entropy_error_estimate >= 0.0

    def test_scaling_leaves_strong_slack(self):
        a = gen_random_positive(GeneratorSpec(kind="general", support_radius=1, seed=9))
        base = verify_general(a, q_max=200, max_degree=None)
        scaled = verify_general(a.scale(3.0), q_max=200, max_degree=None)
        assert scaled.strong_slack == pytest.approx(base.strong_slack, abs=1e-9)


class TestWeissler:
    def test_constant(self):
        report = verify_weissler_baseline({0: 1.0})
        assert report.slack == pytest.approx(0.0, abs=1e-15)
        assert report.verdict == "holds"
        assert report.label == "baseline"

    def test_cosine(self):
        report = verify_weissler_baseline({0: 1.0, 1: 0.5, -1: 0.5})
        assert report.energy == pytest.approx(0.5)
        assert report.rhs == pytest.approx(0.5 + 0.75 * math.log(1.5))
        assert report.slack > 0
        assert report.verdict == "holds"

    def test_linear_form_is_smaller(self):
        f = gen_random_trig_polynomial(4)
        squared = verify_weissler_baseline(f)
        linear = verify_weissler_baseline(f, squared=False)
        assert linear.slack >= -1e-9
        assert squared.verdict != "violated"

    def test_random_polynomials(self):
        for seed in range(20):
            report = verify_weissler_baseline(gen_random_trig_polynomial(seed))
            assert report.slack >= -1e-9

    def test_not_real(self):
        with pytest.raises(PreconditionError):
            verify_weissler_baseline({0: 1.0, 1: 0.2})

    def test_not_positive(self):
        with pytest.raises(PositivityError):
            verify_weissler_baseline({0: 1.0, 1: 1.0, -1: 1.0})

    def test_too_few_samples(self):
        with pytest.raises(PreconditionError):
            verify_weissler_baseline({0: 1.0, 3: 0.1, -3: 0.1}, samples=12)


class TestSelfTest:
    def test_all_pass(self):
        results = run_selftest(seed=0, cases=5, q_max=200)
        assert results
        failed = [r for r in results if not r.passed]
        assert failed == []

    def test_reports_spectral_bounds(self):
        results = run_selftest(seed=1, cases=2, q_max=200)
        rows = [r for r in results if r.name == "P_r(a) spectral bounds"]
        assert len(rows) == 1
        assert rows[0].passed, rows[0].detail
