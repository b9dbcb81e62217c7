"""
Torus LSI - Verification Module
Random positive elements and end-to-end checks of the log-Sobolev inequality

    tau(a^2 log a) <= sum (|m|+|n|) |a_{m,n}|^2 + ||a||_2^2 log ||a||_2,

for the diagonal class (proved), general elements (conjectured) and the
commutative circle baseline.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal, Mapping

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core import serialization
from core.combinatorics import (
    C,
    MultiIndex,
    al_matrix,
    al_min_eigenvalue,
    b_pq,
    d_sigma,
    enumerate_H,
    g_taylor,
    tau_power_diagonal,
)
from core.errors import PositivityError, PreconditionError
from core.lattice import (
    GOLDEN,
    DiagonalElement,
    ThetaParam,
    TorusElement,
    adjoint,
    diagonal_view,
    dilate,
    dirichlet_weight,
    graded_trace,
    half_phase,
    l2_norm,
    multiply,
    power_graded,
    trace,
)
from core.spectral import (
    DEFAULT_Q_MAX,
    EIGEN_FLOOR,
    SYMBOL_CONSISTENCY_TOL,
    SYMBOL_SAMPLES,
    circle_entropy,
    entropy_functional,
    is_positive,
    spectral_bounds,
)

log = logging.getLogger(__name__)

THEOREM_TOL = 1e-7
WEISSLER_TOL = 1e-9
COEFFICIENT_TOL = 1e-9


# ─── Models ─────────────────────────────────────────────────────

class GeneratorSpec(BaseModel):
    """Random positive elements a = b* b + eps, normalized to trace 1."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["diagonal", "general"] = "diagonal"
    slope: int = 1
    support_radius: int = Field(3, ge=1)
    magnitude: float = Field(0.3, ge=0.0)
    positivity_floor: float = Field(0.1, gt=0.0)
    seed: int = Field(0, ge=0, lt=2**64)
    theta: float = Field(GOLDEN, gt=0.0, lt=1.0)

    @field_validator("slope")
    @classmethod
    def _nonzero_slope(cls, v: int) -> int:
        if v == 0:
            raise ValueError("slope must be nonzero")
        return v

    def theta_param(self) -> ThetaParam:
        return ThetaParam(self.theta)


class CoefficientSummary(BaseModel):
    mode: str
    max_degree: int
    min_coefficient: float | None
    negative_degrees: list[int]
    imag_residual: float

    @property
    def sign(self) -> int | None:
        if self.min_coefficient is None:
            return None
        return -1 if self.min_coefficient < -COEFFICIENT_TOL else 1


class InequalityReport(BaseModel):
    suite: Literal["diagonal", "general", "weissler"]
    label: Literal["theorem", "conjecture", "baseline"]
    element_digest: str
    entropy: float
    energy: float
    l2: float
    rhs: float
    slack: float
    entropy_error_estimate: float
    strong_slack: float | None = None
    q: int | None = None
    coefficient_signs: CoefficientSummary | None = None
    verdict: Literal["holds", "violated", "inconclusive"]

    @property
    def min_coeff_sign(self) -> int | None:
        return self.coefficient_signs.sign if self.coefficient_signs else None


def decide_verdict(slack: float, error_estimate: float, tol: float) -> str:
    """inconclusive when the slack drowns in the entropy error, else holds/violated at tol."""
    if error_estimate > 0 and abs(slack) < error_estimate:
        return "inconclusive"
    return "holds" if slack >= -tol else "violated"


# ─── Generators ─────────────────────────────────────────────────

def gen_random_positive(spec: GeneratorSpec) -> TorusElement:
    """
    Draw b with uniform moduli in [0, magnitude] and uniform phases, return
    (b* b + eps) / tau(b* b + eps). The diagonal kind keeps b in the diagonal class.
    """
    rng = np.random.default_rng(spec.seed)
    theta = spec.theta_param()
    R = spec.support_radius
    if spec.kind == "diagonal":
        modes = [(n, spec.slope * n) for n in range(-R, R + 1)]
    else:
        modes = [(m, n) for m in range(-R, R + 1) for n in range(-R, R + 1)]
    moduli = rng.uniform(0.0, spec.magnitude, size=len(modes))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=len(modes))
    b = TorusElement(theta, {mode: r * np.exp(1j * ph) for mode, r, ph in zip(modes, moduli, phases)})

    a = multiply(adjoint(b), b) + TorusElement.constant(theta, spec.positivity_floor)
    return a.scale(1.0 / trace(a).real)


def gen_random_diagonal(spec: GeneratorSpec) -> DiagonalElement:
    if spec.kind != "diagonal":
        raise PreconditionError("diagonal generator needs kind = diagonal")
    return diagonal_view(gen_random_positive(spec), spec.slope)


def gen_random_trig_polynomial(
    seed: int, degree: int = 6, magnitude: float = 0.3, floor: float = 0.1
) -> dict[int, complex]:
    """Coefficients of f = |g|^2 + eps with deg g = degree, normalized to mean 1."""
    rng = np.random.default_rng(seed)
    g = rng.uniform(0.0, magnitude, degree + 1) * np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, degree + 1))
    f = {n: complex(np.sum(g[n:] * np.conj(g[: degree + 1 - n]))) for n in range(degree + 1)}
    for n in range(1, degree + 1):
        f[-n] = f[n].conjugate()
    f[0] = f[0].real + floor
    mean = f[0].real
    return {n: c / mean for n, c in sorted(f.items()) if c != 0}


# ─── Verification ───────────────────────────────────────────────

def _coefficient_summary(a_hat: TorusElement, max_degree: int) -> CoefficientSummary:
    coeffs = g_taylor(a_hat, max_degree)
    return CoefficientSummary(
        mode=coeffs.label,
        max_degree=max_degree,
        min_coefficient=coeffs.min_coefficient(coeffs.checked_degrees(COEFFICIENT_TOL)),
        negative_degrees=coeffs.negative_degrees(COEFFICIENT_TOL),
        imag_residual=coeffs.imag_residual,
    )


def _assemble(
    suite: str,
    label: str,
    a: TorusElement,
    entropy: float,
    error: float,
    q: int,
    tol: float,
    max_degree: int | None,
) -> InequalityReport:
    energy = dirichlet_weight(a)
    l2 = l2_norm(a)
    rhs = energy + l2**2 * math.log(l2)
    slack = rhs - entropy

    # strong form of a / tau(a), via tau((ca)^2 log(ca)) = c^2 tau(a^2 log a) + c^2 log c tau(a^2)
    c = trace(a).real
    norm_sq = (l2 / c) ** 2
    entropy_hat = (entropy - c**2 * math.log(c) * norm_sq) / c**2
    strong = energy / c**2 + 0.5 * (norm_sq - 1.0) - entropy_hat

    summary = None
    if max_degree is not None:
        summary = _coefficient_summary(a.scale(1.0 / c), max_degree)

    verdict = decide_verdict(slack, error, tol)
    if verdict == "violated":
        log.info("%s inequality violated: slack %.3e", label, slack)
    if summary is not None and summary.negative_degrees:
        log.info("negative G coefficients at degrees %s", summary.negative_degrees)

    return InequalityReport(
        suite=suite,
        label=label,
        element_digest=serialization.digest(a),
        entropy=entropy,
        energy=energy,
        l2=l2,
        rhs=rhs,
        slack=slack,
        entropy_error_estimate=error,
        strong_slack=strong,
        q=q,
        coefficient_signs=summary,
        verdict=verdict,
    )


def _require_positive(a: TorusElement, q_max: int) -> None:
    ok, margin = is_positive(a, 0.0, q_max)
    if not ok:
        raise PositivityError("element is not strictly positive", margin)


def verify_diagonal(
    a: DiagonalElement,
    *,
    q_max: int = DEFAULT_Q_MAX,
    tol: float = THEOREM_TOL,
    max_degree: int | None = 12,
    symbol_samples: int | None = None,
) -> InequalityReport:
    """
    Check the proved diagonal-class inequality for a.

    The matrix entropy is cross-checked against circle quadrature of the symbol;
    the larger of that gap and the convergent difference is the error estimate.
    """
    t = a.to_torus()
    _require_positive(t, q_max)
    est = entropy_functional(t, q_max)
    circle = circle_entropy(a, symbol_samples)
    cross = abs(est.value - circle)
    if cross > max(SYMBOL_CONSISTENCY_TOL, 10.0 * est.error_estimate):
        log.warning("matrix and circle entropies differ by %.3e", cross)
    error = max(est.error_estimate, cross)
    return _assemble("diagonal", "theorem", t, est.value, error, est.q, tol, max_degree)


def verify_general(
    a: TorusElement,
    *,
    q_max: int = DEFAULT_Q_MAX,
    tol: float = THEOREM_TOL,
    max_degree: int | None = 12,
) -> InequalityReport:
    """Same pipeline for a general positive element; the report is labeled conjecture."""
    _require_positive(a, q_max)
    est = entropy_functional(a, q_max)
    return _assemble("general", "conjecture", a, est.value, est.error_estimate, est.q, tol, max_degree)


def sample_circle(coeffs: Mapping[int, complex], samples: int) -> np.ndarray:
    j = np.arange(samples)
    values = np.zeros(samples, dtype=complex)
    for n, c in coeffs.items():
        values += c * np.exp(2j * np.pi * (np.mod(n * j, samples) / samples))
    return values


def verify_weissler_baseline(
    f_coeffs: Mapping[int, complex],
    samples: int | None = None,
    *,
    squared: bool = True,
    tol: float = WEISSLER_TOL,
) -> InequalityReport:
    """
    Circle inequality for a positive trigonometric polynomial f.

    squared=True integrates f^2 log f, the commutative form of tau(a^2 log a);
    squared=False integrates f log f, which is pointwise smaller.
    """
    coeffs = {int(n): complex(c) for n, c in f_coeffs.items()}
    radius = max((abs(n) for n in coeffs), default=0)
    if samples is None:
        samples = max(SYMBOL_SAMPLES, 8 * radius + 1)
    if samples < 4 * radius + 1:
        raise PreconditionError(f"{samples} samples cannot resolve degree {radius}")
    reality = max((abs(c - coeffs.get(-n, 0j).conjugate()) for n, c in coeffs.items()), default=0.0)
    if reality > 1e-10:
        raise PreconditionError(f"f is not real (residual {reality:.3e})")

    def integral(count: int) -> float:
        f = sample_circle(coeffs, count).real
        low = float(f.min())
        if low <= EIGEN_FLOOR:
            raise PositivityError("trigonometric polynomial is not strictly positive", low)
        return float(np.mean((f**2 if squared else f) * np.log(f)))

    entropy = integral(samples)
    error = abs(entropy - integral(2 * samples + 1))
    energy = sum(abs(n) * abs(c) ** 2 for n, c in coeffs.items())
    l2 = math.sqrt(sum(abs(c) ** 2 for c in coeffs.values()))
    rhs = energy + l2**2 * math.log(l2)
    slack = rhs - entropy
    verdict = decide_verdict(slack, error, tol)
    if verdict == "violated":
        log.info("circle inequality violated: slack %.3e", slack)
    return InequalityReport(
        suite="weissler",
        label="baseline",
        element_digest=serialization.circle_digest(coeffs),
        entropy=entropy,
        energy=energy,
        l2=l2,
        rhs=rhs,
        slack=slack,
        entropy_error_estimate=error,
        verdict=verdict,
    )


# ─── Self test ──────────────────────────────────────────────────

@dataclass(frozen=True)
class SelfTestResult:
    name: str
    passed: bool
    detail: str


def random_element(rng: np.random.Generator, theta: ThetaParam, radius: int, size: int) -> TorusElement:
    """A random element with `size` modes in the box of the given radius."""
    coeffs = {}
    for _ in range(size):
        mode = tuple(int(v) for v in rng.integers(-radius, radius + 1, size=2))
        coeffs[mode] = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    return TorusElement(theta, coeffs)


def random_self_adjoint_diagonal(
    rng: np.random.Generator, theta: ThetaParam, slope: int, modes: list[int], scale: float = 0.2
) -> DiagonalElement:
    """1 + sum (a_n U^n V^{sn} + adjoint) over the given positive modes."""
    coeffs: dict[int, complex] = {0: 1.0}
    for n in modes:
        c = scale * complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        coeffs[n] = c
        coeffs[-n] = c.conjugate() * half_phase(-2 * slope * n * n, theta.value)
    return DiagonalElement(slope, coeffs, theta)


def _max_diff(a: TorusElement, b: TorusElement) -> float:
    keys = set(a.coeffs) | set(b.coeffs)
    return max((abs(a[k] - b[k]) for k in keys), default=0.0)


def run_selftest(seed: int = 0, cases: int = 20, q_max: int = 400) -> list[SelfTestResult]:
    """Desk-scale run of the algebra identities, closed forms and a few verifications."""
    rng = np.random.default_rng(seed)
    golden = ThetaParam.golden()
    results: list[SelfTestResult] = []

    def record(name: str, worst: float, tol: float) -> None:
        results.append(SelfTestResult(name, worst <= tol, f"worst {worst:.3e} (tol {tol:.0e})"))

    worst = 0.0
    for _ in range(cases):
        theta = ThetaParam(float(rng.uniform(0.01, 0.99)))
        u = TorusElement.monomial(theta, 1, 0)
        v = TorusElement.monomial(theta, 0, 1)
        rhs = multiply(v, u).scale(np.exp(2j * np.pi * theta.value))
        worst = max(worst, _max_diff(multiply(u, v), rhs))
    record("defining relation", worst, 4e-15)

    assoc = anti = tracial = parseval = involution = 0.0
    for _ in range(cases):
        a, b, c = (random_element(rng, golden, 2, 3) for _ in range(3))
        assoc = max(assoc, l2_norm(multiply(multiply(a, b), c) - multiply(a, multiply(b, c))))
        anti = max(anti, _max_diff(adjoint(multiply(a, b)), multiply(adjoint(b), adjoint(a))))
        tracial = max(tracial, abs(trace(multiply(a, b)) - trace(multiply(b, a))))
        norm_sq = sum(abs(x) ** 2 for x in a.coeffs.values())
        parseval = max(parseval, abs(trace(multiply(adjoint(a), a)) - norm_sq) / norm_sq)
        involution = max(involution, _max_diff(adjoint(adjoint(a)), a))
    record("associativity", assoc, 1e-10)
    record("anti-multiplicativity", anti, 1e-12)
    record("tracial property", tracial, 1e-12)
    record("parseval", parseval, 1e-13)
    record("involution", involution, 2e-15)

    worst = 0.0
    for _ in range(cases):
        a = random_self_adjoint_diagonal(rng, golden, int(rng.choice([-2, -1, 1, 2, 3])), [1, 2, 3])
        for l in a.positive_modes():
            expected = -a[l] * half_phase(a.slope * l * l, golden.value)
            worst = max(worst, abs(C(1, l, a) - expected))
    record("C(1,l) closed form", worst, 1e-15)

    worst = 0.0
    for l in range(2, 21):
        for s in (-3, -2, -1, 1, 2, 3):
            A = al_matrix(l, s)
            worst = max(worst, -al_min_eigenvalue(A) / A.max_entry)
    record("A_l positive semidefinite", worst, 1e-10)

    worst = 0
    for _ in range(cases):
        k = int(rng.integers(1, 7))
        word = [tuple(int(v) for v in rng.integers(-3, 4, size=2)) for _ in range(k)]
        worst = max(worst, abs(d_sigma(word[::-1]) + d_sigma(word)))
    record("D_sigma reversal", float(worst), 0.0)

    worst = 0.0
    for _ in range(cases):
        P = MultiIndex.of({(1, 0): int(rng.integers(0, 3)), (0, 1): int(rng.integers(0, 2))})
        Q = MultiIndex.of({(1, 1): int(rng.integers(0, 3))})
        value = b_pq(P, Q, golden)
        count = math.factorial(P.total + Q.total) // (P.factorial_product() * Q.factorial_product())
        worst = max(worst, abs(value.imag) / count)
    record("B_{P,Q} reality", worst, 1e-12)

    worst = 0.0
    for _ in range(max(1, cases // 4)):
        a = random_self_adjoint_diagonal(rng, golden, 1, [1, 2])
        x = dilate(a.to_torus(), a.slope)
        for k in (3, 4, 5):
            oracle = graded_trace(power_graded(x, k))
            closed = tau_power_diagonal(a, k, 4)
            for l, value in closed.items():
                ref = oracle.get(4 * l, 0j)
                worst = max(worst, abs(value - ref) / max(1.0, abs(ref)))
    record("diagonal closed form vs graded oracle", worst, 1e-10)

    worst_slack = math.inf
    spec = GeneratorSpec(kind="diagonal", slope=1, support_radius=2)
    for i in range(3):
        report = verify_diagonal(
            gen_random_diagonal(spec.model_copy(update={"seed": seed + i})), q_max=q_max, max_degree=None
        )
        worst_slack = min(worst_slack, report.slack)
    results.append(SelfTestResult("diagonal inequality", worst_slack >= -THEOREM_TOL, f"min slack {worst_slack:.3e}"))

    worst_slack = math.inf
    for i in range(3):
        report = verify_weissler_baseline(gen_random_trig_polynomial(seed + i))
        worst_slack = min(worst_slack, report.slack)
    results.append(SelfTestResult("circle inequality", worst_slack >= -WEISSLER_TOL, f"min slack {worst_slack:.3e}"))

    low, excess = math.inf, -math.inf
    try:
        for kind in ("diagonal", "general"):
            for i in range(2):
                spec = GeneratorSpec(kind=kind, support_radius=1, seed=seed + i)
                bounds = spectral_bounds(gen_random_positive(spec), q_max=q_max)
                low = min(low, bounds.b1)
                excess = max(excess, bounds.max_eigenvalue - bounds.b2)
        ok, detail = low > 0 and excess <= 1e-9, f"min eig {low:.3e}, max eig - B2 {excess:.3e}"
    except PositivityError as e:
        ok, detail = False, str(e)
    results.append(SelfTestResult("P_r(a) spectral bounds", ok, detail))

    # sanity anchor for the enumeration order used everywhere else
    H = enumerate_H(2, 4, [1, 2, 3])
    results.append(SelfTestResult("H_{2,4} enumeration", [P.as_dict() for P in H] == [{2: 2}, {1: 1, 3: 1}], f"{len(H)} multi-indices"))
    return results
