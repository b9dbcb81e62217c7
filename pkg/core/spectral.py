"""
Torus LSI - Spectral Module
Clock-and-shift representations at rational theta = p/q, Hermitian
eigendecomposition, positivity tests, the entropy functional tau(a^2 log a)
and the circle symbol of diagonal elements.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from core.errors import (
    DivergenceError,
    NotSelfAdjointError,
    NumericalError,
    PositivityError,
    PreconditionError,
)
from core.lattice import (
    DiagonalElement,
    ThetaParam,
    TorusElement,
    diagonal_view,
    dilate,
    multiply,
    self_adjoint_residual,
    weyl_coefficients,
)

log = logging.getLogger(__name__)

DEFAULT_Q_MAX = 2000
R_GRID_POINTS = 33
EIGEN_FLOOR = 1e-12
HERMITIAN_TOL = 1e-10
SYMBOL_SAMPLES = 4097
SYMBOL_CONSISTENCY_TOL = 1e-6


# ─── Clock and shift ────────────────────────────────────────────

@dataclass(frozen=True)
class ClockShiftRep:
    """
    The q-dimensional pair U_q = diag(w^j), (V_q)_{jk} = 1 iff j = k + 1 mod q,
    with w = e^{2 pi i p/q}, so that U_q V_q = w V_q U_q.
    """

    p: int
    q: int

    def __post_init__(self):
        if self.q < 1:
            raise PreconditionError(f"dimension must be positive, got q = {self.q}")
        if math.gcd(self.p, self.q) != 1:
            raise PreconditionError(f"gcd({self.p}, {self.q}) != 1")

    @property
    def dimension(self) -> int:
        return self.q

    def _roots(self, exponents: np.ndarray) -> np.ndarray:
        # exact integer reduction before the exponential
        return np.exp(2j * np.pi * (np.mod(exponents, self.q) / self.q))

    def clock(self) -> np.ndarray:
        return np.diag(self._roots(self.p * np.arange(self.q)))

    def shift(self) -> np.ndarray:
        v = np.zeros((self.q, self.q), dtype=complex)
        idx = np.arange(self.q)
        v[(idx + 1) % self.q, idx] = 1.0
        return v

    def weyl_phase(self, m: int, n: int) -> complex:
        """e^{-pi i m n p / q}, reduced modulo 2q."""
        k = (m * n * self.p) % (2 * self.q)
        return complex(np.exp(-1j * np.pi * k / self.q))

    def add_monomial(self, out: np.ndarray, m: int, n: int, coef: complex) -> None:
        """out += coef * U^m V^n, whose only nonzero entries are (i, i - n) = w^{m i}."""
        rows = np.arange(self.q)
        out[rows, (rows - n) % self.q] += coef * self._roots(self.p * m * rows)


def represent(a: TorusElement, p: int, q: int) -> np.ndarray:
    """
    Matrix of a in the clock-and-shift representation at p/q.

    Coefficients travel through the symmetric ordering: a = sum b_{m,n} W(m,n) at
    a's own theta, and the matrix is sum b_{m,n} e^{-pi i m n p/q} U_q^m V_q^n.
    At theta = p/q this is exactly sum a_{m,n} U_q^m V_q^n, and for self-adjoint a
    it is Hermitian for any theta.

    Args:
        a: Element to represent
        p, q: Coprime integers with q > 2 * support radius of a

    Returns:
        np.ndarray: q x q complex matrix
    """
    rep = ClockShiftRep(p, q)
    radius = a.support_radius
    if q <= 2 * radius:
        raise PreconditionError(f"q = {q} aliases modes of radius {radius}; need q > {2 * radius}")
    out = np.zeros((q, q), dtype=complex)
    for (m, n), b in weyl_coefficients(a).items():
        rep.add_monomial(out, m, n, b * rep.weyl_phase(m, n))
    return out


def usable_convergents(theta: ThetaParam, radius: int, q_max: int = DEFAULT_Q_MAX) -> list[tuple[int, int]]:
    """Convergents of theta whose dimension does not alias modes of the given radius."""
    convs = [(p, q) for p, q in theta.convergents(q_max) if q > 2 * radius]
    if not convs:
        raise PreconditionError(
            f"no convergent of theta = {theta.value!r} with 2 * {radius} < q <= {q_max}"
        )
    log.debug("convergents for radius %d: %s", radius, convs[-2:])
    return convs


# ─── Spectra ────────────────────────────────────────────────────

@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    p: int
    q: int

    @property
    def min_eig(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eig(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def positivity_margin(self) -> float:
        return self.min_eig

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "q": self.q,
            "min_eig": self.min_eig,
            "max_eig": self.max_eig,
            "positivity_margin": self.positivity_margin,
            "eigenvalues": [float(v) for v in self.eigenvalues],
        }


def spectrum(a: TorusElement, p: int, q: int) -> SpectralData:
    """Ascending eigenvalues of the Hermitian matrix represent(a, p, q)."""
    residual = self_adjoint_residual(a)
    if residual > HERMITIAN_TOL:
        raise NotSelfAdjointError("spectrum needs a self-adjoint element", residual)

    mat = represent(a, p, q)
    scale = max(1.0, sum(abs(c) for c in a.coeffs.values()))
    herm_residual = float(np.max(np.abs(mat - mat.conj().T), initial=0.0))
    if herm_residual > 1e-8 * scale:
        raise NumericalError("represented matrix is not Hermitian", herm_residual)

    try:
        eigenvalues = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"eigensolver failed at q = {q}: {e}", herm_residual) from e
    eigenvalues.setflags(write=False)
    return SpectralData(eigenvalues, p, q)


def is_positive(
    a: TorusElement,
    margin: float = 0.0,
    q_max: int = DEFAULT_Q_MAX,
    strict: bool = False,
) -> tuple[bool, float]:
    """
    Positivity test at the largest usable convergent of a.theta.

    Diagonal elements are cross-checked against their circle symbol sampled on the
    eigenvalue grid. A disagreement is logged, or raised as NumericalError when strict.

    Returns:
        (min_eig > margin, min_eig)
    """
    p, q = usable_convergents(a.theta, a.support_radius, q_max)[-1]
    data = spectrum(a, p, q)
    value = data.min_eig

    view = diagonal_view(a)
    if view is not None and view.support_radius > 0:
        symbol_min = float(np.min(symbol_on_eigen_grid(view, p, q)))
        gap = abs(symbol_min - value)
        if gap > SYMBOL_CONSISTENCY_TOL:
            if strict:
                raise NumericalError(
                    f"positivity mismatch at q={q}: matrix {value:.3e} vs symbol {symbol_min:.3e}", gap
                )
            log.warning(
                "positivity mismatch at q=%d: matrix %.3e vs symbol %.3e", q, value, symbol_min
            )
    return value > margin, value


@dataclass(frozen=True)
class SpectralBounds:
    b1: float
    b2: float
    margins: tuple[float, ...]
    max_eigenvalue: float
    q: int


def spectral_bounds(
    a: TorusElement,
    r_grid_points: int = R_GRID_POINTS,
    q_max: int = DEFAULT_Q_MAX,
) -> SpectralBounds:
    """
    Bounds [B1, B2] for the spectra of P_r(a) = 1 + x_r, r in [0, 1].

    B2 = 1 + sum |a_{m,n}| over nonconstant modes; B1 is the smallest eigenvalue
    over an equispaced r-grid.
    """
    x = dilate(a)
    b2 = 1.0 + sum(abs(c) for mode, c in a.coeffs.items() if mode != (0, 0))
    p, q = usable_convergents(a.theta, a.support_radius, q_max)[-1]
    one = TorusElement.constant(a.theta)

    margins = []
    top = -math.inf
    for r in np.linspace(0.0, 1.0, r_grid_points):
        data = spectrum(one + x.evaluate(float(r)), p, q)
        margins.append(data.min_eig)
        top = max(top, data.max_eig)

    b1 = min(margins)
    if b1 <= 0.0:
        raise PositivityError("P_r(a) is not strictly positive on the r-grid", b1)
    return SpectralBounds(b1, b2, tuple(margins), top, q)


# ─── Entropy ────────────────────────────────────────────────────

@dataclass(frozen=True)
class EntropyEstimate:
    value: float
    error_estimate: float
    q: int
    q_previous: int | None


def entropy_from_eigenvalues(eigenvalues: np.ndarray) -> float:
    """(1/q) sum lambda^2 log lambda over a strictly positive spectrum."""
    lam = np.asarray(eigenvalues, dtype=float)
    low = float(lam.min())
    if low <= EIGEN_FLOOR:
        raise PositivityError("entropy needs a strictly positive spectrum", low)
    return float(np.mean(lam**2 * np.log(lam)))


def entropy_functional(a: TorusElement, q_max: int = DEFAULT_Q_MAX) -> EntropyEstimate:
    """
    tau(a^2 log a) through the eigenvalues at the largest usable convergent.

    The error estimate is the difference with the value at the previous convergent;
    it is 0.0 when there is no previous convergent.
    """
    convs = usable_convergents(a.theta, a.support_radius, q_max)
    p, q = convs[-1]
    value = entropy_from_eigenvalues(spectrum(a, p, q).eigenvalues)

    if len(convs) < 2:
        log.debug("single usable convergent q=%d, no error estimate", q)
        return EntropyEstimate(value, 0.0, q, None)

    p_prev, q_prev = convs[-2]
    previous = entropy_from_eigenvalues(spectrum(a, p_prev, q_prev).eigenvalues)
    return EntropyEstimate(value, abs(value - previous), q, q_prev)


def matrix_log(mat: np.ndarray) -> np.ndarray:
    """Principal logarithm of a positive definite Hermitian matrix."""
    w, vecs = np.linalg.eigh(0.5 * (mat + mat.conj().T))
    if w[0] <= EIGEN_FLOOR:
        raise PositivityError("matrix logarithm needs a positive definite matrix", float(w[0]))
    return (vecs * np.log(w)) @ vecs.conj().T


@dataclass(frozen=True)
class SeriesLog:
    value: TorusElement
    tail_bound: float
    rho: float


def log_series(x: TorusElement, K: int) -> SeriesLog:
    """
    Partial sum of log(1 + x) = sum_{k=1..K} (-1)^{k-1} x^k / k.

    The tail is bounded by rho^{K+1} / ((K+1)(1-rho)) with rho = sum |x_{m,n}|.
    """
    if K < 1:
        raise PreconditionError(f"number of terms must be positive, got {K}")
    rho = sum(abs(c) for c in x.coeffs.values())
    if rho >= 1.0:
        raise DivergenceError(f"log series diverges for coefficient sum {rho:.6g} >= 1")

    power = x
    total = x
    for k in range(2, K + 1):
        power = multiply(power, x)
        total = total + power.scale((-1) ** (k - 1) / k)
    tail = rho ** (K + 1) / ((K + 1) * (1.0 - rho))
    return SeriesLog(total, tail, rho)


# ─── Circle symbol ──────────────────────────────────────────────

def symbol_coefficients(a: DiagonalElement) -> dict[int, complex]:
    """
    Coefficients of f(z) = sum a~_n z^n with a~_n = a_n e^{pi i s n(n-1) theta}.

    With W = U V^s one has U^n V^{sn} = e^{pi i s n(n-1) theta} W^n and tau(W^n) = 0
    for n != 0, so tau of a polynomial in a is the circle mean of that polynomial in f.
    """
    theta = a.theta.value
    s = a.slope
    return {
        n: c * np.exp(1j * np.pi * ((s * n * (n - 1) * theta) % 2.0))
        for n, c in a.coeffs.items()
    }


def _check_symbol_input(a: DiagonalElement) -> None:
    residual = self_adjoint_residual(a.to_torus())
    if residual > HERMITIAN_TOL:
        raise NotSelfAdjointError("circle symbol needs a self-adjoint element", residual)


def _real_part(values: np.ndarray) -> np.ndarray:
    imag = float(np.max(np.abs(values.imag), initial=0.0))
    if imag > 1e-8:
        raise NumericalError("circle symbol has an imaginary part", imag)
    return values.real


def circle_symbol(a: DiagonalElement, samples: int) -> np.ndarray:
    """
    The real symbol f sampled at t_j = j / samples, j = 0..samples-1.

    Returns:
        np.ndarray: f(t_j) as floats
    """
    _check_symbol_input(a)
    if samples < 4 * a.support_radius + 1:
        raise PreconditionError(
            f"{samples} samples cannot resolve a symbol of degree {a.support_radius}"
        )
    coeffs = symbol_coefficients(a)
    j = np.arange(samples)
    values = np.zeros(samples, dtype=complex)
    for n, c in coeffs.items():
        values += c * np.exp(2j * np.pi * (np.mod(n * j, samples) / samples))
    return _real_part(values)


def symbol_on_eigen_grid(a: DiagonalElement, p: int, q: int) -> np.ndarray:
    """
    The symbol sampled where represent(a, p, q) has its eigenvalues.

    Z = W_q(1, s) satisfies Z^q = (-1)^{spq}, so its eigenvalues are the q roots
    e^{2 pi i (j + eps/2)/q}; in the variable t this grid is shifted by s theta / 2.
    """
    _check_symbol_input(a)
    eps = (a.slope * p * q) % 2
    t = (np.arange(q) + eps / 2.0) / q + a.slope * a.theta.value / 2.0
    values = np.zeros(q, dtype=complex)
    for n, c in symbol_coefficients(a).items():
        values += c * np.exp(2j * np.pi * np.mod(n * t, 1.0))
    return _real_part(values)


def circle_entropy(a: DiagonalElement, samples: int | None = None) -> float:
    """Circle mean of f^2 log f by equispaced quadrature."""
    if samples is None:
        samples = max(SYMBOL_SAMPLES, 8 * a.support_radius + 1)
    f = circle_symbol(a, samples)
    low = float(f.min())
    if low <= EIGEN_FLOOR:
        raise PositivityError("circle symbol is not strictly positive", low)
    return float(np.mean(f**2 * np.log(f)))
