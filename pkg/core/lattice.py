"""
Torus LSI - Lattice Algebra Module
Exact sparse coefficient arithmetic for finitely supported elements of the
noncommutative two-torus: twisted product, adjoint, trace, norms, dilation.

An element a = sum a_{m,n} U^m V^n is stored as a map (m, n) -> complex,
with the commutation relation UV = e^{2 pi i theta} VU.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Iterator, Mapping

import numpy as np

from core.errors import IncompatibleElementsError, NormalizationError, PreconditionError

Mode = tuple[int, int]

DROP_TOL = 1e-15
NORMALIZATION_TOL = 1e-12
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


# ─── Phases ─────────────────────────────────────────────────────

def phase(k: int, theta: float) -> complex:
    """e^{2 pi i k theta}, with k*theta reduced modulo 1 before scaling by 2 pi."""
    return cmath.exp(2j * math.pi * ((k * theta) % 1.0))


def half_phase(k: int, theta: float) -> complex:
    """e^{pi i k theta}, with k*theta reduced modulo 2."""
    return cmath.exp(1j * math.pi * ((k * theta) % 2.0))


# ─── Theta ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class ThetaParam:
    """Deformation angle, optionally tagged with a rational approximation p/q."""

    value: float
    rational_approx: tuple[int, int] | None = None

    def __post_init__(self):
        value = float(self.value)
        if not 0.0 < value < 1.0:
            raise PreconditionError(f"theta must lie in (0, 1), got {value!r}")
        object.__setattr__(self, "value", value)
        if self.rational_approx is not None:
            p, q = (int(v) for v in self.rational_approx)
            if p < 1 or q < 1 or math.gcd(p, q) != 1:
                raise PreconditionError(f"rational approximation {p}/{q} is not a reduced positive fraction")
            if abs(value - p / q) > 1.0 / q**2:
                raise PreconditionError(f"{p}/{q} is not within 1/q^2 of theta = {value!r}")
            object.__setattr__(self, "rational_approx", (p, q))

    @classmethod
    def golden(cls) -> ThetaParam:
        return cls(GOLDEN)

    @classmethod
    def rational(cls, p: int, q: int) -> ThetaParam:
        return cls(p / q, (p, q))

    @classmethod
    def parse(cls, text: str | float) -> ThetaParam:
        """Accept a float or the string 'golden'."""
        if isinstance(text, str) and text.strip().lower() == "golden":
            return cls.golden()
        return cls(float(text))

    @property
    def is_rational(self) -> bool:
        if self.rational_approx is None:
            return False
        p, q = self.rational_approx
        return self.value == p / q

    def convergents(self, q_max: int) -> list[tuple[int, int]]:
        """
        Continued-fraction convergents p/q of theta with p >= 1 and q <= q_max.

        Returns:
            list of (p, q) pairs, ascending in q
        """
        if self.is_rational:
            x = Fraction(*self.rational_approx)
        else:
            x = Fraction(self.value)

        out: list[tuple[int, int]] = []
        a = math.floor(x)
        rest = x - a
        h_prev, h = 1, a
        k_prev, k = 0, 1
        while k <= q_max:
            if h >= 1:
                out.append((h, k))
            if rest == 0:
                break
            x = 1 / rest
            a = math.floor(x)
            rest = x - a
            h_prev, h = h, a * h + h_prev
            k_prev, k = k, a * k + k_prev
        return out


def _require_same_theta(a, b) -> None:
    if a.theta.value != b.theta.value:
        raise IncompatibleElementsError(
            f"theta mismatch: {a.theta.value!r} vs {b.theta.value!r}"
        )


# ─── Torus elements ─────────────────────────────────────────────

@dataclass(frozen=True)
class TorusElement:
    """Finitely supported sum of monomials U^m V^n with complex coefficients."""

    theta: ThetaParam
    coeffs: Mapping[Mode, complex] = field(default_factory=dict)

    def __post_init__(self):
        cleaned: dict[Mode, complex] = {}
        for (m, n), c in self.coeffs.items():
            c = complex(c)
            if abs(c) >= DROP_TOL:
                cleaned[(int(m), int(n))] = c
        object.__setattr__(self, "coeffs", MappingProxyType(cleaned))

    __hash__ = None

    # Constructors

    @classmethod
    def constant(cls, theta: ThetaParam, value: complex = 1.0) -> TorusElement:
        return cls(theta, {(0, 0): value})

    @classmethod
    def monomial(cls, theta: ThetaParam, m: int, n: int, value: complex = 1.0) -> TorusElement:
        return cls(theta, {(m, n): value})

    # Accessors

    def __getitem__(self, mode: Mode) -> complex:
        return self.coeffs.get(mode, 0j)

    def __iter__(self) -> Iterator[tuple[Mode, complex]]:
        """Iterate (mode, coefficient) pairs in lexicographic mode order."""
        for mode in sorted(self.coeffs):
            yield mode, self.coeffs[mode]

    def __len__(self) -> int:
        return len(self.coeffs)

    @property
    def support_radius(self) -> int:
        return max((max(abs(m), abs(n)) for m, n in self.coeffs), default=0)

    # Arithmetic sugar

    def __add__(self, other: TorusElement) -> TorusElement:
        _require_same_theta(self, other)
        out = dict(self.coeffs)
        for mode, c in other.coeffs.items():
            out[mode] = out.get(mode, 0j) + c
        return TorusElement(self.theta, out)

    def __neg__(self) -> TorusElement:
        return self.scale(-1.0)

    def __sub__(self, other: TorusElement) -> TorusElement:
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, TorusElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def scale(self, c: complex) -> TorusElement:
        return TorusElement(self.theta, {mode: c * v for mode, v in self.coeffs.items()})


@dataclass(frozen=True)
class DiagonalElement:
    """Element sum a_n U^n V^{s n} of the commutative diagonal class with slope s."""

    slope: int
    coeffs: Mapping[int, complex]
    theta: ThetaParam

    def __post_init__(self):
        if int(self.slope) == 0:
            raise PreconditionError("diagonal slope must be nonzero")
        object.__setattr__(self, "slope", int(self.slope))
        cleaned = {int(n): complex(c) for n, c in self.coeffs.items() if abs(complex(c)) >= DROP_TOL}
        object.__setattr__(self, "coeffs", MappingProxyType(cleaned))

    __hash__ = None

    def __getitem__(self, n: int) -> complex:
        return self.coeffs.get(n, 0j)

    @property
    def support_radius(self) -> int:
        return max((abs(n) for n in self.coeffs), default=0)

    def positive_modes(self) -> list[int]:
        return sorted(n for n in self.coeffs if n > 0)

    def to_torus(self) -> TorusElement:
        return TorusElement(self.theta, {(n, self.slope * n): c for n, c in self.coeffs.items()})


def diagonal_view(a: TorusElement, slope: int | None = None) -> DiagonalElement | None:
    """Recover a DiagonalElement if every mode of a lies on a line (n, s n); None otherwise."""
    s = slope
    coeffs: dict[int, complex] = {}
    for (m, n), c in a.coeffs.items():
        if m == 0 and n == 0:
            coeffs[0] = c
            continue
        if m == 0 or n % m != 0:
            return None
        ratio = n // m
        if ratio == 0:
            return None
        if s is None:
            s = ratio
        elif ratio != s:
            return None
        coeffs[m] = c
    return DiagonalElement(s if s is not None else 1, coeffs, a.theta)


# ─── Core operations ────────────────────────────────────────────

def multiply(a: TorusElement, b: TorusElement) -> TorusElement:
    """Twisted product: c_{p,q} = sum a_{m,n} b_{p-m,q-n} e^{-2 pi i (p-m) n theta}."""
    _require_same_theta(a, b)
    theta = a.theta.value
    out: dict[Mode, complex] = {}
    for (m, n), x in a.coeffs.items():
        for (mb, nb), y in b.coeffs.items():
            key = (m + mb, n + nb)
            out[key] = out.get(key, 0j) + x * y * phase(-mb * n, theta)
    return TorusElement(a.theta, out)


def _adjoint_coeffs(a: TorusElement) -> dict[Mode, complex]:
    theta = a.theta.value
    return {(-m, -n): c.conjugate() * phase(-m * n, theta) for (m, n), c in a.coeffs.items()}


def adjoint(a: TorusElement) -> TorusElement:
    """(a*)_{m,n} = conj(a_{-m,-n}) e^{-2 pi i m n theta}."""
    return TorusElement(a.theta, _adjoint_coeffs(a))


def self_adjoint_residual(a: TorusElement) -> float:
    """max |a_{m,n} - (a*)_{m,n}| over the joint support."""
    adj = _adjoint_coeffs(a)
    keys = set(a.coeffs) | set(adj)
    return max((abs(a[k] - adj.get(k, 0j)) for k in keys), default=0.0)


def is_self_adjoint(a: TorusElement, tol: float = 1e-12) -> bool:
    if tol < 0:
        raise PreconditionError("tolerance must be nonnegative")
    return self_adjoint_residual(a) <= tol


def trace(a: TorusElement) -> complex:
    """The normalized trace extracts the constant term."""
    return a[(0, 0)]


def l2_norm(a: TorusElement) -> float:
    return math.sqrt(sum(abs(c) ** 2 for c in a.coeffs.values()))


def dirichlet_weight(a: TorusElement) -> float:
    """sum (|m| + |n|) |a_{m,n}|^2."""
    return sum((abs(m) + abs(n)) * abs(c) ** 2 for (m, n), c in a.coeffs.items())


def hadamard(a: TorusElement, b: TorusElement) -> TorusElement:
    _require_same_theta(a, b)
    return TorusElement(a.theta, {k: c * b[k] for k, c in a.coeffs.items() if k in b.coeffs})


def truncate(a: TorusElement, j: int) -> TorusElement:
    """Keep the modes inside the box |m| <= j, |n| <= j."""
    if j < 0:
        raise PreconditionError("truncation order must be nonnegative")
    return TorusElement(
        a.theta, {(m, n): c for (m, n), c in a.coeffs.items() if abs(m) <= j and abs(n) <= j}
    )


def weyl_coefficients(a: TorusElement) -> dict[Mode, complex]:
    """
    Coefficients in the symmetric ordering W(m,n) = e^{-pi i m n theta} U^m V^n.

    In this basis self-adjointness reads b_{-m,-n} = conj(b_{m,n}).
    """
    theta = a.theta.value
    return {(m, n): c * half_phase(m * n, theta) for (m, n), c in a.coeffs.items()}


def reflect_to_representative(mode: Mode) -> tuple[Mode, bool]:
    """
    Map a nonzero mode into the half-lattice {m > 0} U {m = 0, n > 0}.

    Returns:
        (representative, negated) where negated tells whether the mode was flipped
    """
    m, n = mode
    if m == 0 and n == 0:
        raise PreconditionError("the constant mode has no representative")
    if m > 0 or (m == 0 and n > 0):
        return (m, n), False
    return (-m, -n), True


# ─── Graded elements ────────────────────────────────────────────

def _clean_poly(values) -> np.ndarray | None:
    arr = np.array(values, dtype=complex)
    arr[np.abs(arr) < DROP_TOL] = 0.0
    arr = np.trim_zeros(arr, "b")
    if arr.size == 0:
        return None
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GradedElement:
    """
    Torus element whose coefficients are polynomials in a formal variable r.

    coeffs maps a mode to a complex array indexed by r-degree.
    """

    theta: ThetaParam
    coeffs: Mapping[Mode, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for (m, n), poly in self.coeffs.items():
            arr = _clean_poly(poly)
            if arr is not None:
                cleaned[(int(m), int(n))] = arr
        object.__setattr__(self, "coeffs", MappingProxyType(cleaned))

    __hash__ = None

    @classmethod
    def from_element(cls, a: TorusElement) -> GradedElement:
        return cls(a.theta, {mode: [c] for mode, c in a.coeffs.items()})

    @property
    def max_degree(self) -> int:
        return max((len(p) - 1 for p in self.coeffs.values()), default=0)

    def polynomial(self, mode: Mode) -> dict[int, complex]:
        poly = self.coeffs.get(mode)
        if poly is None:
            return {}
        return {d: complex(c) for d, c in enumerate(poly) if c != 0}

    def evaluate(self, r: float) -> TorusElement:
        """Substitute a numeric r into every coefficient polynomial."""
        return TorusElement(
            self.theta,
            {mode: np.polynomial.polynomial.polyval(r, poly) for mode, poly in self.coeffs.items()},
        )

    def truncated(self, max_degree: int) -> GradedElement:
        return GradedElement(self.theta, {mode: p[: max_degree + 1] for mode, p in self.coeffs.items()})


def _lowest_degree(poly: np.ndarray) -> int:
    return int(np.flatnonzero(poly)[0])


def multiply_graded(x: GradedElement, y: GradedElement, max_degree: int | None = None) -> GradedElement:
    """Twisted product with r-polynomials multiplied by convolution; optional degree cutoff."""
    _require_same_theta(x, y)
    theta = x.theta.value
    low_y = {mode: _lowest_degree(p) for mode, p in y.coeffs.items()}
    out: dict[Mode, np.ndarray] = {}
    for (m, n), px in x.coeffs.items():
        low_x = _lowest_degree(px)
        for (my, ny), py in y.coeffs.items():
            if max_degree is not None and low_x + low_y[(my, ny)] > max_degree:
                continue
            prod = np.convolve(px, py) * phase(-my * n, theta)
            if max_degree is not None:
                prod = prod[: max_degree + 1]
            key = (m + my, n + ny)
            acc = out.get(key)
            if acc is None:
                out[key] = prod.copy()
            elif acc.size >= prod.size:
                acc[: prod.size] += prod
            else:
                prod = prod.copy()
                prod[: acc.size] += acc
                out[key] = prod
    return GradedElement(x.theta, out)


def power_graded(x: GradedElement, k: int, max_degree: int | None = None) -> GradedElement:
    """x^k by repeated multiply_graded. Truncation at max_degree is exact below the cutoff."""
    if k < 1:
        raise PreconditionError(f"power must be positive, got {k}")
    base = x if max_degree is None else x.truncated(max_degree)
    result = base
    for _ in range(k - 1):
        result = multiply_graded(result, base, max_degree)
    return result


def graded_trace(x: GradedElement) -> dict[int, complex]:
    """Constant-mode r-polynomial, as a map degree -> coefficient."""
    return x.polynomial((0, 0))


def dilate(a: TorusElement, slope: int | None = None) -> GradedElement:
    """
    Build x_r = P_r(a) - 1, where mode (m, n) is scaled by r^{|m|+|n|}.

    Args:
        a: Element with trace(a) = 1
        slope: None for the general grading; s to require a in the diagonal class
               of slope s, where the degree reads (1 + |s|)|n|

    Returns:
        GradedElement: the nonconstant part of a, graded by r-degree
    """
    if abs(trace(a) - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"dilation needs trace(a) = 1, got {trace(a)!r}")
    if slope is not None:
        view = diagonal_view(a, slope)
        if view is None:
            raise PreconditionError(f"element is not in the diagonal class of slope {slope}")

    out: dict[Mode, list[complex]] = {}
    for (m, n), c in a.coeffs.items():
        if m == 0 and n == 0:
            continue
        degree = abs(m) + abs(n)
        poly = [0j] * (degree + 1)
        poly[degree] = c
        out[(m, n)] = poly
    return GradedElement(a.theta, out)
