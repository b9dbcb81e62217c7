"""
Torus LSI - Combinatorics Module
Exact Taylor coefficients of the log-Sobolev deficit

    G(r) = E(P_r a) + 1/2 ||x_r||^2 - tau(P_r(a)^2 log P_r(a)),   P_r(a) = 1 + x_r,

the closed forms for the diagonal class (H_{t,l}, D(P), C(t,l), A_l) and the
permutation sums B_{P,Q} of the general class.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Iterator, Mapping

import numpy as np

from core.errors import (
    EnumerationCapError,
    NormalizationError,
    NotSelfAdjointError,
    PreconditionError,
)
from core.lattice import (
    NORMALIZATION_TOL,
    DiagonalElement,
    Mode,
    ThetaParam,
    TorusElement,
    diagonal_view,
    dilate,
    graded_trace,
    half_phase,
    multiply_graded,
    reflect_to_representative,
    self_adjoint_residual,
)

log = logging.getLogger(__name__)

GENERAL_K_CAP = 6
PERMUTATION_K_CAP = 8
GENERAL_SUPPORT_CAP = 4
# largest l whose entries (2l-3)! still fit a float64
AL_CAP = 86
HERMITIAN_TOL = 1e-10
QUADRATIC_ORACLE_TOL = 1e-9


# ─── Multi-indices ──────────────────────────────────────────────

@dataclass(frozen=True)
class MultiIndex:
    """A finitely supported count function P: keys -> positive integers."""

    counts: tuple[tuple[Hashable, int], ...] = ()

    def __post_init__(self):
        items = tuple(sorted((k, int(c)) for k, c in self.counts if c))
        if any(c < 0 for _, c in items):
            raise PreconditionError("multi-index counts must be nonnegative")
        object.__setattr__(self, "counts", items)

    @classmethod
    def of(cls, mapping: Mapping) -> MultiIndex:
        return cls(tuple(mapping.items()))

    def __getitem__(self, key) -> int:
        return dict(self.counts).get(key, 0)

    @property
    def support(self) -> tuple:
        return tuple(k for k, _ in self.counts)

    @property
    def total(self) -> int:
        return sum(c for _, c in self.counts)

    def as_dict(self) -> dict:
        return dict(self.counts)

    def elements(self) -> list:
        """The multiset, each key repeated by its count."""
        return [k for k, c in self.counts for _ in range(c)]

    def factorial_product(self) -> int:
        return math.prod(math.factorial(c) for _, c in self.counts)

    def vector_sum(self) -> Mode:
        return (
            sum(c * k[0] for k, c in self.counts),
            sum(c * k[1] for k, c in self.counts),
        )

    def __str__(self) -> str:
        return "{" + ", ".join(f"{k}:{c}" for k, c in self.counts) + "}"


# ─── Diagonal class: H, D, C ────────────────────────────────────

def enumerate_H(t: int, l: int, support: Iterable[int]) -> list[MultiIndex]:
    """
    All P on the support with sum P(n) = t and sum P(n) n = l.

    Count vectors are produced in lexicographic order, smallest mode first.
    """
    modes = sorted(set(support))
    if any(n <= 0 for n in modes):
        raise PreconditionError("H_{t,l} is defined on positive modes only")

    out: list[MultiIndex] = []

    def visit(i: int, t_left: int, l_left: int, counts: list[int]) -> None:
        if i == len(modes):
            if t_left == 0 and l_left == 0:
                out.append(MultiIndex(tuple(zip(modes, counts))))
            return
        n = modes[i]
        for c in range(0, min(t_left, l_left // n) + 1):
            visit(i + 1, t_left - c, l_left - c * n, counts + [c])

    if t >= 0 and l >= 0:
        visit(0, t, l, [])
    return out


def D_of_P(P: MultiIndex, a: DiagonalElement) -> complex:
    """e^{pi i s theta sum P(n) n^2} prod (-a_n)^{P(n)} / P(n)!"""
    exponent = 0
    value = 1 + 0j
    for n, count in P.counts:
        if n <= 0 or a[n] == 0:
            raise PreconditionError(f"mode {n} of P is not a positive mode of the element")
        exponent += count * n * n
        value *= (-a[n]) ** count
    value *= half_phase(a.slope * exponent, a.theta.value)
    return value / P.factorial_product()


def C(t: int, l: int, a: DiagonalElement) -> complex:
    """Sum of D(P) over H_{t,l}; zero when H_{t,l} is empty."""
    return sum((D_of_P(P, a) for P in enumerate_H(t, l, a.positive_modes())), 0j)


# ─── A_l ────────────────────────────────────────────────────────

@dataclass(frozen=True)
class AlMatrix:
    """l x l matrix with (1,1) entry (1+|s|) l - 1 and (i,j) entry (i+j-3)! otherwise."""

    l: int
    s: int
    entries: tuple[tuple[int, ...], ...]

    @property
    def size(self) -> int:
        return self.l

    def entry(self, i: int, j: int) -> int:
        """1-based entry."""
        return self.entries[i - 1][j - 1]

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])

    @property
    def max_entry(self) -> int:
        return max(max(row) for row in self.entries)


def al_matrix(l: int, s: int) -> AlMatrix:
    if l < 2:
        raise PreconditionError(f"A_l needs l >= 2, got {l}")
    if s == 0:
        raise PreconditionError("slope must be nonzero")
    if l > AL_CAP:
        raise EnumerationCapError("A_l size", l, AL_CAP)
    rows = []
    for i in range(1, l + 1):
        row = []
        for j in range(1, l + 1):
            row.append((1 + abs(s)) * l - 1 if i == j == 1 else math.factorial(i + j - 3))
        rows.append(tuple(row))
    return AlMatrix(l, s, tuple(rows))


def al_min_eigenvalue(A: AlMatrix) -> float:
    return float(np.linalg.eigvalsh(A.as_array())[0])


# ─── Preconditions ──────────────────────────────────────────────

def _check_normalized_self_adjoint(a: TorusElement) -> None:
    residual = self_adjoint_residual(a)
    if residual > HERMITIAN_TOL:
        raise NotSelfAdjointError("coefficient extraction needs a self-adjoint element", residual)
    if abs(a[(0, 0)] - 1.0) > NORMALIZATION_TOL:
        raise NormalizationError(f"coefficient extraction needs trace 1, got {a[(0, 0)]!r}")


def g_coefficient_diagonal(l: int, a: DiagonalElement) -> float:
    """
    Coefficient of r^{2(1+|s|) l} in G(r) for a diagonal element:
    2 sum_{i,j=1..l} A_l(i,j) C(i,l) conj(C(j,l)).
    """
    _check_normalized_self_adjoint(a.to_torus())
    A = al_matrix(l, a.slope)
    cs = [C(i, l, a) for i in range(1, l + 1)]
    total = 0j
    for i in range(l):
        if cs[i] == 0:
            continue
        for j in range(l):
            total += float(A.entries[i][j]) * cs[i] * cs[j].conjugate()
    value = 2.0 * total
    if abs(value.imag) > 1e-10 * max(1.0, abs(value)):
        log.warning("g coefficient at l=%d has imaginary part %.3e", l, value.imag)
    return value.real


def tau_power_diagonal(a: DiagonalElement, k: int, max_l: int) -> dict[int, complex]:
    """
    Coefficient of r^{2(1+|s|) l} in tau(x_r^k), for 2 <= l <= max_l:
    (-1)^k k! sum_{t=1..k-1} C(t,l) conj(C(k-t,l)).
    """
    if k < 3:
        raise PreconditionError(f"closed form needs k >= 3, got {k}")
    residual = self_adjoint_residual(a.to_torus())
    if residual > HERMITIAN_TOL:
        raise NotSelfAdjointError("closed form needs a self-adjoint element", residual)

    sign_fact = (-1) ** k * float(math.factorial(k))
    out: dict[int, complex] = {}
    for l in range(2, max_l + 1):
        cs = {t: C(t, l, a) for t in range(1, k)}
        out[l] = sign_fact * sum((cs[t] * cs[k - t].conjugate() for t in range(1, k)), 0j)
    return out


# ─── G(r) coefficients ──────────────────────────────────────────

@dataclass(frozen=True)
class GCoefficients:
    """Taylor coefficients of G(r) at even r-degrees."""

    mode: str
    by_degree: dict[int, float]
    imag_residual: float
    slope: int | None = None
    max_degree: int = 0

    @property
    def label(self) -> str:
        return f"diagonal({self.slope})" if self.mode == "diagonal" else "general"

    def theorem_degrees(self) -> list[int]:
        """Degrees 2(1+|s|) l, l >= 2, reachable below max_degree (diagonal mode only)."""
        if self.mode != "diagonal":
            return []
        step = 2 * (1 + abs(self.slope))
        return list(range(2 * step, self.max_degree + 1, step))

    def checked_degrees(self, tol: float = 1e-9) -> list[int]:
        """Degrees a diagonal class can reach, or the populated ones in general mode."""
        if self.mode == "diagonal":
            step = 2 * (1 + abs(self.slope))
            degrees = list(range(step, self.max_degree + 1, step))
        else:
            degrees = [d for d, v in sorted(self.by_degree.items()) if abs(v) > tol]
        return degrees or sorted(self.by_degree)

    def min_coefficient(self, degrees: Iterable[int] | None = None) -> float | None:
        if degrees is None:
            values = list(self.by_degree.values())
        else:
            values = [self.by_degree.get(d, 0.0) for d in degrees]
        return min(values) if values else None

    def negative_degrees(self, tol: float = 1e-9) -> list[int]:
        return [d for d, v in self.by_degree.items() if v < -tol]

    def to_dict(self) -> dict:
        return {
            "mode": self.label,
            "coeffs": [{"degree": d, "value": v} for d, v in sorted(self.by_degree.items())],
            "imag_residual": self.imag_residual,
        }


def strong_form_quadratic(a: TorusElement) -> dict[int, float]:
    """Closed-form quadratic part of G: sum over nonconstant modes of (w-1)|a|^2 r^{2w}."""
    out: dict[int, float] = defaultdict(float)
    for (m, n), c in a.coeffs.items():
        if (m, n) == (0, 0):
            continue
        w = abs(m) + abs(n)
        out[2 * w] += (w - 1) * abs(c) ** 2
    return dict(out)


def _quadratic_oracle(a: TorusElement, tau_x2: dict[int, complex]) -> dict[int, complex]:
    """E(r) + 1/2 ||x_r||^2 - 3/2 tau(x_r^2), assembled term by term."""
    out: dict[int, complex] = defaultdict(complex)
    for (m, n), c in a.coeffs.items():
        if (m, n) == (0, 0):
            continue
        w = abs(m) + abs(n)
        out[2 * w] += (w + 0.5) * abs(c) ** 2
    for d, v in tau_x2.items():
        out[d] -= 1.5 * v
    return dict(out)


def g_taylor(a: TorusElement, max_degree: int) -> GCoefficients:
    """
    Exact Taylor coefficients of G(r) up to max_degree.

    Uses (1+x)^2 log(1+x) = x + 3/2 x^2 + 2 sum_{k>=3} (-1)^{k-1} (k-3)!/k! x^k, so
    G = quadratic part + 2 sum_{k>=3} g_k with g_k = (-1)^k (k-3)!/k! tau(x_r^k).
    Every factor of x_r carries r-degree >= 1, so k <= max_degree is enough.

    Args:
        a: Self-adjoint element with trace 1
        max_degree: Highest r-degree to extract

    Returns:
        GCoefficients: even-degree coefficients 2..max_degree
    """
    _check_normalized_self_adjoint(a)
    view = diagonal_view(a)
    if view is not None and view.support_radius > 0:
        mode, slope = "diagonal", view.slope
    else:
        mode, slope = "general", None

    x = dilate(a).truncated(max_degree)
    series: dict[int, complex] = defaultdict(complex)
    for d, v in strong_form_quadratic(a).items():
        if d <= max_degree:
            series[d] += v

    power = x
    for k in range(2, max_degree + 1):
        power = multiply_graded(power, x, max_degree)
        if not power.coeffs:
            break
        tr = graded_trace(power)
        if k == 2:
            oracle = _quadratic_oracle(a, tr)
            closed = strong_form_quadratic(a)
            for d in set(oracle) | set(closed):
                if d <= max_degree and abs(oracle.get(d, 0.0) - closed.get(d, 0.0)) > QUADRATIC_ORACLE_TOL:
                    log.warning("quadratic part disagrees with the graded oracle at degree %d", d)
            continue
        weight = 2.0 * (-1) ** k * math.factorial(k - 3) / math.factorial(k)
        for d, v in tr.items():
            series[d] += weight * v

    odd = max((abs(v) for d, v in series.items() if d % 2), default=0.0)
    if odd > QUADRATIC_ORACLE_TOL:
        log.warning("odd-degree coefficient of size %.3e in G(r)", odd)

    by_degree = {d: float(series.get(d, 0j).real) for d in range(2, max_degree + 1, 2)}
    imag = max((abs(v.imag) for v in series.values()), default=0.0)
    return GCoefficients(mode, by_degree, float(imag), slope, max_degree)


# ─── General class: D_sigma and B_{P,Q} ─────────────────────────

def d_sigma(word: list[Mode]) -> int:
    """sum_{j<i} (m_j n_i - m_i n_j) over an ordered word of modes."""
    if not word:
        raise PreconditionError("word must be nonempty")
    total = 0
    m_acc = n_acc = 0
    for m, n in word:
        total += m_acc * n - m * n_acc
        m_acc += m
        n_acc += n
    return total


def multiset_permutations(items: Iterable) -> Iterator[tuple]:
    """Distinct permutations of a multiset, in lexicographic order."""
    seq = sorted(items)
    size = len(seq)
    while True:
        yield tuple(seq)
        i = size - 2
        while i >= 0 and seq[i] >= seq[i + 1]:
            i -= 1
        if i < 0:
            return
        j = size - 1
        while seq[j] <= seq[i]:
            j -= 1
        seq[i], seq[j] = seq[j], seq[i]
        seq[i + 1:] = reversed(seq[i + 1:])


def _theta_value(theta: ThetaParam | float) -> float:
    return theta.value if isinstance(theta, ThetaParam) else float(theta)


def combined_multiset(P: MultiIndex, Q: MultiIndex) -> list[Mode]:
    """P on its modes, Q reflected through the origin."""
    return P.elements() + [(-m, -n) for m, n in Q.elements()]


def permutation_count(P: MultiIndex, Q: MultiIndex) -> int:
    """Number of distinct words on the combined multiset."""
    return math.factorial(P.total + Q.total) // (P.factorial_product() * Q.factorial_product())


def b_pq(P: MultiIndex, Q: MultiIndex, theta: ThetaParam | float) -> complex:
    """B_{P,Q} = sum over distinct words sigma of e^{pi i theta D_sigma}."""
    letters = combined_multiset(P, Q)
    if len(letters) > PERMUTATION_K_CAP:
        raise EnumerationCapError("permutation sum size", len(letters), PERMUTATION_K_CAP)
    if not letters:
        return 1 + 0j
    t = _theta_value(theta)
    total = 0j
    count = 0
    for word in multiset_permutations(letters):
        total += half_phase(d_sigma(list(word)), t)
        count += 1
    if abs(total.imag) > 1e-12 * count:
        log.warning("B_{P,Q} for %s, %s has imaginary part %.3e", P, Q, total.imag)
    return total


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for c in range(total + 1):
        for rest in _compositions(total - c, parts - 1):
            yield (c,) + rest


def admissible_pairs(reps: list[Mode], k: int) -> Iterator[tuple[MultiIndex, MultiIndex]]:
    """
    Pairs (P, Q) of count functions on the representatives with |P| + |Q| = k and
    sum P(v) v = sum Q(v) v, i.e. the zero-sum words of length k.
    """
    size = len(reps)
    for vec in _compositions(k, 2 * size):
        P = MultiIndex(tuple(zip(reps, vec[:size])))
        Q = MultiIndex(tuple(zip(reps, vec[size:])))
        if P.vector_sum() == Q.vector_sum():
            yield P, Q


def _representatives(modes: Iterable[Mode]) -> list[Mode]:
    return sorted({reflect_to_representative(v)[0] for v in modes if v != (0, 0)})


def tau_power_general(a: TorusElement, k: int) -> dict[int, complex]:
    """
    tau(x_r^k) assembled from the permutation sums.

    Each admissible (P, Q) contributes
    prod a_v^{P(v)} conj(a_v)^{Q(v)} e^{pi i theta (sum P mn - sum Q mn)} B_{P,Q}
    at r-degree sum (P+Q)(v) (|m|+|n|).
    """
    if k < 3:
        raise PreconditionError(f"closed form needs k >= 3, got {k}")
    _check_normalized_self_adjoint(a)
    if k > GENERAL_K_CAP:
        raise EnumerationCapError("power k", k, GENERAL_K_CAP)
    reps = _representatives(a.coeffs)
    if len(reps) > GENERAL_SUPPORT_CAP:
        raise EnumerationCapError("support representatives", len(reps), GENERAL_SUPPORT_CAP)

    theta = a.theta.value
    out: dict[int, complex] = defaultdict(complex)
    for P, Q in admissible_pairs(reps, k):
        coef = 1 + 0j
        exponent = 0
        degree = 0
        for v, c in P.counts:
            coef *= a[v] ** c
            exponent += c * v[0] * v[1]
            degree += c * (abs(v[0]) + abs(v[1]))
        for v, c in Q.counts:
            coef *= a[v].conjugate() ** c
            exponent -= c * v[0] * v[1]
            degree += c * (abs(v[0]) + abs(v[1]))
        if coef == 0:
            continue
        out[degree] += coef * half_phase(exponent, theta) * b_pq(P, Q, theta)
    return dict(sorted(out.items()))


# ─── B_{P,Q} factorization search ───────────────────────────────

@dataclass(frozen=True)
class BlockReport:
    """One block of pairs sharing the vector sum and the split t = |P|."""

    target: Mode
    t: int
    rows: tuple[MultiIndex, ...]
    cols: tuple[MultiIndex, ...]
    singular_values: tuple[float, ...]
    rank: int
    sigma_ratio: float
    counterexample: tuple[tuple[MultiIndex, MultiIndex], ...] | None = None

    def to_dict(self) -> dict:
        return {
            "target": list(self.target),
            "t": self.t,
            "shape": [len(self.rows), len(self.cols)],
            "rank": self.rank,
            "sigma_ratio": self.sigma_ratio,
            "counterexample": (
                [[str(P), str(Q)] for P, Q in self.counterexample] if self.counterexample else None
            ),
        }


@dataclass(frozen=True)
class FactorizationReport:
    k: int
    theta: float
    blocks: tuple[BlockReport, ...] = field(default_factory=tuple)
    diagonal_consistent: bool | None = None

    @property
    def rank(self) -> int:
        return max((b.rank for b in self.blocks), default=0)

    @property
    def sigma_ratio(self) -> float:
        return max((b.sigma_ratio for b in self.blocks), default=0.0)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "theta": self.theta,
            "rank": self.rank,
            "sigma_ratio": self.sigma_ratio,
            "diagonal_consistent": self.diagonal_consistent,
            "blocks": [b.to_dict() for b in self.blocks],
        }


def _witness_minor(mat: np.ndarray, rows, cols, scale: float):
    best, where = 0.0, None
    for i0 in range(mat.shape[0]):
        for i1 in range(i0 + 1, mat.shape[0]):
            for j0 in range(mat.shape[1]):
                for j1 in range(j0 + 1, mat.shape[1]):
                    minor = abs(mat[i0, j0] * mat[i1, j1] - mat[i0, j1] * mat[i1, j0])
                    if minor > best:
                        best, where = minor, (i0, i1, j0, j1)
    if where is None or best <= 1e-9 * scale:
        return None
    i0, i1, j0, j1 = where
    return tuple((rows[i], cols[j]) for i in (i0, i1) for j in (j0, j1))


def _is_diagonal_line(reps: list[Mode]) -> bool:
    view = diagonal_view(TorusElement(ThetaParam(0.5), {v: 1.0 for v in reps}))
    return view is not None


def check_bpq_factorization(
    support: Iterable[Mode], k: int, theta: ThetaParam | float
) -> FactorizationReport:
    """
    Numerical rank of B_{P,Q} over admissible pairs of size k.

    Pairs sharing sum P(v) v and |P| form blocks in which every cell is admissible.
    A factorization B_{P,Q} = B_P B_Q makes each block rank one; blocks of higher
    rank come with a witnessing 2x2 minor. No outcome is assumed.
    """
    reps = _representatives(support)
    if len(reps) > GENERAL_SUPPORT_CAP:
        raise EnumerationCapError("support representatives", len(reps), GENERAL_SUPPORT_CAP)
    if k > PERMUTATION_K_CAP:
        raise EnumerationCapError("permutation sum size", k, PERMUTATION_K_CAP)
    t_value = _theta_value(theta)

    grouped: dict[tuple[Mode, int], tuple[dict, dict]] = {}
    for P, Q in admissible_pairs(reps, k):
        rows, cols = grouped.setdefault((P.vector_sum(), P.total), ({}, {}))
        rows.setdefault(P, len(rows))
        cols.setdefault(Q, len(cols))

    diagonal = _is_diagonal_line(reps) if reps else False
    consistent = True
    blocks = []
    for (target, t), (row_idx, col_idx) in sorted(grouped.items()):
        rows, cols = tuple(row_idx), tuple(col_idx)
        mat = np.zeros((len(rows), len(cols)), dtype=complex)
        for i, P in enumerate(rows):
            for j, Q in enumerate(cols):
                mat[i, j] = b_pq(P, Q, t_value)
                if diagonal and abs(mat[i, j] - permutation_count(P, Q)) > 1e-9 * permutation_count(P, Q):
                    consistent = False
        sv = np.linalg.svd(mat, compute_uv=False)
        top = float(sv[0]) if sv.size else 0.0
        rank = int(np.sum(sv > 1e-9 * top)) if top > 0 else 0
        ratio = float(sv[1] / top) if sv.size > 1 and top > 0 else 0.0
        witness = _witness_minor(mat, rows, cols, top**2) if rank > 1 else None
        blocks.append(BlockReport(target, t, rows, cols, tuple(float(v) for v in sv), rank, ratio, witness))

    if diagonal and not consistent:
        log.warning("diagonal permutation sums differ from the multinomial counts")
    return FactorizationReport(k, t_value, tuple(blocks), consistent if diagonal else None)
