import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import gcd, prod
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import sympy

from .exact_arith import (
    ZERO,
    Rat1,
    binomial,
    euler_phi,
    lcm_all,
    rat1_add,
    rat1_make,
    rat1_scale,
    subgroup_order,
)
from .exceptions import InvariantViolation, ResourceCapExceeded
from .settings import DEFAULTS
from .skew_forms import SkewQZ, SkewZ, block_matrix, integer_skew_normal_form, sigma

logger = logging.getLogger(__name__)

IntMatrix = List[List[int]]
Eigendata = Sequence[Tuple[Sequence[Rat1], int]]


@dataclass(frozen=True)
class CentralExtension(object):
    """
    Central extension ``1 -> Z^r -> Gamma -> Z^n -> 1`` given by its k-invariant.

    Attributes
    ----------
    n : int
        Rank of the quotient lattice.

    r : int
        Rank of the center.

    coeffs : Tuple[SkewZ, ...]
        ``r`` skew integer matrices; ``coeffs[l][i, j]`` is the coefficient of
        ``e_i* ^ e_j*`` in the l-th component of the k-invariant.
    """

    n: int
    r: int
    coeffs: Tuple[SkewZ, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(
            c if isinstance(c, SkewZ) else SkewZ(self.n, tuple(map(tuple, c))) for c in self.coeffs
        )
        object.__setattr__(self, "coeffs", coeffs)
        if self.r < 1:
            raise ValueError(f"r must be >= 1, got {self.r}.")
        if len(coeffs) != self.r:
            raise ValueError(f"Expected {self.r} coefficient matrices, got {len(coeffs)}.")
        for l, c in enumerate(coeffs):
            if c.n != self.n:
                raise ValueError(
                    f"Coefficient matrix {l + 1} is {c.n}x{c.n}, expected n = {self.n}."
                )


@dataclass(frozen=True)
class Rank1Form(object):
    """
    Normalized rank one k-invariant ``sum_i c_i e_i* ^ e_{t+i}*``.

    Attributes
    ----------
    t : int
        Number of blocks.

    cs : Tuple[int, ...]
        Positive coefficients with ``cs[i] | cs[i + 1]``.

    n : int, optional
        Ambient dimension, ``2t`` when omitted.
    """

    t: int
    cs: Tuple[int, ...]
    n: Optional[int] = None

    def __post_init__(self) -> None:
        cs = tuple(int(c) for c in self.cs)
        object.__setattr__(self, "cs", cs)
        if self.n is None:
            object.__setattr__(self, "n", 2 * self.t)
        if len(cs) != self.t:
            raise ValueError(f"Expected {self.t} coefficients, got {len(cs)}.")
        if any(c < 1 for c in cs):
            raise ValueError(f"Coefficients must be positive, got {list(cs)}.")
        for a, b in zip(cs, cs[1:]):
            if b % a:
                raise ValueError(
                    f"Coefficients must form a divisibility chain, {a} does not divide {b}."
                )
        if 2 * self.t > self.n:
            raise ValueError(f"{self.t} blocks do not fit in dimension {self.n}.")

    @classmethod
    def from_skew(cls, w: SkewZ) -> "Rank1Form":
        nf = integer_skew_normal_form(w)
        return cls(nf.t, nf.cs, w.n)

    @classmethod
    def from_extension(cls, g: CentralExtension) -> "Rank1Form":
        if g.r != 1:
            raise ValueError(f"A rank one form needs r = 1, got r = {g.r}.")
        return cls.from_skew(g.coeffs[0])

    def to_extension(self) -> CentralExtension:
        w = SkewZ.from_upper(self.n, {(k, self.t + k): c for k, c in enumerate(self.cs)})
        return CentralExtension(self.n, 1, (w,))


class Root(NamedTuple):
    """Root ``exp(2 pi i a/k)`` of multiplicity ``mult``, with ``gcd(a, k) = 1``."""

    k: int
    a: int
    mult: int

    @property
    def angle(self) -> Rat1:
        return rat1_make(self.a, self.k)


@dataclass(frozen=True)
class PolySpec(object):
    """
    Monic degree ``m`` polynomial whose roots are roots of unity.

    Roots are kept sorted by ``(k, a, mult)``.
    """

    m: int
    roots: Tuple[Root, ...]

    def __post_init__(self) -> None:
        roots = tuple(sorted(Root(int(k), int(a), int(mult)) for k, a, mult in self.roots))
        object.__setattr__(self, "roots", roots)
        for root in roots:
            if root.k < 1 or not 0 <= root.a < root.k or gcd(root.a, root.k) != 1:
                raise ValueError(f"{root.a}/{root.k} is not a primitive residue.")
            if root.mult < 1:
                raise ValueError(f"Multiplicity must be positive, got {root.mult}.")
        if len({(root.k, root.a) for root in roots}) != len(roots):
            raise ValueError("Roots must be distinct.")
        if sum(root.mult for root in roots) != self.m:
            raise ValueError(
                f"Multiplicities add up to {sum(r.mult for r in roots)}, not {self.m}."
            )

    def __str__(self) -> str:
        factors = []
        for root in self.roots:
            base = "(z-1)" if root.k == 1 else f"(z-e(2pi i {root.a}/{root.k}))"
            factors.append(base if root.mult == 1 else f"{base}^{root.mult}")
        return "".join(factors)


class BlockData(NamedTuple):
    """Commutation block ``D_j`` of one eigenvalue, its ``sigma``, multiplicity and ``l_j``."""

    D: SkewQZ
    sigma: int
    m: int
    l: int


@dataclass(frozen=True)
class TorusFactor(object):
    """``Sym^power`` of ``copies`` disjoint tori of dimension ``torus_dim``."""

    power: int
    torus_dim: int
    copies: int = 1

    def symbol(self) -> str:
        torus = f"T^{self.torus_dim}"
        if self.copies > 1:
            torus = f"{self.copies}*{torus}"
        return f"Sym^{self.power}({torus})"


@dataclass(frozen=True)
class ModuliDescriptor(object):
    """Product of symmetric powers of tori; ``empty`` marks an empty space."""

    factors: Tuple[TorusFactor, ...] = ()
    empty: bool = False

    def __str__(self) -> str:
        if self.empty:
            return "empty"
        return " x ".join(f.symbol() for f in self.factors) or "point"


@dataclass
class OmegaAnalysis(object):
    """
    Invariants of the coefficient matrix of a k-invariant.

    Attributes
    ----------
    rank, nullity : int
        ``rank + nullity = r``.

    B : int
        Absolute product of the pivots of an integer echelon form.

    C : int
        Order of the subgroup of ``(Q/Z)^k`` generated by the columns of the rational
        reduced echelon form.

    P : int
        ``B / C``.

    echelon, transform : list of lists of int
        Integer echelon form ``Q`` and the unimodular ``U`` with ``U Omega = Q``.

    pivot_columns : list of int

    rref : list of lists of Fraction
        Reduced row echelon form over Q.
    """

    rank: int
    nullity: int
    B: int
    C: int
    P: int
    echelon: IntMatrix = field(default_factory=list, repr=False)
    transform: IntMatrix = field(default_factory=list, repr=False)
    pivot_columns: List[int] = field(default_factory=list, repr=False)
    rref: List[List[Fraction]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.P * self.C != self.B:
            raise InvariantViolation(f"P * C = {self.P} * {self.C} differs from B = {self.B}.")


@dataclass(frozen=True)
class FDecomposition(object):
    """Formal sum ``sum_j l_j D_j`` with ``sum_j l_j sigma(D_j) = m``."""

    m: int
    terms: Tuple[Tuple[SkewQZ, int], ...]


@dataclass(frozen=True)
class FiberDescriptor(object):
    """Structure of the fiber of the omega map over one matrix."""

    empty: bool
    components: int = 0
    torus_dim: int = 0


@dataclass(frozen=True)
class FiberOracleResult(object):
    """
    Discretized fiber: ``points`` grid solutions in ``clusters`` components, and the
    ``lifted_points`` solutions whose free coordinates lie on the grid.
    """

    N: int
    points: int
    clusters: int
    expected_points: int
    expected_clusters: int
    lifted_points: int = 0
    expected_lifted_points: int = 0

    @property
    def passed(self) -> bool:
        return (
            self.points == self.expected_points
            and self.clusters == self.expected_clusters
            and self.lifted_points == self.expected_lifted_points
        )


@dataclass(frozen=True)
class RankRCount(object):
    count: int
    moduli: ModuliDescriptor
    analysis: OmegaAnalysis


# Rank one


def mu_k(cs: Sequence[int], k: int) -> int:
    """
    ``prod_i k / gcd(k, c_i)``.

    Examples
    --------
    >>> mu_k([1], 5)
    5
    >>> mu_k([1, 1], 3)
    9
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}.")
    return prod(k // gcd(k, int(c)) for c in cs)


def _relevant_orders(form: Rank1Form, m: int) -> List[int]:
    if form.t == 0:
        raise ValueError("The form is trivial; every root of unity is allowed.")
    return [k for k in range(1, m * max(form.cs) + 1) if mu_k(form.cs, k) <= m]


def count_components_rank1(form: Rank1Form, m: int) -> int:
    """
    Number of components of ``Hom(Gamma, U(m))`` for a rank one extension.

    It is the coefficient of ``x^m`` in ``prod_{k >= 1} (1 - x^{mu_k})^{-phi(k)}``.
    Since ``mu_k >= k / c_1``, only ``k <= m * max(cs)`` contribute below degree ``m + 1``.

    Parameters
    ----------
    form : :class:`Rank1Form`
        Nontrivial form.

    m : int
        Matrix dimension.

    Returns
    -------
    count : int

    Examples
    --------
    >>> heisenberg = Rank1Form(1, (1,))
    >>> [count_components_rank1(heisenberg, m) for m in range(1, 6)]
    [1, 2, 4, 7, 13]
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}.")
    series = [1] + [0] * m
    for k in _relevant_orders(form, m):
        mu = mu_k(form.cs, k)
        for _ in range(euler_phi(k)):
            for d in range(mu, m + 1):
                series[d] += series[d - mu]
    return series[m]


def is_good(form: Rank1Form, p: PolySpec) -> bool:
    """Whether every root multiplicity is divisible by its ``mu_k``."""
    return all(root.mult % mu_k(form.cs, root.k) == 0 for root in p.roots)


def enumerate_polys(form: Rank1Form, m: int) -> List[PolySpec]:
    """
    Every degree ``m`` polynomial indexing a component, ordered by its roots.

    Roots are drawn from the primitive ``k``-th roots of unity with ``mu_k <= m``; a
    root of order ``k`` may only carry a multiplicity divisible by ``mu_k``.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}.")
    candidates = [
        (k, a, mu_k(form.cs, k))
        for k in _relevant_orders(form, m)
        for a in range(k)
        if gcd(a, k) == 1
    ]
    found: List[PolySpec] = []

    def extend(start: int, remaining: int, chosen: List[Root]) -> None:
        if remaining == 0:
            found.append(PolySpec(m, tuple(chosen)))
            return
        for idx in range(start, len(candidates)):
            k, a, mu = candidates[idx]
            for mult in range(mu, remaining + 1, mu):
                extend(idx + 1, remaining - mult, chosen + [Root(k, a, mult)])

    extend(0, m, [])
    found.sort(key=lambda p: p.roots)
    logger.debug("Found %d polynomials of degree %d.", len(found), m)
    return found


def component_for_poly(form: Rank1Form, p: PolySpec) -> List[BlockData]:
    """
    Block data of the component indexed by ``p``.

    A root ``exp(2 pi i q)`` of multiplicity ``m_j`` contributes
    ``D_j = D_n(-c_1 q, ..., -c_t q)`` with ``l_j = m_j / sigma(D_j)``.

    Raises
    ------
    ValueError
        If some ``sigma(D_j)`` does not divide ``m_j``.
    """
    blocks = []
    for root in p.roots:
        q = root.angle
        D = block_matrix([rat1_scale(-c, q) for c in form.cs], form.n)
        s = sigma(D)
        if root.mult % s:
            raise ValueError(
                f"{p} is not good: sigma = {s} does not divide the multiplicity {root.mult} "
                f"of the root of order {root.k}."
            )
        blocks.append(BlockData(D, s, root.mult, root.mult // s))
    return blocks


def describe_moduli(form: Rank1Form, p: PolySpec) -> ModuliDescriptor:
    """``prod_j Sym^{l_j}(T^n)`` for the component indexed by ``p``."""
    return ModuliDescriptor(
        tuple(TorusFactor(block.l, form.n) for block in component_for_poly(form, p))
    )


# Rank r


def omega_matrix(g: CentralExtension) -> sympy.Matrix:
    """
    ``C(n, 2) x r`` matrix with row ``(i, j)``, ``i < j`` in lexicographic order, equal to
    ``(omega_ij^1, ..., omega_ij^r)``.
    """
    rows = [[c[i, j] for c in g.coeffs] for i, j in combinations(range(g.n), 2)]
    return sympy.Matrix(len(rows), g.r, [x for row in rows for x in row])


def _omega_rows(Omega) -> Tuple[IntMatrix, int]:
    if hasattr(Omega, "shape"):
        k, r = Omega.shape
        return [[int(Omega[i, j]) for j in range(r)] for i in range(k)], int(r)
    rows = [[int(x) for x in row] for row in Omega]
    return rows, len(rows[0]) if rows else 0


def _integer_echelon(rows: IntMatrix, ncols: int) -> Tuple[IntMatrix, IntMatrix, List[int]]:
    """Hermite normal form ``Q = U M`` with positive pivots."""
    M = [list(row) for row in rows]
    k = len(M)
    U = [[int(i == j) for j in range(k)] for i in range(k)]

    def swap(a: int, b: int) -> None:
        M[a], M[b] = M[b], M[a]
        U[a], U[b] = U[b], U[a]

    def subtract(a: int, b: int, q: int) -> None:
        M[a] = [x - q * y for x, y in zip(M[a], M[b])]
        U[a] = [x - q * y for x, y in zip(U[a], U[b])]

    pivots: List[int] = []
    r = 0
    for c in range(ncols):
        if r == k:
            break
        while True:
            nonzero = [i for i in range(r, k) if M[i][c] != 0]
            if not nonzero:
                break
            swap(r, min(nonzero, key=lambda i: (abs(M[i][c]), i)))
            for i in range(r + 1, k):
                subtract(i, r, M[i][c] // M[r][c])
            if all(M[i][c] == 0 for i in range(r + 1, k)):
                break
        if M[r][c] == 0:
            continue
        if M[r][c] < 0:
            M[r] = [-x for x in M[r]]
            U[r] = [-x for x in U[r]]
        for i in range(r):
            subtract(i, r, M[i][c] // M[r][c])
        pivots.append(c)
        r += 1
    return M, U, pivots


def _pivot_product(rows: IntMatrix, ncols: int) -> int:
    Q, _, pivots = _integer_echelon(rows, ncols)
    return abs(prod(Q[i][c] for i, c in enumerate(pivots)))


def omega_analysis(Omega, cap: Optional[int] = None) -> OmegaAnalysis:
    """
    Compute ``B``, ``C`` and ``P = B / C`` of an integer matrix.

    ``B`` is taken from the Hermite normal form and recomputed from the row-reversed
    matrix; ``C`` is the order of the subgroup of ``(Q/Z)^k`` spanned by the columns of
    the rational reduced echelon form, found by closure after clearing denominators.

    Parameters
    ----------
    Omega : sympy.Matrix or list of lists of int
        ``C(n, 2) x r`` coefficient matrix.

    cap : int, optional
        Bound on the closure size. Defaults to ``DEFAULTS.enumeration_cap``.

    Returns
    -------
    analysis : :class:`OmegaAnalysis`

    Raises
    ------
    InvariantViolation
        If the two echelon forms disagree on ``B`` or ``C`` does not divide ``B``.
    """
    rows, r = _omega_rows(Omega)
    Q, U, pivots = _integer_echelon(rows, r)
    B = abs(prod(Q[i][c] for i, c in enumerate(pivots)))
    if _pivot_product(rows[::-1], r) != B:
        raise InvariantViolation("Pivot products of two echelon forms differ.")

    if rows:
        R_sym, rational_pivots = sympy.Matrix(rows).rref()
        rref = [
            [Fraction(int(x.p), int(x.q)) for x in R_sym.row(i)] for i in range(R_sym.rows)
        ]
    else:
        rational_pivots, rref = (), []
    if list(rational_pivots) != pivots:
        raise InvariantViolation(f"Pivot columns {pivots} and {list(rational_pivots)} differ.")

    modulus = lcm_all(x.denominator for row in rref for x in row)
    generators = [[int(row[c] * modulus) % modulus for row in rref] for c in range(r)]
    C = subgroup_order(generators, modulus, cap)
    if B % C:
        raise InvariantViolation(f"C = {C} does not divide B = {B}.")
    analysis = OmegaAnalysis(len(pivots), r - len(pivots), B, C, B // C, Q, U, pivots, rref)
    logger.info("Omega analysis: rank %d, B = %d, C = %d, P = %d.", analysis.rank, B, C, B // C)
    return analysis


def omega_lambda(g: CentralExtension, lam: Sequence[Rat1]) -> SkewQZ:
    """Entry ``(i, j)`` is ``sum_l omega_ij^l lam_l`` in Q/Z."""
    if len(lam) != g.r:
        raise ValueError(f"Expected {g.r} eigenvalue angles, got {len(lam)}.")
    table = [[ZERO] * g.n for _ in range(g.n)]
    for i, j in combinations(range(g.n), 2):
        value = ZERO
        for c, x in zip(g.coeffs, lam):
            value = rat1_add(value, rat1_scale(c[i, j], x))
        table[i][j] = value
        table[j][i] = -value
    return SkewQZ(g.n, tuple(map(tuple, table)))


def _check_eigendata(eigendata: Eigendata) -> List[Tuple[Tuple[Rat1, ...], int]]:
    blocks = [(tuple(lam), int(dim)) for lam, dim in eigendata]
    if len({lam for lam, _ in blocks}) != len(blocks):
        raise ValueError("Eigenvalue tuples must be distinct.")
    for lam, dim in blocks:
        if dim < 1:
            raise ValueError(f"Eigenspace dimension must be positive, got {dim}.")
    return blocks


def hom_membership(g: CentralExtension, eigendata: Eigendata) -> bool:
    """
    Whether ``sigma(omega(lam)) | dim`` for every joint eigenspace of the center.

    Only rational angles are accepted.
    """
    for lam, dim in _check_eigendata(eigendata):
        if dim % sigma(omega_lambda(g, lam)):
            return False
    return True


def f_decompose(g: CentralExtension, eigendata: Eigendata) -> FDecomposition:
    """
    Group eigenspaces by ``omega(lam)`` into ``sum_j l_j D_j``.

    ``l_j`` is the sum of ``dim / sigma(D_j)`` over the eigenvalues mapping to ``D_j``;
    terms keep the order in which ``D_j`` first appears.
    """
    blocks = _check_eigendata(eigendata)
    coefficients: Dict[SkewQZ, int] = {}
    sigmas: Dict[SkewQZ, int] = {}
    for lam, dim in blocks:
        D = omega_lambda(g, lam)
        if D not in sigmas:
            sigmas[D] = sigma(D)
        if dim % sigmas[D]:
            raise ValueError(
                f"Eigenvalue {[str(x) for x in lam]} with multiplicity {dim} is not allowed: "
                f"sigma = {sigmas[D]}."
            )
        coefficients[D] = coefficients.get(D, 0) + dim // sigmas[D]
    m = sum(dim for _, dim in blocks)
    if sum(l * sigmas[D] for D, l in coefficients.items()) != m:
        raise InvariantViolation("Decomposition does not add up to m.")
    return FDecomposition(m, tuple(coefficients.items()))


def eigendata_from_poly(p: PolySpec) -> List[Tuple[Tuple[Rat1], int]]:
    """Rank one eigendata: one angle ``a/k`` per root with its multiplicity."""
    return [((root.angle,), root.mult) for root in p.roots]


def _upper_entries(D: SkewQZ) -> List[Rat1]:
    return [D[i, j] for i, j in combinations(range(D.n), 2)]


def _transformed_target(analysis: OmegaAnalysis, target: List[Rat1]) -> List[Rat1]:
    out = []
    for row in analysis.transform:
        value = ZERO
        for u, x in zip(row, target):
            value = rat1_add(value, rat1_scale(u, x))
        out.append(value)
    return out


def _check_target(analysis: OmegaAnalysis, D: SkewQZ) -> List[Rat1]:
    target = _upper_entries(D)
    if len(target) != len(analysis.transform):
        raise ValueError(
            f"D has {len(target)} upper entries, Omega has {len(analysis.transform)} rows."
        )
    return target


def omega_fiber(
    Omega, D: SkewQZ, analysis: Optional[OmegaAnalysis] = None
) -> FiberDescriptor:
    """
    Fiber of ``x -> Omega x`` over the upper entries of ``D`` in ``(R/Z)^r``.

    With ``Q = U Omega`` in echelon form the system is ``Q x = U D'``; pivot rows are
    always solvable mod 1, so the fiber is nonempty iff ``U D'`` vanishes on every
    zero row of ``Q``. A nonempty fiber has ``P`` components, each a torus of
    dimension ``nullity``.
    """
    if analysis is None:
        analysis = omega_analysis(Omega)
    rhs = _transformed_target(analysis, _check_target(analysis, D))
    if any(x != ZERO for x in rhs[analysis.rank :]):
        return FiberDescriptor(empty=True)
    return FiberDescriptor(False, analysis.P, analysis.nullity)


def _pivot_minor_gcd(rows: IntMatrix, pivots: List[int]) -> int:
    """Order of the kernel of the pivot columns on the torus: gcd of their maximal minors."""
    k = len(pivots)
    columns = [[row[c] for c in pivots] for row in rows]
    g = 0
    for subset in combinations(range(len(columns)), k):
        minor = sympy.Matrix(k, k, [x for i in subset for x in columns[i]])
        g = gcd(g, int(minor.det()))
    return g


def _kernel_projection(rows: IntMatrix, r: int) -> Tuple[np.ndarray, int]:
    """
    ``r x rank`` integer matrix whose kernel mod ``N`` is ``L + N Z^r``, ``L`` being the
    integer kernel of ``Omega``.

    With ``U Omega^T = Q`` in echelon form the rows of ``U`` below the rank span ``L``,
    and the first ``rank`` columns of ``U^-1`` read off the other coordinates.
    """
    columns = [[row[c] for row in rows] for c in range(r)]
    _, U, pivots = _integer_echelon(columns, len(rows))
    inverse = sympy.Matrix(U).inv()
    rank = len(pivots)
    projection = np.array(
        [[int(inverse[i, j]) for j in range(rank)] for i in range(r)], dtype=np.int64
    )
    return projection.reshape(r, rank), rank


def discrete_fiber_oracle(
    Omega,
    D: SkewQZ,
    N: Optional[int] = None,
    cap: Optional[int] = None,
) -> FiberOracleResult:
    """
    Brute-force the fiber of ``x -> Omega x`` over ``D`` on the grid ``((1/N)Z/Z)^r``.

    Every grid point is tested against ``Omega`` directly. Two solutions lie in the same
    component iff their difference is in the identity component of the kernel, i.e. in
    ``L + N Z^r`` for the integer kernel ``L``; clusters are counted by that label. With
    ``N`` divisible by the denominators of ``D`` and by ``B`` the grid meets every
    component in ``N^nullity`` points, so ``points = P N^nullity`` and ``clusters = P``.

    ``lifted_points`` counts solutions with only the free coordinates on the grid,
    ``N^nullity`` times the gcd of the maximal minors of the pivot columns; it must
    equal ``B N^nullity``.

    Parameters
    ----------
    Omega : sympy.Matrix or list of lists of int

    D : :class:`~acmpy.skew_forms.SkewQZ`

    N : int, optional
        Grid size. Defaults to the lcm of the denominators of ``R`` and ``D`` times ``B``.

    cap : int, optional
        Largest number of grid points. Defaults to ``DEFAULTS.enumeration_cap``.

    Returns
    -------
    result : :class:`FiberOracleResult`
    """
    if cap is None:
        cap = DEFAULTS.enumeration_cap
    rows, r = _omega_rows(Omega)
    analysis = omega_analysis(Omega, cap)
    target = _check_target(analysis, D)
    if N is None:
        N = lcm_all(
            [x.denominator for row in analysis.rref for x in row] + [x.den for x in target]
        ) * analysis.B
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}.")
    if omega_fiber(rows, D, analysis).empty:
        return FiberOracleResult(N, 0, 0, 0, 0)

    size = N**r
    if size > cap:
        raise ResourceCapExceeded("Discrete fiber grid", size, cap)
    scale = lcm_all(x.den for x in target)
    weights = np.array(rows, dtype=np.int64).reshape(len(rows), r)
    rhs = np.array([x.num * (scale // x.den) * N for x in target], dtype=np.int64)
    grid = np.indices((N,) * r).reshape(r, -1).T
    residues = (scale * (grid @ weights.T) - rhs) % (scale * N)
    points = grid[np.all(residues == 0, axis=1)]

    projection, rank = _kernel_projection(rows, r)
    if rank != analysis.rank:
        raise InvariantViolation(f"Rank {rank} of Omega^T differs from rank {analysis.rank}.")
    labels = {tuple(label) for label in ((points @ projection) % N).tolist()}

    scale_free = N**analysis.nullity
    result = FiberOracleResult(
        N,
        len(points),
        len(labels),
        analysis.P * scale_free,
        analysis.P,
        _pivot_minor_gcd(rows, analysis.pivot_columns) * scale_free,
        analysis.B * scale_free,
    )
    logger.debug(
        "Fiber oracle at N = %d: %d points, %d clusters.", N, result.points, result.clusters
    )
    return result


def rank_r_moduli(
    g: CentralExtension, decomp: FDecomposition, analysis: Optional[OmegaAnalysis] = None
) -> ModuliDescriptor:
    """``prod_j Sym^{l_j}(P copies of T^{n + nullity})``, or empty."""
    Omega = omega_matrix(g)
    if analysis is None:
        analysis = omega_analysis(Omega)
    if any(omega_fiber(Omega, D, analysis).empty for D, _ in decomp.terms):
        return ModuliDescriptor(empty=True)
    torus_dim = g.n + analysis.nullity
    return ModuliDescriptor(
        tuple(TorusFactor(l, torus_dim, analysis.P) for _, l in decomp.terms)
    )


def count_components_rank_r(g: CentralExtension, decomp: FDecomposition) -> RankRCount:
    """
    Components of ``Hom(Gamma, U(m))`` over ``sum_j l_j D_j``.

    Zero if some fiber is empty, otherwise ``prod_j binomial(P + l_j - 1, l_j)``.
    """
    analysis = omega_analysis(omega_matrix(g))
    moduli = rank_r_moduli(g, decomp, analysis)
    if moduli.empty:
        return RankRCount(0, moduli, analysis)
    count = prod(binomial(analysis.P + l - 1, l) for _, l in decomp.terms)
    return RankRCount(count, moduli, analysis)


