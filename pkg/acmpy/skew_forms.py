import logging
import warnings
from dataclasses import dataclass
from math import gcd, isqrt, prod
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy

from .exact_arith import ZERO, Rat1, lcm_all, rat1_add, rat1_make, rat1_neg, subgroup_order
from .exceptions import InvariantViolation, NotCongruentWarning
from .settings import DEFAULTS

logger = logging.getLogger(__name__)

IntMatrix = List[List[int]]


def _identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _as_int_matrix(A: Sequence[Sequence[int]]) -> IntMatrix:
    return [[int(x) for x in row] for row in A]


@dataclass(frozen=True)
class SkewQZ(object):
    """
    Skew-symmetric n x n matrix with entries in Q/Z.

    Entry ``(i, j)`` is the class of the commutator phase ``d_ij``. Indices are 0-based.

    Attributes
    ----------
    n : int
        Dimension.

    entries : Tuple[Tuple[Rat1, ...], ...]
        Full n x n table, with ``entries[j][i] == -entries[i][j]`` and a zero diagonal.
    """

    n: int
    entries: Tuple[Tuple[Rat1, ...], ...]

    def __post_init__(self) -> None:
        entries = tuple(tuple(row) for row in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) != self.n or any(len(row) != self.n for row in entries):
            raise ValueError(f"SkewQZ needs a {self.n}x{self.n} table of entries.")
        for i in range(self.n):
            if entries[i][i] != ZERO:
                raise ValueError(f"Diagonal entry ({i}, {i}) = {entries[i][i]} is nonzero.")
            for j in range(i + 1, self.n):
                if entries[j][i] != rat1_neg(entries[i][j]):
                    raise ValueError(
                        f"Matrix is not skew: entries ({i}, {j}) = {entries[i][j]} "
                        f"and ({j}, {i}) = {entries[j][i]}."
                    )

    def __getitem__(self, index: Tuple[int, int]) -> Rat1:
        i, j = index
        return self.entries[i][j]

    @classmethod
    def zero(cls, n: int) -> "SkewQZ":
        return cls(n, tuple(tuple(ZERO for _ in range(n)) for _ in range(n)))

    @classmethod
    def from_numerators(cls, numerators: Sequence[Sequence[int]], modulus: int) -> "SkewQZ":
        """Build the matrix with entries ``numerators[i][j] / modulus``."""
        n = len(numerators)
        return cls(
            n, tuple(tuple(rat1_make(int(x), modulus) for x in row) for row in numerators)
        )

    @property
    def modulus(self) -> int:
        """Least common multiple of the entry denominators."""
        return lcm_all(x.den for row in self.entries for x in row)

    def numerators(self, modulus: Optional[int] = None) -> IntMatrix:
        """Integer matrix ``N`` with ``entries = N / modulus`` in Q/Z."""
        if modulus is None:
            modulus = self.modulus
        out = []
        for row in self.entries:
            if any(modulus % x.den for x in row):
                raise ValueError(f"Modulus {modulus} does not clear every denominator.")
            out.append([x.num * (modulus // x.den) for x in row])
        return out

    def is_zero(self) -> bool:
        return all(x == ZERO for row in self.entries for x in row)

    def is_standard_block(self) -> bool:
        return block_parameters(self) is not None


@dataclass(frozen=True)
class SkewZ(object):
    """Skew-symmetric n x n integer matrix."""

    n: int
    entries: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        entries = tuple(tuple(int(x) for x in row) for row in self.entries)
        object.__setattr__(self, "entries", entries)
        if len(entries) != self.n or any(len(row) != self.n for row in entries):
            raise ValueError(f"SkewZ needs a {self.n}x{self.n} table of entries.")
        for i in range(self.n):
            if entries[i][i] != 0:
                raise ValueError(f"Diagonal entry ({i}, {i}) = {entries[i][i]} is nonzero.")
            for j in range(i + 1, self.n):
                if entries[j][i] != -entries[i][j]:
                    raise ValueError(
                        f"Matrix is not skew: entries ({i}, {j}) = {entries[i][j]} "
                        f"and ({j}, {i}) = {entries[j][i]}."
                    )

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        return self.entries[i][j]

    @classmethod
    def zero(cls, n: int) -> "SkewZ":
        return cls(n, tuple(tuple(0 for _ in range(n)) for _ in range(n)))

    @classmethod
    def from_upper(cls, n: int, values: dict) -> "SkewZ":
        """Build from a mapping ``{(i, j): w_ij}`` with ``i < j``."""
        table = [[0] * n for _ in range(n)]
        for (i, j), w in values.items():
            if not 0 <= i < j < n:
                raise ValueError(f"Expected 0 <= i < j < {n}, got ({i}, {j}).")
            table[i][j] = int(w)
            table[j][i] = -int(w)
        return cls(n, tuple(map(tuple, table)))


@dataclass(frozen=True)
class NormalFormQZ(object):
    """
    Congruence normal form of a matrix over Q/Z.

    Attributes
    ----------
    t : int
        Number of blocks.

    ds : Tuple[Rat1, ...]
        Nonzero block values, with ``ds[i + 1].den`` dividing ``ds[i].den``.

    transform : Tuple[Tuple[int, ...], ...]
        Unimodular matrix ``T`` with ``T^T D T = standard_block(ds, n)``.
    """

    t: int
    ds: Tuple[Rat1, ...]
    transform: Tuple[Tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.transform)

    @property
    def orders(self) -> Tuple[int, ...]:
        return tuple(d.den for d in self.ds)

    @property
    def sigma(self) -> int:
        return prod(self.orders)


@dataclass(frozen=True)
class NormalFormZ(object):
    """
    Normal form ``w = sum_i c_i e_i* ^ e_{t+i}*`` of an integer skew form.

    Attributes
    ----------
    t : int
        Number of blocks.

    cs : Tuple[int, ...]
        Positive coefficients with ``cs[i]`` dividing ``cs[i + 1]``.

    transform : Tuple[Tuple[int, ...], ...]
        Unimodular matrix ``T`` such that ``(T^T w T)[i][t + i] = cs[i]``.
    """

    t: int
    cs: Tuple[int, ...]
    transform: Tuple[Tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return len(self.transform)

    def block(self) -> SkewZ:
        table = [[0] * self.n for _ in range(self.n)]
        for k, c in enumerate(self.cs):
            table[k][self.t + k] = c
            table[self.t + k][k] = -c
        return SkewZ(self.n, tuple(map(tuple, table)))


def block_matrix(values: Sequence[Rat1], n: int) -> SkewQZ:
    """
    Block layout with ``values[k]`` at ``(k + t, k)`` and its negative at ``(k, k + t)``.

    Zero values are allowed.
    """
    t = len(values)
    if 2 * t > n:
        raise ValueError(f"{t} blocks do not fit in dimension {n}.")
    table = [[ZERO] * n for _ in range(n)]
    for k, d in enumerate(values):
        table[k + t][k] = d
        table[k][k + t] = rat1_neg(d)
    return SkewQZ(n, tuple(map(tuple, table)))


def standard_block(ds: Sequence[Rat1], n: int) -> SkewQZ:
    """
    The standard block matrix ``D_n(d_1, ..., d_t)``.

    Parameters
    ----------
    ds : Sequence[Rat1]
        Nonzero block values.

    n : int
        Dimension, at least ``2 * len(ds)``.

    Returns
    -------
    D : :class:`SkewQZ`
        ``D[k + t, k] = ds[k]`` and ``D[k, k + t] = -ds[k]`` (0-based), zero elsewhere.

    Examples
    --------
    >>> from acmpy.exact_arith import rat1_make
    >>> D = standard_block([rat1_make(1, 2), rat1_make(1, 3)], 5)
    >>> D[2, 0], D[3, 1]
    (Rat1(num=1, den=2), Rat1(num=1, den=3))
    """
    for k, d in enumerate(ds):
        if d == ZERO:
            raise ValueError(f"Block value ds[{k}] must be nonzero.")
    return block_matrix(ds, n)


def block_parameters(D: SkewQZ) -> Optional[Tuple[int, Tuple[Rat1, ...]]]:
    """Return ``(t, ds)`` if ``D`` is a standard block matrix, else :obj:`None`."""
    for t in range(D.n // 2 + 1):
        ds = tuple(D[k + t, k] for k in range(t))
        if any(d == ZERO for d in ds):
            continue
        if block_matrix(ds, D.n) == D:
            return t, ds
    return None


def skew_add(D1: SkewQZ, D2: SkewQZ) -> SkewQZ:
    """Entrywise sum in Q/Z."""
    if D1.n != D2.n:
        raise ValueError(f"Dimension mismatch: {D1.n} != {D2.n}.")
    return SkewQZ(
        D1.n,
        tuple(
            tuple(rat1_add(x, y) for x, y in zip(r1, r2)) for r1, r2 in zip(D1.entries, D2.entries)
        ),
    )


def apply_congruence(D: SkewQZ, A: Sequence[Sequence[int]]) -> SkewQZ:
    """
    Compute ``A^T D A`` entrywise in Q/Z.

    A :class:`~acmpy.exceptions.NotCongruentWarning` is emitted when ``det(A) != +-1``;
    the product is still returned.

    Parameters
    ----------
    D : :class:`SkewQZ`
        Matrix to transform.

    A : n x n integer matrix
        Change of basis. Column ``k`` holds the coordinates of the k-th new basis vector.

    Returns
    -------
    D' : :class:`SkewQZ`
    """
    A = _as_int_matrix(A)
    if len(A) != D.n or any(len(row) != D.n for row in A):
        raise ValueError(f"Expected a {D.n}x{D.n} integer matrix.")
    det = sympy.Matrix(A).det() if D.n else 1
    if abs(det) != 1:
        warnings.warn(
            f"det(A) = {det}: the result is not congruent to D.", NotCongruentWarning, stacklevel=2
        )
    modulus = D.modulus
    N = np.array(D.numerators(modulus), dtype=object).reshape(D.n, D.n)
    M = np.array(A, dtype=object).reshape(D.n, D.n)
    return SkewQZ.from_numerators((M.T @ N @ M).tolist(), modulus)


class _Reduction(object):
    """
    Congruent reduction of a skew matrix into adjacent 2 x 2 blocks.

    With ``modulus`` set the entries live in Z/modulus and are kept as symmetric
    residues; otherwise they are plain integers.
    """

    def __init__(self, M: IntMatrix, modulus: Optional[int] = None) -> None:
        self.n = len(M)
        self.modulus = modulus
        self.M = [[self._residue(x) for x in row] for row in M]
        self.T = _identity(self.n)
        self.pivots: List[int] = []

    def _residue(self, x: int) -> int:
        if self.modulus is None:
            return x
        r = x % self.modulus
        return r - self.modulus if 2 * r > self.modulus else r

    def _swap(self, a: int, b: int) -> None:
        if a == b:
            return
        M = self.M
        M[a], M[b] = M[b], M[a]
        for row in M:
            row[a], row[b] = row[b], row[a]
        for row in self.T:
            row[a], row[b] = row[b], row[a]

    def _subtract(self, k: int, j: int, q: int) -> None:
        # e_k <- e_k - q e_j
        if q == 0:
            return
        M = self.M
        M[k] = [self._residue(x - q * y) for x, y in zip(M[k], M[j])]
        for row in M:
            row[k] = self._residue(row[k] - q * row[j])
        for row in self.T:
            row[k] -= q * row[j]

    def _find_pivot(self, s: int) -> Optional[Tuple[int, int]]:
        best = None
        for i in range(s, self.n):
            for j in range(s, i):
                x = self.M[i][j]
                if x != 0 and (best is None or abs(x) < best[0]):
                    best = (abs(x), i, j)
        return None if best is None else best[1:]

    def _divisor(self, p: int) -> int:
        return abs(p) if self.modulus is None else gcd(p, self.modulus)

    def run(self) -> "_Reduction":
        s = 0
        while s + 1 < self.n:
            pivot = self._find_pivot(s)
            if pivot is None:
                break
            i, j = pivot
            self._swap(s, j)
            self._swap(s + 1, i)
            p = self.M[s + 1][s]
            for k in range(s + 2, self.n):
                self._subtract(k, s + 1, self.M[k][s] // p)
                self._subtract(k, s, -(self.M[k][s + 1] // p))
            if any(self.M[k][s] or self.M[k][s + 1] for k in range(s + 2, self.n)):
                continue
            g = self._divisor(p)
            stray = next(
                (
                    (a, b)
                    for a in range(s + 2, self.n)
                    for b in range(s + 2, a)
                    if self.M[a][b] % g
                ),
                None,
            )
            if stray is not None:
                logger.debug("Entry %s not divisible by %d, merging into pivot.", stray, g)
                self._subtract(s, stray[0], -1)
                continue
            self.pivots.append(p)
            s += 2
        return self

    def standard_layout(self) -> IntMatrix:
        """Transform moving block ``k`` from ``(2k+1, 2k)`` to ``(k+t, k)``."""
        t = len(self.pivots)
        perm = [2 * k for k in range(t)] + [2 * k + 1 for k in range(t)]
        perm += list(range(2 * t, self.n))
        return [[row[c] for c in perm] for row in self.T]


def congruence_normal_form_qz(D: SkewQZ) -> NormalFormQZ:
    """
    Reduce ``D`` by a congruence to a standard block matrix.

    The block orders satisfy ``ds[i + 1].den | ds[i].den`` and the returned
    transform is a witness, i.e. ``apply_congruence(D, transform) == standard_block(ds, n)``.

    Parameters
    ----------
    D : :class:`SkewQZ`

    Returns
    -------
    normal_form : :class:`NormalFormQZ`
    """
    modulus = D.modulus
    reduction = _Reduction(D.numerators(modulus), modulus).run()
    ds = tuple(rat1_make(p, modulus) for p in reduction.pivots)
    transform = reduction.standard_layout()
    if apply_congruence(D, transform) != standard_block(ds, D.n):
        raise InvariantViolation("Normal form round trip failed.")
    logger.debug("Normal form over Q/Z: orders %s.", [d.den for d in ds])
    return NormalFormQZ(len(ds), ds, tuple(map(tuple, transform)))


def normal_form_orders(numerators: Sequence[Sequence[int]], modulus: int) -> Tuple[int, ...]:
    """
    Block orders of the normal form of ``numerators / modulus``.

    Skips the Rat1 bookkeeping of :func:`congruence_normal_form_qz`, for use in
    exhaustive enumeration.
    """
    reduction = _Reduction(_as_int_matrix(numerators), modulus).run()
    return tuple(modulus // gcd(p, modulus) for p in reduction.pivots)


def integer_skew_normal_form(w: SkewZ) -> NormalFormZ:
    """
    Integer normal form ``w = c_1 e_1*^e_{t+1}* + ... + c_t e_t*^e_{2t}*``.

    Parameters
    ----------
    w : :class:`SkewZ`

    Returns
    -------
    normal_form : :class:`NormalFormZ`
        Coefficients are positive and ``cs[i] | cs[i + 1]``.
    """
    reduction = _Reduction(_as_int_matrix(w.entries)).run()
    t = len(reduction.pivots)
    T = reduction.standard_layout()
    cs = []
    for k, p in enumerate(reduction.pivots):
        # (k, t+k) holds -p after the layout change
        if p > 0:
            for row in T:
                row[t + k] = -row[t + k]
        cs.append(abs(p))
    nf = NormalFormZ(t, tuple(cs), tuple(map(tuple, T)))
    A = np.array(T, dtype=object).reshape(w.n, w.n)
    W = np.array(w.entries, dtype=object).reshape(w.n, w.n)
    if SkewZ(w.n, tuple(map(tuple, (A.T @ W @ A).tolist()))) != nf.block():
        raise InvariantViolation("Integer normal form round trip failed.")
    return nf


def row_space_order(D: SkewQZ, cap: Optional[int] = None) -> int:
    """
    Order of the subgroup of ``(Q/Z)^n`` generated by the rows of ``D``.

    Denominators are cleared to ``L = D.modulus`` and the closure runs in ``(Z/L)^n``.
    """
    modulus = D.modulus
    return subgroup_order(D.numerators(modulus), modulus, cap)


def sigma(D: SkewQZ, cap: Optional[int] = None) -> int:
    """
    Square root of :func:`row_space_order`.

    Raises
    ------
    InvariantViolation
        If the row space order is not a perfect square.
    """
    order = row_space_order(D, cap)
    root = isqrt(order)
    if root * root != order:
        raise InvariantViolation(f"Row space order {order} is not a perfect square.")
    return root


def random_unimodular(
    n: int, rng: Optional[np.random.Generator] = None, steps: int = 12
) -> IntMatrix:
    """Seeded product of elementary integer matrices (determinant +-1)."""
    if rng is None:
        rng = np.random.default_rng(DEFAULTS.seed)
    A = _identity(n)
    if n < 2:
        return A
    for _ in range(steps):
        i, j = (int(x) for x in rng.choice(n, size=2, replace=False))
        kind = int(rng.integers(3))
        if kind == 0:
            q = int(rng.integers(-2, 3))
            for row in A:
                row[i] += q * row[j]
        elif kind == 1:
            for row in A:
                row[i], row[j] = row[j], row[i]
        else:
            for row in A:
                row[i] = -row[i]
    return A
