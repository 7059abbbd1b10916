import logging
import multiprocessing
from collections import Counter
from dataclasses import dataclass, field
from itertools import islice, product
from math import prod
from typing import Dict, List, Literal, Optional, Tuple

import pandas as pd
import sympy
from sympy.utilities.iterables import partitions
from tqdm import tqdm

from .exceptions import InvariantViolation, ResourceCapExceeded
from .settings import CONTEXTS, DEFAULTS
from .skew_forms import normal_form_orders

logger = logging.getLogger(__name__)

Orders = Tuple[int, ...]


@dataclass(frozen=True)
class Partition(object):
    """
    A partition written as ``t_1 copies of a_1 + ... + t_j copies of a_j``.

    Attributes
    ----------
    parts : Tuple[Tuple[int, int], ...]
        Pairs ``(a_i, t_i)`` with ``a_1 > a_2 > ... > a_j > 0`` and ``t_i >= 1``.

    Examples
    --------
    >>> Partition.from_string("2+1+1").parts
    ((2, 1), (1, 2))
    """

    parts: Tuple[Tuple[int, int], ...]

    def __post_init__(self) -> None:
        parts = tuple((int(a), int(t)) for a, t in self.parts)
        object.__setattr__(self, "parts", parts)
        if any(t < 1 for _, t in parts):
            raise ValueError(f"Multiplicities must be positive: {parts}.")
        values = [a for a, _ in parts]
        if any(a < 1 for a in values) or any(x <= y for x, y in zip(values, values[1:])):
            raise ValueError(f"Parts must be positive and strictly decreasing: {values}.")

    @classmethod
    def from_values(cls, values: List[int]) -> "Partition":
        counts = Counter(values)
        return cls(tuple((a, counts[a]) for a in sorted(counts, reverse=True)))

    @classmethod
    def from_string(cls, text: str) -> "Partition":
        return cls.from_values([int(x) for x in text.split("+")])

    @property
    def size(self) -> int:
        return sum(a * t for a, t in self.parts)

    @property
    def length(self) -> int:
        return sum(t for _, t in self.parts)

    def expanded(self) -> Tuple[int, ...]:
        return tuple(a for a, t in self.parts for _ in range(t))

    def __str__(self) -> str:
        return "+".join(map(str, self.expanded()))


def enumerate_j(n: int, k: int) -> List[Partition]:
    """
    Partitions of every ``k' <= k`` with at most ``n // 2`` parts.

    The order is graded: by size, then larger leading parts first.

    Examples
    --------
    >>> [str(a) for a in enumerate_j(5, 4)]
    ['1', '2', '1+1', '3', '2+1', '4', '3+1', '2+2']
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}.")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}.")
    found = []
    for size in range(1, k + 1):
        for p in partitions(size, m=n // 2):
            # partitions() reuses its dict between iterations
            found.append(Partition(tuple(sorted(dict(p).items(), reverse=True))))
    return sorted(found, key=lambda a: (a.size, [-x for x in a.expanded()]))


def _check_prime(p: int) -> None:
    if not sympy.isprime(p):
        raise ValueError(f"{p} is not a prime.")


def n_p_alpha(p: int, n: int, alpha: Partition) -> int:
    """
    Number of matrices in ``T(n, Z/p^k)`` congruent to ``D_alpha``.

    Evaluated with exact rational intermediates; a non-integral result or a
    failed exponent identity raises :class:`~acmpy.exceptions.InvariantViolation`.

    Parameters
    ----------
    p : int
        A prime.

    n : int
        Matrix dimension.

    alpha : :class:`Partition`
        At most ``n // 2`` parts.

    Returns
    -------
    count : int
    """
    _check_prime(p)
    if alpha.length > n // 2:
        raise ValueError(f"Partition {alpha} has more than {n // 2} parts.")
    s = [n]
    for _, t in alpha.parts:
        s.append(s[-1] - 2 * t)
    exponent = sum(t * a * (s[i] + s[i + 1] - 1) for i, (a, t) in enumerate(alpha.parts))
    e = s[-1] ** 2 + sum(t * (s[i] + s[i + 1] + 1) for i, (_, t) in enumerate(alpha.parts))
    f = [t * (s[i] + s[i + 1] - 1) for i, (_, t) in enumerate(alpha.parts)]
    if e + sum(f) != n * n:
        raise InvariantViolation(
            f"Exponent identity fails for {alpha}: {e} + {sum(f)} != {n * n}."
        )

    P = sympy.Integer(p)
    value = P**exponent
    for l in range(s[-1] + 1, n + 1):
        value *= 1 - P ** (-l)
    for _, t in alpha.parts:
        for l in range(1, t + 1):
            value /= 1 - P ** (-2 * l)
    if not value.is_integer:
        raise InvariantViolation(f"N_{p}({alpha}) = {value} is not an integer.")
    return int(value)


def class_counts_prime_power(n: int, p: int, k: int) -> Dict[Orders, int]:
    """
    Formula-side class counts in ``T(n, Z/p^k)``.

    Maps the order sequence of ``D_alpha`` (``p^a_i`` repeated ``t_i`` times) to
    ``N_p(alpha)`` for every ``alpha`` in ``J(n, k)``.
    """
    return {
        tuple(p**a for a in alpha.expanded()): n_p_alpha(p, n, alpha)
        for alpha in enumerate_j(n, k)
    }


def n_prime_power(n: int, p: int, k: int) -> int:
    """``N(n, p^k) = 1 + sum_alpha N_p(alpha)``."""
    return 1 + sum(class_counts_prime_power(n, p, k).values())


def n_general(n: int, m: int) -> int:
    """
    Number of connected components of the space of almost commuting n-tuples in U(m).

    Computed as the product of prime-power counts over the factorization of ``m``.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}.")
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}.")
    return prod(n_prime_power(n, p, k) for p, k in sympy.factorint(m).items())


def _combine_orders(x: Orders, y: Orders) -> Orders:
    size = max(len(x), len(y))
    x = x + (1,) * (size - len(x))
    y = y + (1,) * (size - len(y))
    return tuple(a * b for a, b in zip(x, y))


def class_counts(n: int, m: int) -> Dict[Orders, int]:
    """
    Formula-side class counts in ``T(n, Z/m)``, excluding the zero matrix.

    Coprime parts combine by multiplying block orders position by position.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}.")
    combined: Dict[Orders, int] = {(): 1}
    for p, k in sympy.factorint(m).items():
        local = {(): 1, **class_counts_prime_power(n, p, k)}
        merged: Dict[Orders, int] = Counter()
        for x, cx in combined.items():
            for y, cy in local.items():
                merged[_combine_orders(x, y)] += cx * cy
        combined = dict(merged)
    combined.pop((), None)
    return combined


def closed_form_prime(n: int, p: int) -> int:
    """``1 + (p^(n-1) - 1)(p^n - 1)/(p^2 - 1)``."""
    _check_prime(p)
    q, r = divmod((p ** (n - 1) - 1) * (p**n - 1), p**2 - 1)
    if r:
        raise InvariantViolation(f"Closed form for N({n}, {p}) is not integral.")
    return 1 + q


def closed_form_prime_square(n: int, p: int) -> int:
    """Closed form of ``N(n, p^2)``, valid for ``n >= 4``."""
    _check_prime(p)
    if n < 4:
        raise ValueError(f"The closed form needs n >= 4, got {n}.")
    numerator = (
        (p ** (n - 1) - 1)
        * (p**n - 1)
        * (p ** (2 * n + 1) - p**n - p ** (n - 1) + p**4 + p**2 - 1)
    )
    q, r = divmod(numerator, (p**2 - 1) * (p**4 - 1))
    if r:
        raise InvariantViolation(f"Closed form for N({n}, {p}^2) is not integral.")
    return 1 + q


@dataclass
class CensusReport(object):
    """
    Component count of almost commuting n-tuples in U(m), split by congruence class.

    Attributes
    ----------
    n, m : int
        Tuple length and matrix dimension.

    total : int
        Number of ``D`` in ``T(n, Z/m)`` with ``sigma(D) | m``, the zero matrix included.

    by_class : Dict[Tuple[int, ...], int]
        Counts keyed by the normal-form order sequence, zero matrix excluded.

    source : str
        ``"formula"`` or ``"oracle"``.
    """

    n: int
    m: int
    total: int
    by_class: Dict[Orders, int] = field(default_factory=dict)
    source: str = "formula"

    def __post_init__(self) -> None:
        if self.by_class and self.total != sum(self.by_class.values()) + 1:
            raise InvariantViolation(
                f"Census total {self.total} disagrees with class counts "
                f"{sum(self.by_class.values())} + 1."
            )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "total": str(self.total),
            "source": self.source,
            "by_class": [
                {"orders": list(orders), "count": str(count)}
                for orders, count in sorted(self.by_class.items())
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CensusReport":
        return cls(
            n=int(data["n"]),
            m=int(data["m"]),
            total=int(data["total"]),
            by_class={
                tuple(int(x) for x in item["orders"]): int(item["count"])
                for item in data["by_class"]
            },
            source=data.get("source", "formula"),
        )

    def to_frame(self) -> pd.DataFrame:
        """One row per congruence class, the zero matrix first."""
        rows = [{"orders": "", "sigma": 1, "count": 1}]
        for orders, count in sorted(self.by_class.items()):
            rows.append(
                {"orders": "x".join(map(str, orders)), "sigma": prod(orders), "count": count}
            )
        df = pd.DataFrame(rows, columns=["orders", "sigma", "count"])
        df.insert(0, "m", self.m)
        df.insert(0, "n", self.n)
        return df


def formula_census(n: int, m: int) -> CensusReport:
    """Census assembled from the closed-form class counts."""
    by_class = class_counts(n, m)
    report = CensusReport(n, m, sum(by_class.values()) + 1, by_class, source="formula")
    if report.total != n_general(n, m):
        raise InvariantViolation(f"Class counts for ({n}, {m}) disagree with N(n, m).")
    return report


def _census_chunk(args: Tuple[int, int, int, int]) -> Counter:
    n, m, start, stop = args
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    counts: Counter = Counter()
    for digits in islice(product(range(m), repeat=len(pairs)), start, stop):
        M = [[0] * n for _ in range(n)]
        for (i, j), x in zip(pairs, digits):
            M[i][j] = x
            M[j][i] = -x
        orders = normal_form_orders(M, m)
        if m % prod(orders) == 0:
            counts[orders] += 1
    return counts


def brute_force_census(
    n: int,
    m: int,
    *,
    cap: Optional[int] = None,
    n_proc: Optional[int] = 1,
    context: Literal["spawn", "fork", "forkserver"] = "spawn",
    progress: bool = False,
) -> CensusReport:
    """
    Enumerate every matrix in ``T(n, Z/m)`` and count those with ``sigma(D) | m``.

    The above-diagonal entries are walked as an odometer (last entry fastest).
    The range is cut into chunks that run in a worker pool when ``n_proc > 1``.

    Parameters
    ----------
    n, m : int
        Tuple length and matrix dimension.

    cap : int, optional
        Largest allowed ``m^(n(n-1)/2)``. Defaults to ``DEFAULTS.enumeration_cap``.

    n_proc : int, optional (default: 1)
        Worker processes. :obj:`None` means ``DEFAULTS.workers``.

    context : Literal["spawn", "fork", "forkserver"] (default: "spawn")
        The context used for starting the worker processes.

    progress : bool (default: :obj:`False`)
        If :obj:`True`, the progress indicator will be shown.

    Returns
    -------
    report : :class:`CensusReport`
    """
    if n < 2 or m < 1:
        raise ValueError(f"Need n >= 2 and m >= 1, got ({n}, {m}).")
    if context not in CONTEXTS:
        raise ValueError("context must be one of '{}'.".format("', '".join(CONTEXTS)))
    if cap is None:
        cap = DEFAULTS.enumeration_cap
    size = m ** (n * (n - 1) // 2)
    if size > cap:
        raise ResourceCapExceeded(f"Census of T({n}, Z/{m})", size, cap)
    if n_proc is None:
        n_proc = DEFAULTS.workers

    n_chunks = max(1, min(size, 4 * n_proc))
    step = -(-size // n_chunks)
    chunks = [(n, m, start, min(start + step, size)) for start in range(0, size, step)]
    logger.info("Enumerating %d matrices in %d chunks on %d workers.", size, len(chunks), n_proc)

    counts: Counter = Counter()
    with tqdm(total=len(chunks), disable=not progress) as t:
        if n_proc == 1:
            for chunk in chunks:
                counts.update(_census_chunk(chunk))
                t.update(1)
        else:
            ctx = multiprocessing.get_context(context)
            p = ctx.Pool(processes=n_proc)
            try:
                for partial in p.imap_unordered(_census_chunk, chunks):
                    counts.update(partial)
                    t.update(1)
            finally:
                p.close()
                p.join()

    zero = counts.pop((), 0)
    if zero != 1:
        raise InvariantViolation(f"Zero matrix counted {zero} times.")
    by_class = dict(counts)
    return CensusReport(n, m, sum(by_class.values()) + 1, by_class, source="oracle")
