import cmath
import logging
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm, pi
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union

import sympy

from .exceptions import ResourceCapExceeded
from .settings import DEFAULTS

logger = logging.getLogger(__name__)

Angle = Union["Rat1", float]


@dataclass(frozen=True, order=True)
class Rat1(object):
    """
    An element of Q/Z stored as a reduced fraction ``num/den`` with ``0 <= num < den``.

    The zero element is ``Rat1(0, 1)``. Because the representation is canonical,
    equality and hashing are structural.

    Attributes
    ----------
    num : int
        Numerator in ``[0, den)``.

    den : int
        Denominator, equal to the additive order of the element.

    Examples
    --------
    >>> from acmpy.exact_arith import rat1_make
    >>> rat1_make(7, 6)
    Rat1(num=1, den=6)
    >>> rat1_make(1, 2) + rat1_make(2, 3)
    Rat1(num=1, den=6)
    >>> 2 * rat1_make(3, 4)
    Rat1(num=1, den=2)
    """

    num: int = 0
    den: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.num, int) or not isinstance(self.den, int):
            raise TypeError(f"Rat1 needs integer fields, got ({self.num!r}, {self.den!r}).")
        if self.den < 1:
            raise ValueError(f"Rat1 denominator must be positive, got {self.den}.")
        if not 0 <= self.num < self.den:
            raise ValueError(f"Rat1 numerator must lie in [0, {self.den}), got {self.num}.")
        if gcd(self.num, self.den) != 1:
            raise ValueError(f"{self.num}/{self.den} is not reduced.")

    def __add__(self, other: "Rat1") -> "Rat1":
        if not isinstance(other, Rat1):
            return NotImplemented
        return rat1_add(self, other)

    def __sub__(self, other: "Rat1") -> "Rat1":
        if not isinstance(other, Rat1):
            return NotImplemented
        return rat1_add(self, rat1_neg(other))

    def __neg__(self) -> "Rat1":
        return rat1_neg(self)

    def __rmul__(self, k: int) -> "Rat1":
        if not isinstance(k, int):
            return NotImplemented
        return rat1_scale(k, self)

    def __float__(self) -> float:
        return self.num / self.den

    def __bool__(self) -> bool:
        return self.num != 0

    def __str__(self) -> str:
        return f"{self.num}/{self.den}" if self.num else "0"

    @property
    def order(self) -> int:
        return self.den

    def to_angle(self) -> float:
        """Angle in turns, in ``[0, 1)``."""
        return self.num / self.den

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, self.den)

    def root_of_unity(self) -> complex:
        """Return ``exp(2*pi*i*x)``."""
        return cmath.exp(2j * pi * self.num / self.den)

    def to_json(self) -> List[int]:
        return [self.num, self.den]

    @classmethod
    def from_json(cls, value: Sequence[int]) -> "Rat1":
        if len(value) != 2:
            raise ValueError(f"Expected [num, den], got {value!r}.")
        return rat1_make(int(value[0]), int(value[1]))


ZERO = Rat1()


def rat1_make(a: int, b: int) -> Rat1:
    """
    Reduce ``a/b`` modulo 1 into canonical form.

    Parameters
    ----------
    a : int
        Numerator, any sign.

    b : int
        Nonzero denominator, any sign.

    Returns
    -------
    x : :class:`Rat1`
    """
    if b == 0:
        raise ValueError(f"Zero denominator in {a}/0.")
    frac = Fraction(int(a), int(b))
    num = frac.numerator % frac.denominator
    if num == 0:
        return ZERO
    return Rat1(num, frac.denominator)


def rat1_from_fraction(value: Fraction) -> Rat1:
    return rat1_make(value.numerator, value.denominator)


def rat1_add(x: Rat1, y: Rat1) -> Rat1:
    return rat1_make(x.num * y.den + y.num * x.den, x.den * y.den)


def rat1_neg(x: Rat1) -> Rat1:
    return rat1_make(-x.num, x.den)


def rat1_scale(k: int, x: Rat1) -> Rat1:
    return rat1_make(k * x.num, x.den)


def rat1_order(x: Rat1) -> int:
    """Additive order of ``x`` in Q/Z."""
    return x.den


def as_angle(value: Angle) -> float:
    """Return an angle in turns as a float in ``[0, 1)``."""
    return float(value) % 1.0


def circular_distance(a: float, b: float) -> float:
    """Distance between two angles measured in turns on R/Z."""
    delta = (a - b) % 1.0
    return min(delta, 1.0 - delta)


def snap_to_rat1(angle: float, max_den: int) -> Tuple[Rat1, float]:
    """
    Best rational approximation of an angle (in turns) with denominator at most ``max_den``.

    Returns
    -------
    snapped : :class:`Rat1`
        The continued-fraction best approximation reduced into Q/Z.

    error : float
        Circular distance between ``angle`` and the snapped value.
    """
    if max_den < 1:
        raise ValueError(f"max_den must be >= 1, got {max_den}.")
    frac = Fraction(angle % 1.0).limit_denominator(max_den)
    snapped = rat1_from_fraction(frac)
    return snapped, circular_distance(angle, float(snapped))


def euler_phi(k: int) -> int:
    """Euler's totient function."""
    if k < 1:
        raise ValueError(f"euler_phi needs k >= 1, got {k}.")
    return int(sympy.totient(k))


def binomial(a: int, b: int) -> int:
    """Binomial coefficient, zero when ``b > a``."""
    if a < 0 or b < 0:
        raise ValueError(f"binomial needs non-negative arguments, got ({a}, {b}).")
    if b > a:
        return 0
    return int(sympy.binomial(a, b))


def lcm_all(values: Iterable[int]) -> int:
    """Least common multiple of the given positive integers (1 for no values)."""
    return lcm(1, *values)


def subgroup_closure(
    generators: Iterable[Sequence[int]],
    modulus: int,
    cap: Optional[int] = None,
) -> Set[Tuple[int, ...]]:
    """
    Elements of the subgroup of ``(Z/modulus)^k`` generated by integer vectors.

    Each generator ``g`` extends the current group ``H`` to ``H + <g>`` by adding
    cosets ``H + j*g`` until ``j*g`` falls back into ``H``.

    Parameters
    ----------
    generators : Iterable[Sequence[int]]
        Integer vectors of a common length.

    modulus : int
        The modulus of every coordinate.

    cap : int, optional
        Largest allowed group size. Defaults to ``DEFAULTS.enumeration_cap``.

    Returns
    -------
    group : set of tuples
    """
    if cap is None:
        cap = DEFAULTS.enumeration_cap
    if modulus < 1:
        raise ValueError(f"modulus must be >= 1, got {modulus}.")
    group: Optional[Set[Tuple[int, ...]]] = None
    for g in generators:
        gen = tuple(x % modulus for x in g)
        if group is None:
            group = {tuple(0 for _ in gen)}
        if gen in group:
            continue
        extended = set(group)
        shift = gen
        while shift not in group:
            if len(extended) + len(group) > cap:
                raise ResourceCapExceeded("Subgroup closure", len(extended) + len(group), cap)
            extended.update(
                tuple((a + b) % modulus for a, b in zip(h, shift)) for h in group
            )
            shift = tuple((a + b) % modulus for a, b in zip(shift, gen))
        group = extended
    return group if group is not None else {()}


def subgroup_order(
    generators: Iterable[Sequence[int]],
    modulus: int,
    cap: Optional[int] = None,
) -> int:
    """Order of the subgroup of ``(Z/modulus)^k`` generated by ``generators``."""
    order = len(subgroup_closure(generators, modulus, cap))
    logger.debug("Subgroup of (Z/%d)^k has order %d.", modulus, order)
    return order
