"""Exact invariants of a Fuchsian signature (g; nu_1, ..., nu_n).

Everything here is rational bookkeeping done with ``fractions.Fraction``;
no floats are produced except by ``equivariant_euler_pairing``, whose value
is a sum of roots of unity.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union

from ._validation import ValidationError, check_int

HYPERBOLIC = "hyperbolic"
EUCLIDEAN = "euclidean"
SPHERICAL = "spherical"


@dataclass(frozen=True)
class Irrational:
    """Opaque symbol standing for an irrational flux value such as ``theta``."""

    name: str = "theta"

    def __str__(self) -> str:
        return self.name


Theta = Union[Fraction, Irrational]


def as_fraction(value) -> Fraction:
    """Parse ints, Fractions and strings like ``"3/7"``; refuse floats."""
    if isinstance(value, bool):
        raise ValidationError(f"not a rational number: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"not a rational number: {value!r}") from None
    raise ValidationError(f"expected an exact rational, got {type(value).__name__}")


def fraction_str(q: Fraction) -> str:
    """Serialise as ``"p/q"`` (integers keep the ``/1``)."""
    return f"{q.numerator}/{q.denominator}"


def normalize_theta(theta) -> Theta:
    """Reduce mod 1 into (0, 1]; the class of 0 is represented by 1."""
    if isinstance(theta, Irrational):
        return theta
    q = as_fraction(theta) % 1
    return q if q != 0 else Fraction(1)


@dataclass(frozen=True)
class Signature:
    genus: int
    cone_orders: tuple[int, ...] = ()

    def __post_init__(self):
        g = check_int(self.genus, "genus", 0)
        orders = []
        for v in self.cone_orders:
            v = check_int(v, "cone order", 1)
            if v >= 2:  # order-1 cone points are not cone points at all
                orders.append(v)
        object.__setattr__(self, "genus", g)
        object.__setattr__(self, "cone_orders", tuple(sorted(orders)))

    @classmethod
    def parse(cls, text: str) -> "Signature":
        """Parse ``"g;v1,v2,..."``.  ``"2;"`` and ``"2"`` both mean genus 2, no cones."""
        if not isinstance(text, str):
            raise ValidationError("signature must be a string like '0;2,3,7'")
        head, _, tail = text.strip().partition(";")
        try:
            genus = int(head)
            orders = [int(t) for t in tail.split(",") if t.strip()]
        except ValueError:
            raise ValidationError(f"malformed signature {text!r}; expected 'g;v1,v2,...'") from None
        return cls(genus, tuple(orders))

    def __str__(self) -> str:
        return f"{self.genus};" + ",".join(str(v) for v in self.cone_orders)

    @property
    def n(self) -> int:
        return len(self.cone_orders)

    @property
    def nu(self) -> Fraction:
        """Sum of 1/nu_j."""
        return sum((Fraction(1, v) for v in self.cone_orders), Fraction(0))

    @property
    def geometry_class(self) -> str:
        chi = orbifold_euler_characteristic(self)
        if chi < 0:
            return HYPERBOLIC
        return EUCLIDEAN if chi == 0 else SPHERICAL


def orbifold_euler_characteristic(sig: Signature) -> Fraction:
    return 2 - 2 * sig.genus - sum((1 - Fraction(1, v) for v in sig.cone_orders), Fraction(0))


def phi(sig: Signature) -> Fraction:
    """Conductance quantum 2(g-1) + (n - nu) = -chi_orb."""
    return -orbifold_euler_characteristic(sig)


def k_theory_ranks(sig: Signature) -> tuple[int, int]:
    return 2 - sig.n + sum(sig.cone_orders), 2 * sig.genus


@dataclass(frozen=True)
class TraceLattice:
    """The subgroup Z*theta + Z + sum_i Z/nu_i of the reals.

    ``rational_generators`` holds every generator that is an exact rational,
    including theta when theta is rational.  ``irrational_generator`` is set
    only for a symbolic theta.
    """

    rational_generators: tuple[Fraction, ...]
    irrational_generator: Irrational | None = None

    @property
    def is_rational(self) -> bool:
        return self.irrational_generator is None

    def generators(self) -> list:
        head = [self.irrational_generator] if self.irrational_generator else []
        return head + list(self.rational_generators)

    def minimal_positive(self) -> Fraction:
        if not self.is_rational:
            raise ValidationError("minimal element is undecidable for an irrational generator")
        den = math.lcm(*(q.denominator for q in self.rational_generators))
        nums = [q.numerator * (den // q.denominator) for q in self.rational_generators]
        return Fraction(math.gcd(*nums), den)

    def points_in_unit_interval(self) -> list[Fraction]:
        step = self.minimal_positive()
        return [k * step for k in range(int(1 / step) + 1)]

    def nearest(self, value: float) -> tuple[Fraction, float]:
        """Closest lattice point to ``value`` and its distance."""
        step = self.minimal_positive()
        point = step * round(Fraction(value) / step)
        return point, abs(float(point) - value)


def trace_range(sig: Signature, theta) -> TraceLattice:
    if isinstance(theta, Irrational):
        rational, irr = [], theta
    else:
        theta = as_fraction(theta)
        if not 0 < theta <= 1:
            raise ValidationError(f"theta must lie in (0,1], got {theta}")
        rational, irr = [theta], None
    for q in [Fraction(1)] + [Fraction(1, v) for v in sig.cone_orders]:
        if q not in rational:
            rational.append(q)
    return TraceLattice(tuple(rational), irr)


def kadison_bound(sig: Signature, theta) -> Fraction:
    if isinstance(theta, Irrational):
        raise ValidationError("the trace-lattice bound needs a rational theta")
    return trace_range(sig, theta).minimal_positive()


def smallest_smooth_cover_order(sig: Signature, search_limit: int = 100_000) -> int:
    """Smallest m divisible by every cone order with m*phi an even integer >= 0."""
    if sig.geometry_class == SPHERICAL:
        raise ValidationError(f"signature {sig} is spherical")
    step = math.lcm(1, *sig.cone_orders)
    f = phi(sig)
    for m in range(step, search_limit + 1, step):
        e = m * f
        if e.denominator == 1 and e.numerator % 2 == 0:
            return m
    raise ValidationError(f"no admissible cover order <= {search_limit}")


def covering_genus(sig: Signature, m: int) -> int:
    m = check_int(m, "m", 1)
    if any(m % v for v in sig.cone_orders):
        raise ValidationError(f"cover order {m} is not divisible by every cone order")
    g = 1 + Fraction(m, 2) * phi(sig)
    if g.denominator != 1:
        raise ValidationError(f"cover order {m} gives non-integer genus {g}")
    return int(g)


def _cone_shifts(sig: Signature) -> set[Fraction]:
    """All values of sum_i beta_i/nu_i mod 1 with 0 <= beta_i < nu_i."""
    shifts = {Fraction(0)}
    for v in sig.cone_orders:
        shifts = {(s + Fraction(b, v)) % 1 for s in shifts for b in range(v)}
    return shifts


def classification_equivalent(sig: Signature, theta, theta_prime) -> bool:
    """Whether the twisted algebras at theta and theta' are isomorphic."""
    t, tp = as_fraction(theta), as_fraction(theta_prime)
    for x in (t, tp):
        if not 0 < x <= 1:
            raise ValidationError(f"theta must lie in (0,1], got {x}")
    for s in _cone_shifts(sig):
        if tp in (normalize_theta(t + s), normalize_theta(1 - t + s)):
            return True
    return False


def equivalent_thetas(sig: Signature, theta) -> list[Fraction]:
    """The full (sorted) orbit of theta under the classification moves."""
    t = as_fraction(theta)
    out = set()
    for s in _cone_shifts(sig):
        out.add(normalize_theta(t + s))
        out.add(normalize_theta(1 - t + s))
    return sorted(out)


@dataclass(frozen=True)
class SeifertData:
    c1: int
    pairs: tuple[tuple[int, int], ...] = field(default_factory=tuple)

    def __post_init__(self):
        check_int(self.c1, "c1")
        pairs = tuple((check_int(b, "beta"), check_int(v, "nu", 2)) for b, v in self.pairs)
        for b, v in pairs:
            if not 0 < b < v:
                raise ValidationError(f"Seifert pair ({b},{v}) violates 0 < beta < nu")
        object.__setattr__(self, "pairs", pairs)


@dataclass(frozen=True)
class ChernCharacter:
    """Components (1, c1, phases...) with phases as exact fractions of a turn."""

    rank: int
    c1: int
    phases: tuple[tuple[Fraction, ...], ...]

    def as_tuple(self) -> tuple:
        return (self.rank, self.c1) + tuple(itertools.chain.from_iterable(self.phases))


def orbifold_euler_number(data: SeifertData) -> Fraction:
    return data.c1 + sum((Fraction(b, v) for b, v in data.pairs), Fraction(0))


def chern_character(data: SeifertData) -> ChernCharacter:
    phases = tuple(tuple(Fraction(b * k, v) % 1 for k in range(1, v)) for b, v in data.pairs)
    return ChernCharacter(1, data.c1, phases)


def equivariant_euler_pairing(data: SeifertData) -> complex:
    total = complex(data.c1)
    for b, v in data.pairs:
        total += sum(cmath.exp(2j * math.pi * b * k / v) for k in range(1, v))
    return total


def invariants(sig: Signature) -> dict:
    """Every closed-form invariant of ``sig`` as JSON-ready values (rationals as strings)."""
    k0, k1 = k_theory_ranks(sig)
    out = {
        "signature": str(sig),
        "genus": sig.genus,
        "cone_orders": list(sig.cone_orders),
        "geometry_class": sig.geometry_class,
        "orbifold_euler_characteristic": fraction_str(orbifold_euler_characteristic(sig)),
        "phi": fraction_str(phi(sig)),
        "k0_rank": k0,
        "k1_rank": k1,
        "trace_lattice_generators_theta_1": [fraction_str(q) for q in trace_range(sig, 1).rational_generators],
        "kadison_bound_theta_1": fraction_str(kadison_bound(sig, 1)),
    }
    if sig.geometry_class != SPHERICAL:
        m = smallest_smooth_cover_order(sig)
        out["smallest_smooth_cover_order"] = m
        out["covering_genus"] = covering_genus(sig, m)
    return out


def parse_pairs(items: Iterable[str]) -> tuple[tuple[int, int], ...]:
    """Parse Seifert pairs written ``beta/nu`` or ``beta,nu``."""
    out = []
    for item in items:
        a, sep, b = item.replace(",", "/").partition("/")
        if not sep:
            raise ValidationError(f"Seifert pair {item!r} must look like beta/nu")
        try:
            out.append((int(a), int(b)))
        except ValueError:
            raise ValidationError(f"Seifert pair {item!r} must look like beta/nu") from None
    return tuple(out)
