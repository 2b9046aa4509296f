"""
The concrete sequence groups: the lattices R, S and the direct sum of
copies of Z, the groups Gamma0 = c0 ∩ R, Gamma1 = l1 ∩ R and c ∩ R,
and their quotients by S or by the direct sum.

Everything here is a decision procedure over exact values. Quotient
elements are handled through arbitrary coset representatives plus the
difference test; there is no canonical coset form.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from sympy import factorint

from topolab.errors import (IllPosedQuotientError, MembershipError,
                            PreconditionError, RepresentationError, SchemaError)
from topolab.exact_core import (FinSeq, TailSeq, as_rational, format_rational,
                                l1_norm, seq_sub, seq_to_json, sup_norm)

log = logging.getLogger(__name__)


class LatticeKind(Enum):
    R_LATTICE = "R"
    S_LATTICE = "S"
    OPLUS_Z = "OPLUS_Z"

    @classmethod
    def parse(cls, text):
        for kind in cls:
            if text in (kind.value, kind.name):
                return kind
        raise PreconditionError(f"Unknown lattice '{text}' (expected R, S or OPLUS_Z)")


class SpaceKind(Enum):
    GAMMA0 = "GAMMA0"
    GAMMA1 = "GAMMA1"
    C_CAP_R = "C_CAP_R"

    @classmethod
    def parse(cls, text):
        try:
            return cls(text.upper())
        except ValueError:
            raise PreconditionError(
                f"Unknown space '{text}' (expected GAMMA0, GAMMA1 or C_CAP_R)") from None

    @property
    def representation(self):
        return TailSeq if self is SpaceKind.C_CAP_R else FinSeq

    def norm(self, a):
        """The norm defining the invariant metric of the space."""
        if self is SpaceKind.GAMMA1:
            return l1_norm(a)
        return sup_norm(a)


class SubgroupTag(Enum):
    COORD_ZERO = "COORD_ZERO"
    COORD_INT = "COORD_INT"
    BALL_GENERATED = "BALL_GENERATED"


@dataclass(frozen=True)
class SubgroupDescriptor:
    """Symbolic description of an open subgroup of a sequence group."""

    tag: SubgroupTag
    n: int = None
    space: SpaceKind = None
    radius: Fraction = None

    @classmethod
    def coord_zero(cls, n):
        return cls(SubgroupTag.COORD_ZERO, n=n)

    @classmethod
    def coord_int(cls, n):
        return cls(SubgroupTag.COORD_INT, n=n)

    @classmethod
    def ball_generated(cls, space, radius):
        radius = as_rational(radius)
        if radius <= 0:
            raise PreconditionError("Ball radius must be positive")
        return cls(SubgroupTag.BALL_GENERATED, space=space, radius=radius)

    def to_json(self):
        if self.tag is SubgroupTag.BALL_GENERATED:
            return {"tag": self.tag.value, "space": self.space.value,
                    "radius": format_rational(self.radius)}
        return {"tag": self.tag.value, "n": self.n}

    @classmethod
    def from_json(cls, data):
        try:
            tag = SubgroupTag(data["tag"])
            if tag is SubgroupTag.BALL_GENERATED:
                return cls.ball_generated(SpaceKind.parse(data["space"]), data["radius"])
            return cls(tag, n=int(data["n"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"Bad subgroup descriptor {data!r}: {e}") from None


def lattice_step(n):
    """Granularity 1/(n+1)! of coordinate n in the R lattice."""
    return Fraction(1, math.factorial(n + 1))


def _legendre(m, p):
    # exponent of p in m!
    count, power = 0, p
    while power <= m:
        count += m // power
        power *= p
    return count


def divides_factorial(d, m):
    """True iff the positive integer d divides m!."""
    if d <= max(m, 1):
        return True
    return all(_legendre(m, p) >= e for p, e in factorint(d).items())


def _in_r_lattice(index, value):
    return divides_factorial(value.denominator, index + 1)


def lattice_member(a, kind):
    """
    Decide membership of a sequence in a lattice.

    R_LATTICE accepts both representations. For a TailSeq the tail
    value t occupies every coordinate from L = len(prefix) on; since
    (n+1)! divides (n+2)!, it is enough that t fits coordinate L.

    Examples:
    - a(1) = 1/2, R_LATTICE -> True
    - a(1) = 1/3, R_LATTICE -> False
    - e0 - e5, S_LATTICE -> True
    """
    if kind is LatticeKind.R_LATTICE:
        if isinstance(a, FinSeq):
            return all(_in_r_lattice(n, v) for n, v in a.entries)
        if isinstance(a, TailSeq):
            return (all(_in_r_lattice(n, v) for n, v in enumerate(a.prefix))
                    and _in_r_lattice(a.length, a.tail))
        raise RepresentationError(f"Not a sequence: {type(a).__name__}")

    if not isinstance(a, FinSeq):
        raise RepresentationError(f"{kind.name} only contains finitely supported sequences")
    integral = all(v.denominator == 1 for v in a.values())
    if kind is LatticeKind.OPLUS_Z:
        return integral
    return integral and sum(a.values(), Fraction(0)) == 0


def lattice_equiv(a, b, kind):
    """Coset equality a ≡ b modulo the lattice (S or the direct sum of Z)."""
    if kind not in (LatticeKind.S_LATTICE, LatticeKind.OPLUS_Z):
        raise PreconditionError(f"Quotients are only taken by S or OPLUS_Z, not {kind.name}")
    return lattice_member(seq_sub(a, b), kind)


def coordinate_sum(a):
    """The isomorphism from (direct sum of Z)/S onto Z: a -> sum of a(n)."""
    if not lattice_member(a, LatticeKind.OPLUS_Z):
        raise MembershipError("Coordinate sum is only an isomorphism on integer sequences")
    return int(sum(a.values(), Fraction(0)))


def space_member(a, space):
    """
    Decide a ∈ space.

    Gamma0 and Gamma1 hold finitely supported sequences, for which
    membership in c0 and l1 is automatic, so only the R condition is
    tested. c ∩ R holds eventually constant sequences.
    """
    if not isinstance(a, space.representation):
        raise RepresentationError(
            f"{space.name} elements are {space.representation.__name__}, got {type(a).__name__}")
    return lattice_member(a, LatticeKind.R_LATTICE)


def require_member(a, space, label="element"):
    if not space_member(a, space):
        raise MembershipError(f"The {label} is not in {space.name}")


def metric_dist(a, b, space):
    """Exact invariant distance ‖a − b‖ in the given space."""
    require_member(a, space, "first argument")
    require_member(b, space, "second argument")
    return space.norm(seq_sub(a, b))


def frozen_indices(radius):
    """
    Coordinates on which every element of the open ball of the given
    radius vanishes: those n with 1/(n+1)! >= radius, because the only
    lattice value of absolute value below the step is 0.
    """
    radius = as_rational(radius)
    frozen = []
    n, factorial = 0, 1
    while Fraction(1, factorial) >= radius:
        frozen.append(n)
        n += 1
        factorial *= n + 1
    return frozen


def descriptor_contains(desc, kind):
    """
    Whether the subgroup described, read in the quotient by kind,
    contains kind (so that membership of cosets is well posed).
    """
    if desc.tag is SubgroupTag.COORD_ZERO:
        return False
    if desc.tag is SubgroupTag.COORD_INT:
        if kind is LatticeKind.R_LATTICE:
            # only coordinate 0 of R is integer-valued
            return desc.n == 0
        return True
    # The ball-generated subgroup of a quotient is generated by the image
    # of the ball, so it contains the zero coset by construction.
    return kind is not LatticeKind.R_LATTICE


def subgroup_member(a, desc, modulo=None):
    """
    Decide whether a, or its coset modulo the lattice, lies in the
    described subgroup.

    Examples:
    - e1/2 in COORD_INT(1) mod S -> False
    - e0 in COORD_INT(1) mod S -> True
    - e3/24 in COORD_ZERO(3) -> False
    """
    if not isinstance(a, FinSeq):
        raise RepresentationError("Subgroup membership is decided for finitely supported sequences")
    if desc.space is not None:
        require_member(a, desc.space)
    if modulo is not None and not descriptor_contains(desc, modulo):
        raise IllPosedQuotientError(
            f"{desc.tag.value} does not contain {modulo.name}; its image in the quotient is not defined")

    if desc.tag is SubgroupTag.COORD_ZERO:
        return a[desc.n] == 0
    if desc.tag is SubgroupTag.COORD_INT:
        return a[desc.n].denominator == 1

    frozen = frozen_indices(desc.radius)
    if modulo is None:
        return all(a[n] == 0 for n in frozen)
    # Integer values on the frozen coordinates can be cancelled by a
    # lattice element that pays the balance on a free coordinate.
    return all(a[n].denominator == 1 for n in frozen)


@dataclass(frozen=True)
class CosetBallResult:
    """
    Outcome of the coset-ball decision.

    ``ranges`` lists, per support coordinate, the integers z with
    |a(n) − z| < r as (n, low, high); together with ``reason`` it is the
    exhaustion record when ``member`` is False.
    """

    member: bool
    witness: FinSeq = None
    ranges: tuple = ()
    reason: str = ""

    def __iter__(self):
        return iter((self.member, self.witness))

    def to_json(self):
        return {
            "member": self.member,
            "witness": None if self.witness is None else seq_to_json(self.witness),
            "ranges": [[n, low, high] for n, low, high in self.ranges],
            "reason": self.reason,
        }


def _integer_window(value, radius):
    # integers z with value - radius < z < value + radius
    return math.floor(value - radius) + 1, math.ceil(value + radius) - 1


def coset_ball_member(a, radius, space, modulo=LatticeKind.S_LATTICE):
    """
    Decide whether a mod lattice lies in (B0(0, r) ∩ space) mod lattice,
    B0 being the open sup-norm ball.

    Equivalently: is there t in the lattice with sup_norm(a − t) < r?
    Only the support of a needs nonzero t(n) unless r > 1, when any
    integer of absolute value below r fits on a fresh coordinate. For
    r <= 1 each support coordinate admits a contiguous window of at
    most two integers, so the attainable coordinate sums form the
    interval [sum of lows, sum of highs] and the zero-sum constraint of
    S is decided exactly.
    """
    radius = as_rational(radius)
    if radius <= 0:
        raise PreconditionError("Radius must be positive")
    if modulo not in (LatticeKind.S_LATTICE, LatticeKind.OPLUS_Z):
        raise PreconditionError(f"Cosets are taken modulo S or OPLUS_Z, not {modulo.name}")
    if not isinstance(a, FinSeq):
        raise RepresentationError("Coset balls are decided for finitely supported sequences")
    require_member(a, space)

    ranges = []
    choice = {}
    for n, value in a.entries:
        low, high = _integer_window(value, radius)
        ranges.append((n, low, high))
        if low > high:
            return CosetBallResult(False, None, tuple(ranges),
                                   f"no integer within {format_rational(radius)} of a({n})")
        # nearest integer, ties to the lower one
        choice[n] = min(max(math.ceil(value - Fraction(1, 2)), low), high)
    ranges = tuple(ranges)

    if modulo is LatticeKind.S_LATTICE:
        delta = -sum(choice.values())
        for n, low, high in ranges:
            if delta == 0:
                break
            if delta > 0:
                step = min(high - choice[n], delta)
            else:
                step = max(low - choice[n], delta)
            choice[n] += step
            delta -= step
        if delta != 0:
            if radius <= 1:
                lows = sum(low for _, low, _ in ranges)
                highs = sum(high for _, _, high in ranges)
                return CosetBallResult(
                    False, None, ranges,
                    f"attainable coordinate sums [{lows}, {highs}] exclude 0")
            # |±1| < r, so the balance goes one unit per fresh coordinate
            fresh = (max(a.support) + 1) if a.support else 0
            unit_sign = 1 if delta > 0 else -1
            for k in range(abs(delta)):
                choice[fresh + k] = unit_sign

    witness = FinSeq(tuple(choice.items()))
    log.debug("coset ball r=%s: witness %s", radius, witness.entries)
    return CosetBallResult(True, witness, ranges, "witness found")
