"""
Embeddings of finite abelian groups.

- into a finite sum of Prüfer groups Z(p^inf), realized as rationals
  with p-power denominator modulo 1;
- into the product of the quotients A/B over a base of subgroups.
"""

import logging
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from sympy import factorint, isprime

from topolab.config import load_settings
from topolab.errors import LimitExceededError, PreconditionError, VerificationError
from topolab.exact_core import as_rational, format_rational
from topolab.finite_lab import EmbeddingReport, subgroup_base, left_cosets

log = logging.getLogger(__name__)

EXHAUSTIVE_ORDER = 10**4
SAMPLED_PAIRS = 2000
DECOMPOSITION_LIMIT = 256


@dataclass(frozen=True)
class CyclicDecomposition:
    """The group Z/n_1 + ... + Z/n_t; the empty list is the trivial group."""

    orders: tuple

    def __post_init__(self):
        orders = tuple(int(n) for n in self.orders)
        if any(n < 2 for n in orders):
            raise PreconditionError(f"Cyclic orders must be at least 2, got {list(orders)}")
        object.__setattr__(self, "orders", orders)

    @classmethod
    def parse(cls, text):
        """Parse "6,4,9" into the orders (6, 4, 9)."""
        try:
            return cls(tuple(int(part) for part in text.split(",") if part.strip()))
        except ValueError:
            raise PreconditionError(f"Orders must be comma separated integers, got '{text}'") from None

    @property
    def order(self):
        return math.prod(self.orders)

    def elements(self):
        return product(*(range(n) for n in self.orders))

    def add(self, a, b):
        return tuple((x + y) % n for x, y, n in zip(a, b, self.orders))

    def generator(self, i):
        return tuple(int(j == i) for j in range(len(self.orders)))

    def element_order(self, a):
        return math.lcm(1, *(n // math.gcd(x, n) for x, n in zip(a, self.orders)))

    def to_json(self):
        return {"orders": list(self.orders)}


def _is_prime_power_of(d, p):
    while d % p == 0:
        d //= p
    return d == 1


@dataclass(frozen=True)
class PruferCoordinate:
    """An element of Z(p^inf): a rational in [0, 1) whose denominator is a power of p."""

    prime: int
    value: Fraction

    def __post_init__(self):
        value = as_rational(self.value) % 1
        if not isprime(self.prime):
            raise PreconditionError(f"{self.prime} is not a prime")
        if not _is_prime_power_of(value.denominator, self.prime):
            raise PreconditionError(
                f"{format_rational(value)} does not have a power of {self.prime} as denominator")
        object.__setattr__(self, "value", value)

    def __add__(self, other):
        if not isinstance(other, PruferCoordinate):
            return NotImplemented
        if other.prime != self.prime:
            raise PreconditionError(f"Cannot add Z({self.prime}^inf) and Z({other.prime}^inf)")
        return PruferCoordinate(self.prime, self.value + other.value)

    def __neg__(self):
        return PruferCoordinate(self.prime, -self.value)

    @property
    def order(self):
        return self.value.denominator

    def is_zero(self):
        return self.value == 0

    def to_json(self):
        return {"p": self.prime, "value": format_rational(self.value)}


def prufer_order(element):
    """Order of a tuple of Prüfer coordinates."""
    return math.lcm(1, *(coordinate.order for coordinate in element))


def prufer_sum(a, b):
    return tuple(x + y for x, y in zip(a, b))


@dataclass(frozen=True)
class PruferEmbedding:
    decomposition: CyclicDecomposition
    slots: tuple
    report: EmbeddingReport

    def image(self, a):
        return tuple(PruferCoordinate(p, Fraction(a[i], p**e)) for i, p, e in self.slots)

    def generator_images(self):
        """Per generator, the coordinates of its own slots."""
        return tuple(
            tuple(PruferCoordinate(p, Fraction(1, p**e)) for j, p, e in self.slots if j == i)
            for i in range(len(self.decomposition.orders)))

    def to_json(self):
        return {
            "orders": list(self.decomposition.orders),
            "slots": [{"generator": i, "p": p, "exponent": e} for i, p, e in self.slots],
            "generators": [[c.to_json() for c in image] for image in self.generator_images()],
            "report": self.report.to_json(),
        }


def prufer_embedding(dec, settings=None):
    """
    Map each generator of Z/n through the primary decomposition
    n = prod p^e to the coordinates 1/p^e, one Prüfer slot per
    (generator, prime) pair.

    Examples:
    - [6] -> [(2, 1/2), (3, 1/3)]
    - [4, 9] -> [(2, 1/4)], [(3, 1/9)]
    """
    settings = settings or load_settings()
    slots = tuple((i, p, e) for i, n in enumerate(dec.orders) for p, e in sorted(factorint(n).items()))
    embedding = PruferEmbedding(dec, slots, None)
    image = embedding.image
    generators = [dec.generator(i) for i in range(len(dec.orders))]
    images = embedding.generator_images()

    generator_orders_ok = all(prufer_order(g) == n for g, n in zip(images, dec.orders))
    if dec.order <= EXHAUSTIVE_ORDER:
        seen = {}
        homomorphism_ok = orders_ok = True
        for a in dec.elements():
            fa = image(a)
            seen.setdefault(fa, []).append(a)
            orders_ok = orders_ok and prufer_order(fa) == dec.element_order(a)
            homomorphism_ok = homomorphism_ok and all(
                image(dec.add(a, g)) == prufer_sum(fa, image(g)) for g in generators)
        zero = image(tuple(0 for _ in dec.orders))
        kernel = tuple(seen[zero])
        injective_ok = orders_ok and len(seen) == dec.order
    else:
        rng = random.Random(settings.seed)
        homomorphism_ok = True
        for _ in range(SAMPLED_PAIRS):
            a = tuple(rng.randrange(n) for n in dec.orders)
            b = tuple(rng.randrange(n) for n in dec.orders)
            homomorphism_ok = homomorphism_ok and image(dec.add(a, b)) == prufer_sum(image(a), image(b))
        # generators own disjoint slots, so exact generator orders give a trivial kernel
        injective_ok = generator_orders_ok
        kernel = (tuple(0 for _ in dec.orders),)
        log.info("order %d above %d: homomorphism sampled on %d pairs",
                 dec.order, EXHAUSTIVE_ORDER, SAMPLED_PAIRS)

    report = EmbeddingReport(dec.order, len(slots), images, homomorphism_ok,
                             injective_ok and generator_orders_ok, kernel)
    return PruferEmbedding(dec, slots, report)


def quotient_product_embedding(fg):
    """
    The diagonal map a -> (a + B) over the base subgroups B, into the
    product of the quotients. Its kernel is the intersection of the base.
    """
    G = fg.group
    if not G.is_abelian():
        raise PreconditionError("Quotient product embedding needs an abelian group")
    base = subgroup_base(fg)
    coset_of = []
    representatives = []
    for B in base:
        cosets = left_cosets(G, B)
        index = {x: k for k, coset in enumerate(cosets) for x in coset}
        coset_of.append(index)
        representatives.append([min(coset) for coset in cosets])

    def image(a):
        return tuple(index[a] for index in coset_of)

    def add_images(u, v):
        return tuple(coset_of[j][G.mul[reps[u[j]]][reps[v[j]]]] for j, reps in enumerate(representatives))

    images = tuple(image(a) for a in G.elements)
    homomorphism_ok = all(images[G.mul[a][b]] == add_images(images[a], images[b])
                          for a in G.elements for b in G.elements)
    zero = images[0]
    kernel = tuple(a for a in G.elements if images[a] == zero)
    if frozenset(kernel) != frozenset.intersection(*base):
        raise VerificationError("kernel is the intersection of the base", f"kernel {list(kernel)}")
    degree = math.prod(len(reps) for reps in representatives)
    return EmbeddingReport(G.order, degree, images, homomorphism_ok, kernel == (0,), kernel)


def decompose_abelian_table(G):
    """
    Find generators g_1, ..., g_t of orders n_1 >= ... >= n_t with
    G = <g_1> + ... + <g_t>, by backtracking over elements of largest
    order first. Returns (CyclicDecomposition, generator indices).
    """
    if G.order > DECOMPOSITION_LIMIT:
        raise LimitExceededError(f"Decomposition is searched for orders up to {DECOMPOSITION_LIMIT}")
    if not G.is_abelian():
        raise PreconditionError("Only abelian tables decompose into cyclic groups")
    order_of = [G.element_order(g) for g in G.elements]
    candidates = sorted((g for g in G.elements if g), key=lambda g: (-order_of[g], g))

    def search(H, chosen):
        if len(H) == G.order:
            return chosen
        for g in candidates:
            if g in H or (chosen and order_of[g] > order_of[chosen[-1]]):
                continue
            J = G.closure(H | {g})
            if len(J) == len(H) * order_of[g]:
                found = search(J, chosen + [g])
                if found is not None:
                    return found
        return None

    generators = search(frozenset([0]), [])
    if generators is None:
        raise VerificationError("cyclic decomposition", f"no decomposition of order {G.order}")
    return CyclicDecomposition(tuple(order_of[g] for g in generators)), tuple(generators)
