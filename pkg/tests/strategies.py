"""
Hypothesis strategies and the finite-group corpus shared by the tests.
"""

import functools
import math
from fractions import Fraction

from hypothesis import strategies as st
from sympy.combinatorics.named_groups import (AlternatingGroup, DihedralGroup,
                                              SymmetricGroup)

from topolab.exact_core import FinSeq, TailSeq
from topolab.finite_lab import (FiniteGroup, cyclic_group, direct_product,
                                from_permutation_group)

# ----------------------------
# Sequences
# ----------------------------

small_rationals = st.fractions(min_value=-3, max_value=3, max_denominator=12)
positive_radii = st.fractions(min_value=Fraction(1, 50), max_value=1, max_denominator=50).filter(
    lambda r: r > 0)


@st.composite
def finseqs(draw, max_index=8, max_size=6):
    indices = draw(st.sets(st.integers(0, max_index), max_size=max_size))
    return FinSeq(tuple((n, draw(small_rationals)) for n in sorted(indices)))


@st.composite
def tailseqs(draw, max_length=6):
    prefix = draw(st.lists(small_rationals, max_size=max_length))
    return TailSeq(tuple(prefix), draw(small_rationals))


@st.composite
def gamma_elements(draw, max_index=7, max_size=6, bound=3):
    """Finitely supported elements of the R lattice with |a(n)| <= bound."""
    indices = draw(st.sets(st.integers(0, max_index), max_size=max_size))
    entries = []
    for n in sorted(indices):
        step = math.factorial(n + 1)
        k = draw(st.integers(-bound * step, bound * step))
        entries.append((n, Fraction(k, step)))
    return FinSeq(tuple(entries))


@st.composite
def integer_finseqs(draw, max_index=8, max_size=6, bound=5):
    """Finitely supported integer sequences: the direct sum of copies of Z."""
    indices = draw(st.sets(st.integers(0, max_index), max_size=max_size))
    return FinSeq(tuple((n, Fraction(draw(st.integers(-bound, bound)))) for n in sorted(indices)))


@st.composite
def zero_sum_finseqs(draw, max_index=8, max_size=6, bound=5):
    """Integer sequences whose coordinates sum to zero: the S lattice."""
    a = draw(integer_finseqs(max_index - 1, max_size, bound))
    total = sum(a.values(), Fraction(0))
    return a - FinSeq(((max_index, total),)) if total else a


def nonzero(strategy):
    return strategy.filter(lambda a: not a.is_zero())


# ----------------------------
# Finite groups
# ----------------------------

QUATERNION_UNITS = {
    # (x, y) -> (sign, unit) for the units 1, i, j, k
    (1, 1): (1, 0), (1, 2): (0, 3), (1, 3): (1, 2),
    (2, 1): (1, 3), (2, 2): (1, 0), (2, 3): (0, 1),
    (3, 1): (0, 2), (3, 2): (1, 1), (3, 3): (1, 0),
}


def quaternion_group():
    """Q8 with index 4*sign + unit, sign 0 for +, unit 0..3 for 1, i, j, k."""
    def mul(a, b):
        sa, ua = divmod(a, 4)
        sb, ub = divmod(b, 4)
        if ua == 0 or ub == 0:
            sign, unit = 0, ua or ub
        else:
            sign, unit = QUATERNION_UNITS[(ua, ub)]
        return 4 * ((sa + sb + sign) % 2) + unit
    return FiniteGroup.from_table([[mul(a, b) for b in range(8)] for a in range(8)])


@functools.lru_cache(maxsize=None)
def group_corpus():
    z = cyclic_group
    corpus = {
        "trivial": z(1),
        "Z2": z(2),
        "Z3": z(3),
        "Z4": z(4),
        "Z5": z(5),
        "Z6": z(6),
        "Z8": z(8),
        "Z12": z(12),
        "Z16": z(16),
        "Z2xZ2": direct_product(z(2), z(2)),
        "Z2xZ4": direct_product(z(2), z(4)),
        "Z2^3": direct_product(direct_product(z(2), z(2)), z(2)),
        "Z2^4": direct_product(direct_product(z(2), z(2)), direct_product(z(2), z(2))),
        "Z4xZ4": direct_product(z(4), z(4)),
        "S3": from_permutation_group(SymmetricGroup(3)),
        "D4": from_permutation_group(DihedralGroup(4)),
        "Q8": quaternion_group(),
        "D5": from_permutation_group(DihedralGroup(5)),
        "A4": from_permutation_group(AlternatingGroup(4)),
        "D6": from_permutation_group(DihedralGroup(6)),
        "Z2xD4": direct_product(z(2), from_permutation_group(DihedralGroup(4))),
        "D8": from_permutation_group(DihedralGroup(8)),
        "S3xZ3": direct_product(from_permutation_group(SymmetricGroup(3)), z(3)),
        "S4": from_permutation_group(SymmetricGroup(4)),
        "Z2xA4": direct_product(z(2), from_permutation_group(AlternatingGroup(4))),
    }
    return corpus


def corpus_names(max_order):
    return [name for name, G in group_corpus().items() if G.order <= max_order]


@st.composite
def symmetric_sets(draw, group, max_size=None):
    """A random symmetric subset containing the identity."""
    chosen = draw(st.sets(st.sampled_from(list(group.elements)), max_size=max_size))
    return frozenset({0} | set(chosen) | {group.inv[x] for x in chosen})
