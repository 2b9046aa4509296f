"""
Finite groups with a filter base of identity neighborhoods.

Elements are the indices 0..order-1 of a Cayley table, 0 being the
identity. A FilteredGroup declares which subsets are basic
neighborhoods of the identity; a subgroup is open when it contains one
of them. On top of that sit the deciders for TNA, SMOG and TA, the
coset-action embedding into a symmetric group, the non-Archimedean
metric of a subgroup chain, the open-subgroup constructor of the
extension theorem and the factorization of product elements.
"""

import functools
import logging
import random
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product

from sympy.combinatorics import Permutation, PermutationGroup

from topolab.config import load_settings
from topolab.errors import (InvalidFilterError, InvalidGroupError, LimitExceededError,
                            NonGeneratingSetError, NonSubgroupBaseError, PreconditionError,
                            SchemaError, VerificationError)

log = logging.getLogger(__name__)

EXHAUSTIVE_ASSOCIATIVITY = 64
ASSOCIATIVITY_SAMPLES = 20000
EXTENSION_LIMIT = 16


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """
    A group given by its Cayley table.

    Built through ``from_table`` or ``from_permutations``, both of which
    validate the group axioms. Instances hash by identity; the subgroup
    lattice is computed once and kept on the instance.
    """

    order: int
    mul: tuple
    inv: tuple

    @classmethod
    def from_table(cls, table, settings=None):
        try:
            mul = tuple(tuple(int(x) for x in row) for row in table)
        except (TypeError, ValueError):
            raise InvalidGroupError("Cayley table entries must be integers") from None
        order = len(mul)
        if order == 0:
            raise InvalidGroupError("A group has at least one element")
        elements = set(range(order))
        for a, row in enumerate(mul):
            if len(row) != order:
                raise InvalidGroupError(f"Row {a} has {len(row)} entries, expected {order}")
            if set(row) != elements:
                raise InvalidGroupError(f"Row {a} is not a permutation of the elements")
        for b in range(order):
            if {mul[a][b] for a in range(order)} != elements:
                raise InvalidGroupError(f"Column {b} is not a permutation of the elements")
        if any(mul[0][x] != x or mul[x][0] != x for x in range(order)):
            raise InvalidGroupError("Element 0 must be the identity")
        inv = tuple(mul[a].index(0) for a in range(order))
        group = cls(order, mul, inv)
        group._check_associative(settings or load_settings())
        return group

    def _check_associative(self, settings):
        m = self.mul
        if self.order <= EXHAUSTIVE_ASSOCIATIVITY:
            triples = product(range(self.order), repeat=3)
        else:
            rng = random.Random(settings.seed)
            triples = ((rng.randrange(self.order), rng.randrange(self.order), rng.randrange(self.order))
                       for _ in range(ASSOCIATIVITY_SAMPLES))
        for a, b, c in triples:
            if m[m[a][b]][c] != m[a][m[b][c]]:
                raise InvalidGroupError(f"Not associative: ({a}*{b})*{c} != {a}*({b}*{c})")

    @classmethod
    def from_permutations(cls, degree, generators):
        """Expand permutation generators (array forms on 0..degree-1) into a table."""
        if degree < 1:
            raise InvalidGroupError("Permutation degree must be positive")
        try:
            perms = [Permutation(list(gen), size=degree) for gen in generators]
        except (TypeError, ValueError) as e:
            raise InvalidGroupError(f"Bad permutation generator: {e}") from None
        if any(p.size != degree for p in perms):
            raise InvalidGroupError(f"Generators must act on {degree} points")
        return from_permutation_group(PermutationGroup(perms or [Permutation(degree - 1)]))

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise SchemaError("Group file must hold a JSON object")
        if "mul" in data:
            group = cls.from_table(data["mul"])
            if "order" in data and int(data["order"]) != group.order:
                raise InvalidGroupError(f"Declared order {data['order']} but table has {group.order} rows")
            return group
        if "degree" in data and "generators" in data:
            return cls.from_permutations(int(data["degree"]), data["generators"])
        raise SchemaError('Group file needs {"order", "mul"} or {"degree", "generators"}')

    def to_json(self):
        return {"order": self.order, "mul": [list(row) for row in self.mul]}

    @property
    def elements(self):
        return range(self.order)

    def m(self, a, b):
        return self.mul[a][b]

    def product_set(self, A, B):
        return frozenset(self.mul[a][b] for a in A for b in B)

    def inverse_set(self, A):
        return frozenset(self.inv[a] for a in A)

    def check_elements(self, S, what="Element set"):
        """Return S as a frozenset, rejecting members that are not elements of the group."""
        S = frozenset(S)
        outside = [x for x in S if isinstance(x, bool) or not isinstance(x, int) or not 0 <= x < self.order]
        if outside:
            raise PreconditionError(f"{what} has entries outside 0..{self.order - 1}: {outside}")
        return S

    def is_subgroup(self, S):
        S = frozenset(S)
        return 0 in S and self.product_set(S, S) <= S

    def is_normal(self, N):
        N = frozenset(N)
        return self.is_subgroup(N) and all(
            self.mul[self.mul[g][n]][self.inv[g]] in N for g in self.elements for n in N)

    def is_abelian(self):
        return all(self.mul[a][b] == self.mul[b][a] for a in self.elements for b in self.elements)

    def element_order(self, g):
        k, x = 1, g
        while x != 0:
            x = self.mul[x][g]
            k += 1
        return k

    def power(self, g, e):
        x = 0
        for _ in range(e):
            x = self.mul[x][g]
        return x

    @functools.cached_property
    def subgroup_lattice(self):
        return _join_cyclic_subgroups(self)

    def closure(self, generators):
        """The subgroup generated by a set of elements."""
        generators = sorted(set(generators))
        seen = {0}
        queue = deque([0])
        while queue:
            x = queue.popleft()
            for g in generators:
                y = self.mul[x][g]
                if y not in seen:
                    seen.add(y)
                    queue.append(y)
        return frozenset(seen)


def from_permutation_group(pgroup):
    """Cayley table of a sympy PermutationGroup; elements sorted by array form."""
    elements = sorted(pgroup.elements, key=lambda p: p.array_form)
    index = {tuple(p.array_form): i for i, p in enumerate(elements)}
    table = [[index[tuple((a * b).array_form)] for b in elements] for a in elements]
    return FiniteGroup.from_table(table)


def cyclic_group(n):
    if n < 1:
        raise InvalidGroupError("Cyclic group order must be positive")
    return FiniteGroup.from_table([[(a + b) % n for b in range(n)] for a in range(n)])


def direct_product(G, H):
    """G x H with the pair (a, b) stored at index a*|H| + b."""
    k = H.order
    table = [[G.mul[a // k][b // k] * k + H.mul[a % k][b % k]
              for b in range(G.order * k)] for a in range(G.order * k)]
    return FiniteGroup.from_table(table)


def _canonical(S):
    return (len(S), tuple(sorted(S)))


def subgroups(group):
    """
    All subgroups, by iterated joins of cyclic subgroups, ordered by
    size and then by sorted elements.
    """
    return group.subgroup_lattice


def _join_cyclic_subgroups(group):
    cyclic = {group.closure([g]) for g in group.elements}
    found = set(cyclic)
    frontier = set(cyclic)
    while frontier:
        fresh = set()
        for H in frontier:
            for C in cyclic:
                if not C <= H:
                    J = group.closure(H | C)
                    if J not in found:
                        fresh.add(J)
        found |= fresh
        frontier = fresh
    log.debug("group of order %d has %d subgroups", group.order, len(found))
    return tuple(sorted(found, key=_canonical))


def maximal_subgroups_of(group, H):
    inside = [K for K in subgroups(group) if K < H]
    return [K for K in inside if not any(K < L for L in inside)]


def maximal_chains(group):
    """Every chain G = U_0 > U_1 > ... > {id}, each a maximal subgroup of the one before."""
    chains = []

    def extend(path):
        last = path[-1]
        if len(last) == 1:
            chains.append(SubgroupChain(group, tuple(path)))
            return
        for K in maximal_subgroups_of(group, last):
            extend(path + [K])

    extend([frozenset(group.elements)])
    return chains


# ----------------------------
# Filtered groups
# ----------------------------

@dataclass(frozen=True, eq=False)
class FilteredGroup:
    """
    A finite group with a base of identity neighborhoods.

    Each base set must contain the identity and be symmetric. The
    group-topology axioms (square- and conjugation-shrinking) are only
    enforced with ``require_group_topology``; ``filter_axioms`` reports
    them either way.
    """

    group: FiniteGroup
    base: tuple
    require_group_topology: bool = False

    def __post_init__(self):
        if not self.base:
            raise InvalidFilterError("A filter base needs at least one set")
        base = tuple(frozenset(int(x) for x in B) for B in self.base)
        for i, B in enumerate(base):
            if not all(0 <= x < self.group.order for x in B):
                raise InvalidFilterError(f"Base set {i} has elements outside the group")
            if 0 not in B:
                raise InvalidFilterError(f"Base set {i} does not contain the identity")
            if self.group.inverse_set(B) != B:
                raise InvalidFilterError(f"Base set {i} is not symmetric")
        object.__setattr__(self, "base", base)
        if self.require_group_topology:
            failed = [name for name, ok in filter_axioms(self).items() if not ok]
            if failed:
                raise InvalidFilterError(f"Base violates the group-topology axioms: {', '.join(failed)}")


def filter_axioms(fg):
    G, base = fg.group, fg.base
    square = all(any(G.product_set(Bj, Bj) <= Bi for Bj in base) for Bi in base)
    conjugation = all(
        any(frozenset(G.mul[G.mul[g][x]][G.inv[g]] for x in Bj) <= Bi for Bj in base)
        for Bi in base for g in G.elements)
    directed = all(any(Bk <= Bi & Bj for Bk in base) for Bi in base for Bj in base)
    return {"square_shrinking": square, "conjugation_shrinking": conjugation, "directed": directed}


def open_subgroups(fg):
    return [H for H in subgroups(fg.group) if any(B <= H for B in fg.base)]


@dataclass(frozen=True)
class PropertyReport:
    hausdorff: bool
    tna: bool
    smog: bool
    ta: bool
    open_subgroups: tuple
    filter_axioms: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "hausdorff": self.hausdorff,
            "tna": self.tna,
            "smog": self.smog,
            "ta": self.ta,
            "openSubgroups": [sorted(H) for H in self.open_subgroups],
            "filterAxioms": dict(self.filter_axioms),
        }


def property_report(fg):
    """
    Decide Hausdorffness, TNA, SMOG and TA of a filtered group.

    Examples:
    - Z/4, base [{0,2},{0}] -> tna, smog, hausdorff; not ta
    - Z/4, base [{0,1,3}] -> ta only
    """
    G = fg.group
    whole = frozenset(G.elements)
    opens = open_subgroups(fg)
    identity = frozenset([0])
    hausdorff = frozenset.intersection(*fg.base) == identity
    tna = all(any(H <= B for H in opens) for B in fg.base)
    smog = frozenset.intersection(whole, *opens) == identity
    ta = opens == [whole]
    if hausdorff and tna and not smog:
        raise VerificationError("hausdorff and tna imply smog", f"order {G.order}")
    if ta and smog and G.order != 1:
        raise VerificationError("ta and smog imply trivial", f"order {G.order}")
    return PropertyReport(hausdorff, tna, smog, ta, tuple(opens), filter_axioms(fg))


def product_filtered(fgs):
    """Product topology on a product of filtered groups: base of product sets."""
    if not fgs:
        raise PreconditionError("Product of no filtered groups")
    group, base = fgs[0].group, list(fgs[0].base)
    for fg in fgs[1:]:
        k = fg.group.order
        base = [frozenset(a * k + b for a in A for b in B) for A in base for B in fg.base]
        group = direct_product(group, fg.group)
    return FilteredGroup(group, tuple(base))


def smog_coarsening(fg):
    """The filtered group whose base is the open subgroups of ``fg``."""
    return FilteredGroup(fg.group, tuple(open_subgroups(fg)))


# ----------------------------
# Embeddings
# ----------------------------

def _json_image(value):
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, (tuple, list)):
        return [_json_image(v) for v in value]
    return value


@dataclass(frozen=True)
class EmbeddingReport:
    """Images of every element plus the homomorphism and injectivity verdicts."""

    domain_order: int
    codomain_degree: int
    images: tuple
    homomorphism_ok: bool
    injective_ok: bool
    kernel: tuple

    @property
    def accepted(self):
        return self.homomorphism_ok and self.injective_ok

    def to_json(self):
        return {
            "domainOrder": self.domain_order,
            "codomainDegree": self.codomain_degree,
            "images": [_json_image(image) for image in self.images],
            "homomorphismOk": self.homomorphism_ok,
            "injectiveOk": self.injective_ok,
            "kernel": [_json_image(k) for k in self.kernel],
        }


def subgroup_base(fg):
    for i, B in enumerate(fg.base):
        if not fg.group.is_subgroup(B):
            raise NonSubgroupBaseError(f"Base set {i} ({sorted(B)}) is not a subgroup")
    # duplicates would only repeat a block of the action
    return list(dict.fromkeys(fg.base))


def left_cosets(group, H):
    """Left cosets xH, listed by least representative."""
    cosets, covered = [], set()
    for x in group.elements:
        if x not in covered:
            coset = frozenset(group.mul[x][h] for h in H)
            covered |= coset
            cosets.append(coset)
    return cosets


def sym_embedding(fg):
    """
    The action g.(xH) = (gx)H on the disjoint union of the left coset
    spaces G/H, H running over the base subgroups.

    Examples:
    - S3, base [A3, {e}] -> degree 8, injective
    - Z/4, base [{0,2}] -> degree 2, kernel [0, 2]
    """
    G = fg.group
    points = {}
    for H in subgroup_base(fg):
        for coset in left_cosets(G, H):
            points[(H, coset)] = len(points)
    owner = {}
    for (H, coset), point in points.items():
        for x in coset:
            owner[(H, x)] = point
    images = []
    for g in G.elements:
        image = [0] * len(points)
        for (H, coset), point in points.items():
            x = min(coset)
            image[point] = owner[(H, G.mul[g][x])]
        images.append(tuple(image))

    perms = [Permutation(list(image)) for image in images]
    homomorphism_ok = all(perms[G.mul[g][h]] == perms[h] * perms[g]
                          for g in G.elements for h in G.elements)
    identity = tuple(range(len(points)))
    kernel = tuple(g for g in G.elements if images[g] == identity)
    report = EmbeddingReport(G.order, len(points), tuple(images), homomorphism_ok,
                             kernel == (0,), kernel)
    if not report.injective_ok:
        log.info("coset action has kernel %s", list(kernel))
    return report


# ----------------------------
# Chain metric
# ----------------------------

@dataclass(frozen=True, eq=False)
class SubgroupChain:
    group: FiniteGroup
    subgroups: tuple

    def __post_init__(self):
        chain = tuple(self.group.check_elements(H, f"Chain member {i}")
                      for i, H in enumerate(self.subgroups))
        if not chain or chain[0] != frozenset(self.group.elements):
            raise PreconditionError("A subgroup chain starts with the whole group")
        for i, H in enumerate(chain):
            if not self.group.is_subgroup(H):
                raise NonSubgroupBaseError(f"Chain member {i} is not a subgroup")
            if i and not H <= chain[i - 1]:
                raise PreconditionError(f"Chain member {i} is not contained in member {i - 1}")
        object.__setattr__(self, "subgroups", chain)


def na_metric_from_chain(chain, x, y):
    """d(x, y) = 2^-m with m the deepest level containing x*y^-1; 0 when x = y."""
    G = chain.group
    G.check_elements((x, y), "Metric argument")
    if x == y:
        return Fraction(0)
    z = G.mul[x][G.inv[y]]
    m = max(n for n, U in enumerate(chain.subgroups) if z in U)
    return Fraction(1, 2**m)


# ----------------------------
# Extension theorem
# ----------------------------

@dataclass(frozen=True)
class ExtensionTrace:
    U0: frozenset
    M: frozenset
    V: frozenset
    K: tuple
    W: frozenset
    H: frozenset
    checks: tuple

    def to_json(self):
        return {
            "U0": sorted(self.U0),
            "M": sorted(self.M),
            "V": sorted(self.V),
            "K": [sorted(coset) for coset in self.K],
            "W": sorted(self.W),
            "H": sorted(self.H),
            "checks": [[name, ok] for name, ok in self.checks],
        }


def _symmetric_pairs(group, S, exclude=frozenset()):
    pairs = {frozenset((s, group.inv[s])) for s in S if s not in exclude and s != 0}
    return sorted((tuple(sorted(p)) for p in pairs))


def _largest_symmetric(group, pairs, core, valid):
    """Greedy-maximal union of ``core`` with inverse pairs satisfying ``valid``."""
    for size in range(len(pairs), -1, -1):
        for choice in combinations(pairs, size):
            S = frozenset(core).union(*choice)
            if valid(S):
                return S
    return None


def _largest(sets):
    return max(sets, key=lambda S: (len(S), tuple(-x for x in sorted(S))))


def extension_open_subgroup(G, N, U):
    """
    Follow the extension theorem's construction of an open subgroup
    H inside U, every subgroup of the finite group being open.

    U0 is the largest symmetric set with U0^2 in U; M the largest
    subgroup of N inside U0; V the largest symmetric set with
    M <= V <= U0 and V^3 ∩ N <= M; K the largest subgroup of G/N inside
    the image of V; W = V ∩ π^-1(K) and H = <W>. Keeping M inside V
    makes WM a subgroup, so H <= WM <= U0^2 <= U.
    """
    N, U = G.check_elements(N, "N"), G.check_elements(U, "U")
    if not G.is_normal(N):
        raise PreconditionError("N must be a normal subgroup")
    if 0 not in U or G.inverse_set(U) != U:
        raise InvalidFilterError("U must be symmetric and contain the identity")
    if len(U) > EXTENSION_LIMIT:
        raise LimitExceededError(f"|U| = {len(U)} exceeds the search limit {EXTENSION_LIMIT}")

    U0 = _largest_symmetric(G, _symmetric_pairs(G, U), {0},
                            lambda S: G.product_set(S, S) <= U)
    M = _largest([H for H in subgroups(G) if H <= N & U0])

    def v_valid(S):
        return G.product_set(G.product_set(S, S), S) & N <= M

    V = _largest_symmetric(G, _symmetric_pairs(G, U0, exclude=M), M, v_valid)
    VN = G.product_set(V, N)
    L = _largest([H for H in subgroups(G) if N <= H <= VN])
    K = tuple(sorted((tuple(sorted(c)) for c in {G.product_set([x], N) for x in L})))
    W = V & L
    H = G.closure(W)
    WM = G.product_set(W, M)

    checks = (
        ("U0^2 in U", G.product_set(U0, U0) <= U),
        ("M subgroup of N inside U0", G.is_subgroup(M) and M <= N & U0),
        ("V^3 ∩ N in M", v_valid(V)),
        ("W^2 in WM", G.product_set(W, W) <= WM),
        ("H subgroup", G.is_subgroup(H)),
        ("H in WM", H <= WM),
        ("H in U", H <= U),
    )
    for name, ok in checks:
        if not ok:
            raise VerificationError(name, f"U = {sorted(U)}, N = {sorted(N)}")
    log.debug("extension: |U0|=%d |M|=%d |V|=%d |W|=%d |H|=%d", len(U0), len(M), len(V), len(W), len(H))
    return ExtensionTrace(U0, M, V, tuple(tuple(c) for c in K), W, H, checks)


# ----------------------------
# Product factorization
# ----------------------------

def _letter_word(group, letters, target):
    """
    Express ``target`` over the letters: a single-letter power when
    one exists (least letter, then least exponent), else a shortest
    word found breadth first.
    """
    if target == 0:
        return []
    for u in letters:
        x = 0
        for e in range(1, group.element_order(u)):
            x = group.mul[x][u]
            if x == target:
                return [u] * e
    parent = {0: None}
    queue = deque([0])
    while queue:
        x = queue.popleft()
        for u in letters:
            y = group.mul[x][u]
            if y not in parent:
                parent[y] = (x, u)
                if y == target:
                    word = []
                    while parent[y] is not None:
                        y, letter = parent[y]
                        word.append(letter)
                    return word[::-1]
                queue.append(y)
    raise NonGeneratingSetError(f"Element {target} is not reachable")


def product_ta_factorization(factors, J, U, g):
    """
    Split g = g' h_1 ... h_n in a product of groups.

    g' agrees with g outside J and is the identity on J; each h_k is
    the identity outside J and takes values in U_i on coordinate i in J.
    Words are padded with the identity to a common length.

    Example: Z/5 x Z/7, J = {0, 1}, U = {-1, 0, 1}, g = (3, 2)
    -> g' = (0, 0), h = [(1, 1), (1, 1), (1, 0)]
    """
    g = tuple(g)
    J = sorted(set(J))
    if len(g) != len(factors):
        raise PreconditionError(f"Element has {len(g)} coordinates for {len(factors)} factors")
    for i, (G, x) in enumerate(zip(factors, g)):
        G.check_elements((x,), f"Coordinate {i}")
    for i in J:
        if not 0 <= i < len(factors):
            raise PreconditionError(f"Index {i} in J is not a factor index (0..{len(factors) - 1})")
        if i not in U:
            raise PreconditionError(f"No neighborhood U_{i} given for index {i} in J")
    words = {}
    for i in J:
        G = factors[i]
        Ui = G.check_elements(U[i], f"U_{i}")
        if 0 not in Ui or G.inverse_set(Ui) != Ui:
            raise InvalidFilterError(f"U_{i} must be symmetric and contain the identity")
        if G.closure(Ui) != frozenset(G.elements):
            raise NonGeneratingSetError(f"U_{i} does not generate factor {i}")
        words[i] = _letter_word(G, sorted(Ui - {0}), g[i])

    n = max((len(w) for w in words.values()), default=0)
    g_prime = tuple(0 if i in words else x for i, x in enumerate(g))
    hs = []
    for k in range(n):
        hs.append(tuple(words[i][k] if i in words and k < len(words[i]) else 0
                        for i in range(len(factors))))

    total = list(g_prime)
    for h in hs:
        total = [factors[i].mul[total[i]][h[i]] for i in range(len(factors))]
    if tuple(total) != g:
        raise VerificationError("recomposition", f"{tuple(total)} != {g}")
    return g_prime, hs
