from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import corpus_names, group_corpus, symmetric_sets
from topolab.errors import (InvalidFilterError, InvalidGroupError, LimitExceededError,
                            NonGeneratingSetError, NonSubgroupBaseError, PreconditionError,
                            SchemaError)
from topolab.finite_lab import (FilteredGroup, FiniteGroup, SubgroupChain, cyclic_group,
                                direct_product, extension_open_subgroup, filter_axioms,
                                left_cosets, maximal_chains, na_metric_from_chain,
                                open_subgroups, product_filtered, product_ta_factorization,
                                property_report, smog_coarsening, subgroups, sym_embedding)

# a loop of order 5 which is not a group: (1*1)*2 = 2 but 1*(1*2) = 4
LOOP5 = [
    [0, 1, 2, 3, 4],
    [1, 0, 3, 4, 2],
    [2, 4, 0, 1, 3],
    [3, 2, 4, 0, 1],
    [4, 3, 1, 2, 0],
]


def test_from_table_rejects_non_groups():
    with pytest.raises(InvalidGroupError, match="associative"):
        FiniteGroup.from_table(LOOP5)
    with pytest.raises(InvalidGroupError, match="permutation"):
        FiniteGroup.from_table([[0, 1], [1, 1]])
    with pytest.raises(InvalidGroupError, match="identity"):
        FiniteGroup.from_table([[1, 0], [0, 1]])
    with pytest.raises(InvalidGroupError):
        FiniteGroup.from_table([])


def test_group_from_json():
    G = FiniteGroup.from_json({"degree": 3, "generators": [[1, 0, 2], [1, 2, 0]]})
    assert G.order == 6 and not G.is_abelian()
    assert FiniteGroup.from_json(cyclic_group(5).to_json()).mul == cyclic_group(5).mul
    with pytest.raises(InvalidGroupError):
        FiniteGroup.from_json({"order": 4, "mul": cyclic_group(3).to_json()["mul"]})
    with pytest.raises(SchemaError):
        FiniteGroup.from_json({"generators": []})


def test_direct_product_indexing():
    G = direct_product(cyclic_group(2), cyclic_group(3))
    assert G.is_abelian()
    # (1, 1) sits at index 1*3 + 1
    assert G.element_order(4) == 6
    assert G.m(4, 4) == 0 * 3 + 2


@pytest.mark.parametrize("name, count", [
    ("trivial", 1), ("Z12", 6), ("S3", 6), ("D4", 10), ("Q8", 6), ("A4", 10),
    ("Z2^3", 16), ("S4", 30), ("Z2^4", 67),
])
def test_subgroup_counts(name, count):
    G = group_corpus()[name]
    found = subgroups(G)
    assert len(found) == count
    assert all(G.is_subgroup(H) for H in found)
    assert found[0] == frozenset([0]) and found[-1] == frozenset(G.elements)


def test_subgroup_lattice_is_kept_on_the_group():
    G = cyclic_group(12)
    assert subgroups(G) is subgroups(G)
    assert "subgroup_lattice" in vars(G)
    assert "subgroup_lattice" not in vars(cyclic_group(12))


def test_maximal_chains():
    assert len(maximal_chains(cyclic_group(4))) == 1
    assert len(maximal_chains(group_corpus()["S3"])) == 4


def test_filtered_group_validation(z4):
    with pytest.raises(InvalidFilterError, match="identity"):
        FilteredGroup(z4, ([1, 3],))
    with pytest.raises(InvalidFilterError, match="symmetric"):
        FilteredGroup(z4, ([0, 1],))
    with pytest.raises(InvalidFilterError):
        FilteredGroup(z4, ())
    with pytest.raises(InvalidFilterError, match="axioms"):
        FilteredGroup(z4, ([0, 1, 3],), require_group_topology=True)


def test_property_report_examples(z4):
    report = property_report(FilteredGroup(z4, ([0, 2], [0])))
    assert (report.hausdorff, report.tna, report.smog, report.ta) == (True, True, True, False)
    assert report.to_json()["openSubgroups"] == [[0], [0, 2], [0, 1, 2, 3]]

    report = property_report(FilteredGroup(z4, ([0, 1, 3],)))
    assert (report.hausdorff, report.tna, report.smog, report.ta) == (False, False, False, True)
    assert report.filter_axioms == {"square_shrinking": False, "conjugation_shrinking": True,
                                    "directed": True}


def test_smog_coarsening_and_products(z4):
    fg = FilteredGroup(z4, ([0, 1, 3],))
    assert property_report(smog_coarsening(fg)).ta

    discrete = FilteredGroup(cyclic_group(2), ([0],))
    indiscrete = FilteredGroup(cyclic_group(3), ([0, 1, 2],))
    combined = product_filtered([discrete, indiscrete])
    assert combined.base == (frozenset({0, 1, 2}),)
    report = property_report(combined)
    assert (report.hausdorff, report.tna, report.smog, report.ta) == (False, True, False, False)
    with pytest.raises(PreconditionError):
        product_filtered([])


@st.composite
def filtered_groups(draw, max_order=24):
    G = group_corpus()[draw(st.sampled_from(corpus_names(max_order)))]
    base = draw(st.lists(symmetric_sets(G), min_size=1, max_size=3))
    return FilteredGroup(G, tuple(base))


@settings(max_examples=1000)
@given(filtered_groups())
def test_property_report_implications(fg):
    report = property_report(fg)
    G = fg.group
    whole = frozenset(G.elements)
    assert report.ta == (list(report.open_subgroups) == [whole])
    if report.hausdorff and report.tna:
        assert report.smog
    if report.ta and report.smog:
        assert G.order == 1
    assert set(report.open_subgroups) == set(open_subgroups(smog_coarsening(fg)))
    axioms = filter_axioms(fg)
    assert set(axioms) == {"square_shrinking", "conjugation_shrinking", "directed"}


def _core(G, H):
    core = frozenset(G.elements)
    for g in G.elements:
        core &= frozenset(G.mul[G.mul[g][h]][G.inv[g]] for h in H)
    return core


@pytest.mark.parametrize("name", corpus_names(24))
def test_sym_embedding_over_all_subgroups(name):
    G = group_corpus()[name]
    fg = FilteredGroup(G, subgroups(G))
    report = sym_embedding(fg)
    assert report.accepted
    assert report.codomain_degree == sum(G.order // len(H) for H in subgroups(G))
    for image in report.images:
        assert sorted(image) == list(range(report.codomain_degree))


def test_sym_embedding_examples(z4):
    S3 = group_corpus()["S3"]
    A3 = next(H for H in subgroups(S3) if len(H) == 3)
    report = sym_embedding(FilteredGroup(S3, (A3, [0])))
    assert report.codomain_degree == 8 and report.accepted

    report = sym_embedding(FilteredGroup(z4, ([0, 2],)))
    assert report.codomain_degree == 2
    assert report.homomorphism_ok and not report.injective_ok
    assert report.kernel == (0, 2)
    assert report.to_json()["kernel"] == [0, 2]

    with pytest.raises(NonSubgroupBaseError):
        sym_embedding(FilteredGroup(z4, ([0, 1, 3],)))


@pytest.mark.parametrize("name", ["S3", "D4", "A4", "Q8"])
def test_sym_embedding_kernel_is_core(name):
    G = group_corpus()[name]
    for H in subgroups(G):
        report = sym_embedding(FilteredGroup(G, (H,)))
        assert frozenset(report.kernel) == _core(G, H)
        assert len(left_cosets(G, H)) == report.codomain_degree


@pytest.mark.parametrize("name", corpus_names(16))
def test_chain_metric(name):
    G = group_corpus()[name]
    n = G.order
    for chain in maximal_chains(G):
        d = [[na_metric_from_chain(chain, x, y) for y in G.elements] for x in G.elements]
        levels = {Fraction(1, 2**m) for m in range(len(chain.subgroups))}
        for x in G.elements:
            assert d[x][x] == 0
            for y in G.elements:
                assert d[x][y] == d[y][x]
                if x != y:
                    assert d[x][y] in levels
                # right invariance: (xg)(yg)^-1 = xy^-1
                assert all(d[G.m(x, g)][G.m(y, g)] == d[x][y] for g in G.elements)
                assert all(d[x][z] <= max(d[x][y], d[y][z]) for z in range(n))


def test_subgroup_chain_validation(z4):
    with pytest.raises(PreconditionError):
        SubgroupChain(z4, ([0, 2], [0]))
    with pytest.raises(NonSubgroupBaseError):
        SubgroupChain(z4, ([0, 1, 2, 3], [0, 1]))
    with pytest.raises(PreconditionError):
        SubgroupChain(z4, ([0, 1, 2, 3], [0], [0, 2]))
    with pytest.raises(PreconditionError, match="Chain member 1"):
        SubgroupChain(z4, ([0, 1, 2, 3], [0, 6], [0]))


def test_chain_metric_rejects_non_elements(z4):
    chain = SubgroupChain(z4, ([0, 1, 2, 3], [0, 2], [0]))
    with pytest.raises(PreconditionError):
        na_metric_from_chain(chain, 7, 0)
    with pytest.raises(PreconditionError):
        na_metric_from_chain(chain, 1, -1)


def test_extension_example():
    G = group_corpus()["Z2xZ2"]
    trace = extension_open_subgroup(G, {0, 2}, {0, 2})
    assert trace.H == frozenset({0, 2})
    assert trace.M == frozenset({0, 2})
    assert all(ok for _, ok in trace.checks)
    assert trace.to_json()["H"] == [0, 2]


def test_extension_preconditions():
    S3 = group_corpus()["S3"]
    C2 = next(H for H in subgroups(S3) if len(H) == 2)
    with pytest.raises(PreconditionError):
        extension_open_subgroup(S3, C2, {0})
    with pytest.raises(InvalidFilterError):
        extension_open_subgroup(cyclic_group(4), {0}, {0, 1})
    with pytest.raises(PreconditionError):
        extension_open_subgroup(cyclic_group(4), {0, 2}, {0, 5})
    S4 = group_corpus()["S4"]
    with pytest.raises(LimitExceededError):
        extension_open_subgroup(S4, {0}, S4.elements)


@st.composite
def extension_cases(draw):
    G = group_corpus()[draw(st.sampled_from(corpus_names(16)))]
    normal = [H for H in subgroups(G) if G.is_normal(H)]
    N = draw(st.sampled_from(normal))
    U = draw(symmetric_sets(G, max_size=5))
    return G, N, U


@settings(max_examples=200)
@given(extension_cases())
def test_extension_open_subgroup(case):
    G, N, U = case
    trace = extension_open_subgroup(G, N, U)
    assert G.is_subgroup(trace.H)
    assert trace.H <= U
    assert G.product_set(trace.U0, trace.U0) <= U
    assert trace.M <= N
    assert trace.M <= trace.V <= trace.U0
    assert dict(trace.checks)["W^2 in WM"]
    assert G.product_set(trace.W, trace.W) <= G.product_set(trace.W, trace.M)


def test_factorization_example():
    factors = [cyclic_group(5), cyclic_group(7)]
    g_prime, hs = product_ta_factorization(factors, [0, 1], {0: [4, 0, 1], 1: [6, 0, 1]}, (3, 2))
    assert g_prime == (0, 0)
    assert hs == [(1, 1), (1, 1), (1, 0)]


def test_factorization_errors():
    factors = [cyclic_group(4), cyclic_group(5)]
    with pytest.raises(NonGeneratingSetError):
        product_ta_factorization(factors, [0], {0: [0, 2]}, (1, 1))
    with pytest.raises(InvalidFilterError):
        product_ta_factorization(factors, [1], {1: [0, 1]}, (1, 1))
    with pytest.raises(PreconditionError):
        product_ta_factorization(factors, [0], {0: [0, 1, 3]}, (1,))
    with pytest.raises(PreconditionError, match="No neighborhood U_1"):
        product_ta_factorization(factors, [0, 1], {0: [0, 1, 3]}, (1, 1))
    with pytest.raises(PreconditionError, match="not a factor index"):
        product_ta_factorization(factors, [2], {2: [0, 1, 3]}, (1, 1))
    with pytest.raises(PreconditionError, match="U_0"):
        product_ta_factorization(factors, [0], {0: [0, 1, 7]}, (1, 1))
    with pytest.raises(PreconditionError, match="Coordinate 1"):
        product_ta_factorization(factors, [0], {0: [0, 1, 3]}, (1, 5))


@st.composite
def factorization_cases(draw):
    orders = draw(st.sampled_from([(5, 7), (4, 6)]))
    factors = [cyclic_group(n) for n in orders]
    J = draw(st.sets(st.sampled_from([0, 1]), min_size=1))
    U = {}
    for i in J:
        G = factors[i]
        U[i] = draw(symmetric_sets(G).filter(lambda S, G=G: G.closure(S) == frozenset(G.elements)))
    g = tuple(draw(st.integers(0, n - 1)) for n in orders)
    return factors, J, U, g


@settings(max_examples=200)
@given(factorization_cases())
def test_factorization(case):
    factors, J, U, g = case
    g_prime, hs = product_ta_factorization(factors, J, U, g)
    for i in range(len(factors)):
        if i in J:
            assert g_prime[i] == 0
            assert all(h[i] in U[i] for h in hs)
        else:
            assert g_prime[i] == g[i]
            assert all(h[i] == 0 for h in hs)
    total = list(g_prime)
    for h in hs:
        total = [factors[i].m(total[i], h[i]) for i in range(len(factors))]
    assert tuple(total) == g


@pytest.mark.parametrize("orders", [(5, 7), (4, 6)])
def test_factorization_with_unit_steps(orders):
    factors = [cyclic_group(n) for n in orders]
    U = {i: [0, 1, n - 1] for i, n in enumerate(orders)}
    elements = [(a, b) for a in range(orders[0]) for b in range(orders[1])]
    for J, g in product([[0], [1], [0, 1]], elements):
        g_prime, hs = product_ta_factorization(factors, J, U, g)
        total = list(g_prime)
        for h in hs:
            total = [factors[i].m(total[i], h[i]) for i in range(2)]
        assert tuple(total) == g


def test_products_preserve_properties(z4):
    tna = FilteredGroup(z4, ([0, 2], [0]))
    ta = FilteredGroup(cyclic_group(3), ([0, 1, 2],))
    assert property_report(product_filtered([tna, tna])).tna
    assert property_report(product_filtered([tna, tna])).smog
    assert property_report(product_filtered([ta, ta])).ta
    mixed = property_report(product_filtered([tna, ta]))
    assert not mixed.smog and not mixed.ta
