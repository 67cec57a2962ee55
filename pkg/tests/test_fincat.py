import random

import pytest

from gpdcentre.fincat import (
    CategoryError, FinCat, FinGroupoid, FinFunctor, SetFunctor, NatTrans,
    CatNatTrans, ProductCat, action_groupoid, build_groupoid,
    check_equivalence, compose_functors, coproduct, cyclic_group,
    delooping, derive_category, dihedral_group, empty_category,
    identity_functor, klein_four, opposite, product,
    representable_set_functor, symmetric_group, terminal_category,
    trivial_group)


# independent oracle: permutation multiplication written from scratch
def perm_mult(p, q):
    return tuple(p[q[i]] for i in range(len(p)))


def perms_lex(n):
    import itertools
    return sorted(itertools.permutations(range(n)))


def test_trivial_and_cyclic_counts():
    t = trivial_group()
    assert t.n_obj == 1 and t.n_mor == 1
    c1 = cyclic_group(1)
    assert c1.n_obj == 1 and c1.n_mor == 1
    c4 = cyclic_group(4)
    assert c4.n_mor == 4
    # oracle: addition mod 4
    for g in range(4):
        for f in range(4):
            assert c4.compose(g, f) == (g + f) % 4
    assert c4.inv == (0, 3, 2, 1)


def test_symmetric_group_against_oracle():
    s3 = symmetric_group(3)
    assert s3.n_obj == 1 and s3.n_mor == 6
    perms = perms_lex(3)
    assert s3.mor_labels == tuple(perms)
    for g in range(6):
        for f in range(6):
            assert perms[s3.compose(g, f)] == perm_mult(perms[g], perms[f])
    for f in range(6):
        assert perm_mult(perms[f], perms[s3.inv[f]]) == (0, 1, 2)
    # frozen spot values in lex order
    assert s3.compose(1, 2) == 4
    assert s3.compose(2, 1) == 3
    assert s3.idn == (0,)


def test_dihedral_relations():
    d4 = dihedral_group(4)
    assert d4.n_mor == 8
    r = d4.mor_labels.index((0, 1))
    s = d4.mor_labels.index((1, 0))
    # s r s = r^-1
    srs = d4.compose_many(s, r, s)
    assert srs == d4.inv[r]
    assert d4.compose(r, s) != d4.compose(s, r)
    # r has order 4, s has order 2
    assert d4.compose(r, r) != d4.idn[0]
    assert d4.compose_many(r, r, r, r) == d4.idn[0]
    assert d4.compose(s, s) == d4.idn[0]


def test_klein_all_involutions():
    k = klein_four()
    assert k.n_mor == 4
    for f in range(4):
        assert k.inv[f] == f


def test_delooping_and_bad_table():
    c3 = delooping([[0, 1, 2], [1, 2, 0], [2, 0, 1]])
    assert check_equivalence(c3, cyclic_group(3)).equivalent
    # non-associative table must be rejected with an explicit witness
    bad = [[0, 1, 2], [1, 2, 1], [2, 1, 1]]
    with pytest.raises(CategoryError) as err:
        delooping(bad)
    w = err.value.witness
    if isinstance(w, tuple) and len(w) == 3:
        h, g, f = w
        assert bad[bad[h][g]][f] != bad[h][bad[g][f]]


def test_validation_witnesses():
    # identity table points at a non-identity morphism
    with pytest.raises(CategoryError):
        FinCat(1, (0, 0), (0, 0), (1,), {0: 0, 1: 1, 2: 1, 3: 0})
    # missing composite
    with pytest.raises(CategoryError) as err:
        FinCat(1, (0,), (0,), (0,), {})
    assert err.value.witness == (0, 0)
    # composite on a non-composable pair
    two = {i * 2 + j: 0 for i in range(1) for j in range(1)}
    two[1] = 0
    with pytest.raises(CategoryError):
        FinCat(2, (0, 1), (0, 1), (0, 1), {0: 0, 3: 1, 1: 0})


def test_groupoid_requires_inverses():
    # two-element monoid {1, e} with e*e = e is not a groupoid
    with pytest.raises(CategoryError):
        FinGroupoid(1, (0, 0), (0, 0), (0,), {0: 0, 1: 1, 2: 1, 3: 1})


def test_product_counts_and_tables():
    s3 = symmetric_group(3)
    p = product(s3, s3)
    assert p.n_obj == 1 and p.n_mor == 36
    c2 = cyclic_group(2)
    q = product(c2, s3)
    # materialise and validate the lazy product
    comp = {}
    for g in range(q.n_mor):
        for f in range(q.n_mor):
            if q.is_composable(g, f):
                comp[g * q.n_mor + f] = q.compose(g, f)
    eager = FinCat(q.n_obj, [q.src_of(f) for f in range(q.n_mor)],
                   [q.tgt_of(f) for f in range(q.n_mor)],
                   [q.idn_of(x) for x in range(q.n_obj)], comp)
    assert eager == q
    # componentwise spot check
    g = q.mor_index((1, 4))
    f = q.mor_index((1, 2))
    assert q.compose(g, f) == q.mor_index((c2.compose(1, 1), s3.compose(4, 2)))


def test_product_strictness():
    a, b, c = cyclic_group(2), cyclic_group(3), klein_four()
    left = product(product(a, b), c)
    right = product(a, product(b, c))
    flat = product(a, b, c)
    assert isinstance(flat, ProductCat)
    assert left == flat and right == flat
    assert left.factors == flat.factors
    one = terminal_category()
    assert product(a, one) is a
    assert product(one, a) is a
    assert product(one, one) == one


def test_product_hom_row_major():
    c2 = cyclic_group(2)
    s3 = symmetric_group(3)
    q = product(c2, s3)
    h = q.hom(0, 0)
    assert h == tuple(q.mor_index((i, j)) for i in range(2) for j in range(6))


def test_product_words_evaluate():
    c2 = cyclic_group(2)
    s3 = symmetric_group(3)
    q = product(c2, s3)
    for f in range(q.n_mor):
        word = q.word_of(f)
        for g in word:
            assert g in q.generators()
        if q.is_identity(f):
            assert word == ()
        else:
            assert q.compose_many(*word) == f


def test_generators_generate():
    rng = random.Random(7)
    for G in [cyclic_group(6), symmetric_group(3), dihedral_group(4),
              klein_four(), action_groupoid(
                  symmetric_group(3),
                  [[p[x] for x in range(3)] for p in perms_lex(3)])]:
        gens = G.generators()
        for f in range(G.n_mor):
            word = G.word_of(f)
            assert all(g in gens for g in word)
            if word:
                assert G.compose_many(*word) == f
            else:
                assert G.is_identity(f)
        # random sanity: composing random words stays consistent
        for _ in range(20):
            f = rng.randrange(G.n_mor)
            g = rng.choice(G.hom(G.tgt_of(f), rng.randrange(G.n_obj)) or
                           (G.idn_of(G.tgt_of(f)),))
            gf = G.compose(g, f)
            assert G.word_of(gf) is not None


def test_opposite_involution():
    for C in [symmetric_group(3), coproduct(cyclic_group(2), cyclic_group(3))]:
        assert opposite(opposite(C)) == C
    d = dihedral_group(3)
    op = opposite(d)
    for g in range(d.n_mor):
        for f in range(d.n_mor):
            assert op.compose(g, f) == d.compose(f, g)


def test_coproduct_no_cross_homs():
    c = coproduct(cyclic_group(2), cyclic_group(2))
    assert c.n_obj == 2 and c.n_mor == 4
    assert c.hom(0, 1) == () and c.hom(1, 0) == ()
    assert len(c.hom(0, 0)) == 2 and len(c.hom(1, 1)) == 2
    assert c.obj_offsets == (0, 1, 2) and c.mor_offsets == (0, 2, 4)
    assert derive_category("coproduct", cyclic_group(2), cyclic_group(2)) == c


def test_action_groupoid_s3_on_points():
    s3 = symmetric_group(3)
    act = [[p[x] for x in range(3)] for p in perms_lex(3)]
    A = action_groupoid(s3, act)
    assert A.n_obj == 3 and A.n_mor == 18
    # stabiliser of a point has order 2
    assert len(A.hom(0, 0)) == 2
    assert len(A.hom(0, 1)) == 2
    res = check_equivalence(A, cyclic_group(2))
    assert res.equivalent


def test_empty_category_everywhere():
    e = empty_category()
    assert e.n_obj == 0 and e.n_mor == 0
    assert opposite(e) == e
    assert product(e, cyclic_group(2)).n_obj == 0
    assert coproduct(e, cyclic_group(2)) == cyclic_group(2)
    assert check_equivalence(e, e).equivalent
    assert not check_equivalence(e, trivial_group()).equivalent


def test_build_groupoid_shorthands():
    assert build_groupoid("cyclic:4") == cyclic_group(4)
    assert build_groupoid("symmetric:3") == symmetric_group(3)
    assert build_groupoid("dihedral:4") == dihedral_group(4)
    assert build_groupoid("klein") == klein_four()
    assert build_groupoid("trivial") == trivial_group()
    with pytest.raises(ValueError):
        build_groupoid("frobnicate:9")
    d = build_groupoid({"kind": "disjoint_union",
                        "groups": ["cyclic:2", "cyclic:2"]})
    assert d.n_obj == 2 and d.n_mor == 4


def test_functor_validation():
    c2 = cyclic_group(2)
    c4 = cyclic_group(4)
    # doubling embeds C2 into C4
    F = FinFunctor(c2, c4, [0], [0, 2])
    assert F.on_mor(1) == 2
    with pytest.raises(CategoryError):
        FinFunctor(c2, c4, [0], [0, 1])
    idf = identity_functor(c4)
    assert compose_functors(idf, F) == F


def test_set_functor_and_nat_trans():
    s3 = symmetric_group(3)
    Y = representable_set_functor(s3, 0)
    assert Y.size(0) == 6
    # left regular action is free
    for f in range(1, 6):
        assert all(Y.act[f][i] != i for i in range(6))
    # naturality: right translations are endomorphisms of Y
    for h in range(6):
        comps = [tuple(Y.sets[0].index(s3.compose(Y.sets[0][i], h))
                       for i in range(6))]
        NatTrans(Y, Y, comps)
    broken = [tuple([1, 0, 2, 3, 4, 5])]
    with pytest.raises(CategoryError):
        NatTrans(Y, Y, broken)


def test_check_equivalence_witnesses():
    s3 = symmetric_group(3)
    res = check_equivalence(s3, s3)
    assert res.equivalent
    w = res.witness
    assert w.eta.is_iso() and w.eps.is_iso()
    # contractible two-object groupoid is equivalent to the point
    two = FinGroupoid(
        2, (0, 1, 0, 1), (0, 1, 1, 0), (0, 1),
        {0: 0, 5: 1, 2 * 4 + 0: 2, 1 * 4 + 2: 2, 3 * 4 + 1: 3,
         0 * 4 + 3: 3, 3 * 4 + 2: 0, 2 * 4 + 3: 1})
    assert check_equivalence(two, trivial_group()).equivalent
    res = check_equivalence(cyclic_group(2), trivial_group())
    assert not res.equivalent
    assert res.reason == "hom-set cardinality profiles differ"
    # same size, non-isomorphic groups
    res = check_equivalence(cyclic_group(4), klein_four())
    assert not res.equivalent
    assert res.reason == "no isomorphism of skeletons found"
    # isomorphic but differently presented
    res = check_equivalence(klein_four(),
                            product(cyclic_group(2), cyclic_group(2)))
    assert res.equivalent


def test_check_equivalence_transitive_sample():
    a = coproduct(cyclic_group(3), cyclic_group(2))
    b = coproduct(cyclic_group(2), cyclic_group(3))
    c = coproduct(delooping([[0, 1, 2], [1, 2, 0], [2, 0, 1]]),
                  cyclic_group(2))
    ab = check_equivalence(a, b)
    bc = check_equivalence(b, c)
    ac = check_equivalence(a, c)
    assert ab.equivalent and bc.equivalent and ac.equivalent


def test_equivalence_respects_product_and_opposite():
    pairs = [(klein_four(), product(cyclic_group(2), cyclic_group(2))),
             (cyclic_group(3), delooping([[0, 1, 2], [1, 2, 0], [2, 0, 1]]))]
    e = cyclic_group(2)
    for c, d in pairs:
        assert check_equivalence(c, d).equivalent
        assert check_equivalence(opposite(c), opposite(d)).equivalent
        pc, pd = product(c, e), product(d, e)
        assert check_equivalence(pc, pd).equivalent


def test_random_relabelling_invariance():
    rng = random.Random(11)
    base = dihedral_group(4)
    for _ in range(5):
        perm = list(range(base.n_mor))
        ident = base.idn[0]
        rest = [i for i in perm if i != ident]
        rng.shuffle(rest)
        table = [ident] + rest
        pos = {m: i for i, m in enumerate(table)}
        # relabelled multiplication table oracle
        mult = [[pos[base.compose(table[i], table[j])]
                 for j in range(8)] for i in range(8)]
        g = delooping(mult)
        assert check_equivalence(g, base).equivalent
