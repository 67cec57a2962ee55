import random

from gpdcentre.dayconv import (
    Promonoidal,
    TensorFamily,
    cartesian_promonoidal,
    check_promonoidal,
    convolve,
    convolve_unit_left,
    convolve_unit_right,
    day_pointwise_iso,
    pointwise_product,
)
from gpdcentre.dayconv import _cartesian_assoc, _cartesian_lunit, _cartesian_runit
from gpdcentre.fincat import (
    CategoryError,
    coproduct,
    cyclic_group,
    klein_four,
    symmetric_group,
    trivial_group,
)
from gpdcentre.profunctor import ModuleMorphism
from gpdcentre.randomgen import (
    coset_set_functor,
    empty_set_functor,
    random_set_functor,
    relabelled_set_functor,
    square_poset,
    subgroup_closure,
    union_set_functors,
    walking_arrow,
)
from gpdcentre.unionfind import UnionFind


# ---------------------------------------------------------------- oracle

def oracle_day_sizes(A, F, G):
    """Sizes of the convolution computed from scratch.

    Quotients the raw tuples (u: p -> c, v: q -> c, i in Fp, j in Gq)
    by the relations generated by every pair of morphisms, not just
    generators, with its own union-find pass per output object.
    """
    sizes = []
    for c in range(A.n_obj):
        raw = []
        for p in range(A.n_obj):
            for q in range(A.n_obj):
                for u in A.hom(p, c):
                    for v in A.hom(q, c):
                        for i in range(F.size(p)):
                            for j in range(G.size(q)):
                                raw.append((u, v, i, j))
        index = {t: k for k, t in enumerate(raw)}
        uf = UnionFind(len(raw))
        for b1 in range(A.n_mor):
            p0, p1 = A.src_of(b1), A.tgt_of(b1)
            for b2 in range(A.n_mor):
                q0, q1 = A.src_of(b2), A.tgt_of(b2)
                for u in A.hom(p1, c):
                    for v in A.hom(q1, c):
                        for i in range(F.size(p0)):
                            for j in range(G.size(q0)):
                                lhs = (A.compose(u, b1), A.compose(v, b2), i, j)
                                rhs = (u, v, F.act[b1][i], G.act[b2][j])
                                uf.union(index[lhs], index[rhs])
        sizes.append(len({uf.find(k) for k in range(len(raw))}))
    return sizes


def test_oracle_sanity_regular_orbit():
    # regular orbit against itself over C2: pointwise sizes 2 * 2
    c2 = cyclic_group(2)
    F = coset_set_functor(c2, 0, (c2.idn_of(0),))
    assert oracle_day_sizes(c2, F, F) == [4]


# ----------------------------------------------------- frozen pairing sizes

def test_pairing_sizes_frozen():
    assert cartesian_promonoidal(trivial_group()).P.total == 1
    assert cartesian_promonoidal(cyclic_group(2)).P.total == 4
    assert cartesian_promonoidal(symmetric_group(3)).P.total == 36
    assert cartesian_promonoidal(walking_arrow()).P.total == 5
    # two isolated points: pairing nonempty only on the diagonal
    disc = coproduct(trivial_group(), trivial_group())
    assert cartesian_promonoidal(disc).P.total == 2


def test_unit_sizes():
    pr = cartesian_promonoidal(symmetric_group(3))
    assert pr.J.total == 1
    pr = cartesian_promonoidal(square_poset())
    assert pr.J.total == 4


# ----------------------------------------------------------- deep coherence

def test_constructor_runs_coherence_on_small_bases():
    for g in (trivial_group(), cyclic_group(2), cyclic_group(4),
              klein_four(), walking_arrow()):
        pr = cartesian_promonoidal(g)
        assert pr.deep_checked


def test_s3_deep_coherence():
    pr = cartesian_promonoidal(symmetric_group(3))
    assert not pr.deep_checked
    rep = check_promonoidal(pr, deep=True)
    assert rep.passed, rep.to_text()


def test_square_poset_deep_coherence():
    rep = check_promonoidal(cartesian_promonoidal(square_poset()), deep=True)
    assert rep.passed, rep.to_text()


def test_shallow_report_skips_coherence():
    pr = cartesian_promonoidal(symmetric_group(3))
    rep = check_promonoidal(pr, deep=False)
    assert rep.passed
    ids = {e["check_id"]: e["status"] for e in rep.entries}
    assert ids["pentagon"] == "skipped"
    assert ids["triangle"] == "skipped"


def test_corrupted_associator_fails_pentagon():
    # swapping two components of the associator must break the pentagon
    A = cyclic_group(2)
    base = cartesian_promonoidal(A).family

    def corrupt(i, j):
        def build(fam, a, b, c, XL, XR):
            cell = _cartesian_assoc(fam, a, b, c, XL, XR)
            comps = list(cell.comps)
            comps[i], comps[j] = comps[j], comps[i]
            return ModuleMorphism(cell.source, cell.target, comps,
                                  validate=False)
        return build

    n = base.assoc(0, 0, 0).source.total
    assert n >= 2
    found = False
    for i in range(n):
        for j in range(i + 1, n):
            fam = TensorFamily(
                grades=(0,), mult=lambda x, y: 0, unit=0,
                cat_of=lambda x: A,
                p_builder=lambda f, x, y: base.P(0, 0),
                j_builder=lambda f, x: base.J(0),
                assoc_builder=corrupt(i, j),
                lunit_builder=_cartesian_lunit,
                runit_builder=_cartesian_runit)
            ok, wit = fam.pentagon(0, 0, 0, 0)
            if not ok:
                assert wit["two_step"] != wit["three_step"]
                found = True
    assert found


# ------------------------------------------------- convolution vs oracle

def test_convolution_matches_oracle_seeded():
    cases = [(cyclic_group(2), 6), (cyclic_group(4), 4),
             (klein_four(), 4), (symmetric_group(3), 3)]
    for g, n_seeds in cases:
        pr = cartesian_promonoidal(g)
        for seed in range(n_seeds):
            rng = random.Random(10 * seed + 1)
            F = random_set_functor(g, rng, max_size=4)
            G = random_set_functor(g, rng, max_size=4)
            H = convolve(pr, F, G)
            got = [H.size(c) for c in range(g.n_obj)]
            assert got == oracle_day_sizes(g, F, G), (seed, got)


def test_convolution_two_by_three_frozen():
    c2 = cyclic_group(2)
    pr = cartesian_promonoidal(c2)
    F = coset_set_functor(c2, 0, (c2.idn_of(0),))          # 2 elements
    full = subgroup_closure(c2, 0, tuple(range(c2.n_mor)))
    G = union_set_functors([coset_set_functor(c2, 0, (c2.idn_of(0),)),
                            coset_set_functor(c2, 0, full)], c2)
    assert F.size(0) == 2 and G.size(0) == 3
    H = convolve(pr, F, G)
    assert H.size(0) == 6
    assert oracle_day_sizes(c2, F, G) == [6]


def test_convolution_with_empty_factor():
    c2 = cyclic_group(2)
    pr = cartesian_promonoidal(c2)
    E = empty_set_functor(c2)
    G = coset_set_functor(c2, 0, (c2.idn_of(0),))
    assert convolve(pr, E, G).size(0) == 0
    assert convolve(pr, G, E).size(0) == 0


def test_convolve_rejects_wrong_category():
    pr = cartesian_promonoidal(cyclic_group(2))
    F = coset_set_functor(cyclic_group(4), 0, (0,))
    try:
        convolve(pr, F, F)
    except CategoryError:
        pass
    else:
        raise AssertionError("expected a CategoryError")


# ------------------------------------------------ pointwise comparison

def test_day_vs_pointwise_iso_seeded():
    for g, n_seeds in [(cyclic_group(2), 8), (symmetric_group(3), 8)]:
        pr = cartesian_promonoidal(g)
        for seed in range(n_seeds):
            rng = random.Random(100 + seed)
            F = random_set_functor(g, rng, max_size=4)
            G = random_set_functor(g, rng, max_size=4)
            fwd, inv = day_pointwise_iso(pr, F, G)
            pw = pointwise_product(F, G)
            assert fwd.target.sets == pw.sets
            assert fwd.target.act == pw.act
            for c in range(g.n_obj):
                assert sorted(fwd.comps[c]) == list(range(pw.size(c)))
                for e in range(pw.size(c)):
                    assert fwd.comps[c][inv.comps[c][e]] == e


def test_day_vs_pointwise_on_poset():
    cat = square_poset()
    pr = cartesian_promonoidal(cat)
    F = coset_set_functor(cat, 0, (cat.idn_of(0),))
    G = coset_set_functor(cat, 1, (cat.idn_of(1),))
    fwd, inv = day_pointwise_iso(pr, F, G)
    H = fwd.source
    assert [H.size(c) for c in range(cat.n_obj)] == \
        [F.size(c) * G.size(c) for c in range(cat.n_obj)]


# ------------------------------------------------------------- unit laws

def test_convolution_unit_laws():
    for g in (cyclic_group(2), symmetric_group(3), walking_arrow()):
        pr = cartesian_promonoidal(g)
        for seed in range(4):
            rng = random.Random(1000 + seed)
            F = random_set_functor(g, rng, max_size=4)
            lam = convolve_unit_left(pr, F)
            rho = convolve_unit_right(pr, F)
            assert lam.target.sets == F.sets
            assert rho.target.sets == F.sets
            for c in range(g.n_obj):
                assert sorted(lam.comps[c]) == list(range(F.size(c)))
                assert sorted(rho.comps[c]) == list(range(F.size(c)))


# ----------------------------------------------------- relabel invariance

def test_convolution_size_relabel_invariant():
    g = symmetric_group(3)
    pr = cartesian_promonoidal(g)
    rng = random.Random(42)
    F = random_set_functor(g, rng, max_size=4)
    G = random_set_functor(g, rng, max_size=4)
    base = [convolve(pr, F, G).size(c) for c in range(g.n_obj)]
    for seed in range(10):
        rr = random.Random(seed)
        F2, _ = relabelled_set_functor(F, rr)
        G2, _ = relabelled_set_functor(G, rr)
        got = [convolve(pr, F2, G2).size(c) for c in range(g.n_obj)]
        assert got == base
