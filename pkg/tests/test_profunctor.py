import random

import pytest

from gpdcentre.fincat import CategoryError, FinFunctor, check_equivalence, \
    cyclic_group, klein_four, product, representable_set_functor, \
    symmetric_group, terminal_category
from gpdcentre.profunctor import Composition, ModuleMorphism, \
    associator, collapse_identity_left, collapse_identity_right, \
    compose_modules, empty_module, functor_to_modules, hcomp, \
    identity_module, identity_morphism, interchanger, karoubi, \
    module_from_set_functor, set_functor_from_module, \
    splits_all_idempotents, tensor, validate_module
from gpdcentre.randomgen import category_pool, free_bimodule, \
    permuted_category, random_free_bimodule, random_module_map, \
    square_poset, transported_module, walking_arrow
from gpdcentre.unionfind import UnionFind


def oracle_coend(M, N):
    """Brute-force coend classes using relations over every middle morphism.

    Independent of Composition: own pair enumeration, no generator shortcut.
    """
    B = M.cod
    pairs = []
    index = {}
    for m in range(M.total):
        b = M.ba_of(m)[0]
        for n in range(N.total):
            if N.ba_of(n)[1] == b:
                index[(m, n)] = len(pairs)
                pairs.append((m, n))
    uf = UnionFind(len(pairs))
    for beta in range(B.n_mor):
        b_src, b_tgt = B.src_of(beta), B.tgt_of(beta)
        for m2 in range(M.total):
            if M.ba_of(m2)[0] != b_tgt:
                continue
            lm = M.lapply(beta, m2)
            for n in range(N.total):
                if N.ba_of(n)[1] != b_src:
                    continue
                uf.union(index[(lm, n)], index[(m2, N.rapply(beta, n))])
    groups = {}
    for k, (m, n) in enumerate(pairs):
        groups.setdefault(uf.find(k), []).append((m, n))
    return list(groups.values())


def seeded_modules(seed, count, max_tokens=2):
    rng = random.Random(seed)
    pool = category_pool()
    out = []
    for i in range(count):
        A = pool[rng.randrange(len(pool))][1]
        B = pool[rng.randrange(len(pool))][1]
        C = pool[rng.randrange(len(pool))][1]
        M = random_free_bimodule(A, B, rng, max_tokens)
        N = random_free_bimodule(B, C, rng, max_tokens)
        out.append((A, B, C, M, N, rng))
    return out


def test_identity_module_structure():
    for name, C in category_pool():
        one = identity_module(C)
        assert one.total == C.n_mor
        for b in range(C.n_obj):
            for a in range(C.n_obj):
                assert one.block_size(b, a) == len(C.hom(b, a))
        validate_module(one)


def test_free_bimodule_formula_validation():
    rng = random.Random(7)
    for name, C in [("S3", symmetric_group(3)), ("arrow", walking_arrow()),
                    ("square", square_poset())]:
        M = free_bimodule(C, C, [(0, 0), (C.n_obj - 1, 0)], validate=True)
        assert M.total > 0


def test_validate_catches_corruption():
    C = cyclic_group(4)
    one = identity_module(C)
    g = C.generators()[0]
    table = dict(one.lgen[g])
    ks = sorted(table)
    table[ks[0]], table[ks[1]] = table[ks[1]], table[ks[0]]
    bad = identity_module(C)
    bad.lgen[g] = table
    with pytest.raises(CategoryError):
        validate_module(bad)


def test_compose_identity_class_counts():
    for name, C in category_pool():
        comp = compose_modules(identity_module(C), identity_module(C))
        assert comp.total == C.n_mor, name


def test_unit_collapse_cells():
    rng = random.Random(11)
    for name, C in category_pool():
        for _ in range(2):
            M = random_free_bimodule(C, C, rng)
            one_d = identity_module(M.dom)
            one_c = identity_module(M.cod)
            cl = compose_modules(one_d, M)
            lam = collapse_identity_left(cl, M)
            assert lam.is_iso()
            assert lam.inverse(validate=True).then(lam) == \
                identity_morphism(M)
            cr = compose_modules(M, one_c)
            rho = collapse_identity_right(cr, M)
            assert rho.is_iso()
            assert rho.then(rho.inverse()).comps == \
                identity_morphism(cr).comps


def test_coend_matches_oracle():
    for A, B, C, M, N, rng in seeded_modules(23, 8):
        comp = compose_modules(M, N)
        groups = oracle_coend(M, N)
        assert comp.total == len(groups)
        for g in groups:
            classes = {comp.pair_class(m, n) for m, n in g}
            assert len(classes) == 1
            cls = classes.pop()
            b, m, n = comp.labels[cls]
            assert (m, n) == min(g)
        # block sizes agree with the oracle partition
        by_block = {}
        for g in groups:
            m, n = g[0]
            key = (N.ba_of(n)[0], M.ba_of(m)[1])
            by_block[key] = by_block.get(key, 0) + 1
        for (c, a), k in by_block.items():
            assert comp.block_size(c, a) == k
        validate_module(comp)


def test_coend_relations_hold():
    for A, B, C, M, N, rng in seeded_modules(31, 4):
        comp = compose_modules(M, N)
        for beta in range(B.n_mor):
            b_src, b_tgt = B.src_of(beta), B.tgt_of(beta)
            for m2 in range(M.total):
                if M.ba_of(m2)[0] != b_tgt:
                    continue
                for n in range(N.total):
                    if N.ba_of(n)[1] != b_src:
                        continue
                    assert comp.pair_class(M.lapply(beta, m2), n) == \
                        comp.pair_class(m2, N.rapply(beta, n))


def test_associator_is_natural_iso():
    rng = random.Random(5)
    pool = category_pool()
    for trial in range(10):
        A = pool[rng.randrange(len(pool))][1]
        B = pool[rng.randrange(len(pool))][1]
        C = pool[rng.randrange(len(pool))][1]
        D = pool[rng.randrange(len(pool))][1]
        M1 = random_free_bimodule(A, B, rng, 2)
        M2 = random_free_bimodule(B, C, rng, 2)
        M3 = random_free_bimodule(C, D, rng, 2)
        s1 = random_module_map(M1, rng)
        s2 = random_module_map(M2, rng)
        s3 = random_module_map(M3, rng)
        c12 = compose_modules(M1, M2)
        c23 = compose_modules(M2, M3)
        left = compose_modules(c12, M3)
        right = compose_modules(M1, c23)
        alpha = associator(left, right, c12, c23)
        c12_ = compose_modules(s1.target, s2.target)
        c23_ = compose_modules(s2.target, s3.target)
        left_ = compose_modules(c12_, s3.target)
        right_ = compose_modules(s1.target, c23_)
        alpha_ = associator(left_, right_, c12_, c23_)
        h12 = hcomp(s1, s2, c12, c12_)
        h_left = hcomp(h12, s3, left, left_)
        h23 = hcomp(s2, s3, c23, c23_)
        h_right = hcomp(s1, h23, right, right_)
        assert h_left.then(alpha_) == alpha.then(h_right)


def test_tensor_strictness():
    A = cyclic_group(2)
    B = symmetric_group(3)
    C = walking_arrow()
    assert tensor(identity_module(A), identity_module(B)) == \
        identity_module(product(A, B))
    rng = random.Random(3)
    M1 = random_free_bimodule(A, A, rng)
    M2 = random_free_bimodule(B, B, rng)
    M3 = random_free_bimodule(C, C, rng)
    t = tensor(tensor(M1, M2), M3)
    t2 = tensor(M1, M2, M3)
    assert t == t2 and t.labels == t2.labels
    unit = identity_module(terminal_category())
    assert tensor(M1, unit) is M1
    assert tensor(unit, unit) == unit


def test_tensor_componentwise_actions():
    rng = random.Random(9)
    A = cyclic_group(4)
    B = klein_four()
    M1 = random_free_bimodule(A, A, rng)
    M2 = random_free_bimodule(B, B, rng)
    t = tensor(M1, M2)
    P = t.cod
    validate_module(t)
    for beta in range(0, P.n_mor, 3):
        parts = P.mor_tuple(beta)
        for e in list(t.cod_elements_tuple(
                [A.tgt_of(parts[0]), B.tgt_of(parts[1])]))[::5]:
            x1, x2 = t.labels[e]
            y = t.lapply(beta, e)
            assert t.labels[y] == (M1.lapply(parts[0], x1),
                                   M2.lapply(parts[1], x2))


def test_tensor_with_terminal_cod_factor():
    A = symmetric_group(3)
    F = representable_set_functor(A, 0)
    MF = module_from_set_functor(F)
    one = identity_module(A)
    t = tensor(MF, one)
    assert t.cod == A and t.dom == product(A, A)
    validate_module(t)
    assert set_functor_from_module(MF) == F


def test_interchanger_iso():
    rng = random.Random(17)
    A = cyclic_group(2)
    B = walking_arrow()
    C = cyclic_group(2)
    for trial in range(3):
        M1 = random_free_bimodule(A, B, rng)
        N1 = random_free_bimodule(B, C, rng)
        M2 = random_free_bimodule(B, A, rng)
        N2 = random_free_bimodule(A, B, rng)
        c1 = compose_modules(M1, N1)
        c2 = compose_modules(M2, N2)
        toc = tensor(c1, c2)
        cot = compose_modules(tensor(M1, M2), tensor(N1, N2))
        chi = interchanger(toc, cot)
        assert chi.is_iso()


def test_hcomp_functorial():
    rng = random.Random(29)
    A = klein_four()
    M = random_free_bimodule(A, A, rng)
    N = random_free_bimodule(A, A, rng)
    comp = compose_modules(M, N)
    assert hcomp(identity_morphism(M), identity_morphism(N), comp, comp) == \
        identity_morphism(comp)
    s1 = random_module_map(M, rng)
    s2 = random_module_map(N, rng)
    t1 = random_module_map(s1.target, rng)
    t2 = random_module_map(s2.target, rng)
    mid = compose_modules(s1.target, s2.target)
    out = compose_modules(t1.target, t2.target)
    lhs = hcomp(s1.then(t1), s2.then(t2), comp, out)
    rhs = hcomp(s1, s2, comp, mid).then(hcomp(t1, t2, mid, out))
    assert lhs == rhs


def test_adjunction_triangles():
    s3 = symmetric_group(3)
    c2 = cyclic_group(2)
    c4 = cyclic_group(4)
    arrow = walking_arrow()
    cases = [
        FinFunctor(c2, s3, [0], [0, 2]),          # transposition inclusion
        FinFunctor(s3, c2, [0], [0, 1, 1, 0, 0, 1]),  # parity
        FinFunctor(c2, c4, [0], [0, 2]),          # doubling
        FinFunctor(arrow, c2, [0, 0], [0, 0, 1]),
    ]
    for F in cases:
        L, R, adj = functor_to_modules(F, validate=True)
        assert adj.unit.source.total == F.dom.n_mor


def test_karoubi_idempotent_monoid():
    from gpdcentre.fincat import FinCat
    mon = FinCat(1, (0, 0), (0, 0), (0,), {0: 0, 1: 1, 2: 1, 3: 1})
    assert not splits_all_idempotents(mon)
    Q, N = karoubi(mon)
    assert Q.n_obj == 2 and Q.n_mor == 5
    assert splits_all_idempotents(Q)
    # the embedding is fully faithful
    for x in range(mon.n_obj):
        for y in range(mon.n_obj):
            imgs = {N.on_mor(f) for f in mon.hom(x, y)}
            assert len(imgs) == len(mon.hom(x, y))
            assert imgs == set(Q.hom(N.on_obj(x), N.on_obj(y)))


def test_karoubi_of_groupoid_adds_nothing():
    for C in [symmetric_group(3), klein_four(), square_poset()]:
        Q, N = karoubi(C)
        assert Q.n_obj == C.n_obj
        assert check_equivalence(Q, C).equivalent


def test_empty_module_composes():
    A = cyclic_group(2)
    B = symmetric_group(3)
    E = empty_module(A, B)
    M = free_bimodule(B, A, [(0, 0)])
    c = compose_modules(E, M)
    assert c.total == 0
    c2 = compose_modules(M, E)
    assert isinstance(c2, Composition) and c2.total == 0
    assert tensor(E, identity_module(A)).total == 0


def test_relabelling_invariance():
    rng = random.Random(41)
    base = seeded_modules(43, 3)
    for A, B, C, M, N, _ in base:
        comp = compose_modules(M, N)
        for _ in range(4):
            A2, opa, mpa = permuted_category(A, rng)
            B2, opb, mpb = permuted_category(B, rng)
            C2, opc, mpc = permuted_category(C, rng)
            M2 = transported_module(M, A2, B2, opa, mpa, opb, mpb)
            N2 = transported_module(N, B2, C2, opb, mpb, opc, mpc)
            comp2 = compose_modules(M2, N2)
            assert comp2.total == comp.total
            for c in range(C.n_obj):
                for a in range(A.n_obj):
                    assert comp2.block_size(opc[c], opa[a]) == \
                        comp.block_size(c, a)
