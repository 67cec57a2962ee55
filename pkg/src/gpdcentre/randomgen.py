"""Seeded random instances shared by the test suite and the CLI self-checks."""

from .fincat import FinCat, SetFunctor, action_groupoid, coproduct, \
    cyclic_group, klein_four, symmetric_group
from .profunctor import ModuleMorphism, module_from_blocks


def walking_arrow():
    """Two objects, one non-identity morphism between them."""
    return FinCat(2, (0, 1, 0), (0, 1, 1), (0, 1),
                  {0: 0, 4: 1, 2 * 3 + 0: 2, 1 * 3 + 2: 2})


def square_poset():
    """The poset category on the 2x2 grid of subsets of a 2-element set."""
    objs = list(range(4))  # bitmasks
    mors = [(x, y) for x in objs for y in objs if x & y == x]
    mors.sort()
    idx = {m: k for k, m in enumerate(mors)}
    src = [x for x, y in mors]
    tgt = [y for x, y in mors]
    idn = [idx[(x, x)] for x in objs]
    comp = {}
    for g_k, (y2, z) in enumerate(mors):
        for f_k, (x, y) in enumerate(mors):
            if y == y2:
                comp[g_k * len(mors) + f_k] = idx[(x, z)]
    return FinCat(4, src, tgt, idn, comp, mor_labels=tuple(mors))


def category_pool():
    """Small categories (≤ 4 objects, ≤ 24 morphisms), groupoids and not."""
    return [
        ("C2", cyclic_group(2)),
        ("C4", cyclic_group(4)),
        ("S3", symmetric_group(3)),
        ("klein", klein_four()),
        ("arrow", walking_arrow()),
        ("square", square_poset()),
        ("C2+C3", coproduct(cyclic_group(2), cyclic_group(3))),
        ("swap", action_groupoid(cyclic_group(2), [[0, 1], [1, 0]])),
    ]


def free_bimodule(A, B, tokens, validate=False):
    """Module generated freely by one element per token (b0, a0).

    Elements of the (b, a) block are triples (f, i, h) with f: b -> b0 in B
    and h: a0 -> a in A; both actions are composition.
    """
    tokens = tuple(tokens)

    def block(b, a):
        out = []
        for i, (b0, a0) in enumerate(tokens):
            for f in B.hom(b, b0):
                for h in A.hom(a0, a):
                    out.append((f, i, h))
        return out

    M = module_from_blocks(
        A, B, block,
        lambda beta, b, a, lab: (B.compose(lab[0], beta), lab[1], lab[2]),
        lambda alpha, b, a, lab: (lab[0], lab[1], A.compose(alpha, lab[2])),
        validate=validate)
    M.tokens = tokens
    return M


def random_free_bimodule(A, B, rng, max_tokens=3):
    k = rng.randint(1, max_tokens)
    tokens = [(rng.randrange(B.n_obj), rng.randrange(A.n_obj))
              for _ in range(k)]
    return free_bimodule(A, B, tokens)


def random_module_map(M, rng, extra_tokens=1):
    """A random 2-cell out of a free bimodule, fixed on token basepoints."""
    A, B = M.dom, M.cod
    tokens2 = list(M.tokens)
    for _ in range(rng.randint(0, extra_tokens)):
        tokens2.append((rng.randrange(B.n_obj), rng.randrange(A.n_obj)))
    M2 = free_bimodule(A, B, tokens2)
    chosen = [rng.choice(M2.block_range(b0, a0)) for b0, a0 in M.tokens]
    comps = []
    for e in range(M.total):
        f, i, h = M.labels[e]
        comps.append(M2.rapply(h, M2.lapply(f, chosen[i])))
    return ModuleMorphism(M, M2, comps, validate=True)


def permuted_category(C, rng):
    """Conjugate all tables of C by random object and morphism bijections."""
    op = list(range(C.n_obj))
    rng.shuffle(op)
    mp = list(range(C.n_mor))
    rng.shuffle(mp)
    src = [0] * C.n_mor
    tgt = [0] * C.n_mor
    for f in range(C.n_mor):
        src[mp[f]] = op[C.src_of(f)]
        tgt[mp[f]] = op[C.tgt_of(f)]
    idn = [0] * C.n_obj
    for x in range(C.n_obj):
        idn[op[x]] = mp[C.idn_of(x)]
    comp = {}
    for g in range(C.n_mor):
        for f in range(C.n_mor):
            if C.is_composable(g, f):
                comp[mp[g] * C.n_mor + mp[f]] = mp[C.compose(g, f)]
    return FinCat(C.n_obj, src, tgt, idn, comp), op, mp


def transported_module(M, A2, B2, op_a, mp_a, op_b, mp_b):
    """M rewritten over relabelled boundary categories."""
    inv_oa = {v: k for k, v in enumerate(op_a)}
    inv_ob = {v: k for k, v in enumerate(op_b)}
    inv_ma = {v: k for k, v in enumerate(mp_a)}
    inv_mb = {v: k for k, v in enumerate(mp_b)}
    M_ = module_from_blocks(
        A2, B2,
        lambda b, a: [M.labels[e]
                      for e in M.block_range(inv_ob[b], inv_oa[a])],
        lambda beta, b, a, lab: M.labels[
            M.lapply(inv_mb[beta], M.find(inv_ob[b], inv_oa[a], lab))],
        lambda alpha, b, a, lab: M.labels[
            M.rapply(inv_ma[alpha], M.find(inv_ob[b], inv_oa[a], lab))],
        validate=False)
    return M_


def subgroup_closure(G, p, gens):
    """Closure of endomorphisms at p under composition and inverse."""
    elems = {G.idn_of(p)}
    frontier = [g for g in gens]
    while frontier:
        g = frontier.pop()
        if g in elems:
            continue
        elems.add(g)
        new = {G.inv_of(g)}
        for h in elems:
            new.add(G.compose(g, h))
            new.add(G.compose(h, g))
        frontier.extend(x for x in new if x not in elems)
    return tuple(sorted(elems))


def coset_set_functor(G, p, H):
    """The orbit functor: cosets of hom(p, -) under a subgroup H at p.

    Elements at q are the lexicographically least members of the cosets
    f . H inside hom(p, q); morphisms act by postcomposition.
    """
    Hs = list(H)
    sets = []
    for q in range(G.n_obj):
        reps = sorted({min(G.compose(f, h) for h in Hs)
                       for f in G.hom(p, q)})
        sets.append(tuple(reps))
    act = []
    for m in range(G.n_mor):
        q, q2 = G.src_of(m), G.tgt_of(m)
        row = []
        for r in sets[q]:
            mr = G.compose(m, r)
            row.append(sets[q2].index(min(G.compose(mr, h) for h in Hs)))
        act.append(tuple(row))
    return SetFunctor(G, sets, act)


def empty_set_functor(G):
    return SetFunctor(G, [()] * G.n_obj, [()] * G.n_mor, validate=False)


def union_set_functors(pieces, G):
    """Disjoint sum of set functors, labels tagged by piece index."""
    sets = []
    for x in range(G.n_obj):
        row = []
        for i, F in enumerate(pieces):
            row.extend((i, lab) for lab in F.sets[x])
        sets.append(tuple(row))
    act = []
    for m in range(G.n_mor):
        x, y = G.src_of(m), G.tgt_of(m)
        offs = []
        base = 0
        for F in pieces:
            offs.append(base)
            base += F.size(y)
        row = []
        for i, F in enumerate(pieces):
            row.extend(offs[i] + t for t in F.act[m])
        act.append(tuple(row))
    return SetFunctor(G, sets, act)


def random_set_functor(G, rng, max_size=4):
    """Seeded functor to finite sets: a disjoint sum of coset orbits.

    Keeps every fibre within max_size elements; may be empty.
    """
    pieces = []
    sizes = [0] * G.n_obj
    for _ in range(rng.randrange(1, 4)):
        p = rng.randrange(G.n_obj)
        endos = list(G.hom(p, p))
        k = rng.randrange(0, min(2, len(endos)) + 1)
        H = subgroup_closure(G, p, rng.sample(endos, k))
        orbit = coset_set_functor(G, p, H)
        if all(sizes[q] + orbit.size(q) <= max_size
               for q in range(G.n_obj)):
            pieces.append(orbit)
            sizes = [sizes[q] + orbit.size(q) for q in range(G.n_obj)]
    if not pieces:
        return empty_set_functor(G)
    return union_set_functors(pieces, G)


def relabelled_set_functor(F, rng):
    """Same functor with elements renamed and shuffled per object."""
    G = F.dom
    perms = []
    for x in range(G.n_obj):
        perm = list(range(F.size(x)))
        rng.shuffle(perm)
        perms.append(perm)
    sets = []
    for x in range(G.n_obj):
        inv = [0] * F.size(x)
        for i, t in enumerate(perms[x]):
            inv[t] = i
        sets.append(tuple(("r", F.sets[x][inv[t]]) for t in range(F.size(x))))
    act = []
    for m in range(G.n_mor):
        x, y = G.src_of(m), G.tgt_of(m)
        row = [0] * F.size(x)
        for i in range(F.size(x)):
            row[perms[x][i]] = perms[y][F.act[m][i]]
        act.append(tuple(row))
    return SetFunctor(G, sets, act), perms
