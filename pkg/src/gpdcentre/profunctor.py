"""Modules between finite categories, coend composition, and module 2-cells.

A Module M with dom A and cod B holds finite sets M(b, a), contravariant in
b (left action, written lapply) and covariant in a (right action, rapply).
Elements are global integers grouped into (b, a) blocks, cod-major.  Actions
are stored densely on category generators only; other morphisms act by
walking cached generator words.
"""

import itertools
from array import array

from .fincat import CategoryError, FinCat, FinFunctor, SetFunctor, product, \
    terminal_category
from .unionfind import UnionFind


class Module:
    def __init__(self, dom, cod, offsets, labels, lgen, rgen):
        self.dom = dom
        self.cod = cod
        self.offsets = offsets if isinstance(offsets, array) else \
            array("l", offsets)
        self.total = self.offsets[-1] if len(self.offsets) else 0
        self.labels = labels
        self.lgen = lgen
        self.rgen = rgen
        self._finders = {}
        self._ba = None
        assert len(self.offsets) == cod.n_obj * dom.n_obj + 1

    # -- blocks -------------------------------------------------------------

    def block_key(self, b, a):
        return b * self.dom.n_obj + a

    def block_range(self, b, a):
        k = self.block_key(b, a)
        return range(self.offsets[k], self.offsets[k + 1])

    def block_size(self, b, a):
        k = self.block_key(b, a)
        return self.offsets[k + 1] - self.offsets[k]

    def ba_of(self, e):
        """(cod object, dom object) of element e."""
        if self._ba is None:
            ba = []
            na = self.dom.n_obj
            for k in range(len(self.offsets) - 1):
                ba.extend([divmod(k, na)] * (self.offsets[k + 1] -
                                             self.offsets[k]))
            self._ba = ba
        return self._ba[e]

    def cod_elements(self, b):
        """Slice of elements whose cod object is b (contiguous, cod-major)."""
        k = b * self.dom.n_obj
        return range(self.offsets[k], self.offsets[k + self.dom.n_obj])

    def find(self, b, a, label):
        k = self.block_key(b, a)
        d = self._finders.get(k)
        if d is None:
            d = {self.labels[e]: e
                 for e in range(self.offsets[k], self.offsets[k + 1])}
            self._finders[k] = d
        return d[label]

    # -- actions ------------------------------------------------------------

    def lapply(self, beta, e):
        d = self.lgen.get(beta)
        if d is not None:
            return d[e]
        for g in self.cod.word_of(beta):
            e = self.lgen[g][e]
        return e

    def rapply(self, alpha, e):
        d = self.rgen.get(alpha)
        if d is not None:
            return d[e]
        for g in reversed(self.dom.word_of(alpha)):
            e = self.rgen[g][e]
        return e

    # -- comparison -----------------------------------------------------------

    def same_tables(self, other):
        return self.dom == other.dom and self.cod == other.cod and \
            self.offsets == other.offsets and self.lgen == other.lgen and \
            self.rgen == other.rgen

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Module):
            return NotImplemented
        return self.same_tables(other)

    __hash__ = None

    def __repr__(self):
        return "%s(%d elements over %r -> %r)" % (
            type(self).__name__, self.total, self.dom, self.cod)


def validate_module(M):
    """Full structural check: block boundaries, multiplicativity, commutation.

    Multiplicativity is checked against one generator at a time on each side,
    which pins down all composites by induction on word length.
    """
    dom, cod = M.dom, M.cod
    assert set(M.lgen) == set(cod.generators())
    assert set(M.rgen) == set(dom.generators())
    for beta, table in M.lgen.items():
        b, b2 = cod.tgt_of(beta), cod.src_of(beta)
        want = set()
        for a in range(dom.n_obj):
            want.update(M.block_range(b, a))
        if set(table) != want:
            raise CategoryError("left action defined on wrong elements",
                                witness=beta)
        for a in range(dom.n_obj):
            tgt_block = set(M.block_range(b2, a))
            for e in M.block_range(b, a):
                if table[e] not in tgt_block:
                    raise CategoryError("left action leaves its block",
                                        witness=(beta, e))
    for alpha, table in M.rgen.items():
        a, a2 = dom.src_of(alpha), dom.tgt_of(alpha)
        want = set()
        for b in range(cod.n_obj):
            want.update(M.block_range(b, a))
        if set(table) != want:
            raise CategoryError("right action defined on wrong elements",
                                witness=alpha)
        for b in range(cod.n_obj):
            tgt_block = set(M.block_range(b, a2))
            for e in M.block_range(b, a):
                if table[e] not in tgt_block:
                    raise CategoryError("right action leaves its block",
                                        witness=(alpha, e))
    # multiplicativity against single generators
    for beta in range(cod.n_mor):
        for g in cod.generators():
            if cod.is_composable(beta, g):
                bg = cod.compose(beta, g)
                b = cod.tgt_of(beta)
                for a in range(dom.n_obj):
                    for e in M.block_range(b, a):
                        if M.lapply(bg, e) != M.lapply(g, M.lapply(beta, e)):
                            raise CategoryError(
                                "left action not multiplicative",
                                witness=(beta, g, e))
            if cod.is_composable(g, beta):
                gb = cod.compose(g, beta)
                b = cod.tgt_of(g)
                for a in range(dom.n_obj):
                    for e in M.block_range(b, a):
                        if M.lapply(gb, e) != M.lapply(beta, M.lapply(g, e)):
                            raise CategoryError(
                                "left action not multiplicative",
                                witness=(g, beta, e))
    for alpha in range(dom.n_mor):
        for h in dom.generators():
            if dom.is_composable(h, alpha):
                ha = dom.compose(h, alpha)
                a = dom.src_of(alpha)
                for b in range(cod.n_obj):
                    for e in M.block_range(b, a):
                        if M.rapply(ha, e) != M.rapply(h, M.rapply(alpha, e)):
                            raise CategoryError(
                                "right action not multiplicative",
                                witness=(h, alpha, e))
            if dom.is_composable(alpha, h):
                ah = dom.compose(alpha, h)
                a = dom.src_of(h)
                for b in range(cod.n_obj):
                    for e in M.block_range(b, a):
                        if M.rapply(ah, e) != M.rapply(alpha, M.rapply(h, e)):
                            raise CategoryError(
                                "right action not multiplicative",
                                witness=(alpha, h, e))
    # the two actions commute; generators suffice
    for beta in cod.generators():
        b = cod.tgt_of(beta)
        for alpha in dom.generators():
            a = dom.src_of(alpha)
            for e in M.block_range(b, a):
                if M.lapply(beta, M.rapply(alpha, e)) != \
                        M.rapply(alpha, M.lapply(beta, e)):
                    raise CategoryError("actions do not commute",
                                        witness=(beta, alpha, e))
    return True


def module_from_blocks(dom, cod, block_fn, lact, ract, validate=True):
    """Module from per-block label lists and label-level action formulas.

    block_fn(b, a) lists labels; lact(beta, b, a, label) acts for
    beta: b' -> b in cod; ract(alpha, b, a, label) for alpha: a -> a' in dom.
    """
    offsets = [0]
    labels = []
    for b in range(cod.n_obj):
        for a in range(dom.n_obj):
            block = list(block_fn(b, a))
            labels.extend(block)
            offsets.append(offsets[-1] + len(block))
    M = Module(dom, cod, offsets, labels, {}, {})
    for beta in cod.generators():
        b, b2 = cod.tgt_of(beta), cod.src_of(beta)
        table = {}
        for a in range(dom.n_obj):
            for e in M.block_range(b, a):
                table[e] = M.find(b2, a, lact(beta, b, a, labels[e]))
        M.lgen[beta] = table
    for alpha in dom.generators():
        a, a2 = dom.src_of(alpha), dom.tgt_of(alpha)
        table = {}
        for b in range(cod.n_obj):
            for e in M.block_range(b, a):
                table[e] = M.find(b, a2, ract(alpha, b, a, labels[e]))
        M.rgen[alpha] = table
    if validate:
        # the stored generator walks must reproduce the formulas everywhere
        for beta in range(cod.n_mor):
            b, b2 = cod.tgt_of(beta), cod.src_of(beta)
            for a in range(dom.n_obj):
                for e in M.block_range(b, a):
                    want = M.find(b2, a, lact(beta, b, a, labels[e]))
                    if M.lapply(beta, e) != want:
                        raise CategoryError("left action walk disagrees "
                                            "with formula", witness=(beta, e))
        for alpha in range(dom.n_mor):
            a, a2 = dom.src_of(alpha), dom.tgt_of(alpha)
            for b in range(cod.n_obj):
                for e in M.block_range(b, a):
                    want = M.find(b, a2, ract(alpha, b, a, labels[e]))
                    if M.rapply(alpha, e) != want:
                        raise CategoryError("right action walk disagrees "
                                            "with formula", witness=(alpha, e))
        validate_module(M)
    return M


def identity_module(A):
    """The hom module of A: elts(b, a) = hom(b, a), composition on both sides."""
    offsets = [0]
    labels = []
    for b in range(A.n_obj):
        for a in range(A.n_obj):
            h = A.hom(b, a)
            labels.extend(h)
            offsets.append(offsets[-1] + len(h))
    M = Module(A, A, offsets, labels, {}, {})
    for beta in A.generators():
        b, b2 = A.tgt_of(beta), A.src_of(beta)
        table = {}
        for a in range(A.n_obj):
            for e in M.block_range(b, a):
                table[e] = M.find(b2, a, A.compose(labels[e], beta))
        M.lgen[beta] = table
    for alpha in A.generators():
        a, a2 = A.src_of(alpha), A.tgt_of(alpha)
        table = {}
        for b in range(A.n_obj):
            for e in M.block_range(b, a):
                table[e] = M.find(b, a2, A.compose(alpha, labels[e]))
        M.rgen[alpha] = table
    return M


def empty_module(dom, cod):
    n = cod.n_obj * dom.n_obj
    return Module(dom, cod, [0] * (n + 1), [],
                  {g: {} for g in cod.generators()},
                  {g: {} for g in dom.generators()})


def module_from_set_functor(F):
    """A covariant Set-functor as a module to the terminal category."""
    one = terminal_category()
    offsets = [0]
    labels = []
    for a in range(F.dom.n_obj):
        labels.extend(F.sets[a])
        offsets.append(offsets[-1] + F.size(a))
    M = Module(F.dom, one, offsets, labels, {}, {})
    for alpha in F.dom.generators():
        a, a2 = F.dom.src_of(alpha), F.dom.tgt_of(alpha)
        base, base2 = M.offsets[a], M.offsets[a2]
        M.rgen[alpha] = {base + i: base2 + F.act[alpha][i]
                         for i in range(F.size(a))}
    return M


def set_functor_from_module(M):
    assert M.cod.n_obj == 1 and M.cod.n_mor == 1
    sets = [tuple(M.labels[e] for e in M.block_range(0, a))
            for a in range(M.dom.n_obj)]
    act = []
    for alpha in range(M.dom.n_mor):
        a = M.dom.src_of(alpha)
        base2 = M.offsets[M.dom.tgt_of(alpha)]
        act.append(tuple(M.rapply(alpha, e) - base2
                         for e in M.block_range(0, a)))
    return SetFunctor(M.dom, sets, act)


# -- external tensor -----------------------------------------------------------

class TensorModule(Module):
    """External product of modules, flat n-ary and row-major.

    Labels are tuples of factor element ids.  Because factor lists are flat
    and trivial boundary categories are dropped by the category product, the
    tensor is strictly associative and matches identity modules of products.
    """

    def __init__(self, factors):
        self.factors = tuple(factors)
        dom = product(*[f.dom for f in factors])
        cod = product(*[f.cod for f in factors])
        cod_radix = [f.cod.n_obj for f in factors]
        dom_radix = [f.dom.n_obj for f in factors]
        offsets = [0]
        labels = []
        for bs in itertools.product(*[range(r) for r in cod_radix]):
            for as_ in itertools.product(*[range(r) for r in dom_radix]):
                ranges = [f.block_range(b, a)
                          for f, b, a in zip(factors, bs, as_)]
                for combo in itertools.product(*ranges):
                    labels.append(combo)
                offsets.append(len(labels))
        super().__init__(dom, cod, offsets, labels, {}, {})
        self._index = {lab: e for e, lab in enumerate(labels)}
        for beta in cod.generators():
            parts = self._decode(beta, [f.cod.n_mor for f in factors])
            table = {}
            tgts = [f.cod.tgt_of(p) for f, p in zip(factors, parts)]
            for e in self.cod_elements_tuple(tgts):
                lab = self.labels[e]
                table[e] = self._index[tuple(
                    f.lapply(p, x) if not f.cod.is_identity(p) else x
                    for f, p, x in zip(factors, parts, lab))]
            self.lgen[beta] = table
        for alpha in dom.generators():
            parts = self._decode(alpha, [f.dom.n_mor for f in factors])
            table = {}
            srcs = [f.dom.src_of(p) for f, p in zip(factors, parts)]
            for e in self.dom_elements_tuple(srcs):
                lab = self.labels[e]
                table[e] = self._index[tuple(
                    f.rapply(p, x) if not f.dom.is_identity(p) else x
                    for f, p, x in zip(factors, parts, lab))]
            self.rgen[alpha] = table

    @staticmethod
    def _decode(m, radix):
        out = [0] * len(radix)
        for i in range(len(radix) - 1, -1, -1):
            m, out[i] = divmod(m, radix[i])
        return tuple(out)

    def cod_elements_tuple(self, bs):
        """Elements whose cod object decodes to the tuple bs."""
        b = 0
        for f, p in zip(self.factors, bs):
            b = b * f.cod.n_obj + p
        return self.cod_elements(b)

    def dom_elements_tuple(self, as_):
        a = 0
        for f, p in zip(self.factors, as_):
            a = a * f.dom.n_obj + p
        out = []
        for b in range(self.cod.n_obj):
            out.extend(self.block_range(b, a))
        return out

    def elem_index(self, parts):
        return self._index[tuple(parts)]


def tensor(*mods):
    flat = []
    for m in mods:
        if isinstance(m, TensorModule):
            flat.extend(m.factors)
        elif m.dom.n_obj == 1 and m.dom.n_mor == 1 and \
                m.cod.n_obj == 1 and m.cod.n_mor == 1 and m.total == 1:
            continue  # the tensor unit
        else:
            flat.append(m)
    if not flat:
        return identity_module(terminal_category())
    if len(flat) == 1:
        return flat[0]
    return TensorModule(flat)


# -- module 2-cells -------------------------------------------------------------

class ModuleMorphism:
    def __init__(self, source, target, comps, validate=True):
        self.source = source
        self.target = target
        self.comps = comps if isinstance(comps, (list, array)) else list(comps)
        if validate:
            self.validate()

    def apply(self, e):
        return self.comps[e]

    def validate(self):
        S, T = self.source, self.target
        assert S.dom == T.dom and S.cod == T.cod
        assert len(self.comps) == S.total
        nd = S.dom.n_obj
        for k in range(len(S.offsets) - 1):
            lo, hi = T.offsets[k], T.offsets[k + 1]
            for e in range(S.offsets[k], S.offsets[k + 1]):
                if not (lo <= self.comps[e] < hi):
                    raise CategoryError("2-cell leaves its block", witness=e)
        for beta, table in S.lgen.items():
            ttable = T.lgen[beta]
            for e, e2 in table.items():
                if ttable[self.comps[e]] != self.comps[e2]:
                    raise CategoryError("2-cell breaks left action",
                                        witness=(beta, e))
        for alpha, table in S.rgen.items():
            ttable = T.rgen[alpha]
            for e, e2 in table.items():
                if ttable[self.comps[e]] != self.comps[e2]:
                    raise CategoryError("2-cell breaks right action",
                                        witness=(alpha, e))

    def is_iso(self):
        if self.source.total != self.target.total:
            return False
        return len(set(self.comps)) == self.source.total

    def inverse(self, validate=False):
        assert self.is_iso()
        inv = [0] * self.source.total
        for e, e2 in enumerate(self.comps):
            inv[e2] = e
        return ModuleMorphism(self.target, self.source, inv,
                              validate=validate)

    def then(self, other):
        """Vertical composition: self followed by other."""
        assert other.source is self.target or other.source == self.target
        return ModuleMorphism(self.source, other.target,
                              [other.comps[e] for e in self.comps],
                              validate=False)

    def __eq__(self, other):
        if not isinstance(other, ModuleMorphism):
            return NotImplemented
        return self.source == other.source and self.target == other.target \
            and list(self.comps) == list(other.comps)

    __hash__ = None


def identity_morphism(M):
    return ModuleMorphism(M, M, list(range(M.total)), validate=False)


def morphism_by_labels(source, target, label_map, validate=True):
    """2-cell from a per-element label rewriter staying in the same block."""
    comps = []
    for e in range(source.total):
        b, a = source.ba_of(e)
        comps.append(target.find(b, a, label_map(b, a, source.labels[e])))
    return ModuleMorphism(source, target, comps, validate=validate)


# -- coend composition ----------------------------------------------------------

class Composition(Module):
    """Coend composite of M then N, with the raw-pair labelling retained.

    Raw pairs (m, n) share the middle object b = cod(m) = dom(n); classes are
    joined by generator zig-zags and named by their lexicographically least
    raw pair.  labels[class] = (b, m, n) for that representative.
    """

    def __init__(self, M, N):
        assert M.cod == N.dom, "boundary categories disagree"
        self.left = M
        self.right = N
        B = M.cod
        nb = B.n_obj
        # elements of N grouped by dom object
        n_by_b = [[] for _ in range(nb)]
        for c in range(N.cod.n_obj):
            base = c * nb
            for b in range(nb):
                n_by_b[b].extend(range(N.offsets[base + b],
                                       N.offsets[base + b + 1]))
        n_pos = [
            {n: i for i, n in enumerate(ns)} for ns in n_by_b]
        m_cod = [0] * M.total
        for b in range(nb):
            for e in M.cod_elements(b):
                m_cod[e] = b
        start = array("l", [0])
        for m in range(M.total):
            start.append(start[-1] + len(n_by_b[m_cod[m]]))
        R = start[-1]
        uf = UnionFind(R)
        for beta in B.generators():
            b_src, b_tgt = B.src_of(beta), B.tgt_of(beta)
            ns = n_by_b[b_src]
            if not ns:
                continue
            moved = [n_pos[b_tgt][N.rapply(beta, n)] for n in ns]
            pos = range(len(ns))
            for m2 in M.cod_elements(b_tgt):
                lm = M.lapply(beta, m2)
                base_lm = start[lm]
                base_m2 = start[m2]
                for i in pos:
                    uf.union(base_lm + i, base_m2 + moved[i])
        # gather classes, ordered by (cod block of n, dom block of m, rep)
        na = M.dom.n_obj
        m_dom = [0] * M.total
        for k in range(len(M.offsets) - 1):
            a = k % na
            for e in range(M.offsets[k], M.offsets[k + 1]):
                m_dom[e] = a
        n_codobj = [0] * N.total
        for k in range(len(N.offsets) - 1):
            c = k // nb
            for e in range(N.offsets[k], N.offsets[k + 1]):
                n_codobj[e] = c
        roots = {}
        raw_to_root = array("l")
        find = uf.find
        m = 0
        next_start = start[1] if M.total else 0
        for idx in range(R):
            while idx >= next_start:
                m += 1
                next_start = start[m + 1]
            root = find(idx)
            raw_to_root.append(root)
            if root == idx:
                n = n_by_b[m_cod[m]][idx - start[m]]
                roots[root] = (n_codobj[n] * na + m_dom[m], m_cod[m], m, n)
        order = sorted(roots, key=lambda r: (roots[r][0], r))
        class_of_root = {r: i for i, r in enumerate(order)}
        offsets = [0] * (N.cod.n_obj * na + 1)
        labels = []
        for r in order:
            blk, b, m, n = roots[r]
            offsets[blk + 1] += 1
            labels.append((b, m, n))
        for k in range(1, len(offsets)):
            offsets[k] += offsets[k - 1]
        self._start = start
        self._n_pos = n_pos
        self._n_by_b = n_by_b
        self._m_cod = m_cod
        self._raw_class = array("l",
                                [class_of_root[r] for r in raw_to_root])
        super().__init__(M.dom, N.cod, offsets, labels, {}, {})
        for gamma in N.cod.generators():
            table = {}
            for cls in range(self.total):
                b, m, n = labels[cls]
                if N.cod.tgt_of(gamma) == n_codobj[n]:
                    table[cls] = self.pair_class(m, N.lapply(gamma, n))
            self.lgen[gamma] = table
        for alpha in M.dom.generators():
            a = M.dom.src_of(alpha)
            table = {}
            for cls in range(self.total):
                b, m, n = labels[cls]
                if m_dom[m] == a:
                    table[cls] = self.pair_class(M.rapply(alpha, m), n)
            self.rgen[alpha] = table

    def pair_class(self, m, n):
        """The class of the raw pair (m, n); they must share the boundary object."""
        return self._raw_class[self._start[m] +
                               self._n_pos[self._m_cod[m]][n]]

    def raw_pairs(self):
        """Iterate (class, m, n) over every raw pair."""
        for m in range(self.left.total):
            base = self._start[m]
            for i, n in enumerate(self._n_by_b[self._m_cod[m]]):
                yield self._raw_class[base + i], m, n


def compose_modules(M, N):
    """N after M: the coend of M(b, a) x N(c, b) over the shared category."""
    return Composition(M, N)


# -- canonical cells -------------------------------------------------------------

def _identity_mor_label(R, e):
    """Morphism id named by element e of an identity or tensor-of-identity module."""
    if isinstance(R, TensorModule):
        mor = 0
        for f, p in zip(R.factors, R.labels[e]):
            mor = mor * f.cod.n_mor + _identity_mor_label(f, p)
        return mor
    return R.labels[e]


def collapse_identity_left(comp, M, validate=True):
    """compose(identity_module(A), M) -> M, the co-Yoneda collapse."""
    comps = []
    for b, f, m in comp.labels:
        comps.append(M.rapply(_identity_mor_label(comp.left, f), m))
    return ModuleMorphism(comp, M, comps, validate=validate)


def collapse_identity_right(comp, M, validate=True):
    """compose(M, identity_module(B)) -> M."""
    comps = []
    for b, m, f in comp.labels:
        comps.append(M.lapply(_identity_mor_label(comp.right, f), m))
    return ModuleMorphism(comp, M, comps, validate=validate)


def associator(left, right, inner_left, inner_right, validate=True):
    """compose(compose(M,N),P) -> compose(M,compose(N,P)).

    left = compose(inner_left, P) with inner_left = compose(M, N);
    right = compose(M, inner_right) with inner_right = compose(N, P).
    """
    comps = []
    for b, mn, p in left.labels:
        _, m, n = inner_left.labels[mn]
        comps.append(right.pair_class(m, inner_right.pair_class(n, p)))
    out = ModuleMorphism(left, right, comps, validate=validate)
    if validate:
        assert out.is_iso()
    return out


def hcomp(sigma, tau, source_comp, target_comp, validate=True):
    """Horizontal composite of 2-cells on given coend composites."""
    comps = []
    for b, m, n in source_comp.labels:
        comps.append(target_comp.pair_class(sigma.apply(m), tau.apply(n)))
    return ModuleMorphism(source_comp, target_comp, comps, validate=validate)


def _is_unit_module(m):
    return m.total == 1 and m.dom.n_obj == 1 and m.dom.n_mor == 1 and \
        m.cod.n_obj == 1 and m.cod.n_mor == 1


def tensor_elem(T, parts, elems):
    """Element of T = tensor(*parts) with the given per-part element ids."""
    lab = ()
    for p, e in zip(parts, elems):
        if isinstance(p, TensorModule):
            lab = lab + p.labels[e]
        elif _is_unit_module(p):
            continue
        else:
            lab = lab + (e,)
    if not isinstance(T, TensorModule):
        return lab[0] if lab else 0
    return T.elem_index(lab)


def interchanger(tens_of_comps, comp_of_tens, validate=True):
    """tensor(compose(M1,N1), compose(M2,N2)) -> compose(tensor(M1,M2), tensor(N1,N2))."""
    c1, c2 = tens_of_comps.factors
    TM = comp_of_tens.left
    TN = comp_of_tens.right
    comps = []
    for e1, e2 in tens_of_comps.labels:
        b1, m1, n1 = c1.labels[e1]
        b2, m2, n2 = c2.labels[e2]
        comps.append(comp_of_tens.pair_class(
            tensor_elem(TM, (c1.left, c2.left), (m1, m2)),
            tensor_elem(TN, (c1.right, c2.right), (n1, n2))))
    out = ModuleMorphism(tens_of_comps, comp_of_tens, comps,
                         validate=validate)
    if validate:
        assert out.is_iso()
    return out


def tensor_mm(cells, source, target, validate=False):
    """Tensor of 2-cells: source = tensor of the cell sources, target likewise."""
    widths = []
    for cell in cells:
        s = cell.source
        if isinstance(s, TensorModule):
            widths.append(len(s.factors))
        elif _is_unit_module(s):
            widths.append(0)
        else:
            widths.append(1)
    tgt_parts = [cell.target for cell in cells]
    comps = []
    for e in range(source.total):
        if isinstance(source, TensorModule):
            lab = source.labels[e]
        elif _is_unit_module(source):
            lab = ()
        else:
            lab = (e,)
        outs = []
        pos = 0
        for cell, w in zip(cells, widths):
            if w == 0:
                sub = 0
            elif w == 1:
                sub = lab[pos]
            else:
                sub = cell.source.elem_index(lab[pos:pos + w])
            pos += w
            outs.append(cell.apply(sub))
        comps.append(tensor_elem(target, tgt_parts, outs))
    return ModuleMorphism(source, target, comps, validate=validate)


# -- functors to modules -----------------------------------------------------------

def functor_lower(F):
    """F as a module: elts(b, a) = hom(b, F a)."""
    A, B = F.dom, F.cod
    return module_from_blocks(
        A, B,
        lambda b, a: B.hom(b, F.on_obj(a)),
        lambda beta, b, a, m: B.compose(m, beta),
        lambda alpha, b, a, m: B.compose(F.on_mor(alpha), m),
        validate=False)


def functor_upper(F):
    """F as a module the other way: elts(a, b) = hom(F a, b)."""
    A, B = F.dom, F.cod
    return module_from_blocks(
        B, A,
        lambda a, b: B.hom(F.on_obj(a), b),
        lambda alpha, a, b, m: B.compose(m, F.on_mor(alpha)),
        lambda beta, a, b, m: B.compose(beta, m),
        validate=False)


class AdjunctionWitness:
    def __init__(self, left, right, unit, counit):
        self.left = left
        self.right = right
        self.unit = unit
        self.counit = counit


def functor_to_modules(F, validate=True):
    """The two modules of a functor and the triangle-checked adjunction."""
    A, B = F.dom, F.cod
    L = functor_lower(F)
    R = functor_upper(F)
    one_a = identity_module(A)
    one_b = identity_module(B)
    LR = compose_modules(L, R)
    RL = compose_modules(R, L)

    unit = []
    for e in range(one_a.total):
        x, a = one_a.ba_of(e)
        f = one_a.labels[e]
        m = L.find(F.on_obj(x), a, F.on_mor(f))
        n = R.find(x, F.on_obj(x), B.idn_of(F.on_obj(x)))
        unit.append(LR.pair_class(m, n))
    unit = ModuleMorphism(one_a, LR, unit, validate=validate)

    counit = []
    for cls, (b, m, n) in enumerate(RL.labels):
        # m in R(a, b) = hom(Fa, b), n in L(c, a) = hom(c, Fa)
        c, bb = RL.ba_of(cls)
        counit.append(one_b.find(c, bb, B.compose(R.labels[m], L.labels[n])))
    counit = ModuleMorphism(RL, one_b, counit, validate=validate)

    if validate:
        # triangle: L -> 1_A;L -> (L;R);L -> L;(R;L) -> L;1_B -> L equals id
        oneA_L = compose_modules(one_a, L)
        LR_L = compose_modules(LR, L)
        L_RL = compose_modules(L, RL)
        L_oneB = compose_modules(L, one_b)
        lam = collapse_identity_left(oneA_L, L, validate=False)
        lam_inv = lam.inverse()
        step1 = hcomp(unit, identity_morphism(L), oneA_L, LR_L,
                      validate=False)
        alpha = associator(LR_L, L_RL, LR, RL, validate=False)
        step2 = hcomp(identity_morphism(L), counit, L_RL, L_oneB,
                      validate=False)
        rho = collapse_identity_right(L_oneB, L, validate=False)
        tri1 = lam_inv.then(step1).then(alpha).then(step2).then(rho)
        if list(tri1.comps) != list(range(L.total)):
            raise CategoryError("first triangle identity fails")
        # triangle: R -> R;1_B... built from the other side
        R_oneA = compose_modules(R, one_a)
        R_LR = compose_modules(R, LR)
        RL_R = compose_modules(RL, R)
        oneB_R = compose_modules(one_b, R)
        rho2 = collapse_identity_right(R_oneA, R, validate=False)
        rho2_inv = rho2.inverse()
        step3 = hcomp(identity_morphism(R), unit, R_oneA, R_LR,
                      validate=False)
        alpha2 = associator(RL_R, R_LR, RL, LR, validate=False).inverse()
        step4 = hcomp(counit, identity_morphism(R), RL_R, oneB_R,
                      validate=False)
        lam2 = collapse_identity_left(oneB_R, R, validate=False)
        tri2 = rho2_inv.then(step3).then(alpha2).then(step4).then(lam2)
        if list(tri2.comps) != list(range(R.total)):
            raise CategoryError("second triangle identity fails")
    return L, R, AdjunctionWitness(L, R, unit, counit)


# -- idempotent splitting ---------------------------------------------------------

def karoubi(A):
    """Idempotent completion; objects are (object, idempotent) pairs."""
    idems = [e for e in range(A.n_mor)
             if A.src_of(e) == A.tgt_of(e) and A.compose(e, e) == e]
    obj_of = {e: i for i, e in enumerate(idems)}
    mors = []
    for i, e in enumerate(idems):
        for j, e2 in enumerate(idems):
            for f in A.hom(A.src_of(e), A.src_of(e2)):
                if A.compose(e2, A.compose(f, e)) == f:
                    mors.append((i, j, f))
    mor_of = {t: k for k, t in enumerate(mors)}
    n_mor = len(mors)
    src = [t[0] for t in mors]
    tgt = [t[1] for t in mors]
    idn = [mor_of[(i, i, e)] for i, e in enumerate(idems)]
    comp = {}
    for k2, (i2, j2, g) in enumerate(mors):
        for k1, (i1, j1, f) in enumerate(mors):
            if j1 == i2:
                comp[k2 * n_mor + k1] = mor_of[(i1, j2, A.compose(g, f))]
    Q = FinCat(len(idems), src, tgt, idn, comp,
               obj_labels=tuple((A.src_of(e), e) for e in idems),
               mor_labels=tuple(mors))
    N = FinFunctor(A, Q,
                   [obj_of[A.idn_of(x)] for x in range(A.n_obj)],
                   [mor_of[(obj_of[A.idn_of(A.src_of(f))],
                            obj_of[A.idn_of(A.tgt_of(f))], f)]
                    for f in range(A.n_mor)])
    return Q, N


def splits_all_idempotents(Q):
    """Every idempotent of Q factors as a section/retraction pair."""
    for e in range(Q.n_mor):
        if Q.src_of(e) != Q.tgt_of(e) or Q.compose(e, e) != e:
            continue
        found = False
        for x in range(Q.n_obj):
            for r in Q.hom(Q.src_of(e), x):
                for s in Q.hom(x, Q.src_of(e)):
                    if Q.compose(s, r) == e and \
                            Q.compose(r, s) == Q.idn_of(x):
                        found = True
                        break
                if found:
                    break
            if found:
                break
        if not found:
            return False
    return True
