"""Finite categories and groupoids as dense integer tables.

Objects and morphisms are integers.  src/tgt/idn are tuples, composition is a
dict keyed by g * n_mor + f holding g after f, defined exactly on composable
pairs.  Equality of categories is equality of tables.  Products are lazy so
that large powers never materialise their composition table.
"""

import itertools


class CategoryError(Exception):
    """Structural failure; witness points at the first offending datum."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class FinCat:
    """A finite category given by explicit tables."""

    def __init__(self, n_obj, src, tgt, idn, comp, obj_labels=None,
                 mor_labels=None, validate=True):
        self.n_obj = int(n_obj)
        self.src = tuple(src)
        self.tgt = tuple(tgt)
        self.idn = tuple(idn)
        self.n_mor = len(self.src)
        if isinstance(comp, dict):
            self.comp = dict(comp)
        else:
            self.comp = {g * self.n_mor + f: h for (g, f, h) in comp}
        self.obj_labels = tuple(obj_labels) if obj_labels is not None else None
        self.mor_labels = tuple(mor_labels) if mor_labels is not None else None
        self._homs = {}
        self._gens = None
        self._words = None
        if validate:
            self.validate()

    # -- table access ------------------------------------------------------

    def src_of(self, f):
        return self.src[f]

    def tgt_of(self, f):
        return self.tgt[f]

    def idn_of(self, x):
        return self.idn[x]

    def is_composable(self, g, f):
        return self.tgt_of(f) == self.src_of(g)

    def compose(self, g, f):
        assert self.tgt[f] == self.src[g], (g, f)
        return self.comp[g * self.n_mor + f]

    def compose_many(self, *fs):
        out = fs[0]
        for f in fs[1:]:
            out = self.compose(out, f)
        return out

    def is_identity(self, f):
        return f == self.idn_of(self.src_of(f))

    def inv_of(self, f):
        raise CategoryError("not a groupoid", witness=f)

    def is_groupoid(self):
        return False

    def hom(self, x, y):
        key = (x, y)
        h = self._homs.get(key)
        if h is None:
            h = tuple(f for f in range(self.n_mor)
                      if self.src[f] == x and self.tgt[f] == y)
            self._homs[key] = h
        return h

    def objects(self):
        return range(self.n_obj)

    def morphisms(self):
        return range(self.n_mor)

    # -- validation --------------------------------------------------------

    def validate(self):
        n, m = self.n_obj, self.n_mor
        if len(self.tgt) != m or len(self.idn) != n:
            raise CategoryError("table lengths disagree")
        for f in range(m):
            if not (0 <= self.src[f] < n and 0 <= self.tgt[f] < n):
                raise CategoryError("src/tgt out of range", witness=f)
        for x in range(n):
            e = self.idn[x]
            if not (0 <= e < m) or self.src[e] != x or self.tgt[e] != x:
                raise CategoryError("identity table broken", witness=x)
        comp = self.comp
        for g in range(m):
            base = g * m
            for f in range(m):
                if self.tgt[f] == self.src[g]:
                    h = comp.get(base + f)
                    if h is None:
                        raise CategoryError("missing composite", witness=(g, f))
                    if not (0 <= h < m) or self.src[h] != self.src[f] \
                            or self.tgt[h] != self.tgt[g]:
                        raise CategoryError("composite has wrong boundary",
                                            witness=(g, f))
                elif base + f in comp:
                    raise CategoryError("composite on non-composable pair",
                                        witness=(g, f))
        for f in range(m):
            if comp[self.idn[self.tgt[f]] * m + f] != f:
                raise CategoryError("left identity law fails", witness=f)
            if comp[f * m + self.idn[self.src[f]]] != f:
                raise CategoryError("right identity law fails", witness=f)
        for h in range(m):
            for g in range(m):
                if self.src[h] != self.tgt[g]:
                    continue
                hg = comp[h * m + g]
                hb = h * m
                for f in range(m):
                    if self.src[g] != self.tgt[f]:
                        continue
                    if comp[hg * m + f] != comp[hb + comp[g * m + f]]:
                        raise CategoryError("associativity fails",
                                            witness=(h, g, f))

    # -- generators and words ----------------------------------------------

    def generators(self):
        """A generating set of morphisms, greedily chosen by index."""
        if self._gens is None:
            self._compute_generators()
        return self._gens

    def word_of(self, f):
        """f as a tuple (g1, ..., gk) of generators with f = g1 after ... gk."""
        if self._gens is None:
            self._compute_generators()
        return self._words[f]

    def _compute_generators(self):
        m = self.n_mor
        words = {e: () for e in self.idn}
        known = set(words)
        frontier = list(known)
        gens = []

        def close():
            while frontier:
                a = frontier.pop()
                for b in list(known):
                    for g, f in ((a, b), (b, a)):
                        if self.tgt[f] == self.src[g]:
                            c = self.comp[g * m + f]
                            if c not in known:
                                words[c] = words[g] + words[f]
                                known.add(c)
                                frontier.append(c)

        close()
        for f in range(m):
            if f not in known:
                gens.append(f)
                words[f] = (f,)
                known.add(f)
                frontier.append(f)
                close()
        self._gens = tuple(gens)
        self._words = words

    # -- equality ----------------------------------------------------------

    def same_tables(self, other):
        if self.n_obj != other.n_obj or self.n_mor != other.n_mor:
            return False
        for x in range(self.n_obj):
            if self.idn_of(x) != other.idn_of(x):
                return False
        for f in range(self.n_mor):
            if self.src_of(f) != other.src_of(f) or self.tgt_of(f) != other.tgt_of(f):
                return False
        for g in range(self.n_mor):
            for f in range(self.n_mor):
                if self.tgt_of(f) == self.src_of(g):
                    if self.compose(g, f) != other.compose(g, f):
                        return False
        return True

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, FinCat):
            return NotImplemented
        return self.same_tables(other)

    __hash__ = None

    def __repr__(self):
        return "%s(%d objects, %d morphisms)" % (
            type(self).__name__, self.n_obj, self.n_mor)


class FinGroupoid(FinCat):
    """A finite category in which every morphism has a two-sided inverse."""

    def __init__(self, n_obj, src, tgt, idn, comp, inv=None, **kw):
        validate = kw.pop("validate", True)
        super().__init__(n_obj, src, tgt, idn, comp, validate=validate, **kw)
        if inv is None:
            inv = self._find_inverses()
        self.inv = tuple(inv)
        if validate:
            self._validate_inverses()

    def _find_inverses(self):
        inv = []
        for f in range(self.n_mor):
            x, y = self.src[f], self.tgt[f]
            got = None
            for g in self.hom(y, x):
                if self.compose(g, f) == self.idn[x] and \
                        self.compose(f, g) == self.idn[y]:
                    got = g
                    break
            if got is None:
                raise CategoryError("morphism has no inverse", witness=f)
            inv.append(got)
        return inv

    def _validate_inverses(self):
        if len(self.inv) != self.n_mor:
            raise CategoryError("inverse table length wrong")
        for f in range(self.n_mor):
            g = self.inv[f]
            x, y = self.src[f], self.tgt[f]
            if self.src[g] != y or self.tgt[g] != x or \
                    self.compose(g, f) != self.idn[x] or \
                    self.compose(f, g) != self.idn[y]:
                raise CategoryError("inverse table broken", witness=f)

    def inv_of(self, f):
        return self.inv[f]

    def is_groupoid(self):
        return True


class ProductCat(FinCat):
    """Row-major cartesian product; composition computed componentwise on demand.

    Factors are stored flat (never nested, never trivial), so equal factor
    lists mean equal categories and the product is strictly associative.
    """

    def __init__(self, factors):
        self.factors = tuple(factors)
        assert len(self.factors) >= 2
        n_obj = 1
        n_mor = 1
        for c in self.factors:
            assert not isinstance(c, ProductCat)
            n_obj *= c.n_obj
            n_mor *= c.n_mor
        self.n_obj = n_obj
        self.n_mor = n_mor
        self.idn = tuple(
            self.mor_index([c.idn_of(o) for c, o in zip(self.factors, combo)])
            for combo in itertools.product(*[range(c.n_obj) for c in self.factors])
        )
        self.obj_labels = None
        self.mor_labels = None
        self._homs = {}
        self._gens = None
        self._mt = None

    def _fill_tables(self):
        # Morphism tuples enumerate row-major, matching mor_index order.
        mt = list(itertools.product(*[range(c.n_mor) for c in self.factors]))
        src = []
        tgt = []
        for parts in mt:
            s = 0
            t = 0
            for c, p in zip(self.factors, parts):
                s = s * c.n_obj + c.src_of(p)
                t = t * c.n_obj + c.tgt_of(p)
            src.append(s)
            tgt.append(t)
        self._mt = mt
        self._src_arr = src
        self._tgt_arr = tgt

    # -- index codecs --------------------------------------------------------

    def obj_tuple(self, x):
        k = len(self.factors)
        out = [0] * k
        for i in range(k - 1, -1, -1):
            x, out[i] = divmod(x, self.factors[i].n_obj)
        return tuple(out)

    def obj_index(self, parts):
        x = 0
        for c, p in zip(self.factors, parts):
            x = x * c.n_obj + p
        return x

    def mor_tuple(self, f):
        if self._mt is None:
            self._fill_tables()
        return self._mt[f]

    def mor_index(self, parts):
        f = 0
        for c, p in zip(self.factors, parts):
            f = f * c.n_mor + p
        return f

    # -- lazy tables ---------------------------------------------------------

    def src_of(self, f):
        if self._mt is None:
            self._fill_tables()
        return self._src_arr[f]

    def tgt_of(self, f):
        if self._mt is None:
            self._fill_tables()
        return self._tgt_arr[f]

    def idn_of(self, x):
        return self.idn[x]

    def compose(self, g, f):
        gs = self.mor_tuple(g)
        fs = self.mor_tuple(f)
        return self.mor_index([c.compose(a, b)
                               for c, a, b in zip(self.factors, gs, fs)])

    def is_composable(self, g, f):
        gs = self.mor_tuple(g)
        fs = self.mor_tuple(f)
        return all(c.tgt_of(b) == c.src_of(a)
                   for c, a, b in zip(self.factors, gs, fs))

    def is_identity(self, f):
        return all(c.is_identity(p) for c, p in zip(self.factors, self.mor_tuple(f)))

    def inv_of(self, f):
        return self.mor_index([c.inv_of(p)
                               for c, p in zip(self.factors, self.mor_tuple(f))])

    def is_groupoid(self):
        return all(c.is_groupoid() for c in self.factors)

    def hom(self, x, y):
        key = (x, y)
        h = self._homs.get(key)
        if h is not None:
            return h
        xs = self.obj_tuple(x)
        ys = self.obj_tuple(y)
        parts = [c.hom(a, b) for c, a, b in zip(self.factors, xs, ys)]
        h = tuple(self.mor_index(combo) for combo in itertools.product(*parts))
        if self.n_obj <= 512:
            self._homs[key] = h
        return h

    def validate(self):
        pass  # componentwise by construction; factors were validated

    def generators(self):
        if self._gens is None:
            gens = []
            k = len(self.factors)
            for i, c in enumerate(self.factors):
                others = [range(d.n_obj) for j, d in enumerate(self.factors)
                          if j != i]
                for g in c.generators():
                    for combo in itertools.product(*others):
                        it = iter(combo)
                        parts = [g if j == i else
                                 self.factors[j].idn_of(next(it))
                                 for j in range(k)]
                        gens.append(self.mor_index(parts))
            self._gens = tuple(gens)
        return self._gens

    def word_of(self, f):
        parts = self.mor_tuple(f)
        k = len(self.factors)
        srcs = [c.src_of(p) for c, p in zip(self.factors, parts)]
        tgts = [c.tgt_of(p) for c, p in zip(self.factors, parts)]
        word = []
        for i in range(k):
            # slot i moves while slots < i wait at src and slots > i sit at tgt
            for g in self.factors[i].word_of(parts[i]):
                embedded = [self.factors[j].idn_of(srcs[j]) if j < i else
                            self.factors[j].idn_of(tgts[j]) if j > i else g
                            for j in range(k)]
                word.append(self.mor_index(embedded))
        return tuple(word)

    def __eq__(self, other):
        if self is other:
            return True
        if isinstance(other, ProductCat):
            return len(self.factors) == len(other.factors) and \
                all(a == b for a, b in zip(self.factors, other.factors))
        if not isinstance(other, FinCat):
            return NotImplemented
        return self.same_tables(other)

    __hash__ = None


# -- derived categories ------------------------------------------------------

def product(*cats):
    """Flat n-ary product; trivial factors are dropped so the unit is strict."""
    flat = []
    for c in cats:
        if isinstance(c, ProductCat):
            flat.extend(c.factors)
        elif c.n_obj == 1 and c.n_mor == 1:
            continue
        else:
            flat.append(c)
    if not flat:
        return terminal_category()
    if len(flat) == 1:
        return flat[0]
    return ProductCat(flat)


def opposite(C):
    m = C.n_mor
    comp = {}
    for g in range(m):
        for f in range(m):
            if C.tgt_of(f) == C.src_of(g):
                comp[f * m + g] = C.compose(g, f)
    src = tuple(C.tgt_of(f) for f in range(m))
    tgt = tuple(C.src_of(f) for f in range(m))
    idn = tuple(C.idn_of(x) for x in range(C.n_obj))
    if C.is_groupoid():
        inv = tuple(C.inv_of(f) for f in range(m))
        return FinGroupoid(C.n_obj, src, tgt, idn, comp, inv=inv,
                           obj_labels=C.obj_labels, mor_labels=C.mor_labels)
    return FinCat(C.n_obj, src, tgt, idn, comp,
                  obj_labels=C.obj_labels, mor_labels=C.mor_labels)


def coproduct(*cats):
    """Disjoint union; obj_offsets/mor_offsets record the summand blocks."""
    obj_off = [0]
    mor_off = [0]
    for c in cats:
        obj_off.append(obj_off[-1] + c.n_obj)
        mor_off.append(mor_off[-1] + c.n_mor)
    n_obj = obj_off[-1]
    n_mor = mor_off[-1]
    src = []
    tgt = []
    idn = []
    comp = {}
    inv = []
    all_groupoids = all(c.is_groupoid() for c in cats)
    for i, c in enumerate(cats):
        oo, mo = obj_off[i], mor_off[i]
        src.extend(c.src_of(f) + oo for f in range(c.n_mor))
        tgt.extend(c.tgt_of(f) + oo for f in range(c.n_mor))
        idn.extend(c.idn_of(x) + mo for x in range(c.n_obj))
        for g in range(c.n_mor):
            for f in range(c.n_mor):
                if c.is_composable(g, f):
                    comp[(g + mo) * n_mor + (f + mo)] = c.compose(g, f) + mo
        if all_groupoids:
            inv.extend(c.inv_of(f) + mo for f in range(c.n_mor))
    labels = None
    if all(c.obj_labels is not None for c in cats):
        labels = tuple((i, l) for i, c in enumerate(cats) for l in c.obj_labels)
    mlabels = None
    if all(c.mor_labels is not None for c in cats):
        mlabels = tuple((i, l) for i, c in enumerate(cats) for l in c.mor_labels)
    if all_groupoids:
        out = FinGroupoid(n_obj, src, tgt, idn, comp, inv=inv,
                          obj_labels=labels, mor_labels=mlabels)
    else:
        out = FinCat(n_obj, src, tgt, idn, comp,
                     obj_labels=labels, mor_labels=mlabels)
    out.obj_offsets = tuple(obj_off)
    out.mor_offsets = tuple(mor_off)
    return out


def derive_category(kind, *args):
    if kind == "product":
        return product(*args)
    if kind == "opposite":
        (c,) = args
        return opposite(c)
    if kind == "coproduct":
        return coproduct(*args)
    raise ValueError("unknown derivation %r" % (kind,))


# -- builders ----------------------------------------------------------------

def terminal_category():
    return FinGroupoid(1, (0,), (0,), (0,), {0: 0}, inv=(0,))


def empty_category():
    return FinGroupoid(0, (), (), (), {}, inv=())


def group_from_elements(elements, mult, name=None):
    """Delooping of the group given by a multiplication function on labels."""
    elements = list(elements)
    n = len(elements)
    index = {e: i for i, e in enumerate(elements)}
    assert len(index) == n, "duplicate elements"
    comp = {}
    for g in range(n):
        for f in range(n):
            comp[g * n + f] = index[mult(elements[g], elements[f])]
    idn = None
    for e in range(n):
        if all(comp[e * n + f] == f for f in range(n)):
            idn = e
            break
    if idn is None:
        raise CategoryError("no identity element")
    G = FinGroupoid(1, (0,) * n, (0,) * n, (idn,), comp,
                    mor_labels=elements, obj_labels=("*",))
    if name is not None:
        G.name = name
    return G


def trivial_group():
    return group_from_elements([0], lambda a, b: 0, name="trivial")


def cyclic_group(n):
    assert n >= 1
    return group_from_elements(range(n), lambda a, b: (a + b) % n,
                               name="cyclic:%d" % n)


def symmetric_group(n):
    assert n >= 1
    perms = sorted(itertools.permutations(range(n)))

    def mult(p, q):
        return tuple(p[q[i]] for i in range(n))

    return group_from_elements(perms, mult, name="symmetric:%d" % n)


def dihedral_group(n):
    """Symmetries of the n-gon; elements (flip, rotation) in lex order."""
    assert n >= 1
    elems = [(f, k) for f in (0, 1) for k in range(n)]

    def mult(a, b):
        f1, k1 = a
        f2, k2 = b
        return ((f1 + f2) % 2, (k1 + (k2 if f1 == 0 else -k2)) % n)

    return group_from_elements(elems, mult, name="dihedral:%d" % n)


def klein_four():
    elems = [(a, b) for a in (0, 1) for b in (0, 1)]
    return group_from_elements(
        elems, lambda x, y: ((x[0] + y[0]) % 2, (x[1] + y[1]) % 2),
        name="klein")


def delooping(table, labels=None):
    """One-object groupoid from an explicit multiplication table."""
    n = len(table)
    elems = labels if labels is not None else list(range(n))
    return group_from_elements(
        list(range(n)) if labels is None else list(elems),
        (lambda a, b: table[a][b]) if labels is None else
        (lambda a, b: elems[table[elems.index(a)][elems.index(b)]]))


def action_groupoid(G, act):
    """Action groupoid of a one-object groupoid acting on points.

    act[g][x] is the point g sends x to; morphism (x, g): x -> act[g][x]
    gets index x * |G| + g.
    """
    assert G.n_obj == 1
    ng = G.n_mor
    n = len(act)
    # act is indexed act[g][x]
    assert len(act) == ng
    npts = len(act[0])
    e = G.idn[0]
    for x in range(npts):
        if act[e][x] != x:
            raise CategoryError("identity does not act trivially", witness=x)
    for g in range(ng):
        for f in range(ng):
            gf = G.compose(g, f)
            for x in range(npts):
                if act[gf][x] != act[g][act[f][x]]:
                    raise CategoryError("action not functorial",
                                        witness=(g, f, x))
    n_mor = npts * ng
    src = [x for x in range(npts) for g in range(ng)]
    tgt = [act[g][x] for x in range(npts) for g in range(ng)]
    idn = [x * ng + e for x in range(npts)]
    comp = {}
    for x in range(npts):
        for g in range(ng):
            f1 = x * ng + g
            mid = act[g][x]
            for h in range(ng):
                comp[(mid * ng + h) * n_mor + f1] = x * ng + G.compose(h, g)
    inv = [act[g][x] * ng + G.inv_of(g) for x in range(npts) for g in range(ng)]
    labels = tuple((x, g) for x in range(npts) for g in range(ng))
    return FinGroupoid(npts, src, tgt, idn, comp, inv=inv,
                       obj_labels=tuple(range(npts)), mor_labels=labels)


def groupoid_from_tables(n_obj, src, tgt, idn, comp, inv=None, **kw):
    return FinGroupoid(n_obj, src, tgt, idn, comp, inv=inv, **kw)


def category_from_tables(n_obj, src, tgt, idn, comp, **kw):
    return FinCat(n_obj, src, tgt, idn, comp, **kw)


_NAMED_BUILDERS = {
    "trivial": trivial_group,
    "klein": klein_four,
}

_PARAM_BUILDERS = {
    "cyclic": cyclic_group,
    "symmetric": symmetric_group,
    "dihedral": dihedral_group,
}


def build_groupoid(spec):
    """Builder dispatch: shorthand string or description dict."""
    if isinstance(spec, FinGroupoid):
        return spec
    if isinstance(spec, str):
        if spec in _NAMED_BUILDERS:
            return _NAMED_BUILDERS[spec]()
        if ":" in spec:
            head, _, tail = spec.partition(":")
            if head in _PARAM_BUILDERS:
                return _PARAM_BUILDERS[head](int(tail))
        raise ValueError("unknown groupoid shorthand %r" % (spec,))
    if isinstance(spec, dict):
        kind = spec.get("kind", "explicit")
        if kind in _NAMED_BUILDERS:
            return _NAMED_BUILDERS[kind]()
        if kind in _PARAM_BUILDERS:
            return _PARAM_BUILDERS[kind](int(spec["n"]))
        if kind == "delooping":
            return delooping(spec["table"], labels=spec.get("labels"))
        if kind == "action":
            return action_groupoid(build_groupoid(spec["group"]), spec["act"])
        if kind == "disjoint_union":
            return coproduct(*[build_groupoid(s) for s in spec["groups"]])
        if kind == "explicit":
            return groupoid_from_tables(
                spec["n_obj"], spec["src"], spec["tgt"], spec["idn"],
                [tuple(t) for t in spec["comp"]], inv=spec.get("inv"))
        raise ValueError("unknown builder kind %r" % (kind,))
    raise TypeError("cannot build a groupoid from %r" % (spec,))


# -- functors and natural transformations -------------------------------------

class FinFunctor:
    def __init__(self, dom, cod, obj_map, mor_map, validate=True):
        self.dom = dom
        self.cod = cod
        self.obj_map = tuple(obj_map)
        self.mor_map = tuple(mor_map)
        if validate:
            self.validate()

    def on_obj(self, x):
        return self.obj_map[x]

    def on_mor(self, f):
        return self.mor_map[f]

    def validate(self):
        dom, cod = self.dom, self.cod
        assert len(self.obj_map) == dom.n_obj
        assert len(self.mor_map) == dom.n_mor
        for f in range(dom.n_mor):
            mf = self.mor_map[f]
            if cod.src_of(mf) != self.obj_map[dom.src_of(f)] or \
                    cod.tgt_of(mf) != self.obj_map[dom.tgt_of(f)]:
                raise CategoryError("functor breaks boundaries", witness=f)
        for x in range(dom.n_obj):
            if self.mor_map[dom.idn_of(x)] != cod.idn_of(self.obj_map[x]):
                raise CategoryError("functor breaks identities", witness=x)
        for g in range(dom.n_mor):
            for f in range(dom.n_mor):
                if dom.is_composable(g, f):
                    if self.mor_map[dom.compose(g, f)] != \
                            cod.compose(self.mor_map[g], self.mor_map[f]):
                        raise CategoryError("functor breaks composition",
                                            witness=(g, f))

    def __eq__(self, other):
        if not isinstance(other, FinFunctor):
            return NotImplemented
        return self.dom == other.dom and self.cod == other.cod and \
            self.obj_map == other.obj_map and self.mor_map == other.mor_map

    __hash__ = None

    def __repr__(self):
        return "FinFunctor(%r -> %r)" % (self.dom, self.cod)


def identity_functor(C):
    return FinFunctor(C, C, range(C.n_obj), range(C.n_mor), validate=False)


def compose_functors(G, F):
    """G after F."""
    assert F.cod == G.dom
    return FinFunctor(F.dom, G.cod,
                      [G.obj_map[x] for x in F.obj_map],
                      [G.mor_map[f] for f in F.mor_map], validate=False)


class SetFunctor:
    """Covariant finite-set-valued functor.

    sets[x] is a tuple of element labels; act[f] maps positions of
    sets[src f] to positions of sets[tgt f].
    """

    def __init__(self, dom, sets, act, validate=True):
        self.dom = dom
        self.sets = tuple(tuple(s) for s in sets)
        self.act = tuple(tuple(a) for a in act)
        if validate:
            self.validate()

    def size(self, x):
        return len(self.sets[x])

    def apply(self, f, i):
        return self.act[f][i]

    def validate(self):
        dom = self.dom
        assert len(self.sets) == dom.n_obj
        assert len(self.act) == dom.n_mor
        for f in range(dom.n_mor):
            a = self.act[f]
            if len(a) != len(self.sets[dom.src_of(f)]):
                raise CategoryError("action table length wrong", witness=f)
            ny = len(self.sets[dom.tgt_of(f)])
            if any(not (0 <= i < ny) for i in a):
                raise CategoryError("action lands outside the set", witness=f)
        for x in range(dom.n_obj):
            e = dom.idn_of(x)
            if self.act[e] != tuple(range(len(self.sets[x]))):
                raise CategoryError("identity acts nontrivially", witness=x)
        for g in range(dom.n_mor):
            for f in range(dom.n_mor):
                if dom.is_composable(g, f):
                    gf = dom.compose(g, f)
                    ag, af, agf = self.act[g], self.act[f], self.act[gf]
                    if any(agf[i] != ag[af[i]] for i in range(len(af))):
                        raise CategoryError("set functor breaks composition",
                                            witness=(g, f))

    def __eq__(self, other):
        if not isinstance(other, SetFunctor):
            return NotImplemented
        return self.dom == other.dom and self.sets == other.sets and \
            self.act == other.act

    __hash__ = None


def terminal_set_functor(C):
    return SetFunctor(C, [("*",)] * C.n_obj, [(0,)] * C.n_mor, validate=False)


def representable_set_functor(C, p):
    """hom(p, -) with the postcomposition action."""
    sets = [C.hom(p, y) for y in range(C.n_obj)]
    act = []
    for f in range(C.n_mor):
        x = C.src_of(f)
        row = []
        target = sets[C.tgt_of(f)]
        for u in sets[x]:
            row.append(target.index(C.compose(f, u)))
        act.append(tuple(row))
    return SetFunctor(C, sets, act)


class NatTrans:
    """Natural transformation between SetFunctors on one category."""

    def __init__(self, source, target, comps, validate=True):
        self.source = source
        self.target = target
        self.comps = tuple(tuple(c) for c in comps)
        if validate:
            self.validate()

    def apply(self, x, i):
        return self.comps[x][i]

    def validate(self):
        F, G = self.source, self.target
        dom = F.dom
        assert dom == G.dom
        assert len(self.comps) == dom.n_obj
        for x in range(dom.n_obj):
            c = self.comps[x]
            if len(c) != F.size(x):
                raise CategoryError("component length wrong", witness=x)
            n = G.size(x)
            if any(not (0 <= i < n) for i in c):
                raise CategoryError("component out of range", witness=x)
        for f in range(dom.n_mor):
            x, y = dom.src_of(f), dom.tgt_of(f)
            for i in range(F.size(x)):
                if G.act[f][self.comps[x][i]] != self.comps[y][F.act[f][i]]:
                    raise CategoryError("naturality fails", witness=(f, i))

    def is_iso(self):
        return all(sorted(c) == list(range(len(c))) and
                   len(c) == self.target.size(x)
                   for x, c in enumerate(self.comps))

    def __eq__(self, other):
        if not isinstance(other, NatTrans):
            return NotImplemented
        return self.source == other.source and self.target == other.target \
            and self.comps == other.comps

    __hash__ = None


class CatNatTrans:
    """Natural transformation between FinFunctors; components are morphisms."""

    def __init__(self, source, target, comps, validate=True):
        self.source = source
        self.target = target
        self.comps = tuple(comps)
        if validate:
            self.validate()

    def validate(self):
        F, G = self.source, self.target
        dom, cod = F.dom, F.cod
        assert dom == G.dom and cod == G.cod
        assert len(self.comps) == dom.n_obj
        for x in range(dom.n_obj):
            c = self.comps[x]
            if cod.src_of(c) != F.on_obj(x) or cod.tgt_of(c) != G.on_obj(x):
                raise CategoryError("component has wrong boundary", witness=x)
        for f in range(dom.n_mor):
            x, y = dom.src_of(f), dom.tgt_of(f)
            if cod.compose(self.comps[y], F.on_mor(f)) != \
                    cod.compose(G.on_mor(f), self.comps[x]):
                raise CategoryError("naturality fails", witness=f)

    def is_iso(self):
        cod = self.source.cod
        for c in self.comps:
            ok = False
            for d in cod.hom(cod.tgt_of(c), cod.src_of(c)):
                if cod.compose(d, c) == cod.idn_of(cod.src_of(c)) and \
                        cod.compose(c, d) == cod.idn_of(cod.tgt_of(c)):
                    ok = True
                    break
            if not ok:
                return False
        return True


# -- equivalence checking ------------------------------------------------------

def _iso_to(C, x, y):
    """The minimum-index isomorphism x -> y, or None."""
    for f in C.hom(x, y):
        for g in C.hom(y, x):
            if C.compose(g, f) == C.idn_of(x) and \
                    C.compose(f, g) == C.idn_of(y):
                return f
    return None


def _inverse_in(C, f):
    x, y = C.src_of(f), C.tgt_of(f)
    for g in C.hom(y, x):
        if C.compose(g, f) == C.idn_of(x) and C.compose(f, g) == C.idn_of(y):
            return g
    return None


def _skeleton_data(C):
    """Representatives, per-object rep and chosen iso x -> rep(x)."""
    rep = list(range(C.n_obj))
    for x in range(C.n_obj):
        for y in range(x):
            if rep[y] == y and _iso_to(C, x, y) is not None:
                rep[x] = y
                break
    reps = sorted(set(rep))
    to_rep = [C.idn_of(x) if rep[x] == x else _iso_to(C, x, rep[x])
              for x in range(C.n_obj)]
    return reps, rep, to_rep


def _full_subcat(C, objs):
    """Full subcategory on the listed objects, with index maps back."""
    obj_index = {o: i for i, o in enumerate(objs)}
    mors = [f for f in range(C.n_mor)
            if C.src_of(f) in obj_index and C.tgt_of(f) in obj_index]
    mor_index = {f: i for i, f in enumerate(mors)}
    n_mor = len(mors)
    src = [obj_index[C.src_of(f)] for f in mors]
    tgt = [obj_index[C.tgt_of(f)] for f in mors]
    idn = [mor_index[C.idn_of(o)] for o in objs]
    comp = {}
    for gi, g in enumerate(mors):
        for fi, f in enumerate(mors):
            if C.is_composable(g, f):
                comp[gi * n_mor + fi] = mor_index[C.compose(g, f)]
    sub = FinCat(len(objs), src, tgt, idn, comp)
    sub.obj_back = tuple(objs)
    sub.mor_back = tuple(mors)
    sub.mor_index = mor_index
    return sub


def _hom_profile(C):
    rows = []
    for x in range(C.n_obj):
        sizes = sorted(len(C.hom(x, y)) for y in range(C.n_obj))
        rows.append((len(C.hom(x, x)), tuple(sizes)))
    return tuple(sorted(rows))


def _iso_of_skeletons(S, T):
    """Backtracking isomorphism search; returns a FinFunctor S -> T or None."""
    if S.n_obj != T.n_obj or S.n_mor != T.n_mor:
        return None

    gens = S.generators()
    n = S.n_obj

    def extend_objects(obj_map, used):
        if len(obj_map) == n:
            return try_generators(obj_map)
        x = len(obj_map)
        for y in range(T.n_obj):
            if y in used:
                continue
            ok = all(len(S.hom(x, z)) == len(T.hom(y, obj_map[z])) and
                     len(S.hom(z, x)) == len(T.hom(obj_map[z], y))
                     for z in range(x)) and \
                len(S.hom(x, x)) == len(T.hom(y, y))
            if ok:
                out = extend_objects(obj_map + [y], used | {y})
                if out is not None:
                    return out
        return None

    def try_generators(obj_map):
        choices = [T.hom(obj_map[S.src_of(g)], obj_map[S.tgt_of(g)])
                   for g in gens]
        for images in itertools.product(*choices):
            gen_image = dict(zip(gens, images))
            mor_map = []
            for f in range(S.n_mor):
                word = S.word_of(f)
                if not word:
                    mor_map.append(T.idn_of(obj_map[S.src_of(f)]))
                else:
                    m = gen_image[word[-1]]
                    for g in reversed(word[:-1]):
                        m = T.compose(gen_image[g], m)
                    mor_map.append(m)
            if len(set(mor_map)) != S.n_mor:
                continue
            try:
                return FinFunctor(S, T, obj_map, mor_map)
            except CategoryError:
                continue
        return None

    return extend_objects([], frozenset())


class EquivalenceResult:
    def __init__(self, witness=None, reason=None, profiles=None):
        self.witness = witness
        self.reason = reason
        self.profiles = profiles

    @property
    def equivalent(self):
        return self.witness is not None

    def __bool__(self):
        return self.equivalent


class EquivalenceWitness:
    """Functors both ways plus natural isomorphisms to the identities."""

    def __init__(self, F, G, eta, eps):
        self.F = F
        self.G = G
        self.eta = eta
        self.eps = eps


def check_equivalence(C, D):
    """Skeleton isomorphism search; witness or distinguishing profile."""
    reps_c, rep_c, to_rep_c = _skeleton_data(C)
    reps_d, rep_d, to_rep_d = _skeleton_data(D)
    if len(reps_c) != len(reps_d):
        return EquivalenceResult(
            reason="iso-class counts differ",
            profiles=(len(reps_c), len(reps_d)))
    SC = _full_subcat(C, reps_c)
    SD = _full_subcat(D, reps_d)
    pc, pd = _hom_profile(SC), _hom_profile(SD)
    if pc != pd:
        return EquivalenceResult(reason="hom-set cardinality profiles differ",
                                 profiles=(pc, pd))
    iso = _iso_of_skeletons(SC, SD)
    if iso is None:
        return EquivalenceResult(reason="no isomorphism of skeletons found",
                                 profiles=(pc, pd))
    if C.n_mor == 0:
        F = FinFunctor(C, D, [], [], validate=False)
        G = FinFunctor(D, C, [], [], validate=False)
        eta = CatNatTrans(identity_functor(C), compose_functors(G, F), [])
        eps = CatNatTrans(identity_functor(D), compose_functors(F, G), [])
        return EquivalenceResult(witness=EquivalenceWitness(F, G, eta, eps))

    inv_mor = {iso.mor_map[f]: f for f in range(SC.n_mor)}
    inv_obj = {iso.obj_map[x]: x for x in range(SC.n_obj)}

    rep_pos_c = {r: i for i, r in enumerate(reps_c)}
    rep_pos_d = {r: i for i, r in enumerate(reps_d)}
    inv_to_rep_c = [_inverse_in(C, f) for f in to_rep_c]
    inv_to_rep_d = [_inverse_in(D, f) for f in to_rep_d]

    def f_obj(x):
        return SD.obj_back[iso.obj_map[rep_pos_c[rep_c[x]]]]

    def f_mor(f):
        x, y = C.src_of(f), C.tgt_of(f)
        conj = C.compose(to_rep_c[y], C.compose(f, inv_to_rep_c[x]))
        return SD.mor_back[iso.mor_map[SC.mor_index[conj]]]

    def g_obj(d):
        return SC.obj_back[inv_obj[rep_pos_d[rep_d[d]]]]

    def g_mor(g):
        x, y = D.src_of(g), D.tgt_of(g)
        conj = D.compose(to_rep_d[y], D.compose(g, inv_to_rep_d[x]))
        return SC.mor_back[inv_mor[SD.mor_index[conj]]]

    F = FinFunctor(C, D, [f_obj(x) for x in range(C.n_obj)],
                   [f_mor(f) for f in range(C.n_mor)])
    G = FinFunctor(D, C, [g_obj(d) for d in range(D.n_obj)],
                   [g_mor(g) for g in range(D.n_mor)])
    eta = CatNatTrans(identity_functor(C), compose_functors(G, F), to_rep_c)
    eps = CatNatTrans(identity_functor(D), compose_functors(F, G), to_rep_d)
    assert eta.is_iso() and eps.is_iso()
    return EquivalenceResult(witness=EquivalenceWitness(F, G, eta, eps))
