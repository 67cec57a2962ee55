"""Convolution tensors on finite categories.

A tensor datum here is a module P(x, y; c), a unit weight J, and coherence
cells (associativity and two unit collapses) living on coend composites.
The TensorFamily engine also handles graded variants, where the carrier
splits into one category per grade and P multiplies grades; the ungraded
case is the single-grade instance.
"""

from .fincat import (CategoryError, NatTrans, SetFunctor, product,
                     terminal_category)
from .profunctor import (Module, ModuleMorphism, TensorModule, _is_unit_module,
                         associator, collapse_identity_left,
                         collapse_identity_right, compose_modules, hcomp,
                         identity_module, identity_morphism,
                         module_from_blocks, module_from_set_functor,
                         set_functor_from_module, tensor, tensor_elem,
                         tensor_mm, interchanger)
from .report import Report


def iso_by_invariant(source, target, inv_source, inv_target, validate=True):
    """Match two modules blockwise through a complete invariant.

    inv_target must be injective per block; inv_source must land in the same
    value set.  Returns the matching as a verified invertible cell.
    """
    assert source.dom == target.dom and source.cod == target.cod
    comps = [0] * source.total
    for k in range(len(source.offsets) - 1):
        sl, sh = source.offsets[k], source.offsets[k + 1]
        tl, th = target.offsets[k], target.offsets[k + 1]
        if sh - sl != th - tl:
            raise CategoryError("block sizes disagree", (k, sh - sl, th - tl))
        lut = {}
        for e in range(tl, th):
            key = inv_target(e)
            if key in lut:
                raise CategoryError("invariant not injective", (k, key))
            lut[key] = e
        for e in range(sl, sh):
            comps[e] = lut[inv_source(e)]
    cell = ModuleMorphism(source, target, comps, validate=validate)
    assert cell.is_iso()
    return cell


class TensorFamily:
    """Grade-indexed tensor data with cached composites and coherence checks.

    grades: hashable grade ids forming a monoid under mult with the given
    unit.  cat_of(a) is the carrier at grade a; p_builder(fam, a, b) is a
    module from cat(mult(a,b)) to cat(a) x cat(b); j_builder(fam, a) weights
    cat(a) over the terminal category (usually empty off the unit grade).
    assoc/lunit/runit builders produce the coherence cells on the composites
    this family constructs, so every pasting below shares instances.
    """

    def __init__(self, grades, mult, unit, cat_of, p_builder, j_builder,
                 assoc_builder, lunit_builder, runit_builder):
        self.grades = tuple(grades)
        self.unit = unit
        self._mult = mult
        self._cat_of = cat_of
        self._p_builder = p_builder
        self._j_builder = j_builder
        self._assoc_builder = assoc_builder
        self._lunit_builder = lunit_builder
        self._runit_builder = runit_builder
        self._cat = {}
        self._one = {}
        self._comp_one = {}
        self._lam_one = {}
        self._P = {}
        self._J = {}
        self._XL = {}
        self._XR = {}
        self._assoc = {}
        self._lunit_comp = {}
        self._runit_comp = {}
        self._lunit = {}
        self._runit = {}

    # -- cached building blocks ----------------------------------------------

    def mult(self, a, b):
        return self._mult(a, b)

    def cat(self, a):
        if a not in self._cat:
            self._cat[a] = self._cat_of(a)
        return self._cat[a]

    def one(self, a):
        if a not in self._one:
            self._one[a] = identity_module(self.cat(a))
        return self._one[a]

    def comp_one(self, a):
        if a not in self._comp_one:
            self._comp_one[a] = compose_modules(self.one(a), self.one(a))
        return self._comp_one[a]

    def lam_one(self, a):
        if a not in self._lam_one:
            self._lam_one[a] = collapse_identity_left(
                self.comp_one(a), self.one(a), validate=False)
        return self._lam_one[a]

    def P(self, a, b):
        if (a, b) not in self._P:
            self._P[(a, b)] = self._p_builder(self, a, b)
        return self._P[(a, b)]

    def J(self, a):
        if a not in self._J:
            self._J[a] = self._j_builder(self, a)
        return self._J[a]

    def XL(self, a, b, c):
        """The composite shaped (xy)z at grades (a, b, c)."""
        key = (a, b, c)
        if key not in self._XL:
            self._XL[key] = compose_modules(
                self.P(self.mult(a, b), c),
                tensor(self.P(a, b), self.one(c)))
        return self._XL[key]

    def XR(self, a, b, c):
        """The composite shaped x(yz) at grades (a, b, c)."""
        key = (a, b, c)
        if key not in self._XR:
            self._XR[key] = compose_modules(
                self.P(a, self.mult(b, c)),
                tensor(self.one(a), self.P(b, c)))
        return self._XR[key]

    def assoc(self, a, b, c):
        key = (a, b, c)
        if key not in self._assoc:
            self._assoc[key] = self._assoc_builder(
                self, a, b, c, self.XL(a, b, c), self.XR(a, b, c))
        return self._assoc[key]

    def lunit_comp(self, a):
        if a not in self._lunit_comp:
            self._lunit_comp[a] = compose_modules(
                self.P(self.unit, a),
                tensor(self.J(self.unit), self.one(a)))
        return self._lunit_comp[a]

    def runit_comp(self, a):
        if a not in self._runit_comp:
            self._runit_comp[a] = compose_modules(
                self.P(a, self.unit),
                tensor(self.one(a), self.J(self.unit)))
        return self._runit_comp[a]

    def lunit(self, a):
        if a not in self._lunit:
            self._lunit[a] = self._lunit_builder(self, a, self.lunit_comp(a))
        return self._lunit[a]

    def runit(self, a):
        if a not in self._runit:
            self._runit[a] = self._runit_builder(self, a, self.runit_comp(a))
        return self._runit[a]

    # -- pastings --------------------------------------------------------------

    def _nest_first(self, V, outer, T_out, inner, d):
        """Reassociate V = (P0;(M x 1d));T_out into P0;(inner x 1d) form.

        outer = the XL or XR instance whose composite with T_out is V; inner
        is the coend composite of outer's first tensor factor with the first
        column of T_out, built by the caller from cached instances.  Returns
        (chain, nested composite, nested tensor, P0).
        """
        P0 = outer.left
        T1 = outer.right
        C = compose_modules(T1, T_out)
        P0C = compose_modules(P0, C)
        s1 = associator(V, P0C, outer, C, validate=False)
        toc = tensor(inner, self.comp_one(d))
        chi = interchanger(toc, C, validate=False)
        P0toc = compose_modules(P0, toc)
        s2 = hcomp(identity_morphism(P0), chi.inverse(), P0C, P0toc,
                   validate=False)
        TI = tensor(inner, self.one(d))
        NI = compose_modules(P0, TI)
        cell = tensor_mm((identity_morphism(inner), self.lam_one(d)), toc, TI)
        s3 = hcomp(identity_morphism(P0), cell, P0toc, NI, validate=False)
        return s1.then(s2).then(s3), NI, TI, P0

    def _nest_last(self, V, outer, T_out, inner, a):
        """Mirror of _nest_first: V = (P0;(1a x M));T_out -> P0;(1a x inner)."""
        P0 = outer.left
        T1 = outer.right
        C = compose_modules(T1, T_out)
        P0C = compose_modules(P0, C)
        s1 = associator(V, P0C, outer, C, validate=False)
        toc = tensor(self.comp_one(a), inner)
        chi = interchanger(toc, C, validate=False)
        P0toc = compose_modules(P0, toc)
        s2 = hcomp(identity_morphism(P0), chi.inverse(), P0C, P0toc,
                   validate=False)
        TI = tensor(self.one(a), inner)
        NI = compose_modules(P0, TI)
        cell = tensor_mm((self.lam_one(a), identity_morphism(inner)), toc, TI)
        s3 = hcomp(identity_morphism(P0), cell, P0toc, NI, validate=False)
        return s1.then(s2).then(s3), NI, TI, P0

    def pentagon(self, a, b, c, d):
        """Compare the two rebracketing paths ((ab)c)d -> a(b(cd)).

        Returns (ok, witness); the witness names the grade tuple, the class
        where the paths differ, and the two images.
        """
        m = self.mult
        ab, bc, cd = m(a, b), m(b, c), m(c, d)
        one, P = self.one, self.P
        T_ab = tensor(P(a, b), one(c), one(d))
        T_bc = tensor(one(a), P(b, c), one(d))
        T_cd = tensor(one(a), one(b), P(c, d))
        XL_o, XR_o = self.XL(ab, c, d), self.XR(ab, c, d)
        XL_m, XR_m = self.XL(a, bc, d), self.XR(a, bc, d)
        XL_i, XR_i = self.XL(a, b, cd), self.XR(a, b, cd)
        V1 = compose_modules(XL_o, T_ab)
        V5a = compose_modules(XR_o, T_ab)
        V2 = compose_modules(XL_m, T_bc)
        V3 = compose_modules(XR_m, T_bc)
        V5 = compose_modules(XL_i, T_cd)
        V4 = compose_modules(XR_i, T_cd)
        if max(V1.total, V2.total, V3.total, V4.total,
               V5.total, V5a.total) <= 1:
            return True, None

        # two-step side: Phi at (ab, c, d), slot exchange, Phi at (a, b, cd)
        e_D = hcomp(self.assoc(ab, c, d), identity_morphism(T_ab), V1, V5a,
                    validate=False)
        xi = self._slot_commute(V5a, V5, XR_o, XL_i, T_ab, T_cd,
                                a, b, c, d)
        e_E = hcomp(self.assoc(a, b, cd), identity_morphism(T_cd), V5, V4,
                    validate=False)
        path2 = e_D.then(xi).then(e_E)

        # three-step side: inner Phi, Phi at (a, bc, d), inner Phi again
        e_A = self._edge_inner_first(V1, V2, XL_o, XL_m, T_ab, T_bc,
                                     a, b, c, d)
        e_B = hcomp(self.assoc(a, bc, d), identity_morphism(T_bc), V2, V3,
                    validate=False)
        e_C = self._edge_inner_last(V3, V4, XR_m, XR_i, T_bc, T_cd,
                                    a, b, c, d)
        path3 = e_A.then(e_B).then(e_C)

        if path2.comps == path3.comps:
            return True, None
        for e in range(V1.total):
            if path2.comps[e] != path3.comps[e]:
                return False, {"grades": (a, b, c, d), "class": e,
                               "two_step": path2.comps[e],
                               "three_step": path3.comps[e]}
        return False, {"grades": (a, b, c, d)}

    def _edge_inner_first(self, V1, V2, XL_o, XL_m, T_ab, T_bc, a, b, c, d):
        """Phi(a, b, c) whiskered in the first tensor slot, fourth slot kept."""
        XL3, XR3 = self.XL(a, b, c), self.XR(a, b, c)
        phi = self.assoc(a, b, c)
        left, N1, T_N1, P0 = self._nest_first(V1, XL_o, T_ab, XL3, d)
        T_N2 = tensor(XR3, self.one(d))
        N2 = compose_modules(P0, T_N2)
        mid = hcomp(identity_morphism(P0),
                    tensor_mm((phi, identity_morphism(self.one(d))),
                              T_N1, T_N2),
                    N1, N2, validate=False)
        right, N2b, _, _ = self._nest_first(V2, XL_m, T_bc, XR3, d)
        assert N2b.same_tables(N2)
        back = ModuleMorphism(N2, V2, right.inverse().comps, validate=False)
        return left.then(mid).then(back)

    def _edge_inner_last(self, V3, V4, XR_m, XR_i, T_bc, T_cd, a, b, c, d):
        """Phi(b, c, d) whiskered in the last slots, first slot kept."""
        XL3, XR3 = self.XL(b, c, d), self.XR(b, c, d)
        phi = self.assoc(b, c, d)
        left, N3, T_N3, P0 = self._nest_last(V3, XR_m, T_bc, XL3, a)
        T_N4 = tensor(self.one(a), XR3)
        N4 = compose_modules(P0, T_N4)
        mid = hcomp(identity_morphism(P0),
                    tensor_mm((identity_morphism(self.one(a)), phi),
                              T_N3, T_N4),
                    N3, N4, validate=False)
        right, N4b, _, _ = self._nest_last(V4, XR_i, T_cd, XR3, a)
        assert N4b.same_tables(N4)
        back = ModuleMorphism(N4, V4, right.inverse().comps, validate=False)
        return left.then(mid).then(back)

    def _slot_commute(self, V5a, V5, XR_o, XL_i, T_ab, T_cd, a, b, c, d):
        """(ab)(cd) expressed outer-first equals inner-first, via P x P."""
        m = self.mult
        ab, cd = m(a, b), m(c, d)
        Pof = XR_o.left
        assert XL_i.left is Pof
        # outer-first expression
        Ta = XR_o.right                      # tensor(one(ab), P(c, d))
        Ca = compose_modules(Ta, T_ab)
        PofCa = compose_modules(Pof, Ca)
        sA = associator(V5a, PofCa, XR_o, Ca, validate=False)
        c1 = compose_modules(self.one(ab), self.P(a, b))
        T_cd_ones = tensor(self.one(c), self.one(d))
        c2 = compose_modules(self.P(c, d), T_cd_ones)
        tocA = tensor(c1, c2)
        chiA = interchanger(tocA, Ca, validate=False)
        PP = tensor(self.P(a, b), self.P(c, d))
        kapA = chiA.inverse().then(tensor_mm(
            (collapse_identity_left(c1, self.P(a, b), validate=False),
             collapse_identity_right(c2, self.P(c, d), validate=False)),
            tocA, PP))
        PofPP = compose_modules(Pof, PP)
        sB = hcomp(identity_morphism(Pof), kapA, PofCa, PofPP,
                   validate=False)
        # inner-first expression
        Tb = XL_i.right                      # tensor(P(a, b), one(cd))
        Cb = compose_modules(Tb, T_cd)
        PofCb = compose_modules(Pof, Cb)
        sC = associator(V5, PofCb, XL_i, Cb, validate=False)
        T_ab_ones = tensor(self.one(a), self.one(b))
        c1b = compose_modules(self.P(a, b), T_ab_ones)
        c2b = compose_modules(self.one(cd), self.P(c, d))
        tocB = tensor(c1b, c2b)
        chiB = interchanger(tocB, Cb, validate=False)
        kapB = chiB.inverse().then(tensor_mm(
            (collapse_identity_right(c1b, self.P(a, b), validate=False),
             collapse_identity_left(c2b, self.P(c, d), validate=False)),
            tocB, PP))
        sD = hcomp(identity_morphism(Pof), kapB, PofCb, PofPP,
                   validate=False)
        return sA.then(sB).then(sD.inverse()).then(sC.inverse())

    def triangle(self, a, b):
        """Unit collapse through the middle slot: both paths to P(a, b)."""
        e0 = self.unit
        J = self.J(e0)
        XLu, XRu = self.XL(a, e0, b), self.XR(a, e0, b)
        TJ = tensor(self.one(a), J, self.one(b))
        S = compose_modules(XLu, TJ)
        Pab = self.P(a, b)
        if S.total == 0 or (S.total == 1 and Pab.total == 1):
            return True, None
        T11 = tensor(self.one(a), self.one(b))
        PF = compose_modules(Pab, T11)
        rho_final = collapse_identity_right(PF, Pab, validate=False)

        # right-unit path
        T1 = XLu.right                       # tensor(P(a, e0), one(b))
        C = compose_modules(T1, TJ)
        PabC = compose_modules(Pab, C)
        s1 = associator(S, PabC, XLu, C, validate=False)
        c1 = self.runit_comp(a)
        c2 = self.comp_one(b)
        toc = tensor(c1, c2)
        chi = interchanger(toc, C, validate=False)
        Pabtoc = compose_modules(Pab, toc)
        s2 = hcomp(identity_morphism(Pab), chi.inverse(), PabC, Pabtoc,
                   validate=False)
        s3 = hcomp(identity_morphism(Pab),
                   tensor_mm((self.runit(a), self.lam_one(b)), toc, T11),
                   Pabtoc, PF, validate=False)
        path_rho = s1.then(s2).then(s3).then(rho_final)

        # associativity-then-left-unit path
        S2 = compose_modules(XRu, TJ)
        t0 = hcomp(self.assoc(a, e0, b), identity_morphism(TJ), S, S2,
                   validate=False)
        T2 = XRu.right                       # tensor(one(a), P(e0, b))
        C2 = compose_modules(T2, TJ)
        PabC2 = compose_modules(Pab, C2)
        t1 = associator(S2, PabC2, XRu, C2, validate=False)
        c1b = self.comp_one(a)
        c2b = self.lunit_comp(b)
        tocb = tensor(c1b, c2b)
        chib = interchanger(tocb, C2, validate=False)
        Pabtocb = compose_modules(Pab, tocb)
        t2 = hcomp(identity_morphism(Pab), chib.inverse(), PabC2, Pabtocb,
                   validate=False)
        t3 = hcomp(identity_morphism(Pab),
                   tensor_mm((self.lam_one(a), self.lunit(b)), tocb, T11),
                   Pabtocb, PF, validate=False)
        path_phi = t0.then(t1).then(t2).then(t3).then(rho_final)

        if path_rho.comps == path_phi.comps:
            return True, None
        for e in range(S.total):
            if path_rho.comps[e] != path_phi.comps[e]:
                return False, {"grades": (a, b), "class": e,
                               "unit_path": path_rho.comps[e],
                               "assoc_path": path_phi.comps[e]}
        return False, {"grades": (a, b)}

    def coherence_report(self, report, prefix=""):
        """Pentagon over all grade quadruples and triangle over all pairs."""
        single = len(self.grades) == 1
        for a in self.grades:
            for b in self.grades:
                for c in self.grades:
                    for d in self.grades:
                        ok, wit = self.pentagon(a, b, c, d)
                        name = "pentagon" if single else \
                            "pentagon(%s,%s,%s,%s)" % (a, b, c, d)
                        report.add(prefix + name, ok, wit)
        for a in self.grades:
            for b in self.grades:
                ok, wit = self.triangle(a, b)
                name = "triangle" if single else "triangle(%s,%s)" % (a, b)
                report.add(prefix + name, ok, wit)
        return report


class Promonoidal:
    """Tensor-and-unit data on one category with verified structure cells.

    P: module from base to base x base.  J: module from base to the terminal
    category.  assoc: invertible cell between the two triple composites.
    left_unit / right_unit: invertible collapses onto the hom module.
    """

    def __init__(self, base, family, deep=False):
        self.base = base
        self.family = family
        e = family.unit
        self.P = family.P(e, e)
        self.J = family.J(e)
        self.deep_checked = False
        if deep:
            ok, wit = family.pentagon(e, e, e, e)
            if not ok:
                raise CategoryError("pentagon fails", wit)
            ok, wit = family.triangle(e, e)
            if not ok:
                raise CategoryError("triangle fails", wit)
            self.deep_checked = True

    # structure cells can be big; built on first use and cached by the family
    @property
    def assoc(self):
        return self.family.assoc(self.family.unit, self.family.unit,
                                 self.family.unit)

    @property
    def left_unit(self):
        return self.family.lunit(self.family.unit)

    @property
    def right_unit(self):
        return self.family.runit(self.family.unit)


def _vacuous_cell(source, target):
    assert source.total <= 1 and target.total <= 1
    return ModuleMorphism(source, target, list(range(source.total)),
                          validate=True)


def _cartesian_assoc(fam, a, b, c, XL, XR):
    if XL.total <= 1 and XR.total <= 1:
        return _vacuous_cell(XL, XR)
    A = fam.cat(a)
    P = fam.P(a, b)
    TL, TR = XL.right, XR.right
    one = fam.one(c)
    one_a = fam.one(a)

    def inv_l(cls):
        _, m, n = XL.labels[cls]
        u, v = fam.P(fam.mult(a, b), c).labels[m]
        pe, oe = TL.labels[n]
        f1, g1 = P.labels[pe]
        h = one.labels[oe]
        return (A.compose(u, f1), A.compose(u, g1), A.compose(v, h))

    def inv_r(cls):
        _, m, n = XR.labels[cls]
        u, v = fam.P(a, fam.mult(b, c)).labels[m]
        oe, pe = TR.labels[n]
        h = one_a.labels[oe]
        f2, g2 = fam.P(b, c).labels[pe]
        return (A.compose(u, h), A.compose(v, f2), A.compose(v, g2))

    return iso_by_invariant(XL, XR, inv_l, inv_r)


def _cartesian_lunit(fam, a, comp):
    one = fam.one(a)
    if comp.total <= 1 and one.total <= 1:
        return _vacuous_cell(comp, one)
    A = fam.cat(a)
    P = fam.P(fam.unit, a)
    TL = comp.right                          # tensor(J, one)
    comps = []
    for cls in range(comp.total):
        _, m, n = comp.labels[cls]
        bb, c = comp.ba_of(cls)
        u, v = P.labels[m]
        je, oe = TL.labels[n]
        f = one.labels[oe]
        comps.append(one.find(bb, c, A.compose(v, f)))
    cell = ModuleMorphism(comp, one, comps, validate=True)
    assert cell.is_iso()
    return cell


def _cartesian_runit(fam, a, comp):
    one = fam.one(a)
    if comp.total <= 1 and one.total <= 1:
        return _vacuous_cell(comp, one)
    A = fam.cat(a)
    P = fam.P(a, fam.unit)
    TR = comp.right                          # tensor(one, J)
    comps = []
    for cls in range(comp.total):
        _, m, n = comp.labels[cls]
        bb, c = comp.ba_of(cls)
        u, v = P.labels[m]
        oe, je = TR.labels[n]
        f = one.labels[oe]
        comps.append(one.find(bb, c, A.compose(u, f)))
    cell = ModuleMorphism(comp, one, comps, validate=True)
    assert cell.is_iso()
    return cell


def cartesian_promonoidal(G, deep="auto"):
    """The pairing tensor P(p, q; r) = hom(p, r) x hom(q, r), unit constant.

    deep="auto" runs the pentagon and triangle checks in the constructor
    when the composite scale is small, and leaves them to check_promonoidal
    otherwise.
    """
    A = G
    AA = product(A, A)
    square = hasattr(AA, "obj_tuple")        # false only when A is trivial

    def p_blocks(b, a):
        p, q = AA.obj_tuple(b) if square else (0, 0)
        return [(u, v) for u in A.hom(p, a) for v in A.hom(q, a)]

    def p_lact(beta, b, a, lab):
        b1, b2 = AA.mor_tuple(beta) if square else (beta, beta)
        return (A.compose(lab[0], b1), A.compose(lab[1], b2))

    def p_ract(alpha, b, a, lab):
        return (A.compose(alpha, lab[0]), A.compose(alpha, lab[1]))

    P = module_from_blocks(A, AA, p_blocks, p_lact, p_ract, validate=True)
    one_cat = terminal_category()
    J = module_from_blocks(A, one_cat,
                           lambda b, a: [0],
                           lambda beta, b, a, lab: lab,
                           lambda alpha, b, a, lab: lab,
                           validate=True)
    fam = TensorFamily(
        grades=(0,), mult=lambda x, y: 0, unit=0,
        cat_of=lambda x: A,
        p_builder=lambda f, x, y: P,
        j_builder=lambda f, x: J,
        assoc_builder=_cartesian_assoc,
        lunit_builder=_cartesian_lunit,
        runit_builder=_cartesian_runit)
    if deep == "auto":
        XL = fam.XL(0, 0, 0)
        raw = XL.total * P.total * fam.one(0).total ** 2
        deep = raw <= 50000
    return Promonoidal(A, fam, deep=deep)


def _cell_ok(cell):
    try:
        cell.validate()
    except AssertionError:
        return False, "cell is not a module map"
    except (KeyError, IndexError):
        return False, "cell is malformed"
    if not cell.is_iso():
        return False, "cell is not bijective"
    return True, None


def check_promonoidal(Pr, deep=True, command="promonoidal"):
    """Re-verify the structure cells and, when deep, the coherence pastings."""
    rep = Report(command)
    ok, wit = _cell_ok(Pr.assoc)
    rep.add("assoc-iso", ok, wit)
    ok, wit = _cell_ok(Pr.left_unit)
    rep.add("left-unit-iso", ok, wit)
    ok, wit = _cell_ok(Pr.right_unit)
    rep.add("right-unit-iso", ok, wit)
    if deep:
        e = Pr.family.unit
        ok, wit = Pr.family.pentagon(e, e, e, e)
        rep.add("pentagon", ok, wit)
        ok, wit = Pr.family.triangle(e, e)
        rep.add("triangle", ok, wit)
    else:
        rep.skip("pentagon")
        rep.skip("triangle")
    return rep


# -- convolution -----------------------------------------------------------------

def convolve(Pr, F, G):
    """The convolution of two set functors against the tensor weight P.

    (F * G)(c) is the coend over pairs (x, y) of P(x, y; c) x F(x) x G(y),
    realised with the canonical class representatives of compose_modules.
    """
    if F.dom != Pr.base:
        raise CategoryError("left functor lives on the wrong category")
    if G.dom != Pr.base:
        raise CategoryError("right functor lives on the wrong category")
    MF = module_from_set_functor(F)
    MG = module_from_set_functor(G)
    day = compose_modules(Pr.P, tensor(MF, MG))
    H = set_functor_from_module(day)
    H.day = day
    H.day_left = MF
    H.day_right = MG
    return H


def _pair_parts(T, MF, MG, n):
    """Element ids of the two tensor slots, robust to unit collapse."""
    if isinstance(T, TensorModule):
        lab = T.labels[n]
    elif _is_unit_module(T):
        lab = ()
    else:
        lab = (n,)
    out = []
    pos = 0
    for M in (MF, MG):
        if _is_unit_module(M):
            out.append(0)
        else:
            out.append(lab[pos])
            pos += 1
    return out


def pointwise_product(F, G):
    """Objectwise product functor (F x G)(c) = F(c) x G(c)."""
    assert F.dom == G.dom
    A = F.dom
    sets = [tuple((lf, lg) for lf in F.sets[x] for lg in G.sets[x])
            for x in range(A.n_obj)]
    act = []
    for m in range(A.n_mor):
        x, y = A.src_of(m), A.tgt_of(m)
        gy = G.size(y)
        row = []
        for i in range(F.size(x)):
            fi = F.act[m][i]
            for j in range(G.size(x)):
                row.append(fi * gy + G.act[m][j])
        act.append(tuple(row))
    return SetFunctor(A, sets, act, validate=False)


def day_pointwise_iso(Pr, F, G):
    """Natural isomorphism from F * G to the pointwise product.

    Valid for pairing tensors on groupoids: the class of ((u, v), (i, j))
    maps to (F(u) i, G(v) j).  Returns (forward, inverse) as verified
    natural transformations.
    """
    H = convolve(Pr, F, G)
    day, MF, MG = H.day, H.day_left, H.day_right
    A = Pr.base
    P = Pr.P
    T = day.right
    PQ = pointwise_product(F, G)
    comps = [[] for _ in range(A.n_obj)]
    for cls in range(day.total):
        _, md, n = day.labels[cls]
        c = day.ba_of(cls)[1]
        u, v = P.labels[md]
        fe, ge = _pair_parts(T, MF, MG, n)
        x = MF.ba_of(fe)[1]
        y = MG.ba_of(ge)[1]
        pf = F.act[u][fe - MF.offsets[x]]
        pg = G.act[v][ge - MG.offsets[y]]
        comps[c].append(pf * G.size(c) + pg)
    fwd = NatTrans(H, PQ, comps)
    assert fwd.is_iso()
    inv_comps = [[] for _ in range(A.n_obj)]
    for c in range(A.n_obj):
        pb = P.find(_diag_obj(P.cod, c), c, (A.idn_of(c), A.idn_of(c)))
        for i in range(F.size(c)):
            fe = MF.offsets[c] + i
            for j in range(G.size(c)):
                ge = MG.offsets[c] + j
                n0 = tensor_elem(T, (MF, MG), (fe, ge))
                cls = day.pair_class(pb, n0)
                inv_comps[c].append(cls - day.offsets[c])
    inv = NatTrans(PQ, H, inv_comps)
    assert inv.is_iso()
    for c in range(A.n_obj):
        for i in range(H.size(c)):
            assert inv.apply(c, fwd.apply(c, i)) == i
        for i in range(PQ.size(c)):
            assert fwd.apply(c, inv.apply(c, i)) == i
    return fwd, inv


def _diag_obj(AA, c):
    """Object index of (c, c) in the square product category."""
    if hasattr(AA, "obj_index"):
        return AA.obj_index((c, c))
    return 0


def convolve_unit_left(Pr, G):
    """The unit law: J * G is naturally isomorphic to G, witnessed."""
    JF = set_functor_from_module(Pr.J)
    H = convolve(Pr, JF, G)
    day, MJ, MG = H.day, H.day_left, H.day_right
    lu = Pr.left_unit
    C_lu = lu.source
    TJ1 = C_lu.right
    fam = Pr.family
    one = fam.one(fam.unit)
    A = Pr.base
    comps = [[] for _ in range(A.n_obj)]
    for cls in range(day.total):
        _, md, n = day.labels[cls]
        c = day.ba_of(cls)[1]
        je, ge = _pair_parts(day.right, MJ, MG, n)
        y = MG.ba_of(ge)[1]
        one_e = one.find(y, y, A.idn_of(y))
        n_lu = tensor_elem(TJ1, (Pr.J, one), (je, one_e))
        phi = one.labels[lu.apply(C_lu.pair_class(md, n_lu))]
        comps[c].append(G.act[phi][ge - MG.offsets[y]])
    eta = NatTrans(H, G, comps)
    assert eta.is_iso()
    return eta


def convolve_unit_right(Pr, F):
    """The unit law: F * J is naturally isomorphic to F, witnessed."""
    JF = set_functor_from_module(Pr.J)
    H = convolve(Pr, F, JF)
    day, MF, MJ = H.day, H.day_left, H.day_right
    ru = Pr.right_unit
    C_ru = ru.source
    TJ1 = C_ru.right
    fam = Pr.family
    one = fam.one(fam.unit)
    A = Pr.base
    comps = [[] for _ in range(A.n_obj)]
    for cls in range(day.total):
        _, md, n = day.labels[cls]
        c = day.ba_of(cls)[1]
        fe, je = _pair_parts(day.right, MF, MJ, n)
        x = MF.ba_of(fe)[1]
        one_e = one.find(x, x, A.idn_of(x))
        n_ru = tensor_elem(TJ1, (one, Pr.J), (one_e, je))
        phi = one.labels[ru.apply(C_ru.pair_class(md, n_ru))]
        comps[c].append(F.act[phi][fe - MF.offsets[x]])
    eta = NatTrans(H, F, comps)
    assert eta.is_iso()
    return eta
