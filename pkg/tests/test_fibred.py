"""Groupoid fibrations: lifts, cleavage forms, rebuilds, loop refinement."""

import random

import pytest

from gpdcentre.fibred import (aut_fibration, analyze_fibration,
                              check_balanced, check_fibration,
                              check_forms_equivalence, check_grothendieck,
                              check_monoidale, check_ps_functor,
                              check_ps_transform, cleavage_form,
                              comparison_functor, constant_cleavage_form,
                              double_projection, fibre_pseudofunctor,
                              grothendieck, h_monoidale, hat_of_aut_ps,
                              haut_monoidale, identity_transform,
                              mod2_fibration, random_sub_pseudofunctor,
                              sign_fibration, z_component,
                              _haut_flat_pentagon)
from gpdcentre.fincat import CategoryError, cyclic_group, symmetric_group, \
    trivial_group


def even_permutation_ids():
    """Morphism ids of the even permutations, by direct inversion count."""
    S3 = symmetric_group(3)
    out = []
    for k in range(S3.n_mor):
        perm = S3.mor_labels[k]
        inv = sum(1 for i in range(3) for j in range(i + 1, 3)
                  if perm[i] > perm[j])
        if inv % 2 == 0:
            out.append(k)
    return tuple(out)


_built = {}


def built(name):
    """Shared fibration instances; tamper tests must build their own."""
    if name not in _built:
        F = mod2_fibration() if name == "mod2" else sign_fibration()
        fibA, Haut = aut_fibration(F)
        _built[name] = (F, fibA, Haut)
    return _built[name]


_monos = {}


def built_mono(name):
    if name not in _monos:
        _F, _fibA, Haut = built(name)
        _monos[name] = haut_monoidale(Haut)
    return _monos[name]


# -- projections and lifts -----------------------------------------------------


def test_mod2_fibration_oracle():
    F = built("mod2")[0]
    assert F.total.n_mor == 4 and F.base.n_mor == 2
    assert [(C.n_obj, C.n_mor) for C in F.fibres] == [(1, 2)]
    # verticals of the 4-cycle are its even powers
    assert F.fibres[0].mor_global == (0, 2)
    # least lift of the base generator at the only object
    assert F.sigma[(1, 0)] == 1
    assert F.sigma[(0, 0)] == 0
    rep = check_fibration(F)
    assert rep.passed and len(rep.entries) == 4


def test_sign_fibration_oracle():
    F = built("sign")[0]
    assert [(C.n_obj, C.n_mor) for C in F.fibres] == [(1, 3)]
    assert F.fibres[0].mor_global == even_permutation_ids()
    assert check_fibration(F).passed


def test_lifts_project_and_land_correctly():
    for name in ("mod2", "sign"):
        F = built(name)[0]
        for (g, t), m in F.sigma.items():
            assert F.proj.on_mor(m) == g
            assert F.total.tgt_of(m) == t


def test_double_projection_is_not_a_fibration():
    with pytest.raises(CategoryError) as err:
        analyze_fibration(double_projection())
    assert "no lift" in str(err.value)
    assert err.value.witness == (1, 0)


def test_transition_module_oracle():
    F = mod2_fibration()
    H, _CF = fibre_pseudofunctor(F)
    M = H.trans[1]
    # arrows over the base generator are the odd powers of the 4-cycle
    assert M.total == 2
    assert sorted(M.labels) == [1, 3]
    assert check_ps_functor(H).passed


def test_fibre_pseudofunctor_is_cached():
    F = built("mod2")[0]
    assert fibre_pseudofunctor(F) is fibre_pseudofunctor(F)


def test_ps_functor_detects_collapsed_composition_cell():
    F = mod2_fibration()
    H, _CF = fibre_pseudofunctor(F)
    cell = H.comp_constraint[(1, 1)]
    cs = list(cell.comps)
    assert len(cs) >= 2
    cs[0] = cs[1]
    cell.comps = tuple(cs)
    assert ("composition-cell", (1, 1)) in H.coherence_failures()


def test_ps_functor_detects_shifted_unit_cell():
    F = mod2_fibration()
    H, _CF = fibre_pseudofunctor(F)
    eta = H.unit_constraint[0]
    cs = list(eta.comps)
    assert sorted(cs) == [0, 1]
    eta.comps = (cs[1], cs[0])
    names = {name for name, _w in H.coherence_failures()}
    assert "left-unit-coherence" in names or "right-unit-coherence" in names


# -- cleavage forms and the rebuild --------------------------------------------


def test_forms_equivalence_reports():
    for name in ("mod2", "sign"):
        rep = check_forms_equivalence(built(name)[0])
        assert rep.passed, rep.failures()


def test_constant_form_over_trivial_fibre_rebuilds_base():
    base = cyclic_group(2)
    CF = constant_cleavage_form(base, trivial_group())
    GF = grothendieck(CF)
    assert GF.total == base


def test_constant_form_over_trivial_base_rebuilds_fibre():
    C = cyclic_group(4)
    CF = constant_cleavage_form(trivial_group(), C)
    GF = grothendieck(CF)
    assert GF.total == C


def test_grothendieck_round_trip():
    for name in ("mod2", "sign"):
        rep = check_grothendieck(built(name)[0])
        assert rep.passed, rep.failures()
        assert [e["check_id"] for e in rep.entries] == [
            "cleavage-form-valid", "total-rebuilt", "comparison-functorial",
            "comparison-bijective", "projections-agree"]


def test_comparison_functor_tracks_lifts():
    F = built("mod2")[0]
    GF = grothendieck(cleavage_form(F))
    K = comparison_functor(F, GF)
    for k, (g, v) in enumerate(GF.mor_pairs):
        assert F.proj.on_mor(K.on_mor(k)) == g


# -- loop refinement -----------------------------------------------------------


def test_aut_fibration_shapes():
    fibA = built("mod2")[1]
    assert [(C.n_obj, C.n_mor) for C in fibA.fibres] == [(2, 4), (2, 4)]
    fibB = built("sign")[1]
    assert [(C.n_obj, C.n_mor) for C in fibB.fibres] == [(3, 9), (3, 9)]


def test_aut_fibration_identity_lifts():
    for name in ("mod2", "sign"):
        fibA = built(name)[1]
        assert check_fibration(fibA).passed


def test_haut_pairing_block_oracles():
    mono, _bal = built_mono("mod2")
    fam = mono.families[0]
    # two commuting verticals pair freely over the unit grade
    assert fam.P(0, 0).block_size(0, 0) == 4
    monoS, _balS = built_mono("sign")
    famS = monoS.families[0]
    for a in famS.grades:
        for b in famS.grades:
            P = famS.P(a, b)
            assert P.total == 81
            sizes = {P.block_size(bb, l)
                     for bb in range(P.cod.n_obj)
                     for l in range(P.dom.n_obj)}
            # even loops are central among verticals, so the unit grade
            # pairs freely; odd loops spread over their conjugacy orbit
            assert sizes == ({0, 9} if (a, b) == (0, 0) else {3})


def test_haut_monoidale_reports():
    for name in ("mod2", "sign"):
        mono, _bal = built_mono(name)
        rep = check_monoidale(mono)
        assert rep.counts() == {"pass": 30, "fail": 0, "skipped": 0}, \
            rep.failures()


def test_flat_pentagon_detects_tampered_associator():
    F = mod2_fibration()
    _fibA, Haut = aut_fibration(F)
    mono, _bal = haut_monoidale(Haut)
    fam = mono.families[0]
    ok, wit = _haut_flat_pentagon(Haut, fam, 0, 0, 1, 1, 0)
    assert ok and wit is None
    cell = fam.assoc(0, 1, 1)
    cs = list(cell.comps)
    p = next(i for i in range(len(cs)) if cs[i] != cs[0])
    cs[0], cs[p] = cs[p], cs[0]
    cell.comps = tuple(cs)
    ok, wit = _haut_flat_pentagon(Haut, fam, 0, 0, 1, 1, 0)
    assert not ok
    assert wit["grades"] == (0, 1, 1, 0)


def test_balance_reports():
    for name in ("mod2", "sign"):
        _mono, bal = built_mono(name)
        rep = check_balanced(bal)
        assert rep.counts() == {"pass": 35, "fail": 0, "skipped": 0}, \
            rep.failures()


def test_h_monoidale_reports():
    for name in ("mod2", "sign"):
        F = built(name)[0]
        H, _CF = fibre_pseudofunctor(F)
        rep = check_monoidale(h_monoidale(H))
        assert rep.passed and len(rep.entries) == 6, rep.failures()


# -- summed fibres and the comparison ------------------------------------------


def test_hat_oracle_mod2():
    Haut = built("mod2")[2]
    H = hat_of_aut_ps(Haut)
    assert [(C.n_obj, C.n_mor) for C in H.fibres] == [(4, 8)]
    assert H.delta == ((0, 0, 1, 1),)
    assert check_ps_functor(H).passed


def test_hat_oracle_sign():
    Haut = built("sign")[2]
    H = hat_of_aut_ps(Haut)
    assert [(C.n_obj, C.n_mor) for C in H.fibres] == [(6, 18)]
    assert H.delta == ((0, 0, 0, 1, 1, 1),)
    assert check_ps_functor(H).passed


def test_hat_transitions_respect_grades():
    Haut = built("sign")[2]
    H = hat_of_aut_ps(Haut)
    G = H.base
    for f in range(G.n_mor):
        p, q = G.src_of(f), G.tgt_of(f)
        M = H.trans[f]
        fi = G.inv_of(f)
        for e in range(M.total):
            b, a = M.ba_of(e)
            # the summand at a grade maps into the conjugated grade
            conj = G.compose(G.compose(f, H.delta[p][a]), fi)
            assert H.delta[q][b] == conj


def test_z_component_oracle():
    totals = {"mod2": [8], "sign": [18]}
    for name in ("mod2", "sign"):
        F = built(name)[0]
        z = z_component(F)
        assert [z.comps[p].total for p in sorted(z.comps)] == totals[name]
        assert z.coherence_failures() == []


def test_identity_transform_coherent():
    for name in ("mod2", "sign"):
        F, _fibA, Haut = built(name)
        H, _CF = fibre_pseudofunctor(F)
        for carrier in (H, hat_of_aut_ps(Haut)):
            rep = check_ps_transform(identity_transform(carrier))
            assert rep.passed, rep.failures()


def test_random_sub_pseudofunctors_seeded():
    Haut = built("mod2")[2]
    rng = random.Random(7)
    shapes = []
    for _ in range(4):
        S = random_sub_pseudofunctor(Haut, rng)
        assert check_ps_functor(S).passed
        shapes.append(tuple(C.n_obj for C in S.fibres))
    assert shapes == [(2, 1), (2, 2), (2, 2), (1, 2)]


def test_random_sub_hats_seeded():
    Haut = built("sign")[2]
    rng = random.Random(3)
    seen = []
    for _ in range(3):
        S = random_sub_pseudofunctor(Haut, rng)
        HS = hat_of_aut_ps(S)
        assert check_ps_functor(HS).passed
        seen.append(tuple((C.n_obj, C.n_mor) for C in HS.fibres))
    assert seen == [((5, 13),), ((6, 18),), ((3, 7),)]
