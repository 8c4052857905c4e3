import math

import numpy as np
import pytest

from sparse01.canon import enumerate_structures
from sparse01.errors import InvalidArgument, IrrationalityViolation
from sparse01.expansion import (
    DecorationFamily,
    ExpandedCalculus,
    ExpansionContext,
    NewRelation,
    all_slots,
    beta_additivity_check,
    beta_pair,
    classify_plus,
    derived_exponent,
    irrationality_screen,
    is_minimal_violation,
)
from sparse01.structures import Relation, RelStructure, SubPair
from sparse01.weights import BaseContext

P = Relation("P", 1)
S = Relation("S", 2, True)


def ctx_ps(alpha=0.6, bp=-0.3, bs=-0.5, cp=0.7, cs=0.8):
    return ExpansionContext(BaseContext.graph(alpha), [NewRelation(P, bp, cp), NewRelation(S, bs, cs)])


def pendant(ctx, colored=True, s_edge=False, n=2, edges=((0, 1),)):
    extra = {"E": list(edges), "P": [(1,)] if colored else [], "S": [(0, 1)] if s_edge else []}
    return SubPair(RelStructure(ctx.vocab, n, extra), {0})


def test_beta_examples():
    ctx = ctx_ps()
    assert beta_pair(pendant(ctx), ctx) == pytest.approx(0.1)
    assert beta_pair(pendant(ctx, s_edge=True), ctx) == pytest.approx(-0.4)
    same = SubPair(RelStructure(ctx.vocab, 1, {"P": [(0,)]}), {0})
    assert beta_pair(same, ctx) == 0.0


def test_beta_requires_strong_reduct():
    ctx = ctx_ps()
    B = RelStructure(ctx.vocab, 3, {"E": [(0, 2), (1, 2)]})
    with pytest.raises(InvalidArgument):
        beta_pair(SubPair(B, {0, 1}), ctx)


def test_context_validation():
    base = BaseContext.graph(0.6)
    with pytest.raises(InvalidArgument):
        ExpansionContext(base, [NewRelation(P, 0.1, 0.5)])
    with pytest.raises(InvalidArgument):
        ExpansionContext(base, [NewRelation(P, -0.1, 1.0)])
    with pytest.raises(InvalidArgument):
        ExpansionContext(base, [NewRelation(Relation("E", 2, True), -0.1, 0.5)])
    with pytest.raises(InvalidArgument):
        ExpansionContext(base, [NewRelation(P, -0.1, 0.5)], h_mode="sqrt")


def test_additivity_examples():
    ctx = ctx_ps()
    chain = RelStructure(ctx.vocab, 3, {"E": [(0, 1), (1, 2)], "P": [(1,), (2,)]})
    assert abs(beta_additivity_check(chain, {0}, {0, 1}, ctx)) <= 1e-12
    assert abs(beta_additivity_check(chain, {0}, {0}, ctx)) <= 1e-12


def test_classify_examples():
    ctx = ctx_ps()
    assert classify_plus(pendant(ctx), ctx) == "qr"
    calc = ExpandedCalculus(pendant(ctx, colored=False, s_edge=True).big, ctx)
    assert calc.beta(1, 3) == pytest.approx(-0.1)
    assert calc.is_b(1, 3) and not calc.is_qr(1, 3)
    plain = ExpansionContext(BaseContext.graph(0.6))
    cn = SubPair(RelStructure(plain.vocab, 3, {"E": [(0, 2), (1, 2)]}), {0, 1})
    c = ExpandedCalculus(cn.big, plain)
    assert c.is_b(3, 7)
    assert classify_plus(cn, plain) in ("j", "b")


def test_zero_beta_on_minimal_pair_raises():
    ctx = ExpansionContext(BaseContext.graph(0.5), [NewRelation(S, -0.5, 0.5)])
    B = RelStructure(ctx.vocab, 2, {"E": [(0, 1)], "S": [(0, 1)]})
    with pytest.raises(IrrationalityViolation):
        classify_plus(SubPair(B, {0}), ctx)


def test_derived_exponent():
    ctx = ctx_ps()
    e, c = derived_exponent(pendant(ctx), ctx)
    assert e == pytest.approx(0.1) and c == pytest.approx(0.7)
    e, c = derived_exponent(pendant(ctx, colored=False), ctx)
    assert e == pytest.approx(0.4) and c == 1.0
    # two new atoms: a colored vertex joined by an S edge, total 0.4 - 0.3 - 0.05
    mild = ctx_ps(bs=-0.05)
    e, c = derived_exponent(pendant(mild, s_edge=True), mild)
    assert e == pytest.approx(0.05) and c == pytest.approx(0.7 * 0.8)
    with pytest.raises(InvalidArgument):
        derived_exponent(pendant(ctx, s_edge=True), ctx)


def test_screen_examples():
    ctx = ExpansionContext(BaseContext.graph(0.5), [NewRelation(S, -0.5, 0.5)])
    found = irrationality_screen(ctx, 4, 2)
    kinds = {v.kind for v in found}
    assert kinds == {"base", "beta"}
    beta = [v for v in found if v.kind == "beta"]
    assert len(beta) == 1 and beta[0].structure.n == 2
    assert all(abs(v.value) <= 1e-9 for v in found)
    # two base vertices with two common neighbours: 2 - 4 * 0.5 = 0
    assert any(v.kind == "base" and v.structure.n == 4 and len(v.small) == 2 for v in found)
    assert is_minimal_violation(beta[0], ctx)
    plain = ExpansionContext(BaseContext.graph(math.sqrt(2) / 4))
    assert irrationality_screen(plain, 5) == []
    with pytest.raises(InvalidArgument):
        irrationality_screen(plain, 8)


def test_decoration_family_matches_beta_pair():
    ctx = ctx_ps(alpha=0.45, bp=-0.2, bs=-0.35)
    rng = np.random.default_rng(3)
    levels = enumerate_structures(ctx.base.vocab, 4)
    for n in (2, 3, 4):
        for G in levels[n]:
            slots = all_slots(n, ctx)
            decs = rng.integers(0, 1 << len(slots), size=6)
            fam = DecorationFamily(G, ctx, slots, decs)
            calc = fam.calc
            for X in range(calc.full):
                if not calc.is_strong(X, calc.full):
                    continue
                vals = fam.beta(X, calc.full)
                for i in range(len(decs)):
                    pair = SubPair(fam.structure(i), calc.members(X))
                    assert vals[i] == pytest.approx(beta_pair(pair, ctx), abs=1e-12)


def test_reduct_compatibility_and_invariance():
    ctx = ctx_ps(alpha=0.45, bp=-0.2, bs=-0.35)
    rng = np.random.default_rng(11)
    for S_ in enumerate_structures(ctx.vocab, 3)[3]:
        calc = ExpandedCalculus(S_, ctx)
        perm = list(rng.permutation(3))
        other = ExpandedCalculus(S_.relabel(perm), ctx)
        for X in range(calc.full + 1):
            Y = calc.full
            if X != Y and calc.is_algebraic(X, Y):
                assert calc.is_b(X, Y)
            if X != Y and calc.is_t(X, Y):
                assert calc.is_strong(X, Y)
            image = other.mask(perm[x] for x in calc.members(X))
            assert calc.kind(X, Y) == other.kind(image, Y)


def test_iterated_expansion_is_additive():
    base = BaseContext.graph(0.45)
    first = ExpansionContext(base, [NewRelation(P, -0.2, 0.6)])
    both = first.extend([NewRelation(S, -0.1, 0.5)])
    direct = ExpansionContext(base, [NewRelation(P, -0.2, 0.6), NewRelation(S, -0.1, 0.5)])
    B = RelStructure(both.vocab, 3, {"E": [(0, 1), (1, 2)], "P": [(1,), (2,)], "S": [(0, 2), (1, 2)]})
    pair = SubPair(B, {0})
    only_p = SubPair(B.reduct(first.vocab), {0})
    expected = beta_pair(only_p, first) + 2 * -0.1
    assert beta_pair(pair, both) == pytest.approx(expected)
    assert beta_pair(pair, direct) == pytest.approx(expected)


def test_overrides_by_signature():
    base = BaseContext.graph(0.6)
    ctx = ExpansionContext(base, [NewRelation(S, -0.5, 0.5)], overrides={("S", (1,)): (-0.1, 0.9)})
    on_edge = SubPair(RelStructure(ctx.vocab, 2, {"E": [(0, 1)], "S": [(0, 1)]}), {0})
    assert beta_pair(on_edge, ctx) == pytest.approx(0.3)
    with pytest.raises(InvalidArgument):
        ExpansionContext(base, [NewRelation(S, -0.5, 0.5)], overrides={("Q", (0,)): (-0.1, 0.9)})
