import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sparse01 import catalog
from sparse01.compsys import System
from sparse01.errors import ParseError
from sparse01.formats import (
    ContextSpec,
    contexts_equal,
    format_context,
    format_structure,
    format_system,
    parse_context,
    parse_experiment,
    parse_structure,
    parse_system,
)
from sparse01.structures import RelStructure, Vocabulary

VOCAB = Vocabulary.of("E/2s", "D/2", "P/1", "T/3")


@st.composite
def structures(draw):
    n = draw(st.integers(0, 6))
    tuples = {}
    for r in VOCAB:
        if n < r.arity:
            tuples[r.name] = []
            continue
        cand = st.lists(st.integers(0, n - 1), min_size=r.arity, max_size=r.arity, unique=True).map(tuple)
        tuples[r.name] = draw(st.lists(cand, max_size=6))
    return RelStructure(VOCAB, n, tuples)


@given(structures())
@settings(max_examples=150, deadline=None)
def test_structure_round_trip(S):
    assert parse_structure(format_structure(S)) == S


def test_context_round_trip_catalog():
    for name in catalog.CONTEXTS:
        base, x = catalog.lookup("contexts", name)
        spec = ContextSpec(base, x)
        again = parse_context(format_context(spec))
        assert contexts_equal(spec, again)
        assert format_context(again) == format_context(spec)


@given(st.floats(0.01, 0.99), st.floats(-1.0, 0.0), st.floats(0.01, 0.99), st.sampled_from(["one", "log"]))
@settings(max_examples=80, deadline=None)
def test_context_round_trip_values(alpha, beta, coeff, h):
    text = f"alpha E {alpha!r}\nnewrel S/2s beta {beta!r} coeff {coeff!r}\noverride S 1 beta -0.1 coeff 0.5\nh {h}\n"
    spec = parse_context(text)
    assert spec.base.alpha["E"] == alpha
    assert contexts_equal(spec, parse_context(format_context(spec)))


def test_system_round_trip():
    for name in catalog.SYSTEMS:
        S = catalog.lookup("systems", name)
        T = parse_system(format_system(S))
        assert (T.m, T.n, T.F, T.P, T.cls, T.p, T.name) == (S.m, S.n, S.F, S.P, S.cls, S.p, S.name)
    S = System(3, 6, [(0, 1, 2), (3, 4, 5)], [([{0}, {1, 2}], 0.25), ([{2}], 0.5)], name="mixed")
    T = parse_system(format_system(S))
    assert (T.P, T.cls, T.p) == (S.P, S.cls, S.p)


@pytest.mark.parametrize("text, line, col", [
    ("vocab E/2s\nn 3\nE 0 5\n", 3, 5),
    ("vocab E/2s\nn 3\nQ 0 1\n", 3, 1),
    ("vocab E/2s\nn x\n", 2, 3),
    ("vocab E/2s\nn 3\nE 0 1 2\n", 3, 1),
    ("E 0 1\n", 1, 1),
    ("vocab E/2s\n  n 3\nE 1 1\n", 3, 3),
])
def test_structure_errors_cite_position(text, line, col):
    with pytest.raises(ParseError) as err:
        parse_structure(text, "s.struct")
    assert (err.value.line, err.value.column) == (line, col)
    assert f"s.struct:{line}:{col}" in str(err.value)


@pytest.mark.parametrize("text, line", [
    ("alpha E 0.6\nalpha E 0.7\n", 2),
    ("alpha E 0.6\nnewrel S/2s beta 0.5 coeff 0.5\n", 2),
    ("alpha E 0.6\nnewrel S/2s beta -0.5 coeff 1.5\n", 2),
    ("alpha E zero\n", 1),
    ("alpha E 0.6\nfrobnicate\n", 2),
    ("alpha E 0.6\noverride S 1 beta -0.1 coeff 0.5\n", 2),
    ("alpha E 0.6\nh sqrt\n", 2),
])
def test_context_errors_cite_line(text, line):
    with pytest.raises(ParseError) as err:
        parse_context(text, "c.ctx")
    assert err.value.line == line


def test_context_without_alpha():
    with pytest.raises(ParseError):
        parse_context("coeff E 0.5\n")


def test_system_errors():
    for text, line in [("m 2\nn 3\nf 0 0\nclass 0 p 0.3\n", 3),
                       ("m 2\nn 3\nf 0 1\nclass 0 p 1.5\n", 4),
                       ("m 2\nn 3\nf 0 1\nclass 2 p 0.3\n", 4),
                       ("m 2\nf 0 1\n", 2)]:
        with pytest.raises(ParseError) as err:
            parse_system(text)
        assert err.value.line == line
    with pytest.raises(ParseError):
        parse_system("m 2\nn 3\nclass 0 p 0.3\n")


def test_experiment_sections():
    spec = parse_experiment(
        "# comment\n[experiment]\nkind = census_step\ntarget = 2\n\n[system]\nm 1\nn 2\nf 0\nf 1\nclass 0 p 0.5\n",
        "x.exp")
    assert spec.kind == "census_step" and spec.system_first_line == 7
    assert spec.params == {"target": "2", "system": "<inline>"}
    spec = parse_experiment("[experiment]\nkind = bracket\npair = pendant\nn = 10\n[context]\nalpha E 0.45\n")
    assert math.isclose(spec.context.base.alpha["E"], 0.45)
    for bad, line in [("[experiment]\nkind = nope\n", 2),
                      ("[experiment]\nkind = bracket\npair = pendant\n", 1),
                      ("[experiment]\nkind = screen\nsize = 3\nsize = 4\n", 4),
                      ("[experiment]\nkind = screen\nsize\n", 3),
                      ("[oops]\n", 1),
                      ("kind = screen\n", 1),
                      ("[experiment]\nkind = screen\nsize = 3\n[context]\nalpha E 0.5\nalpha E 0.6\n", 6)]:
        with pytest.raises(ParseError) as err:
            parse_experiment(bad)
        assert err.value.line == line
