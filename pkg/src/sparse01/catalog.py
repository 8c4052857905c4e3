"""Built-in contexts, pairs, quadruples and systems, addressable by name."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .compsys import System
from .errors import InvalidArgument
from .expansion import ExpansionContext, NewRelation
from .sampler import Quad
from .structures import Relation, RelStructure, SubPair
from .weights import BaseContext


@dataclass(frozen=True)
class Entry:
    name: str
    note: str
    build: object  # zero-argument factory

    def make(self):
        return self.build()


def _colored_context():
    base = BaseContext.graph(0.45)
    return base, ExpansionContext(base, [NewRelation(Relation("P", 1), -0.2, 0.9)])


CONTEXTS = {
    e.name: e for e in [
        Entry("sparse-graph", "graph edges with exponent 0.6", lambda: (BaseContext.graph(0.6), None)),
        Entry("sparse-graph-irr", "graph edges with exponent sqrt(2)/4",
              lambda: (BaseContext.graph(math.sqrt(2) / 4), None)),
        Entry("sparse-graph-045", "graph edges with exponent 0.45", lambda: (BaseContext.graph(0.45), None)),
        Entry("colored-045", "exponent 0.45 plus a unary color P with exponent -0.2, coefficient 0.9",
              _colored_context),
        Entry("half-with-pair", "exponent 0.5 plus a binary S with exponent -0.5; has zero-weight pairs",
              lambda: _half_context()),
    ]
}


def _half_context():
    base = BaseContext.graph(0.5)
    return base, ExpansionContext(base, [NewRelation(Relation("S", 2, True), -0.5, 0.5)])


def _graph_pair(n, edges, small):
    return SubPair(RelStructure.graph(n, edges), set(small))


def _colored_pendant():
    _, x = _colored_context()
    return SubPair(RelStructure(x.vocab, 2, {"E": [(0, 1)], "P": [(1,)]}), {0})


PAIRS = {
    e.name: e for e in [
        Entry("pendant", "one new vertex joined to the base vertex", lambda: _graph_pair(2, [(0, 1)], [0])),
        Entry("common-neighbor", "a new vertex joined to both base vertices",
              lambda: _graph_pair(3, [(0, 2), (1, 2)], [0, 1])),
        Entry("triangle-over-edge", "a new vertex closing a triangle on a base edge",
              lambda: _graph_pair(3, [(0, 1), (0, 2), (1, 2)], [0, 1])),
        Entry("two-pendant-chain", "a path of two new vertices hanging from the base vertex",
              lambda: _graph_pair(3, [(0, 1), (1, 2)], [0])),
        Entry("colored-pendant", "pendant whose new vertex carries color P (context colored-045)",
              _colored_pendant),
    ]
}

PAIR_CONTEXT = {"colored-pendant": "colored-045"}

QUADS = {
    e.name: e for e in [
        Entry("pendant-quad", "D = B = an edge over one vertex; r = 2",
              lambda: Quad(RelStructure.graph(2, [(0, 1)]), frozenset({0}), frozenset({0, 1}), 2)),
        Entry("rigid-star-quad", "three base vertices with a common neighbour forced by D; r = 2",
              lambda: Quad(RelStructure.graph(4, [(0, 3), (1, 3), (2, 3)]), frozenset({0, 1, 2}),
                           frozenset({0, 1, 2, 3}), 2)),
    ]
}


def disjoint_binomial() -> System:
    return System(2, 40, [(2 * i, 2 * i + 1) for i in range(20)], [([{0, 1}], 0.3)], name="disjoint-binomial")


def overlap_two() -> System:
    F = [(i // 2, 20 + ((i + 1) // 2) % 10) for i in range(20)]
    return System(2, 40, F, [([{0, 1}], 0.3)], name="overlap-2")


SYSTEMS = {
    e.name: e for e in [
        Entry("disjoint-binomial", "20 functions with pairwise disjoint ranges in [0,40), p = 0.3",
              disjoint_binomial),
        Entry("overlap-2", "20 functions on [0,40) whose ranges overlap in a 20-cycle, p = 0.3", overlap_two),
    ]
}

KINDS = {"contexts": CONTEXTS, "pairs": PAIRS, "quads": QUADS, "systems": SYSTEMS}


def lookup(kind: str, name: str):
    table = KINDS.get(kind)
    if table is None:
        raise InvalidArgument(f"unknown catalog kind {kind!r}")
    if name not in table:
        raise InvalidArgument(f"no {kind[:-1]} named {name!r} (known: {', '.join(sorted(table))})")
    return table[name].make()


def listing(kind: str) -> list[tuple[str, str]]:
    table = KINDS.get(kind)
    if table is None:
        raise InvalidArgument(f"unknown catalog kind {kind!r}")
    return [(e.name, e.note) for e in table.values()]
