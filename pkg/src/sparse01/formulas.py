"""Small first-order formulas over relational structures and their evaluation.

Evaluation is direct model checking. Existential variables draw candidates
from the neighbours of a bound variable whenever a positive atom in the body
links them, which keeps depth-two formulas cheap on sparse hosts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .structures import RelStructure


@dataclass(frozen=True)
class Atom:
    rel: str
    args: tuple

    def __str__(self):
        return f"{self.rel}({','.join(self.args)})"


@dataclass(frozen=True)
class Not:
    body: "Formula"

    def __str__(self):
        return f"~{self.body}"


@dataclass(frozen=True)
class And:
    parts: tuple

    def __str__(self):
        return "(" + " & ".join(str(p) for p in self.parts) + ")"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"

    def __str__(self):
        return f"E{self.var}.{self.body}"


Formula = Union[Atom, Not, And, Exists]


def free_vars(phi: Formula) -> set:
    if isinstance(phi, Atom):
        return set(phi.args)
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, And):
        out = set()
        for p in phi.parts:
            out |= free_vars(p)
        return out
    return free_vars(phi.body) - {phi.var}


def depth(phi: Formula) -> int:
    if isinstance(phi, Atom):
        return 0
    if isinstance(phi, Not):
        return depth(phi.body)
    if isinstance(phi, And):
        return max(depth(p) for p in phi.parts)
    return 1 + depth(phi.body)


def _guards(phi: Formula, var: str, env) -> list[str]:
    """Bound variables sharing a positive atom with ``var`` in a conjunctive position of ``phi``."""
    if isinstance(phi, Atom):
        return [a for a in phi.args if a != var and a in env] if var in phi.args else []
    if isinstance(phi, And):
        return [g for p in phi.parts for g in _guards(p, var, env)]
    if isinstance(phi, Exists) and phi.var != var:
        return _guards(phi.body, var, env)
    return []


def evaluate(phi: Formula, M: RelStructure, env: Mapping[str, int]) -> bool:
    if isinstance(phi, Atom):
        vals = tuple(env[a] for a in phi.args)
        if len(set(vals)) != len(vals):
            return False
        return M.has(phi.rel, vals)
    if isinstance(phi, Not):
        return not evaluate(phi.body, M, env)
    if isinstance(phi, And):
        return all(evaluate(p, M, env) for p in phi.parts)
    guards = _guards(phi.body, phi.var, env)
    if guards:
        cands = sorted(M.neighbors()[env[guards[0]]])
    else:
        cands = range(M.n)
    inner = dict(env)
    for x in cands:
        inner[phi.var] = x
        if evaluate(phi.body, M, inner):
            return True
    return False


@dataclass(frozen=True)
class CatalogFormula:
    name: str
    params: tuple
    formula: Formula

    def holds(self, M: RelStructure, tup: Sequence[int]) -> bool:
        return evaluate(self.formula, M, dict(zip(self.params, tup)))


def _E(a, b):
    return Atom("E", (a, b))


def graph_catalog() -> list[CatalogFormula]:
    """The shipped formulas: atomic and one or two existential layers, at most two parameters."""
    return [
        CatalogFormula("edge", ("a0", "a1"), _E("a0", "a1")),
        CatalogFormula("non-edge", ("a0", "a1"), Not(_E("a0", "a1"))),
        CatalogFormula("has-neighbor", ("a0",), Exists("x", _E("a0", "x"))),
        CatalogFormula("private-neighbor", ("a0", "a1"),
                       Exists("x", And((_E("a0", "x"), Not(_E("a1", "x")))))),
        CatalogFormula("path-3", ("a0", "a1"),
                       Exists("x", Exists("y", And((_E("a0", "x"), _E("x", "y"), _E("y", "a1")))))),
        CatalogFormula("triangle-at", ("a0",),
                       Exists("x", Exists("y", And((_E("a0", "x"), _E("x", "y"), _E("a0", "y")))))),
    ]
