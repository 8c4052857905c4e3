"""Text formats for structures, contexts, systems and experiment files.

All formats are line based: whitespace separated fields, ``#`` starts a
comment, blank lines are ignored. Every ``format_*`` output reparses to an
equal value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .errors import InvalidArgument, ParseError
from .expansion import H_MODES, ExpansionContext, NewRelation
from .structures import Relation, RelStructure, Vocabulary
from .weights import BaseContext


@dataclass
class _Line:
    number: int
    fields: list[str]
    columns: list[int]
    text: str


def _lines(text: str, first_line: int = 1) -> Iterator[_Line]:
    for i, raw in enumerate(text.splitlines()):
        body = raw.split("#", 1)[0]
        fields, cols = [], []
        pos = 0
        for tok in body.split():
            pos = body.index(tok, pos)
            fields.append(tok)
            cols.append(pos + 1)
            pos += len(tok)
        if fields:
            yield _Line(first_line + i, fields, cols, raw)


def _err(line: _Line, msg: str, idx: int = 0, source=None) -> ParseError:
    col = line.columns[idx] if idx < len(line.columns) else len(line.text) + 1
    return ParseError(msg, line.number, col, source)


def _int(line: _Line, idx: int, source=None) -> int:
    if idx >= len(line.fields):
        raise _err(line, "missing integer", idx, source)
    tok = line.fields[idx]
    try:
        return int(tok)
    except ValueError:
        raise _err(line, f"expected an integer, got {tok!r}", idx, source) from None


def _float(line: _Line, idx: int, source=None) -> float:
    if idx >= len(line.fields):
        raise _err(line, "missing number", idx, source)
    tok = line.fields[idx]
    try:
        v = float(tok)
    except ValueError:
        raise _err(line, f"expected a number, got {tok!r}", idx, source) from None
    if not math.isfinite(v):
        raise _err(line, f"number {tok!r} is not finite", idx, source)
    return v


def _fmt_float(x: float) -> str:
    return repr(float(x))


# --------------------------------------------------------------- structures

def parse_structure(text: str, source=None, first_line: int = 1) -> RelStructure:
    vocab = None
    n = None
    tuples: dict[str, list] = {}
    for ln in _lines(text, first_line):
        head = ln.fields[0]
        if head == "vocab":
            if vocab is not None:
                raise _err(ln, "second vocab line", 0, source)
            rels = []
            for i, tok in enumerate(ln.fields[1:], 1):
                try:
                    rels.append(Relation.parse(tok))
                except InvalidArgument as e:
                    raise _err(ln, str(e), i, source) from None
            try:
                vocab = Vocabulary(tuple(rels))
            except InvalidArgument as e:
                raise _err(ln, str(e), 0, source) from None
            tuples = {r.name: [] for r in rels}
        elif head == "n":
            if vocab is None:
                raise _err(ln, "'n' before 'vocab'", 0, source)
            if n is not None:
                raise _err(ln, "second 'n' line", 0, source)
            if len(ln.fields) != 2:
                raise _err(ln, "expected 'n <count>'", 0, source)
            n = _int(ln, 1, source)
            if n < 0:
                raise _err(ln, "negative universe size", 1, source)
        else:
            if vocab is None or n is None:
                raise _err(ln, "tuple before the 'vocab' and 'n' lines", 0, source)
            if head not in vocab:
                raise _err(ln, f"unknown relation {head!r}", 0, source)
            rel = vocab[head]
            if len(ln.fields) - 1 != rel.arity:
                raise _err(ln, f"{head} takes {rel.arity} arguments, got {len(ln.fields) - 1}", 0, source)
            tup = tuple(_int(ln, i, source) for i in range(1, len(ln.fields)))
            for i, v in enumerate(tup, 1):
                if not 0 <= v < n:
                    raise _err(ln, f"element {v} outside 0..{n - 1}", i, source)
            if len(set(tup)) != len(tup):
                raise _err(ln, "tuple repeats an element", 1, source)
            tuples[head].append(tup)
    if vocab is None:
        raise ParseError("missing 'vocab' line", 1, 1, source)
    if n is None:
        raise ParseError("missing 'n' line", 1, 1, source)
    return RelStructure(vocab, n, tuples)


def format_structure(S: RelStructure) -> str:
    out = [f"vocab {S.vocab}", f"n {S.n}"]
    for r in S.vocab:
        for t in sorted(S.tuples(r.name)):
            out.append(" ".join([r.name, *map(str, t)]))
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------- contexts

@dataclass
class ContextSpec:
    base: BaseContext
    expansion: ExpansionContext | None = None

    @property
    def xctx(self):
        return self.expansion


def parse_context(text: str, source=None, first_line: int = 1) -> ContextSpec:
    """Base exponents (``alpha``/``coeff``) plus optional new relations.

    Lines: ``vocab E/2s``, ``alpha E 0.6``, ``coeff E 1.0``, ``eps_cap 0.5``,
    ``newrel S/2 beta -0.5 coeff 0.8``, ``override S 1 beta -0.2 coeff 0.9``
    (signature counts comma separated) and ``h one|log``. Without a ``vocab``
    line every relation named by ``alpha`` is a symmetric binary one.
    """
    vocab_line = None
    vocab = None
    alpha: dict[str, float] = {}
    coeff: dict[str, float] = {}
    eps_cap = 0.5
    news: list[tuple[_Line, NewRelation]] = []
    overrides: list[tuple[_Line, tuple, tuple]] = []
    h_mode = "one"
    for ln in _lines(text, first_line):
        head = ln.fields[0]
        if head == "vocab":
            if vocab_line is not None:
                raise _err(ln, "second vocab line", 0, source)
            vocab_line = ln
            try:
                vocab = Vocabulary.of(*ln.fields[1:])
            except InvalidArgument as e:
                raise _err(ln, str(e), 1, source) from None
        elif head in ("alpha", "coeff"):
            if len(ln.fields) != 3:
                raise _err(ln, f"expected '{head} <relation> <value>'", 0, source)
            target = alpha if head == "alpha" else coeff
            if ln.fields[1] in target:
                raise _err(ln, f"duplicate {head} for {ln.fields[1]}", 1, source)
            target[ln.fields[1]] = _float(ln, 2, source)
        elif head == "eps_cap":
            if len(ln.fields) != 2:
                raise _err(ln, "expected 'eps_cap <value>'", 0, source)
            eps_cap = _float(ln, 1, source)
        elif head == "h":
            if len(ln.fields) != 2 or ln.fields[1] not in H_MODES:
                raise _err(ln, f"expected 'h' followed by one of {', '.join(H_MODES)}", 1, source)
            h_mode = ln.fields[1]
        elif head == "newrel":
            if len(ln.fields) != 6 or ln.fields[2] != "beta" or ln.fields[4] != "coeff":
                raise _err(ln, "expected 'newrel NAME/ARITY beta <b> coeff <c>'", 0, source)
            try:
                rel = Relation.parse(ln.fields[1])
            except InvalidArgument as e:
                raise _err(ln, str(e), 1, source) from None
            news.append((ln, NewRelation(rel, _float(ln, 3, source), _float(ln, 5, source))))
        elif head == "override":
            if len(ln.fields) != 7 or ln.fields[3] != "beta" or ln.fields[5] != "coeff":
                raise _err(ln, "expected 'override NAME c1,c2,... beta <b> coeff <c>'", 0, source)
            try:
                sig = tuple(int(x) for x in ln.fields[2].split(","))
            except ValueError:
                raise _err(ln, f"bad signature {ln.fields[2]!r}", 2, source) from None
            overrides.append((ln, (ln.fields[1], sig), (_float(ln, 4, source), _float(ln, 6, source))))
        else:
            raise _err(ln, f"unknown directive {head!r}", 0, source)
    if not alpha:
        raise ParseError("context declares no 'alpha' line", first_line, 1, source)
    if vocab is None:
        vocab = Vocabulary(tuple(Relation(name, 2, True) for name in alpha))
    try:
        base = BaseContext(vocab, alpha, coeff, eps_cap)
    except InvalidArgument as e:
        raise ParseError(str(e), (vocab_line.number if vocab_line else first_line), 1, source) from None
    if not news:
        if overrides:
            raise _err(overrides[0][0], "override without any newrel line", 0, source)
        return ContextSpec(base)
    try:
        x = ExpansionContext(base, [nr for _, nr in news], {k: v for _, k, v in overrides}, h_mode)
    except InvalidArgument as e:
        raise _err(news[0][0], str(e), 0, source) from None
    return ContextSpec(base, x)


def format_context(spec: ContextSpec | BaseContext) -> str:
    if isinstance(spec, BaseContext):
        spec = ContextSpec(spec)
    base = spec.base
    out = [f"vocab {base.vocab}"]
    for r in base.vocab:
        out.append(f"alpha {r.name} {_fmt_float(base.alpha[r.name])}")
        out.append(f"coeff {r.name} {_fmt_float(base.coeff[r.name])}")
    out.append(f"eps_cap {_fmt_float(base.eps_cap)}")
    x = spec.expansion
    if x is not None:
        out.append(f"h {x.h_mode}")
        for nr in x.new:
            out.append(f"newrel {nr.rel} beta {_fmt_float(nr.beta)} coeff {_fmt_float(nr.coeff)}")
        for (name, sig), (b, c) in sorted(x.overrides.items()):
            out.append(f"override {name} {','.join(map(str, sig))} beta {_fmt_float(b)} coeff {_fmt_float(c)}")
    return "\n".join(out) + "\n"


def contexts_equal(a: ContextSpec, b: ContextSpec) -> bool:
    if a.base != b.base:
        return False
    if (a.expansion is None) != (b.expansion is None):
        return False
    if a.expansion is None:
        return True
    xa, xb = a.expansion, b.expansion
    return xa.new == xb.new and xa.overrides == xb.overrides and xa.h_mode == xb.h_mode


# ------------------------------------------------------------------ systems

def parse_system(text: str, source=None, first_line: int = 1):
    """``m``, ``n``, ``f`` image lines, and ``class`` lines (``class 0,1 2 p 0.3``)."""
    from .compsys import System

    m = n = None
    name = ""
    F: list[tuple] = []
    classes = []
    for ln in _lines(text, first_line):
        head = ln.fields[0]
        if head in ("m", "n"):
            if len(ln.fields) != 2:
                raise _err(ln, f"expected '{head} <count>'", 0, source)
            v = _int(ln, 1, source)
            if v < 1:
                raise _err(ln, f"{head} must be positive", 1, source)
            if head == "m":
                m = v
            else:
                n = v
        elif head == "name":
            name = " ".join(ln.fields[1:])
        elif head == "f":
            if m is None or n is None:
                raise _err(ln, "'f' before 'm' and 'n'", 0, source)
            f = tuple(_int(ln, i, source) for i in range(1, len(ln.fields)))
            if len(f) != m:
                raise _err(ln, f"function has {len(f)} values, expected {m}", 0, source)
            for i, v in enumerate(f, 1):
                if not 0 <= v < n:
                    raise _err(ln, f"value {v} outside 0..{n - 1}", i, source)
            if len(set(f)) != len(f):
                raise _err(ln, "function is not injective", 1, source)
            F.append(f)
        elif head == "class":
            if m is None:
                raise _err(ln, "'class' before 'm'", 0, source)
            if len(ln.fields) < 4 or ln.fields[-2] != "p":
                raise _err(ln, "expected 'class <member> ... p <prob>'", 0, source)
            members = []
            for i in range(1, len(ln.fields) - 2):
                try:
                    u = frozenset(int(x) for x in ln.fields[i].split(","))
                except ValueError:
                    raise _err(ln, f"bad member {ln.fields[i]!r}", i, source) from None
                if any(not 0 <= x < m for x in u):
                    raise _err(ln, f"member {ln.fields[i]} leaves 0..{m - 1}", i, source)
                members.append(u)
            p = _float(ln, len(ln.fields) - 1, source)
            if not 0.0 < p < 1.0:
                raise _err(ln, f"probability {p} outside (0,1)", len(ln.fields) - 1, source)
            classes.append((members, p))
        else:
            raise _err(ln, f"unknown directive {head!r}", 0, source)
    if m is None or n is None:
        raise ParseError("system needs 'm' and 'n' lines", first_line, 1, source)
    if not F:
        raise ParseError("system has no 'f' lines", first_line, 1, source)
    if not classes:
        raise ParseError("system has no 'class' lines", first_line, 1, source)
    try:
        return System(m, n, F, classes, name=name)
    except InvalidArgument as e:
        raise ParseError(str(e), first_line, 1, source) from None


def format_system(sys) -> str:
    out = []
    if sys.name:
        out.append(f"name {sys.name}")
    out += [f"m {sys.m}", f"n {sys.n}"]
    out += ["f " + " ".join(map(str, f)) for f in sys.F]
    for ci, p in enumerate(sys.p):
        members = [",".join(map(str, sorted(u))) for u, c in zip(sys.P, sys.cls) if c == ci]
        out.append(f"class {' '.join(members)} p {_fmt_float(p)}")
    return "\n".join(out) + "\n"


# --------------------------------------------------------------- experiments

KINDS = ("bracket", "counts", "weakly_nice", "closure", "semi_good", "qe_determinism",
         "census_step", "census_tail", "census_lower", "screen")

REQUIRED = {
    "bracket": ("pair", "n"),
    "counts": ("pair", "n"),
    "weakly_nice": ("pair", "n", "m"),
    "closure": ("n", "k", "ell"),
    "semi_good": ("quad", "n", "k"),
    "qe_determinism": ("n", "k"),
    "census_step": ("system",),
    "census_tail": ("system", "L_star"),
    "census_lower": ("system", "alpha"),
    "screen": ("size",),
}


@dataclass
class ExperimentSpec:
    kind: str
    params: dict
    context: ContextSpec | None = None
    context_ref: str | None = None
    system_text: str | None = None
    system_first_line: int = 1
    source: str | None = None
    lines: dict = field(default_factory=dict)  # parameter -> line number

    def get(self, key, default=None):
        return self.params.get(key, default)


def parse_experiment(text: str, source=None, base_dir: Path | None = None) -> ExperimentSpec:
    """Sections ``[experiment]`` (``key = value``), ``[context]`` and ``[system]``.

    ``context = NAME`` and ``system = NAME`` under ``[experiment]`` refer to a
    catalog entry or, when a file of that name exists, to a file.
    """
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    header_line = {}
    for i, raw in enumerate(text.splitlines(), 1):
        stripped = raw.split("#", 1)[0].strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if current not in ("experiment", "context", "system"):
                raise ParseError(f"unknown section [{current}]", i, 1, source)
            if current in sections:
                raise ParseError(f"duplicate section [{current}]", i, 1, source)
            sections[current] = []
            header_line[current] = i
            continue
        if not stripped:
            continue
        if current is None:
            raise ParseError("text before the first section header", i, 1, source)
        sections[current].append((i, raw))
    if "experiment" not in sections:
        raise ParseError("missing [experiment] section", 1, 1, source)
    params, where = {}, {}
    for i, raw in sections["experiment"]:
        body = raw.split("#", 1)[0]
        key, eq, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not eq or not key or not value:
            raise ParseError("expected 'key = value'", i, 1, source)
        if key in params:
            raise ParseError(f"duplicate key {key!r}", i, raw.index(key) + 1, source)
        params[key] = value
        where[key] = i
    kind = params.pop("kind", None)
    if kind is None:
        raise ParseError("missing 'kind'", header_line["experiment"], 1, source)
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r} (one of {', '.join(KINDS)})", where["kind"], 1, source)
    spec = ExperimentSpec(kind, params, source=source, lines=where)

    def body_of(name):
        rows = sections[name]
        if not rows:
            return "", header_line[name] + 1
        first = rows[0][0]
        lines = [""] * (rows[-1][0] - first + 1)
        for i, raw in rows:
            lines[i - first] = raw
        return "\n".join(lines), first

    if "context" in sections:
        if "context" in params:
            raise ParseError("context given both inline and by reference", where["context"], 1, source)
        body, first = body_of("context")
        spec.context = parse_context(body, source, first)
    elif "context" in params:
        spec.context_ref = params.pop("context")
    if "system" in sections:
        if "system" in params:
            raise ParseError("system given both inline and by reference", where["system"], 1, source)
        spec.system_text, spec.system_first_line = body_of("system")
        params["system"] = "<inline>"
    for key in REQUIRED[kind]:
        if key not in params:
            raise ParseError(f"kind {kind!r} needs '{key}'", header_line["experiment"], 1, source)
    return spec


def read_text(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ParseError(f"cannot read file: {e.strerror}", 0, 0, str(path)) from None
