"""Command line front end: ``run``, ``catalog``, ``screen`` and ``validate``.

Exit codes: 0 success, 1 a check failed, 2 unreadable or malformed input,
3 an input violates the hypothesis of the requested check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import catalog
from .compsys import (System, modal_vector, require_weak, simulate, verify_lower_deviation,
                      verify_step_inequality, verify_tail_bound)
from .errors import HypothesisViolation, InvalidArgument, ParseError
from .expansion import ExpansionContext, irrationality_screen, is_minimal_violation
from .formats import (ContextSpec, ExperimentSpec, format_context, format_structure, format_system,
                      parse_context, parse_experiment, parse_structure, parse_system, read_text)
from .formulas import graph_catalog
from .sampler import (SCHEMA, Report, SampleConfig, bracket_experiment, closure_experiment,
                      count_experiment, default_workers, qe_determinism_experiment, semi_good_experiment,
                      weakly_nice_experiment)
from .stats import FAIL, INCONCLUSIVE, PASS

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_HYPOTHESIS = 0, 1, 2, 3
INFO = "info"


# ------------------------------------------------------------- resolution

def _resolve_context(ref: str, base_dir: Path) -> ContextSpec:
    path = base_dir / ref
    if path.is_file():
        return parse_context(read_text(path), str(path))
    if ref in catalog.CONTEXTS:
        base, x = catalog.lookup("contexts", ref)
        return ContextSpec(base, x)
    raise InvalidArgument(f"context {ref!r} is neither a file nor a catalog entry")


def _resolve_system(spec: ExperimentSpec, base_dir: Path) -> System:
    if spec.system_text is not None:
        return parse_system(spec.system_text, spec.source, spec.system_first_line)
    ref = spec.params["system"]
    path = base_dir / ref
    if path.is_file():
        return parse_system(read_text(path), str(path))
    return catalog.lookup("systems", ref)


def _context_for(spec: ExperimentSpec, base_dir: Path) -> ContextSpec:
    if spec.context is not None:
        return spec.context
    ref = spec.context_ref
    if ref is None and spec.get("pair") in catalog.PAIR_CONTEXT:
        ref = catalog.PAIR_CONTEXT[spec.get("pair")]
    if ref is None:
        raise InvalidArgument(f"kind {spec.kind!r} needs a context")
    return _resolve_context(ref, base_dir)


def _num(spec: ExperimentSpec, key: str, cast, default=None):
    raw = spec.get(key)
    if raw is None:
        if default is None:
            raise ParseError(f"missing '{key}'", 0, 0, spec.source)
        return default
    try:
        return cast(raw)
    except ValueError:
        raise ParseError(f"bad value {raw!r} for '{key}'", spec.lines.get(key, 0), 1, spec.source) from None


def _sample_config(spec, ctx: ContextSpec, seed, trials, n, default_trials) -> SampleConfig:
    return SampleConfig(
        n=n if n is not None else _num(spec, "n", int),
        seed=seed if seed is not None else _num(spec, "seed", int, 0),
        trials=trials if trials is not None else _num(spec, "trials", int, default_trials),
        ctx=ctx.base, xctx=ctx.expansion,
        eps=_num(spec, "eps", float, 0.15),
        cap=_num(spec, "cap", int, 200),
        workers=default_workers(),
    )


def _threshold(ok: bool, undecided: bool = False) -> str:
    if undecided:
        return INCONCLUSIVE
    return PASS if ok else FAIL


# -------------------------------------------------------------- execution

def run_experiment(spec: ExperimentSpec, seed=None, trials=None, n=None, base_dir: Path | None = None) -> Report:
    """Run one parsed experiment; overrides replace the file's seed, trial count and size."""
    base_dir = base_dir or (Path(spec.source).parent if spec.source else Path("."))
    kind = spec.kind
    if kind.startswith("census_"):
        return _run_census(spec, seed, trials, base_dir)
    if kind == "screen":
        ctx = _context_for(spec, base_dir)
        return _run_screen(ctx, _num(spec, "size", int), _num(spec, "decorated", int, 4))
    ctx = _context_for(spec, base_dir)
    if kind in ("bracket", "counts", "weakly_nice"):
        pair = catalog.lookup("pairs", spec.params["pair"])
        cfg = _sample_config(spec, ctx, seed, trials, n, 50)
        if kind == "bracket":
            rep = bracket_experiment(pair, cfg, spec.params["pair"])
            frac = rep.summary["pass_fraction"]
            need = _num(spec, "min_fraction", float, 0.9)
            rep.checks.append(("inside_bracket", _threshold(frac is not None and frac >= need, frac is None),
                               f"fraction {frac} vs required {need}"))
        elif kind == "counts":
            rep = count_experiment(pair, cfg, "counts")
            top = rep.summary["max_count"]
            if "max_count" in spec.params:
                bound = _num(spec, "max_count", int)
                rep.checks.append(("max_count", _threshold(top is not None and top <= bound, top is None),
                                   f"max {top} vs bound {bound}"))
        else:
            m = _num(spec, "m", int)
            rep = weakly_nice_experiment(pair, m, cfg)
            frac = rep.summary["pass_fraction"]
            need = _num(spec, "min_fraction", float, 0.99)
            rep.checks.append(("disjoint_extensions", _threshold(frac is not None and frac >= need, frac is None),
                               f"fraction {frac} vs required {need}"))
        return rep
    if kind == "closure":
        cfg = _sample_config(spec, ctx, seed, trials, n, 100)
        rep = closure_experiment(_num(spec, "ell", int), _num(spec, "k", int), cfg,
                                 _num(spec, "subsets", int, 20))
        if rep.summary.get("skipped"):
            rep.checks.append(("closure_bound", INCONCLUSIVE, rep.summary.get("reason") or "bound unavailable"))
        else:
            v = rep.summary["violations"]
            rep.checks.append(("closure_bound", _threshold(v == 0), f"{v} closures above {rep.summary['bound']}"))
        return rep
    if kind == "semi_good":
        quad = catalog.lookup("quads", spec.params["quad"])
        cfg = _sample_config(spec, ctx, seed, trials, n, 20)
        rep = semi_good_experiment(quad, _num(spec, "k", int), cfg)
        frac = rep.summary["pass_fraction"]
        if "min_fraction" in spec.params:
            need = _num(spec, "min_fraction", float)
            rep.checks.append(("semi_good", _threshold(frac is not None and frac >= need, frac is None),
                               f"fraction {frac} vs required {need}"))
        return rep
    if kind == "qe_determinism":
        cfg = _sample_config(spec, ctx, seed, trials, n, 10)
        rep = qe_determinism_experiment(graph_catalog(), _num(spec, "k", int), cfg, _num(spec, "tuples", int, 40))
        frac = rep.summary["collision_fraction"]
        top = _num(spec, "max_collisions", float, 0.01)
        rep.checks.append(("collisions", _threshold(frac <= top), f"fraction {frac} vs allowed {top}"))
        return rep
    raise ParseError(f"unknown kind {kind!r}", spec.lines.get("kind", 0), 1, spec.source)


def _target(spec: ExperimentSpec, runs):
    raw = spec.get("target", "auto")
    if raw == "auto":
        L1 = round(float(runs.singles.mean())) + 2
    else:
        L1 = _num(spec, "target", int)
    form = spec.get("form", "singletons")
    if form == "singletons":
        return L1
    if form == "vector":
        return modal_vector(runs, L1)
    raise ParseError(f"form must be 'singletons' or 'vector', got {form!r}", spec.lines.get("form", 0), 1,
                     spec.source)


def _run_census(spec: ExperimentSpec, seed, trials, base_dir: Path) -> Report:
    sys_ = _resolve_system(spec, base_dir)
    require_weak(sys_)
    seed = seed if seed is not None else _num(spec, "seed", int, 0)
    trials = trials if trials is not None else _num(spec, "trials", int, 100_000)
    runs = simulate(sys_, trials, seed)
    if spec.kind == "census_step":
        res = verify_step_inequality(sys_, _target(spec, runs), runs=runs)
    elif spec.kind == "census_tail":
        res = verify_tail_bound(sys_, _num(spec, "L_star", int), runs=runs)
    else:
        res = verify_lower_deviation(sys_, _target(spec, runs), _num(spec, "alpha", float), runs=runs)
    summary = res.as_dict()
    summary.update({"system": sys_.name, "seed": seed, "mean_singletons": float(runs.singles.mean())})
    rep = Report(spec.kind, summary, runs.records())
    rep.checks.append((res.claim, res.verdict, f"P1 in [{res.p1.lo:.4g}, {res.p1.hi:.4g}], factor {res.factor:.4g}"))
    bad = int((~runs.conserved).sum())
    rep.checks.append(("conservation", _threshold(bad == 0), f"{bad} trials break conservation"))
    return rep


def _run_screen(ctx: ContextSpec, size: int, decorated: int) -> Report:
    x = ctx.expansion if ctx.expansion is not None else ExpansionContext(ctx.base)
    found = irrationality_screen(x, size, decorated)
    minimal = [is_minimal_violation(v, x) for v in found]
    records = [{"schema": SCHEMA, "experiment": "screen", "trial": i, "kind": v.kind, "minimal": mi,
                "structure": format_structure(v.structure), "small": sorted(v.small), "value": v.value}
               for i, (v, mi) in enumerate(zip(found, minimal))]
    rep = Report("screen", {"size": size, "violations": len(found), "minimal_violations": sum(minimal)}, records)
    rep.checks.append(("zero_weight_pairs", INFO,
                       f"{len(found)} violation(s), {sum(minimal)} without a smaller witness inside"))
    for v, mi in zip(found, minimal):
        if mi:
            rep.checks.append(("violation", INFO, v.describe()))
    return rep


# ---------------------------------------------------------------- outputs

def jsonl(records) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def summary_csv(rep: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    w.writerow(["schema", SCHEMA])
    w.writerow(["experiment", rep.experiment])
    for k in sorted(rep.summary):
        v = rep.summary[k]
        w.writerow([k, json.dumps(v, sort_keys=True) if isinstance(v, (dict, list)) else v])
    for name, verdict, _ in rep.checks:
        w.writerow([f"check:{name}", verdict])
    return buf.getvalue()


def report_text(rep: Report) -> str:
    lines = [f"experiment: {rep.experiment}", ""]
    for k in sorted(rep.summary):
        v = rep.summary[k]
        if isinstance(v, (dict, list)):
            v = json.dumps(v, sort_keys=True)
        lines.append(f"  {k}: {v}")
    lines.append("")
    lines.append("checks:")
    for name, verdict, detail in rep.checks:
        lines.append(f"  [{verdict}] {name}: {detail}")
    if not rep.checks:
        lines.append("  (none)")
    return "\n".join(lines) + "\n"


def write_outputs(rep: Report, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.jsonl").write_text(jsonl(rep.records))
    (out / "summary.csv").write_text(summary_csv(rep))
    (out / "report.txt").write_text(report_text(rep))


# --------------------------------------------------------------- commands

def _cmd_run(args) -> int:
    spec = parse_experiment(read_text(args.spec), args.spec)
    rep = run_experiment(spec, args.seed, args.trials, args.n)
    write_outputs(rep, Path(args.out))
    sys.stdout.write(report_text(rep))
    return EXIT_FAIL if any(v == FAIL for _, v, _ in rep.checks) else EXIT_OK


def _cmd_catalog(args) -> int:
    for name, note in catalog.listing(args.kind):
        print(f"{name:20s} {note}")
    return EXIT_OK


def _cmd_screen(args) -> int:
    ctx = _resolve_context(args.context, Path("."))
    rep = _run_screen(ctx, args.size, args.decorated)
    if args.out:
        write_outputs(rep, Path(args.out))
    sys.stdout.write(report_text(rep))
    return EXIT_OK


def _detect(path: str, text: str) -> str:
    suffix = Path(path).suffix.lstrip(".")
    if suffix in ("struct", "ctx", "sys", "exp"):
        return {"struct": "structure", "ctx": "context", "sys": "system", "exp": "experiment"}[suffix]
    heads = {line.split("#", 1)[0].split()[0] for line in text.splitlines() if line.split("#", 1)[0].split()}
    if any(h.startswith("[") for h in heads):
        return "experiment"
    if heads & {"alpha", "newrel"}:
        return "context"
    if "vocab" in heads:
        return "structure"
    if heads & {"f", "class"}:
        return "system"
    raise ParseError("cannot tell the file type; use --type", 1, 1, path)


def _cmd_validate(args) -> int:
    text = read_text(args.file)
    kind = args.type or _detect(args.file, text)
    if kind == "structure":
        out = format_structure(parse_structure(text, args.file))
    elif kind == "context":
        out = format_context(parse_context(text, args.file))
    elif kind == "system":
        s = parse_system(text, args.file)
        out = format_system(s)
        out += f"# separativity: {require_weak(s).level}\n"
    else:
        spec = parse_experiment(text, args.file)
        out = f"kind {spec.kind}\n" + "".join(f"{k} = {v}\n" for k, v in sorted(spec.params.items()))
    sys.stdout.write(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparse01", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run an experiment file")
    r.add_argument("spec")
    r.add_argument("--seed", type=int)
    r.add_argument("--trials", type=int)
    r.add_argument("--n", type=int)
    r.add_argument("--out", default="results")
    r.set_defaults(func=_cmd_run)
    c = sub.add_parser("catalog", help="list built-in contexts, pairs, quads or systems")
    c.add_argument("kind")
    c.set_defaults(func=_cmd_catalog)
    s = sub.add_parser("screen", help="list zero-weight pairs of a context")
    s.add_argument("context", help="catalog name or context file")
    s.add_argument("--size", type=int, default=4)
    s.add_argument("--decorated", type=int, default=4)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_screen)
    v = sub.add_parser("validate", help="parse a file and print its normal form")
    v.add_argument("file")
    v.add_argument("--type", choices=("structure", "context", "system", "experiment"))
    v.set_defaults(func=_cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except HypothesisViolation as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except InvalidArgument as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
