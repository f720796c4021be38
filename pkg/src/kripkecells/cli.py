"""Command line front end: ``kripkecells <command> [options]``.

Every command builds one JSON-able document.  ``--format json`` (default)
prints it with sorted keys, ``text`` prints one ``key: value`` line per top
level entry, and ``dot`` prints a Graphviz graph for the commands that have
a structure to draw.  Errors go to stderr as a JSON object and set the exit
status: 2 for unparsable input, 3 for cap violations, 4 for precondition
violations, 5 for a failed construction and 1 for unreadable files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from typing import Iterable, Sequence

from .atoms import Atom, sort_atoms
from .canonical import (alpha_on_level, count_omega, is_tautology, omega_connected,
                        omega_level, omega_structure, set_caps)
from .cellbuilder import (alienated_extend, fanout_build, fanout_checks, parse_schedule,
                          separation_witness)
from .commonknowledge import CkSystem, classification_report
from .errors import CapExceeded, ConstructionError, FormulaError, PreconditionError
from .formula import Workspace, parse, render
from .kripke import (alpha, cells, common_knowledge_points, diameter, from_json, refine, to_dot,
                     to_json)
from .shiftgen import build_shift_structure, orbits, shift, tau, sigma, theory_separation_profile

__all__ = ["main", "run", "atom_table", "load_schema", "COMMANDS"]

COMMANDS = ("parse", "eval", "refine", "omega", "classify", "extend", "alienate", "separate",
            "fanout", "shift", "tautology")


class UsageError(Exception):
    """Bad command line input that is not a formula."""


# ---------------------------------------------------------------- helpers


def atom_table(roots: Iterable[Atom]) -> tuple[list[dict], dict[Atom, str]]:
    """Every atom below ``roots`` with canonical ids ``"<level>.<index>"``.

    Indices count atoms of one level in canonical order, so ids depend only
    on the set of atoms being described.
    """
    seen: set = set()
    todo = list(roots)
    while todo:
        w = todo.pop()
        if w in seen:
            continue
        seen.add(w)
        if w.level > 0:
            todo.append(w.base)
            for m in w.choices:
                todo.extend(m)
    by_level: dict = {}
    for w in seen:
        by_level.setdefault(w.level, []).append(w)
    ids = {}
    for level in sorted(by_level):
        for k, w in enumerate(sort_atoms(by_level[level])):
            ids[w] = f"{level}.{k}"
    rows = []
    for level in sorted(by_level):
        for w in sort_atoms(by_level[level]):
            row = {"id": ids[w], "level": level}
            if level == 0:
                row["val"] = [bool(w.val >> k & 1) for k in range(w.num_props)]
            else:
                row["base"] = ids[w.base]
                row["choices"] = [sorted((ids[u] for u in m), key=_id_key) for m in w.choices]
            rows.append(row)
    return rows, ids


def _id_key(text: str) -> tuple[int, int]:
    level, index = text.split(".")
    return int(level), int(index)


def _clean(x):
    """Make report values JSON-safe and order-independent."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (set, frozenset)):
        return sorted((_clean(v) for v in x), key=lambda v: json.dumps(v, sort_keys=True))
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, float) and math.isinf(x):
        return None
    if isinstance(x, Atom):
        return repr(x)
    return x


def _space(args) -> Workspace:
    return Workspace(args.props, args.agents)


def _formula(args, space: Workspace):
    if args.formula is None:
        raise UsageError("this command needs -f/--formula")
    return parse(args.formula, space)


def _schedule(text: str):
    try:
        return parse_schedule(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _model(path: str | None):
    if path is None:
        raise UsageError("this command needs --model")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not JSON: {exc}") from exc
    try:
        return from_json(doc)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _pick(atoms: Sequence[Atom], index: int, what: str) -> Atom:
    if not 0 <= index < len(atoms):
        raise PreconditionError(f"{what} has {len(atoms)} atoms; no index {index}")
    return atoms[index]


# ---------------------------------------------------------------- commands
# each returns (document, dot text or None)


def cmd_parse(args):
    space = _space(args)
    f = _formula(args, space)
    return {"input": args.formula, "formula": render(f, space.num_agents),
            "expanded": render(f), "depth": f.depth}, None


def cmd_eval(args):
    space = _space(args)
    f = _formula(args, space)
    if args.model is not None:
        K = _model(args.model)
        if K.num_props != space.num_props or K.num_agents != space.num_agents:
            space = Workspace(K.num_props, K.num_agents)
            f = parse(args.formula, space)
        truth = sorted(alpha(K, f))
        doc = {"formula": render(f, space.num_agents), "points": truth, "count": len(truth),
               "total": K.num_points, "common_knowledge": sorted(common_knowledge_points(K, f))}
        return doc, to_dot(K)
    level = f.depth if args.level is None else args.level
    atoms = omega_level(space, level)
    index = {a: k for k, a in enumerate(atoms)}
    truth = sorted(index[a] for a in alpha_on_level(space, level, f))
    doc = {"formula": render(f, space.num_agents), "level": level,
           "atoms": [f"{level}.{k}" for k in truth], "count": len(truth), "total": len(atoms)}
    return doc, None


def cmd_refine(args):
    K = _model(args.model)
    steps = refine(K)
    return {"steps": [list(s) for s in steps], "stable_index": len(steps) - 1,
            "classes": len(set(steps[-1]))}, to_dot(K)


def cmd_omega(args):
    space = _space(args)
    i = args.level
    total = count_omega(space, i)
    if args.stats:
        doc = {"level": i, "count": total, "enumerated": False, "blocks": None,
               "connected": None, "diameter": None}
        try:
            K, atoms = omega_structure(space, i)
        except CapExceeded:
            doc["connected"] = omega_connected(space, i)
            return doc, None
        doc.update(enumerated=True, blocks=[len(K.blocks(j)) for j in range(space.num_agents)],
                   connected=len(cells(K)) == 1, diameter=_clean(diameter(K)))
        return doc, to_dot(K, [f"{i}.{k}" for k in range(len(atoms))])
    K, atoms = omega_structure(space, i)
    rows, ids = atom_table(atoms)
    return {"level": i, "count": total, "atoms": [ids[a] for a in atoms], "table": rows}, \
        to_dot(K, [ids[a] for a in atoms])


def cmd_classify(args):
    space = _space(args)
    f = _formula(args, space)
    return classification_report(space, f, args.cap), None


def _ck(args):
    space = _space(args)
    return CkSystem(space, _formula(args, space))


def cmd_extend(args):
    system = _ck(args)
    level = system.d if args.level is None else args.level
    w = _pick(system.omega_f_level(level), args.atom, f"restricted level {level}")
    least = system.least_info_extension(w)
    exts = [] if args.least_info else sort_atoms(system.restricted_extensions(w))
    rows, ids = atom_table([w, least, *exts])
    doc = {"formula": render(system.f, system.space.num_agents), "level": level,
           "atom": ids[w], "least_info": ids[least], "table": rows}
    if not args.least_info:
        doc["extensions"] = [ids[v] for v in exts]
        doc["count"] = len(exts)
    return doc, None


def cmd_alienate(args):
    system = _ck(args)
    S = _schedule(args.schedule)
    level = S.inf if args.level is None else args.level
    w = _pick(system.omega_f_level(level), args.atom, f"restricted level {level}")
    path = alienated_extend(system, S, w, args.target)
    rows, ids = atom_table(path.atoms)
    return {"formula": render(system.f, system.space.num_agents), "schedule": str(S),
            "levels": list(path.levels), "path": [ids[a] for a in path.atoms],
            "partial": path.partial, "table": rows}, None


def cmd_separate(args):
    system = _ck(args)
    S, T = _schedule(args.S), _schedule(args.T)
    level = max(S.inf, T.inf) if args.level is None else args.level
    w = _pick(system.omega_f_level(level), args.atom, f"restricted level {level}")
    report = separation_witness(system, S, T, w, args.horizon)
    doc = {"formula": render(system.f, system.space.num_agents), "S": str(S), "T": str(T),
           "horizon": args.horizon, "separated": report is not None}
    if report is not None:
        doc.update(level=report.level, side=report.s_side, bound=report.bound)
    return doc, None


def cmd_fanout(args):
    system = _ck(args)
    S = _schedule(args.schedule)
    T = _schedule(args.T) if args.T else S
    state = fanout_build(system, S, T, args.cap, strict=args.strict)
    checks = fanout_checks(state)
    _, ids = atom_table([state.w0])
    return {"formula": render(system.f, system.space.num_agents), "S": str(S), "T": str(T),
            "gen": state.gen, "start": state.start, "top": state.top, "strict": state.strict,
            "w0": ids[state.w0], "w0_rule": state.w0_rule,
            "sizes": {str(i): [len(state.A[i]), len(state.B[i])] for i in sorted(state.A)},
            "checks": _clean(checks)}, None


def cmd_shift(args):
    K = build_shift_structure(args.n, args.pi)
    size = K.num_points
    is_shift = all(tau(sigma(y, args.n), args.n) == shift(y, args.n) for y in range(size))
    profile = theory_separation_profile(K, args.depth)
    doc = {"n": args.n, "pi": args.pi, "points": size, "cells": len(cells(K)),
           "orbits": len(orbits(args.n, args.pi)),
           "max_block": max(len(b) for j in range(K.num_agents) for b in K.blocks(j)),
           "shift_is_tau_sigma": is_shift, "profile": profile.as_dict()}
    if args.structure:
        doc["structure"] = to_json(K)
    return doc, to_dot(K)


def cmd_tautology(args):
    space = _space(args)
    f = _formula(args, space)
    return {"formula": render(f, space.num_agents), "depth": f.depth,
            "tautology": is_tautology(space, f)}, None


# ---------------------------------------------------------------- parser


def _common(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the global options; their defaults must not mask the top level
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--props", type=int, default=d(1), help="number of primitive propositions")
    common.add_argument("--agents", type=int, default=d(2), help="number of agents")
    common.add_argument("--enum-cap", type=int, default=d(None), help="highest fully enumerated level")
    common.add_argument("--lazy-cap", type=int, default=d(None), help="highest level for per-atom work")
    common.add_argument("--budget", type=int, default=d(None), help="largest enumeration size")
    common.add_argument("--format", choices=("json", "text", "dot"), default=d("json"))
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common(suppress=True)
    p = argparse.ArgumentParser(prog="kripkecells", parents=[_common(suppress=False)],
                                description="Canonical S5 models and common-knowledge cells.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_text, formula=False):
        q = sub.add_parser(name, parents=[common], help=help_text)
        if formula:
            q.add_argument("-f", "--formula", help="formula text, e.g. 'K0 p0 | K0 !p0'")
        return q

    add("parse", "parse and render a formula", True)
    q = add("eval", "truth set on a model or on a canonical level", True)
    q.add_argument("--model", help="Kripke structure JSON file")
    q.add_argument("--level", type=int, help="canonical level (default: the formula depth)")
    q = add("refine", "refinement sequence of a model")
    q.add_argument("--model", help="Kripke structure JSON file")
    q = add("omega", "atoms of a canonical level")
    q.add_argument("--level", type=int, required=True)
    q.add_argument("--stats", action="store_true", help="counts, blocks and diameter only")
    q = add("classify", "common-knowledge classification of a formula", True)
    q.add_argument("--cap", type=int, help="highest level scanned for the gen level")
    q = add("extend", "restricted extensions of an atom", True)
    q.add_argument("--level", type=int, help="restricted level (default: the formula depth)")
    q.add_argument("--atom", type=int, default=0, help="index in canonical order")
    q.add_argument("--least-info", action="store_true", help="only the least-information extension")
    q = add("alienate", "alienated extension along a schedule", True)
    q.add_argument("--schedule", required=True, help="e.g. '0,2:+1' or 'beta(1)'")
    q.add_argument("--level", type=int, help="level of the origin (default: inf of the schedule)")
    q.add_argument("--atom", type=int, default=0)
    q.add_argument("--target", type=int, required=True)
    q = add("separate", "distance bound between two alienated extensions", True)
    q.add_argument("--S", required=True)
    q.add_argument("--T", required=True)
    q.add_argument("--level", type=int)
    q.add_argument("--atom", type=int, default=0)
    q.add_argument("--horizon", type=int, default=4)
    q = add("fanout", "run the finite-fanout builder and its checks", True)
    q.add_argument("--schedule", required=True, help="the schedule S")
    q.add_argument("--T", help="the sub-schedule T (default: S)")
    q.add_argument("--cap", type=int, required=True, help="highest level built")
    q.add_argument("--strict", action="store_true", help="refuse to run unless S meets the conditions")
    q = add("shift", "circular shift-space window as a Kripke structure")
    q.add_argument("--n", type=int, required=True, help="half width of the window")
    q.add_argument("--pi", action="store_true", help="add the third agent")
    q.add_argument("--depth", type=int, default=4)
    q.add_argument("--structure", action="store_true", help="include the structure in the JSON")
    add("tautology", "decide whether a formula is a tautology", True)
    return p


_HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _render_text(doc: dict) -> str:
    lines = []
    for key in sorted(doc):
        value = doc[key]
        if not isinstance(value, str):
            value = json.dumps(value, sort_keys=True)
        lines.append(f"{key}: {value}")
    return "\n".join(lines) + "\n"


def _error(kind: str, message: str, code: int, position=None) -> tuple[int, str]:
    doc = {"error": kind, "message": message, "exit_code": code}
    if position is not None:
        doc["position"] = position
    return code, json.dumps(doc, sort_keys=True)


def run(argv: Sequence[str] | None = None) -> tuple[int, str, str]:
    """Run one command; return (exit code, stdout text, stderr text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            return 0, "", ""
        code, err = _error("usage", "invalid command line", 2)
        return code, "", err
    old = set_caps(args.enum_cap, args.lazy_cap, args.budget)
    try:
        doc, dot = _HANDLERS[args.command](args)
        if args.format == "dot":
            if dot is None:
                raise PreconditionError(f"'{args.command}' has no DOT output")
            return 0, dot if dot.endswith("\n") else dot + "\n", ""
        if args.format == "text":
            return 0, _render_text(doc), ""
        return 0, json.dumps(doc, sort_keys=True, indent=2) + "\n", ""
    except FormulaError as exc:
        code, err = _error("parse", exc.message, 2, exc.position)
    except UsageError as exc:
        code, err = _error("parse", str(exc), 2)
    except CapExceeded as exc:
        code, err = _error("cap", str(exc), 3)
    except PreconditionError as exc:
        code, err = _error("precondition", str(exc), 4)
    except ConstructionError as exc:
        code, err = _error("construction", str(exc), 5)
    except OSError as exc:
        code, err = _error("io", str(exc), 1)
    finally:
        set_caps(old.enum, old.lazy, old.budget)
    return code, "", err


def main(argv: Sequence[str] | None = None) -> int:
    code, out, err = run(argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err + "\n")
    return code


def load_schema(command: str) -> dict:
    """The JSON schema for a command's output (or ``"error"``)."""
    text = resources.files("kripkecells").joinpath("schemas", f"{command}.json").read_text()
    return json.loads(text)


if __name__ == "__main__":
    sys.exit(main())
