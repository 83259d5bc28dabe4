"""Command-line frontend.

Exit codes: 0 for true / holds / all properties pass, 1 for false / refuted /
failures, 2 on input errors, 3 for an unknown model-checking verdict."""

from __future__ import annotations

import argparse
import json
import sys

from .formula import (
    Fragment, classify_fragment, is_downward_closed, parse_relation_family, parse_team_formula,
    render, size,
)
from .hyper import BoundOverflow, QuantBounds, eval_hyper, hyper_size, render_hyper
from .kripke import KripkeError, load_kripke, mc_teamltl
from .propgen import FRAGMENTS, SUITES, gen_formula, gen_kripke, gen_team, run_suite
from .reduction import (
    build_formula_lossy, build_formula_nonlossy, build_kripke, build_sat_embedding, parse_machine,
)
from .team_eval import TeamEvaluator
from .traces import team_from_json
from .translate import FragmentMismatch, full_translate, kcoherent_translate, leftflat_translate

EXIT_TRUE, EXIT_FALSE, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise InputError(f"cannot read {path}: {e.strerror}") from e


def _families(specs) -> dict:
    out = {}
    for spec in specs or ():
        name, sep, path = spec.partition("=")
        if not sep:
            raise InputError(f"--family expects NAME=FILE, got {spec!r}")
        out[name] = parse_relation_family(_read(path), name)
    return out


def _formula(args):
    text = _read(args.formula[1:]) if args.formula.startswith("@") else args.formula
    return parse_team_formula(text, _families(args.family))


def _team(path: str):
    return team_from_json(_read(path))


def _emit(args, payload: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(text)


# ---------------------------------------------------------------- commands


def cmd_parse(args) -> int:
    f = _formula(args)
    cls = classify_fragment(f)
    frags = sorted(fr.value for fr in cls.fragments)
    payload = {"formula": render(f), "size": size(f), "fragments": frags,
               "downward_closed": is_downward_closed(f)}
    if cls.reason:
        payload["reason"] = cls.reason
    lines = [render(f), f"size: {size(f)}", f"fragments: {', '.join(frags) or 'none'}"]
    if cls.reason:
        lines.append(f"reason: {cls.reason}")
    _emit(args, payload, "\n".join(lines))
    return EXIT_TRUE


def cmd_eval(args) -> int:
    team = _team(args.team)
    f = _formula(args)
    index = team.index if args.index is None else args.index
    ev = TeamEvaluator(team.traces)
    verdict = ev.holds(f, None, index)
    payload = {"verdict": verdict, "index": index, "traces": len(team)}
    text = str(verdict).lower()
    if args.explain:
        explanation = ev.explain(f, None, index)
        payload["explain"] = explanation
        text += "\n" + "\n".join(explanation)
    _emit(args, payload, text)
    return EXIT_TRUE if verdict else EXIT_FALSE


def _translate(f, fragment: str, k: int):
    if fragment == "kcoherent":
        return kcoherent_translate(f, k)
    if fragment == "leftflat":
        return leftflat_translate(f)
    return full_translate(f)


def cmd_translate(args) -> int:
    f = _formula(args)
    phi = _translate(f, args.fragment, args.k)
    payload = {"hyper": render_hyper(phi), "size": hyper_size(phi), "input_size": size(f)}
    text = render_hyper(phi)
    code = EXIT_TRUE
    if args.team:
        team = _team(args.team)
        index = team.index if args.index is None else args.index
        hyper = eval_hyper(team.traces, None, index, phi, QuantBounds(cap=args.bounds_cap))
        payload["verdict"] = hyper
        text += f"\n{str(hyper).lower()}"
        code = EXIT_TRUE if hyper else EXIT_FALSE
    _emit(args, payload, text)
    return code


def cmd_mc(args) -> int:
    K = load_kripke(args.kripke)
    f = _formula(args)
    v = mc_teamltl(K, f, args.mode, args.k, args.stem_max, args.loop_max)
    payload = {"verdict": v.status, "mode": args.mode, **v.detail}
    lines = [v.status] + [f"{key}: {val}" for key, val in sorted(v.detail.items())]
    _emit(args, payload, "\n".join(lines))
    if v.status in ("holds", "holds-on-approx"):
        return EXIT_TRUE
    return EXIT_FALSE if v.status == "refuted" else EXIT_UNKNOWN


def cmd_reduce(args) -> int:
    if args.variant == "sat-embed":
        K2, theta = build_sat_embedding(load_kripke(args.input))
    else:
        if args.b is None:
            raise InputError("--b is required for the lossy and nonlossy variants")
        machine = parse_machine(_read(args.input))
        K2 = build_kripke(machine)
        build = build_formula_lossy if args.variant == "lossy" else build_formula_nonlossy
        theta = build(machine, args.b)
    kripke_path, formula_path = f"{args.out}.kripke.json", f"{args.out}.formula"
    with open(kripke_path, "w") as fh:
        json.dump(K2.to_json(), fh, indent=1)
        fh.write("\n")
    with open(formula_path, "w") as fh:
        fh.write(render(theta) + "\n")
    payload = {"kripke": kripke_path, "formula": formula_path, "states": len(K2.labels),
               "formula_size": size(theta)}
    _emit(args, payload, f"wrote {kripke_path} ({len(K2.labels)} states) and {formula_path}")
    return EXIT_TRUE


def cmd_gen(args) -> int:
    if args.what == "team":
        team = gen_team(args.seed, args.max_traces, args.stem_max, args.loop_max, args.ap_count)
        payload = team.to_json()
        text = json.dumps(payload)
    elif args.what == "formula":
        f = gen_formula(args.seed, args.depth, args.fragment, args.ap_count)
        payload, text = {"formula": render(f)}, render(f)
    else:
        K = gen_kripke(args.seed, args.max_states, args.ap_count)
        payload = K.to_json()
        text = json.dumps(payload)
    _emit(args, payload, text)
    return EXIT_TRUE


def cmd_check_props(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    reports = [run_suite(n, args.trials, args.seed, mutate=args.mutate) for n in names]
    lines = []
    for r in reports:
        status = "PASS" if r.ok else "FAIL"
        lines.append(f"{status} {r.name}: {r.passed} passed, {r.failed} failed, "
                     f"{r.skipped} skipped in {r.seconds:.1f}s")
        if r.counterexample:
            lines.append("  counterexample: " + json.dumps(r.counterexample, sort_keys=True))
        for note in r.notes:
            lines.append(f"  note: {note}")
    _emit(args, {"reports": [r.to_json() for r in reports]}, "\n".join(lines))
    return EXIT_TRUE if all(r.ok for r in reports) else EXIT_FALSE


# ---------------------------------------------------------------- argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    p = argparse.ArgumentParser(prog="teamltl", description="LTL under synchronous team semantics")
    sub = p.add_subparsers(dest="command", required=True)

    def formula_args(sp):
        sp.add_argument("formula", help="formula text, or @FILE to read it from a file")
        sp.add_argument("--family", action="append", metavar="NAME=FILE",
                        help="relation family for gen[NAME](...) atoms")

    sp = sub.add_parser("parse", parents=[common], help="parse, render and classify a formula")
    formula_args(sp)
    sp.set_defaults(func=cmd_parse)

    sp = sub.add_parser("eval", parents=[common], help="evaluate a formula on a team file")
    sp.add_argument("team")
    formula_args(sp)
    sp.add_argument("--index", type=int)
    sp.add_argument("--explain", action="store_true", help="show split and until witnesses")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("translate", parents=[common], help="translate into a hyperlogic formula")
    formula_args(sp)
    sp.add_argument("--fragment", choices=("kcoherent", "leftflat", "full"), required=True)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--team", help="also evaluate the translation on this team")
    sp.add_argument("--index", type=int)
    sp.add_argument("--bounds-cap", type=int, default=QuantBounds().cap)
    sp.set_defaults(func=cmd_translate)

    sp = sub.add_parser("mc", parents=[common], help="model check a Kripke structure")
    sp.add_argument("kripke")
    formula_args(sp)
    sp.add_argument("--mode", choices=("kcoherent", "leftflat", "bounded"), default="bounded")
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--stem-max", type=int, default=2)
    sp.add_argument("--loop-max", type=int, default=2)
    sp.set_defaults(func=cmd_mc)

    sp = sub.add_parser("reduce", parents=[common], help="build a counter-machine or satisfiability instance")
    sp.add_argument("input", help="machine file, or Kripke file for sat-embed")
    sp.add_argument("--variant", choices=("lossy", "nonlossy", "sat-embed"), default="lossy")
    sp.add_argument("--b", type=int, help="recurring instruction")
    sp.add_argument("--out", required=True, help="output prefix")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("gen", parents=[common], help="generate a random team, formula or Kripke structure")
    sp.add_argument("what", choices=("team", "formula", "kripke"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--fragment", choices=FRAGMENTS, default=Fragment.PLAIN.value)
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--max-traces", type=int, default=4)
    sp.add_argument("--stem-max", type=int, default=3)
    sp.add_argument("--loop-max", type=int, default=2)
    sp.add_argument("--max-states", type=int, default=4)
    sp.add_argument("--ap-count", type=int, default=2)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("check-props", parents=[common], help="run property suites")
    sp.add_argument("--suite", choices=("all",) + tuple(SUITES), default="all")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--mutate", action="store_true", help="break the split clause on purpose")
    sp.set_defaults(func=cmd_check_props)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, KripkeError, FragmentMismatch, BoundOverflow, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
