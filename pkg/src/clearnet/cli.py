"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 non-convergence,
5 enumeration cap exceeded.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction

from . import equilibria as eq
from .clearing import EngineConfig, clearing
from .dynamics import run_dynamics, trace_lines, verify_strong_equilibrium
from .errors import (
    ClearnetError,
    EnumerationTooLarge,
    GadgetParameterError,
    InvalidNetwork,
    InvalidProfile,
    NonConvergence,
)
from .gadgets import GadgetSpec, build_gadget, pad_clause
from .instance import REPORT_SCHEMA, Instance, InstanceParseError, dumps, load, save, to_dot
from .model import validate_network
from .strategies import default_profile, validate_profile

EXIT_PARSE, EXIT_INVALID, EXIT_NONCONV, EXIT_CAP = 2, 3, 4, 5


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _q(x) -> str:
    return str(Fraction(x))


def _load_checked(path) -> Instance:
    inst = load(path)
    problems = validate_network(inst.network)
    if problems:
        raise InvalidNetwork("; ".join(map(str, problems)))
    return inst


def _profile(inst: Instance) -> dict:
    prof = default_profile(inst.network, inst.profile or {})
    problems = validate_profile(inst.network, prof)
    if problems:
        raise InvalidProfile("; ".join(map(str, problems)))
    return prof


def _config(args) -> EngineConfig:
    return EngineConfig(tolerance=args.tolerance, max_iterations=args.max_iter, method=args.method)


def _sets(inst: Instance, spec: str) -> eq.FiniteStrategySet:
    if spec == "file":
        if inst.sets is None:
            raise InvalidProfile("instance file has no strategy_sets")
        return inst.sets
    if spec == "rankings":
        return eq.edge_ranking_sets(inst.network)
    if spec.startswith("coins"):
        budget = int(spec.split(":", 1)[1]) if ":" in spec else 1
        return eq.coin_ranking_sets(inst.network, budget)
    raise InvalidProfile(f"unknown strategy-set spec {spec!r}")


def _flow_report(net, flow) -> dict:
    return {
        "flows": {e.id: _q(flow[e.id]) for e in net.edges},
        "assets": {v: _q(flow.assets(v)) for v in net.nodes},
        "welfare": {k: _q(eq.welfare(net, flow, eq.WelfareSpec(k))) for k in eq.WELFARE_KINDS},
    }


# -- subcommands ---------------------------------------------------------------------------------


def cmd_clear(args) -> int:
    inst = _load_checked(args.instance)
    prof = _profile(inst)
    res = clearing(inst.network, prof, args.mode, _config(args))
    report = {"schema": REPORT_SCHEMA, "command": "clear", "mode": res.mode, "method": res.method,
              "iterations": res.iterations, "residual_gap": _q(res.residual_gap)}
    report.update(_flow_report(inst.network, res.flow))
    _emit(report)
    if args.emit_dot:
        with open(args.emit_dot, "w", encoding="utf-8") as fh:
            fh.write(to_dot(inst.network, res.flow.flows))
    return 0


def cmd_dynamics(args) -> int:
    inst = _load_checked(args.instance)
    prof = _profile(inst)
    run = run_dynamics(inst.network, prof, args.mode, _config(args), args.max_steps)
    sys.stdout.write(trace_lines(run.steps))
    final = {"schema": REPORT_SCHEMA, "command": "dynamics", "steps": len(run.steps),
             "edges": len(inst.network.edges)}
    final.update(run.certificate.to_json())
    final.update(_flow_report(inst.network, run.certificate.checked_flow))
    print(json.dumps(final, sort_keys=True))
    return 0


def cmd_check(args) -> int:
    inst = _load_checked(args.instance)
    cfg = _config(args)
    report = {"schema": REPORT_SCHEMA, "command": "check", "mode": args.mode, "solution": args.solution}
    if args.sets == "certificate":
        cert = verify_strong_equilibrium(inst.network, _profile(inst), args.mode, cfg)
        report["solution"] = "strong"
        report["certified"] = cert is not None
        report["witness"] = cert.witness if cert else "qualifying residual cycle exists"
        _emit(report)
        return 0
    sets = _sets(inst, args.sets or ("file" if inst.sets else "rankings"))
    res = eq.search_equilibrium_report(inst.network, sets, args.mode, args.solution, cfg)
    report["profiles"] = sets.size()
    report["profiles_checked"] = res.profiles_checked
    report["equilibrium"] = res.profile is not None
    if res.choice is not None:
        report["profile"] = sets.describe(res.choice)
        report["verdict"] = f"{args.solution} equilibrium found"
    else:
        report["verdict"] = f"none over {sets.size()} profiles"
    report["deviations"] = [{"profile": labels, "deviation": dev.to_json()}
                            for labels, dev in res.witnesses]
    _emit(report)
    return 0


def cmd_optimal(args) -> int:
    inst = _load_checked(args.instance)
    sets = _sets(inst, args.sets or ("file" if inst.sets else "coins"))
    spec = eq.WelfareSpec(args.welfare)
    prof, value = eq.optimal_profile_search(inst.network, sets, args.mode, spec, _config(args))
    choice = sets.index_of(prof)
    _emit({"schema": REPORT_SCHEMA, "command": "optimal", "mode": args.mode, "welfare_kind": args.welfare,
           "welfare": _q(value), "profile": sets.describe(choice), "profiles": sets.size()})
    return 0


def _parse_formula(text: str):
    """DIMACS file path, or inline clauses like "1,2,-3;1,-2"."""
    if os.path.exists(text):
        clauses, current = [], []
        with open(text, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line[0] in "cp%":
                    continue
                for tok in line.split():
                    lit = int(tok)
                    if lit == 0:
                        if current:
                            clauses.append(pad_clause(current))
                        current = []
                    else:
                        current.append(lit)
        if current:
            clauses.append(pad_clause(current))
        return clauses
    return [pad_clause([int(x) for x in c.split(",") if x.strip()]) for c in text.split(";") if c.strip()]


def cmd_gen(args) -> int:
    params: dict = {}
    kind = args.gadget
    if kind == "no-social-opt":
        params = {"n": args.n}
        if args.eps is not None:
            params["eps"] = args.eps
    elif kind == "example1":
        params = {"profile": args.profile}
    elif kind == "hampath":
        nodes = [x for x in (args.nodes or "").split(",") if x]
        arcs = [tuple(a.split(":")) for a in (args.arcs or "").split(",") if a]
        params = {"nodes": nodes, "arcs": [list(a) for a in arcs]}
    elif kind in ("sat", "ne-decision"):
        if not args.formula:
            raise GadgetParameterError("--formula is required")
        params = {"formula": [list(c) for c in _parse_formula(args.formula)]}
        if args.B is not None:
            params["B"] = args.B
        if kind == "ne-decision":
            params.update(mode=args.mode, delta=args.delta, copies=args.copies)
    elif kind == "min-no-ne":
        params = {"delta": args.delta}
    elif kind == "random":
        params = {"seed": args.seed, "nodes": args.nodes_count, "edges": args.edges,
                  "rule": args.rule}
    spec = GadgetSpec(kind, params)
    net, prof, sets = build_gadget(spec)
    meta_params = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in params.items()}
    inst = Instance(net, {"name": args.name or kind, "gadget": kind, "params": meta_params}, prof, sets)
    if args.out:
        save(inst, args.out)
    else:
        sys.stdout.write(dumps(inst))
    if args.emit_dot:
        with open(args.emit_dot, "w", encoding="utf-8") as fh:
            fh.write(to_dot(net))
    return 0


# -- argument parsing ------------------------------------------------------------------------------


def _engine_flags(p):
    p.add_argument("--mode", choices=["min", "max"], default="min")
    p.add_argument("--tolerance", default="1/1000000000")
    p.add_argument("--max-iter", type=int, default=1_000_000)
    p.add_argument("--method", choices=["auto", "exact", "kleene"], default="auto")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clearnet", description="Clearing games on liability networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("clear", help="compute a minimal or maximal clearing state")
    p.add_argument("instance")
    _engine_flags(p)
    p.add_argument("--emit-dot", metavar="PATH")
    p.set_defaults(func=cmd_clear)

    p = sub.add_parser("dynamics", help="run coalitional improvement dynamics")
    p.add_argument("instance")
    _engine_flags(p)
    p.add_argument("--max-steps", type=int)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("check", help="search for Nash or strong equilibria")
    p.add_argument("instance")
    _engine_flags(p)
    p.add_argument("--solution", choices=["nash", "strong"], default="nash")
    p.add_argument("--sets", help="file | rankings | coins[:K] | certificate")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("optimal", help="welfare-optimal profile over finite strategy sets")
    p.add_argument("instance")
    _engine_flags(p)
    p.add_argument("--sets", help="file | rankings | coins[:K]")
    p.add_argument("--welfare", choices=list(eq.WELFARE_KINDS), default="utilitarian")
    p.set_defaults(func=cmd_optimal)

    p = sub.add_parser("gen", help="write a gadget instance")
    p.add_argument("gadget", choices=["example1", "no-social-opt", "hampath", "sat", "max-no-ne",
                                      "min-no-ne", "ne-decision", "random"])
    p.add_argument("--out")
    p.add_argument("--name")
    p.add_argument("--emit-dot", metavar="PATH")
    p.add_argument("--profile", default="a", help="example1 profile: a, a', b, c")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--eps")
    p.add_argument("--nodes", help="hampath vertices, comma separated")
    p.add_argument("--arcs", help="hampath arcs as u:v, comma separated")
    p.add_argument("--formula", help="DIMACS file or inline clauses '1,2,-3;1,-2'")
    p.add_argument("--B", type=int)
    p.add_argument("--mode", choices=["min", "max"], default="max")
    p.add_argument("--delta", type=int, default=2)
    p.add_argument("--copies", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--nodes-count", type=int, default=5)
    p.add_argument("--edges", type=int, default=8)
    p.add_argument("--rule", choices=["ranking", "proportional"], default="ranking")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InstanceParseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except EnumerationTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ClearnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
