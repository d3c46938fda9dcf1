"""Command-line entry point: parsing, closure listing, bounded
countermodel search, budgeted solving, refereed play, trace replay,
countermodel extraction, and the session server.

Exit codes: 0 success, 1 definite negative verdict (a countermodel was
found / Opponent wins the solve), 2 usage or input error, 3 inconclusive
(a node or enumeration ceiling was hit).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .formula import (
    FormulaError, Signature, format_formula, parse_formula, parse_inferred,
    parse_signature, subformula_closure,
)
from .game import (
    GameError, OpponentMove, Player, ProponentMove, initial_position,
    load_trace, replay_trace, run_game, save_trace,
)
from .kripke import (
    EnumerationLimitError, KripkeError, find_countermodel, load_model,
    save_model,
)
from .solver import (
    SolverInconclusiveError, export_verdict, solve_game,
)
from .strategy import (
    ExtractionError, OpponentFromModel, SaturationProponent, ScriptedStrategy,
    delta_expander, extract_countermodel,
)

OK, NEGATIVE, USAGE, INCONCLUSIVE = 0, 1, 2, 3


def _split_formulas(text: str) -> list[str]:
    return [part.strip() for part in text.split(";") if part.strip()]


def _load_inputs(args) -> tuple[list, object, Signature]:
    """Premises and goal from --o/--phi (inline, signature inferred unless
    --sig is given)."""
    o_texts = _split_formulas(args.o or "")
    phi_text = (args.phi or "").strip()
    if not phi_text:
        raise FormulaError("--phi is required")
    if getattr(args, "sig", None):
        sig = parse_signature(Path(args.sig).read_text())
        premises = [parse_formula(t, sig) for t in o_texts]
        return premises, parse_formula(phi_text, sig), sig
    formulas, sig = parse_inferred(o_texts + [phi_text])
    return formulas[:-1], formulas[-1], sig


def _emit(args, human: str, record: dict) -> str:
    if args.format == "structured":
        return json.dumps(record, ensure_ascii=False, indent=2,
                          sort_keys=True) + "\n"
    return human if human.endswith("\n") else human + "\n"


# ---------------------------------------------------------------------------
# commands

def _cmd_parse(args) -> tuple[int, str]:
    _premises, phi, sig = _load_inputs(args)
    human = format_formula(phi)
    record = {
        "formula": format_formula(phi),
        "predicates": dict(sorted(sig.predicates.items())),
        "constants": list(sig.constants),
    }
    return OK, _emit(args, human, record)


def _cmd_closure(args) -> tuple[int, str]:
    gamma_texts = _split_formulas(args.gamma or "")
    delta = [e.strip() for e in (args.delta or "").split(",") if e.strip()]
    if getattr(args, "sig", None):
        sig = parse_signature(Path(args.sig).read_text())
        gamma = [parse_formula(t, sig, extra_elements=delta)
                 for t in gamma_texts]
    else:
        gamma, _sig = parse_inferred(gamma_texts)
    closure = subformula_closure(gamma, tuple(delta))
    lines = [format_formula(f) for f in closure.members]
    record = {"delta": delta, "members": lines}
    return OK, _emit(args, "\n".join(lines), record)


def _cmd_check(args) -> tuple[int, str]:
    premises, phi, _sig = _load_inputs(args)
    bounds = (args.worlds, args.dom)
    found = find_countermodel(premises, phi, bounds,
                              allow_empty_domains=args.empty_domains)
    if found is None:
        msg = f"no countermodel at bounds (worlds<={bounds[0]}, domain<={bounds[1]})"
        return OK, _emit(args, msg, {"countermodel": None, "bounds": bounds})
    model, root = found
    human = f"countermodel found (root {root}):\n{save_model(model)}"
    record = {"countermodel": save_model(model), "root": root,
              "bounds": bounds}
    return NEGATIVE, _emit(args, human, record)


def _cmd_solve(args) -> tuple[int, str]:
    premises, phi, _sig = _load_inputs(args)
    start = initial_position(premises, phi)
    verdict = solve_game(start, args.budget, node_limit=args.nodes,
                         subset_ceiling=args.ceiling)
    human = (f"winner: {verdict.winner.value} (budget {verdict.budget}, "
             f"{verdict.explored} positions)")
    if args.format == "structured":
        return (NEGATIVE if verdict.winner is Player.OPPONENT else OK,
                export_verdict(verdict))
    return (NEGATIVE if verdict.winner is Player.OPPONENT else OK,
            human + "\n")


def _make_strategy(spec: str, side: Player, args, start):
    parts = spec.split(":")
    name = parts[0]
    if name == "saturation":
        if side is not Player.PROPONENT:
            raise GameError("saturation is a proponent strategy")
        return SaturationProponent((args.worlds, args.dom))
    if name == "delta-expander":
        if side is not Player.OPPONENT:
            raise GameError("delta-expander is an opponent strategy")
        return delta_expander()
    if name == "from-model":
        if len(parts) < 2:
            raise GameError("from-model needs a file: from-model:FILE[:ROOT]")
        model = load_model(Path(parts[1]).read_text())
        root = parts[2] if len(parts) > 2 else None
        return OpponentFromModel(model, root)
    if name == "scripted":
        if len(parts) < 2:
            raise GameError("scripted needs a file: scripted:FILE")
        moves = _load_script(Path(parts[1]).read_text(), side, start)
        return ScriptedStrategy(moves)
    if name == "solver":
        budget = int(parts[1]) if len(parts) > 1 else args.budget
        verdict = solve_game(start, budget, node_limit=args.nodes,
                             subset_ceiling=args.ceiling)
        if verdict.winner is side:
            return verdict.witness
        return ScriptedStrategy([])  # losing side: resign at once
    raise GameError(f"unknown strategy {name!r}")


def _load_script(text: str, side: Player, start) -> list:
    """Move script: a JSON list of {"fresh": [...], "add": [...]}."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameError(f"cannot read move script: {e}") from None
    sig_formulas = sorted(format_formula(f) for f in start.gamma)
    _parsed, sig = parse_inferred(sig_formulas)
    moves = []
    known: list[str] = list(start.delta)
    for rec in doc:
        fresh = tuple(rec.get("fresh", ()))
        known.extend(fresh)
        add = frozenset(
            parse_formula(t, sig, extra_elements=known)
            for t in rec.get("add", ()))
        if side is Player.OPPONENT:
            moves.append(OpponentMove(fresh, add))
        else:
            if fresh:
                raise GameError("proponent scripts cannot introduce elements")
            moves.append(ProponentMove(add))
    return moves


def _cmd_play(args) -> tuple[int, str]:
    premises, phi, _sig = _load_inputs(args)
    start = initial_position(premises, phi)
    strat_o = _make_strategy(args.opponent, Player.OPPONENT, args, start)
    strat_p = _make_strategy(args.proponent, Player.PROPONENT, args, start)
    trace = run_game(start, strat_o, strat_p, round_cutoff=args.cutoff)
    if args.trace_out:
        Path(args.trace_out).write_text(save_trace(trace))
    human = (f"winner: {trace.outcome.winner.value} "
             f"({trace.outcome.reason.value}) after {len(trace.steps)} moves")
    record = {
        "winner": trace.outcome.winner.value,
        "reason": trace.outcome.reason.value,
        "moves": len(trace.steps),
    }
    return OK, _emit(args, human, record)


def _cmd_replay(args) -> tuple[int, str]:
    trace = load_trace(Path(args.trace).read_text())
    outcome = replay_trace(trace)
    human = f"winner: {outcome.winner.value} ({outcome.reason.value})"
    record = {"winner": outcome.winner.value, "reason": outcome.reason.value,
              "moves": len(trace.steps)}
    return OK, _emit(args, human, record)


def _cmd_extract(args) -> tuple[int, str]:
    trace = load_trace(Path(args.trace).read_text())
    model = extract_countermodel(trace)
    text = save_model(model)
    if args.out:
        Path(args.out).write_text(text)
    return OK, _emit(args, text, {"model": text})


def _cmd_serve(args) -> tuple[int, str]:
    import uvicorn

    from .server import create_app
    app = create_app(persist_dir=args.persist, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return OK, ""


# ---------------------------------------------------------------------------
# argument plumbing

def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="provgame",
        description="Provability games over first-order intuitionistic logic")
    sub = top.add_subparsers(dest="command", required=True)

    def common(p, *, bounds=False, budget=False, cutoff=False):
        p.add_argument("--format", choices=("human", "structured"),
                       default="human")
        p.add_argument("--seed", type=int, default=None,
                       help="reserved; all algorithms are deterministic")
        if bounds:
            p.add_argument("--worlds", type=int, default=3)
            p.add_argument("--dom", type=int, default=2)
        if budget:
            p.add_argument("--budget", type=int, default=1)
            p.add_argument("--nodes", type=int, default=500_000)
            p.add_argument("--ceiling", type=int, default=14)
        if cutoff:
            p.add_argument("--cutoff", type=int, default=64)

    p = sub.add_parser("parse", help="parse a formula and print it back")
    p.add_argument("--phi", required=True)
    p.add_argument("--o", default="")
    p.add_argument("--sig")
    common(p)
    p.set_defaults(fn=_cmd_parse)

    p = sub.add_parser("closure", help="list the instantiated subformulas")
    p.add_argument("--gamma", required=True, help="formulas separated by ;")
    p.add_argument("--delta", default="", help="elements separated by ,")
    p.add_argument("--sig")
    common(p)
    p.set_defaults(fn=_cmd_closure)

    p = sub.add_parser("check", help="bounded countermodel search")
    p.add_argument("--phi", required=True)
    p.add_argument("--o", default="")
    p.add_argument("--sig")
    p.add_argument("--empty-domains", action="store_true")
    common(p, bounds=True)
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("solve", help="exact budgeted game solving")
    p.add_argument("--phi", required=True)
    p.add_argument("--o", default="")
    p.add_argument("--sig")
    common(p, budget=True)
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("play", help="referee two named strategies")
    p.add_argument("--phi", required=True)
    p.add_argument("--o", default="")
    p.add_argument("--sig")
    p.add_argument("--opponent", default="delta-expander",
                   help="saturation | from-model:FILE[:ROOT] | scripted:FILE"
                        " | solver[:BUDGET] | delta-expander")
    p.add_argument("--proponent", default="saturation")
    p.add_argument("--trace-out")
    common(p, bounds=True, budget=True, cutoff=True)
    p.set_defaults(fn=_cmd_play)

    p = sub.add_parser("replay", help="re-run a recorded trace")
    p.add_argument("--trace", required=True)
    common(p)
    p.set_defaults(fn=_cmd_replay)

    p = sub.add_parser("extract", help="countermodel from an opponent win")
    p.add_argument("--trace", required=True)
    p.add_argument("--out")
    common(p)
    p.set_defaults(fn=_cmd_extract)

    p = sub.add_parser("serve", help="start the session service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8421)
    p.add_argument("--persist", default=None,
                   help="directory for per-session trace files")
    p.add_argument("--ui", default=None,
                   help="directory with the browser client (autodetected)")
    common(p)
    p.set_defaults(fn=_cmd_serve)
    return top


def dispatch(argv: list[str]) -> tuple[int, str]:
    """Run one command; returns (exit status, output text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit:
        return USAGE, "usage error (see --help)\n"
    try:
        return args.fn(args)
    except (EnumerationLimitError, SolverInconclusiveError) as e:
        return INCONCLUSIVE, f"inconclusive: {e}\n"
    except (FormulaError, GameError, KripkeError, ExtractionError,
            OSError) as e:
        return USAGE, f"error: {e}\n"


def main(argv: list[str] | None = None) -> int:
    status, output = dispatch(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(output)
    return status


if __name__ == "__main__":
    sys.exit(main())
