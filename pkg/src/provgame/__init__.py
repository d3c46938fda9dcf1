"""Provability games over first-order intuitionistic logic: referee,
strategies, exhaustive budgeted solving and countermodel extraction."""

from .formula import (
    ClosureSet, Formula, FormulaError, ParseError, Signature, format_formula,
    instantiate, parse_formula, parse_inferred, parse_signature,
    subformula_closure,
)
from .game import (
    GameError, GameTrace, IllegalMoveError, Move, OpponentMove, Outcome,
    Player, Position, ProponentMove, Reason, apply_move, initial_position,
    load_trace, mistakes, position_truth, replay_trace, run_game, save_trace,
    to_move,
)
from .kripke import (
    FrameClassReport, KripkeError, KripkeModel, ModelError, classify, cone,
    enumerate_models, find_countermodel, forces, load_model, save_model,
    validate_model,
)
from .solver import (
    SolveVerdict, SolverInconclusiveError, canonicalize_position,
    export_verdict, solve_game, surviving_moves,
)
from .strategy import (
    CasariOpponent, ExtractionError, OpponentFromModel, SaturationProponent,
    ScriptedStrategy, StrategyError, casari_select_world, delta_expander,
    extract_countermodel, opponent_next_move, proponent_saturation_move,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
