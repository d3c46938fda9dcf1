// Board view-model: a faithful, render-ready projection of the server
// state. No rule evaluation happens here; a malformed state throws and
// the caller shows an error panel instead of a partial board.

import type { ClosureEntry, Player, SessionView } from "./types.js";

export class MalformedStateError extends Error {}

export interface BoardEntry extends ClosureEntry {
  fresh: boolean; // appeared since the previous turn (after Delta growth)
}

export interface BoardView {
  entries: BoardEntry[];
  delta: string[];
  turnBanner: string;
  yourTurn: boolean;
  composerSide: Player | null; // null once the game is over
  history: string[];
  outcomeBanner: string | null;
}

const MARKS = new Set(["o", "p", "unmarked"]);

function checkState(state: SessionView): void {
  if (!state || typeof state !== "object") {
    throw new MalformedStateError("state is not an object");
  }
  for (const field of ["status", "human_side", "to_move", "delta", "closure",
                       "history"] as const) {
    if (state[field] === undefined || state[field] === null) {
      throw new MalformedStateError(`state is missing '${field}'`);
    }
  }
  const seen = new Set<string>();
  for (const entry of state.closure) {
    if (typeof entry.formula !== "string" || !MARKS.has(entry.mark) ||
        typeof entry.truth !== "boolean") {
      throw new MalformedStateError(`bad closure entry: ${JSON.stringify(entry)}`);
    }
    if (seen.has(entry.formula)) {
      throw new MalformedStateError(`duplicate closure formula: ${entry.formula}`);
    }
    seen.add(entry.formula);
  }
  if (state.status === "finished" && !state.outcome) {
    throw new MalformedStateError("finished session without an outcome");
  }
}

function describeMove(mover: Player, fresh: string[], added: string[]): string {
  const parts: string[] = [];
  if (fresh.length) parts.push(`+${fresh.join(", ")}`);
  if (added.length) parts.push(added.join("; "));
  return `${mover}: ${parts.length ? parts.join(" | ") : "(nothing)"}`;
}

export function renderBoard(state: SessionView,
                            previousFormulas?: Set<string>): BoardView {
  checkState(state);
  const entries: BoardEntry[] = state.closure.map((entry) => ({
    ...entry,
    fresh: previousFormulas ? !previousFormulas.has(entry.formula) : false,
  }));
  const finished = state.status === "finished";
  const yourTurn = state.status === "awaiting_human";
  let turnBanner: string;
  if (finished) {
    turnBanner = "game over";
  } else {
    const who = state.to_move === state.human_side ? "you" : "engine";
    turnBanner = `${state.to_move} to move (${who})`;
  }
  let outcomeBanner: string | null = null;
  if (finished && state.outcome) {
    outcomeBanner =
      `${state.outcome.winner} wins (${state.outcome.reason})`;
  }
  return {
    entries,
    delta: [...state.delta],
    turnBanner,
    yourTurn,
    composerSide: finished ? null : state.human_side,
    history: state.history.map((h) => describeMove(h.mover, h.fresh, h.added)),
    outcomeBanner,
  };
}

// --- HTML rendering (string level, kept separate from document wiring) ---

function esc(text: string): string {
  return text.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function boardHtml(view: BoardView): string {
  const chips = view.delta.length
    ? view.delta.map((e) => `<span class="chip">${esc(e)}</span>`).join("")
    : `<span class="chip empty">∅</span>`;
  const rows = view.entries.map((e, i) => {
    const classes = ["entry", `mark-${e.mark}`];
    if (e.mistake) classes.push("mistake");
    if (e.fresh) classes.push("fresh");
    const markLabel = e.mark === "o" ? "O" : e.mark === "p" ? "P" : "·";
    return `<li class="${classes.join(" ")}" data-index="${i}">
      <input type="checkbox" data-formula="${esc(e.formula)}" />
      <span class="mark">${markLabel}</span>
      <code>${esc(e.formula)}</code>
      <span class="truth">${e.truth ? "true" : "false"}</span>
      ${e.mistake ? `<span class="flag">mistake</span>` : ""}
      ${e.fresh ? `<span class="flag new">new</span>` : ""}
    </li>`;
  }).join("\n");
  const history = view.history.map((h) => `<li>${esc(h)}</li>`).join("");
  const outcome = view.outcomeBanner
    ? `<div class="banner outcome">${esc(view.outcomeBanner)}</div>` : "";
  return `
    <div class="banner turn${view.yourTurn ? " yours" : ""}">${esc(view.turnBanner)}</div>
    ${outcome}
    <section class="delta"><h2>Δ</h2>${chips}</section>
    <section class="closure"><h2>Closure</h2><ul>${rows}</ul></section>
    <section class="history"><h2>Moves</h2><ol>${history}</ol></section>
  `;
}

export function errorPanelHtml(message: string): string {
  return `<div class="banner error">cannot render state: ${esc(message)}</div>`;
}
