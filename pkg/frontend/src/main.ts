// App wiring: one session per tab, polling while the engine thinks,
// checkbox-based move composition. The server is the rule authority;
// rejections are shown verbatim and the board stays as it was.

import { SessionApi, ApiError } from "./api.js";
import { boardHtml, errorPanelHtml, renderBoard, MalformedStateError } from "./board.js";
import { composeMove, ComposeError } from "./compose.js";
import type { SessionView } from "./types.js";

const api = new SessionApi("");
let current: SessionView | null = null;
let previousFormulas: Set<string> | undefined;
let pollTimer: number | undefined;

const boardEl = () => document.getElementById("board")!;
const noticeEl = () => document.getElementById("notice")!;

function notify(message: string, kind: "info" | "error" = "info"): void {
  noticeEl().innerHTML = message
    ? `<div class="banner ${kind}">${message}</div>` : "";
}

function selectedFormulas(): string[] {
  const boxes = boardEl().querySelectorAll<HTMLInputElement>(
    'input[type="checkbox"]:checked');
  return [...boxes].map((b) => b.dataset.formula!);
}

function show(state: SessionView): void {
  const before = current;
  current = state;
  try {
    const view = renderBoard(
      state,
      before && before.delta.length !== state.delta.length
        ? previousFormulas : undefined);
    boardEl().innerHTML = boardHtml(view);
  } catch (err) {
    if (err instanceof MalformedStateError) {
      boardEl().innerHTML = errorPanelHtml(err.message);
      return;
    }
    throw err;
  }
  previousFormulas = new Set(state.closure.map((e) => e.formula));
  const composer = document.getElementById("composer")!;
  composer.style.display = state.status === "awaiting_human" ? "" : "none";
  const freshRow = document.getElementById("fresh-row")!;
  freshRow.style.display = state.human_side === "opponent" ? "" : "none";
  if (state.status === "awaiting_engine") {
    pollTimer = window.setTimeout(refresh, 500);
  }
}

async function refresh(): Promise<void> {
  if (!current) return;
  show(await api.getState(current.id));
}

async function newGame(): Promise<void> {
  const phi = (document.getElementById("phi") as HTMLInputElement).value;
  const o0raw = (document.getElementById("o0") as HTMLInputElement).value;
  const side = (document.getElementById("side") as HTMLSelectElement).value;
  const engine = (document.getElementById("engine") as HTMLSelectElement).value;
  const params: Record<string, unknown> = { name: engine };
  if (engine === "solver") params.budget = 2;
  try {
    const state = await api.createSession({
      phi,
      o0: o0raw.split(";").map((s) => s.trim()).filter(Boolean),
      human_side: side as "opponent" | "proponent",
      engine: params as { name: string },
    });
    previousFormulas = undefined;
    notify("");
    show(state);
  } catch (err) {
    notify(err instanceof ApiError ? err.message : String(err), "error");
  }
}

async function submit(confirmPass = false): Promise<void> {
  if (!current) return;
  const freshCount = current.human_side === "opponent"
    ? Number((document.getElementById("fresh") as HTMLInputElement).value)
    : 0;
  try {
    const move = composeMove(selectedFormulas(), freshCount,
                             current.human_side, { confirmPass });
    show(await api.submitMove(current.id, move));
    notify("");
  } catch (err) {
    if (err instanceof ComposeError) {
      if (window.confirm("Submit an empty move? You will lose.")) {
        return submit(true);
      }
      return;
    }
    notify(err instanceof ApiError ? err.message : String(err), "error");
  }
}

export function mount(): void {
  document.getElementById("new-game")!.addEventListener("click", () => {
    if (pollTimer) window.clearTimeout(pollTimer);
    void newGame();
  });
  document.getElementById("submit-move")!.addEventListener("click",
    () => void submit());
  document.getElementById("refresh")!.addEventListener("click",
    () => void refresh());
}

if (typeof document !== "undefined" && document.getElementById("board")) {
  mount();
}
