// Wire types for the session service. Field names and enum values are the
// server's contract; the client never re-derives truth, turns or legality.

export type Player = "opponent" | "proponent";
export type Mark = "o" | "p" | "unmarked";
export type SessionStatus = "awaiting_human" | "awaiting_engine" | "finished";

export interface ClosureEntry {
  formula: string;
  mark: Mark;
  truth: boolean;
  mistake: boolean;
}

export interface HistoryRecord {
  mover: Player;
  fresh: string[];
  added: string[];
}

export interface Outcome {
  winner: Player;
  reason: string;
}

export interface SessionView {
  id: string;
  status: SessionStatus;
  human_side: Player;
  engine: string;
  to_move: Player;
  gamma: string[];
  delta: string[];
  o: string[];
  p: string[];
  closure: ClosureEntry[];
  mistakes: { opponent: string[]; proponent: string[] };
  history: HistoryRecord[];
  outcome: Outcome | null;
}

export interface MovePayload {
  fresh_count: number;
  add: string[];
}

export interface CreateRequest {
  o0: string[];
  phi: string;
  human_side: Player;
  engine: { name: string; [param: string]: unknown };
}
