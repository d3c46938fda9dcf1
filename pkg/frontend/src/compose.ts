// Move composition: selection + fresh-element count -> the server's move
// payload. The client checks shape only; legality is the server's job and
// rejections round-trip back to the board.

import type { MovePayload, Player } from "./types.js";

export class ComposeError extends Error {}

export interface ComposeOptions {
  confirmPass?: boolean; // an empty move loses; require explicit intent
}

export function composeMove(selection: Iterable<string>, freshCount: number,
                            side: Player,
                            options: ComposeOptions = {}): MovePayload {
  const add = [...new Set(selection)].sort();
  if (side === "proponent" && freshCount !== 0) {
    throw new ComposeError("proponent cannot introduce elements");
  }
  if (!Number.isInteger(freshCount) || freshCount < 0) {
    throw new ComposeError(`bad fresh element count: ${freshCount}`);
  }
  if (add.length === 0 && freshCount === 0 && !options.confirmPass) {
    throw new ComposeError(
      "empty move passes and loses; confirm to submit it");
  }
  return { fresh_count: freshCount, add };
}
