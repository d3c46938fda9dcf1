import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { boardHtml, errorPanelHtml, MalformedStateError, renderBoard } from "../src/board.js";
import type { SessionView } from "../src/types.js";

const initial: SessionView = JSON.parse(
  readFileSync(new URL("../fixtures/game2-initial.json", import.meta.url), "utf8"));
const final: SessionView = JSON.parse(
  readFileSync(new URL("../fixtures/game2-final.json", import.meta.url), "utf8"));

describe("renderBoard", () => {
  it("shows every closure formula once with mark, truth and mistake flag", () => {
    const view = renderBoard(initial);
    expect(view.entries.length).toBe(initial.closure.length);
    const byFormula = new Map(view.entries.map((e) => [e.formula, e]));
    expect(byFormula.size).toBe(view.entries.length);
    const goal = byFormula.get("~P(c) -> ~(exists x. P(x))")!;
    expect(goal.mark).toBe("p");
    expect(goal.truth).toBe(true);
    expect(goal.mistake).toBe(false);
    const negated = byFormula.get("~P(c)")!;
    expect(negated.mark).toBe("unmarked");
    expect(negated.truth).toBe(false);
  });

  it("renders the state fields untouched (server is the rule authority)", () => {
    const view = renderBoard(initial);
    for (const entry of view.entries) {
      const wire = initial.closure.find((e) => e.formula === entry.formula)!;
      expect(entry.mark).toBe(wire.mark);
      expect(entry.truth).toBe(wire.truth);
      expect(entry.mistake).toBe(wire.mistake);
    }
    expect(view.delta).toEqual(initial.delta);
  });

  it("shows delta in introduction order and turn banner for the human", () => {
    const view = renderBoard(initial);
    expect(view.delta).toEqual(["c"]);
    expect(view.turnBanner).toBe("opponent to move (you)");
    expect(view.yourTurn).toBe(true);
    expect(view.composerSide).toBe("opponent");
    expect(view.outcomeBanner).toBeNull();
  });

  it("renders finished states with an outcome banner and no composer", () => {
    const view = renderBoard(final);
    expect(view.outcomeBanner).toBe("opponent wins (stuck_after_own_move)");
    expect(view.composerSide).toBeNull();
    expect(view.turnBanner).toBe("game over");
    expect(view.history.length).toBe(2);
  });

  it("flags formulas that appeared since the previous state", () => {
    const before = new Set(initial.closure.map((e) => e.formula));
    const view = renderBoard(final, before);
    const fresh = view.entries.filter((e) => e.fresh).map((e) => e.formula);
    expect(fresh).toEqual(["P(α1)"]);
  });

  it("handles an empty delta without crashing", () => {
    const state = { ...initial, delta: [] as string[] };
    const view = renderBoard(state);
    expect(view.delta).toEqual([]);
    expect(boardHtml(view)).toContain("∅");
  });

  it("refuses malformed states instead of rendering partially", () => {
    const broken = { ...initial, closure: undefined } as unknown as SessionView;
    expect(() => renderBoard(broken)).toThrow(MalformedStateError);
    const duplicated = {
      ...initial,
      closure: [...initial.closure, initial.closure[0]],
    };
    expect(() => renderBoard(duplicated)).toThrow(/duplicate/);
    expect(errorPanelHtml("boom")).toContain("boom");
  });

  it("escapes formulas in the HTML rendering", () => {
    const view = renderBoard(final);
    const html = boardHtml(view);
    expect(html).toContain("-&gt;");
    expect(html).not.toContain("<script");
  });
});
