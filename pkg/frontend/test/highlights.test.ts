// Drives the worked dialogue over HTTP and checks the chat view-model:
// a red highlight on requests the viewer still owes an answer to, and a
// blue highlight on messages flagged by a prompt, in every participant's
// view.

import { beforeAll, describe, expect, it } from "vitest";
import type { Gateway, Snapshot } from "../src/api.js";
import { composerState, dialogueView } from "../src/model.js";
import { renderComposer, renderMessages } from "../src/view.js";
import { gateway, openScriptSession, playThrough, script } from "./helpers.js";

const VIEWERS = ["α", "β", "γ"];

let gw: Gateway;
let labels: Record<string, string>;

beforeAll(async () => {
  gw = gateway();
  labels = await gw.labels();
});

function viewsOf(snapshot: Snapshot) {
  return VIEWERS.map((viewer) => dialogueView(snapshot, labels, viewer));
}

describe("obligation highlight (red)", () => {
  it("appears for the debtor once the request lands and clears when answered", async () => {
    const sid = await openScriptSession(gw);
    const afterT2 = await playThrough(gw, sid, "T2");

    const request = afterT2.history.find((loc) => loc.kind === "wh-justify");
    expect(request).toBeDefined();
    const [alpha, beta, gamma] = viewsOf(afterT2);

    const owedByAlpha = alpha!.messages.filter((m) => m.owedByMe);
    expect(owedByAlpha.map((m) => m.id)).toEqual([request!.id]);
    expect(alpha!.owedRequests).toEqual([request!.id]);
    expect(beta!.messages.some((m) => m.owedByMe)).toBe(false);
    expect(gamma!.messages.some((m) => m.owedByMe)).toBe(false);

    const html = renderMessages(alpha!);
    expect(html).toMatch(new RegExp(`class="msg[^"]*owed" data-id="${request!.id}"`));
    expect(renderMessages(beta!)).not.toContain("owed");

    const afterT4 = await playThrough(gw, sid, "T4", "T2");
    for (const view of viewsOf(afterT4)) {
      expect(view.messages.some((m) => m.owedByMe)).toBe(false);
      expect(view.owedRequests).toEqual([]);
      expect(renderMessages(view)).not.toContain("owed");
    }
  });
});

describe("prompt highlight (blue)", () => {
  it("marks the flagged message in every participant's view after the prompt", async () => {
    const sid = await openScriptSession(gw);
    const afterT11 = await playThrough(gw, sid, "T11");
    expect(afterT11.stage).toBe("termination");
    expect([...afterT11.consented].sort()).toEqual(["β", "γ"]);
    for (const view of viewsOf(afterT11)) {
      expect(view.messages.some((m) => m.flagged)).toBe(false);
    }

    const afterT12 = await playThrough(gw, sid, "T12", "T11");
    expect(afterT12.stage).toBe("progress");
    expect(afterT12.consented).toEqual([]);

    const adviseOfT8 = afterT12.history.find(
      (loc) => loc.turn === 8 && loc.kind === "advise",
    );
    expect(adviseOfT8).toBeDefined();
    expect(afterT12.prompt_pending).toEqual([adviseOfT8!.id]);

    for (const view of viewsOf(afterT12)) {
      const flagged = view.messages.filter((m) => m.flagged);
      expect(flagged.map((m) => m.id)).toEqual([adviseOfT8!.id]);
      expect(renderMessages(view)).toMatch(
        new RegExp(`class="msg[^"]*flagged" data-id="${adviseOfT8!.id}"`),
      );
      const prompt = view.messages.find((m) => m.kind === "prompt");
      expect(prompt?.promptTargets).toEqual([adviseOfT8!.id]);
    }
  });

  it("clears once someone answers the flagged message", async () => {
    const sid = await openScriptSession(gw);
    const afterT13 = await playThrough(gw, sid, "T13");
    expect(afterT13.prompt_pending).toEqual([]);
    for (const view of viewsOf(afterT13)) {
      expect(view.messages.some((m) => m.flagged)).toBe(false);
    }
  });
});

describe("composer gating", () => {
  it("is open in a free-order session and disabled after closure", async () => {
    const sid = await openScriptSession(gw);
    const midway = await playThrough(gw, sid, "T2");
    expect(script.config["turn_order"]).toBe("free");
    const [alpha] = viewsOf(midway);
    expect(alpha!.myTurn).toBe(true);
    expect(composerState(alpha!).enabled).toBe(true);
    expect(composerState(alpha!).reason).toContain("answer request");

    const finale = await playThrough(gw, sid, "T19", "T2");
    expect(finale.closed).toBe(true);
    for (const view of viewsOf(finale)) {
      const state = composerState(view);
      expect(state.enabled).toBe(false);
      expect(state.reason).toBe("dialogue closed");
      expect(renderComposer(view, [])).toContain("composer disabled");
    }
  });
});
