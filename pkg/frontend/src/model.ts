/** View-models: pure functions from gateway payloads to what the widgets
 * show. Nothing here re-derives protocol rules; legality always comes from
 * the server. */

import type { RepliesPayload, ReplyChoice, Snapshot } from "./api.js";

export interface MessageView {
  id: number;
  turn: number;
  speaker: string;
  kind: string;
  label: string;
  text: string;
  target: number | null;
  promptTargets: number[];
  mine: boolean;
  /** Red: the viewer owes an answer to this request. */
  owedByMe: boolean;
  /** Blue: a prompt flagged this message and no one has answered since. */
  flagged: boolean;
}

export interface DialogueView {
  viewer: string;
  stage: string;
  closed: boolean;
  myTurn: boolean;
  messages: MessageView[];
  /** Request ids the viewer must answer before doing anything else. */
  owedRequests: number[];
  agreements: string[];
  myCommitments: string[];
  consented: string[];
  participants: string[];
}

export function dialogueView(
  snapshot: Snapshot,
  labels: Record<string, string>,
  viewer: string,
): DialogueView {
  const owed = new Set(
    snapshot.open_obligations.filter((o) => o.debtor === viewer).map((o) => o.request),
  );
  const flagged = new Set(snapshot.prompt_pending);
  const messages = snapshot.history
    .filter((loc) => loc.kind !== "pass")
    .map((loc) => ({
      id: loc.id,
      turn: loc.turn,
      speaker: loc.speaker,
      kind: loc.kind,
      label: labels[loc.kind] ?? loc.kind,
      text: loc.content.join(", "),
      target: loc.target,
      promptTargets: loc.prompt_targets,
      mine: loc.speaker === viewer,
      owedByMe: owed.has(loc.id),
      flagged: flagged.has(loc.id),
    }));
  const myTurn =
    !snapshot.closed &&
    snapshot.stage !== "lobby" &&
    (snapshot.current_speaker === null || snapshot.current_speaker === viewer);
  return {
    viewer,
    stage: snapshot.stage,
    closed: snapshot.closed,
    myTurn,
    messages,
    owedRequests: [...owed].sort((a, b) => a - b),
    agreements: snapshot.agreements,
    myCommitments: snapshot.commitments[viewer] ?? [],
    consented: snapshot.consented,
    participants: snapshot.participants.map((p) => p.name),
  };
}

export interface DropdownOption {
  kind: string;
  label: string;
}

/** Options for the reply dropdown, exactly as the server allows them. */
export function composerOptions(payload: RepliesPayload): DropdownOption[] {
  return payload.replies.map((choice: ReplyChoice) => ({
    kind: choice.kind,
    label: choice.label,
  }));
}

export interface ComposerState {
  enabled: boolean;
  reason: string;
}

export function composerState(view: DialogueView): ComposerState {
  if (view.closed) return { enabled: false, reason: "dialogue closed" };
  if (view.stage === "lobby") return { enabled: false, reason: "waiting for participants" };
  if (!view.myTurn) return { enabled: false, reason: "not your turn" };
  if (view.owedRequests.length > 0) {
    return { enabled: true, reason: `answer request #${view.owedRequests[0]} first` };
  }
  return { enabled: true, reason: "" };
}
