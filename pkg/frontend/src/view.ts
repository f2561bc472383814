/** HTML rendering. Every function returns a string so the view can be
 * unit-tested without a DOM; main.ts assigns the results to innerHTML. */

import type { DialogueView, DropdownOption, MessageView } from "./model.js";
import { composerState } from "./model.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function messageClasses(message: MessageView): string {
  const classes = ["msg"];
  if (message.mine) classes.push("mine");
  if (message.owedByMe) classes.push("owed");
  if (message.flagged) classes.push("flagged");
  return classes.join(" ");
}

export function renderMessage(message: MessageView): string {
  const target = message.target ? ` <span class="target">&rarr; #${message.target}</span>` : "";
  const flaggedIds = message.promptTargets.map((id) => `#${id}`).join(", ");
  const body = message.text
    ? ` <span class="content">${escapeHtml(message.text)}</span>`
    : flaggedIds
      ? ` <span class="content">${flaggedIds}</span>`
      : "";
  return (
    `<li class="${messageClasses(message)}" data-id="${message.id}" data-turn="${message.turn}">` +
    `<span class="speaker">${escapeHtml(message.speaker)}</span>` +
    `<span class="phrase">${escapeHtml(message.label)}</span>${body}${target}</li>`
  );
}

export function renderMessages(view: DialogueView): string {
  return `<ul class="history">${view.messages.map(renderMessage).join("")}</ul>`;
}

export function renderStatus(view: DialogueView): string {
  const parts = [`stage: ${escapeHtml(view.stage)}`];
  if (view.consented.length > 0) {
    parts.push(`ready to close: ${view.consented.map(escapeHtml).join(", ")}`);
  }
  if (view.closed) parts.push("closed");
  else if (view.myTurn) parts.push("your turn");
  return `<div class="status">${parts.join(" &middot; ")}</div>`;
}

export function renderAgreements(view: DialogueView): string {
  if (view.agreements.length === 0) return `<div class="agreements empty">nothing agreed yet</div>`;
  const items = view.agreements.map((f) => `<li>${escapeHtml(f)}</li>`).join("");
  return `<div class="agreements"><h3>Agreed so far</h3><ul>${items}</ul></div>`;
}

export function renderDropdown(options: DropdownOption[]): string {
  const entries = options
    .map(
      (option) =>
        `<option value="${escapeHtml(option.kind)}">${escapeHtml(option.label)}</option>`,
    )
    .join("");
  return `<select class="reply-kind" ${options.length === 0 ? "disabled" : ""}>${entries}</select>`;
}

export function renderComposer(view: DialogueView, options: DropdownOption[]): string {
  const state = composerState(view);
  if (!state.enabled) {
    return `<div class="composer disabled">${escapeHtml(state.reason)}</div>`;
  }
  const hint = state.reason ? `<div class="hint">${escapeHtml(state.reason)}</div>` : "";
  return (
    `<div class="composer">${hint}${renderDropdown(options)}` +
    `<input class="content" placeholder="formula, formula" />` +
    `<button class="send">Send</button></div>`
  );
}
