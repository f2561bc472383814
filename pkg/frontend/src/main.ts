/** Browser bootstrap: join form, live view, composer. State lives on the
 * server; every event refreshes the snapshot and re-renders. */

import { Gateway, subscribeEvents, type MoveWire, type Snapshot } from "./api.js";
import { composerOptions, dialogueView, type DropdownOption } from "./model.js";
import { renderAgreements, renderComposer, renderMessages, renderStatus } from "./view.js";

interface AppState {
  gateway: Gateway;
  sid: string;
  viewer: string;
  labels: Record<string, string>;
  snapshot: Snapshot | null;
  target: number | null;
  options: DropdownOption[];
  notice: string;
}

function el<T extends HTMLElement>(selector: string): T {
  const found = document.querySelector<T>(selector);
  if (!found) throw new Error(`missing element ${selector}`);
  return found;
}

async function refresh(state: AppState): Promise<void> {
  state.snapshot = await state.gateway.snapshot(state.sid);
  if (state.target !== null) {
    try {
      state.options = composerOptions(await state.gateway.replies(state.sid, state.target));
    } catch {
      state.target = null;
      state.options = [];
    }
  }
  render(state);
}

function render(state: AppState): void {
  if (!state.snapshot) return;
  const view = dialogueView(state.snapshot, state.labels, state.viewer);
  el("#history").innerHTML = renderMessages(view);
  el("#status").innerHTML = renderStatus(view);
  el("#agreements").innerHTML = renderAgreements(view);
  el("#composer").innerHTML = renderComposer(view, state.options);
  el("#notice").textContent = state.notice;

  for (const item of document.querySelectorAll<HTMLElement>("#history .msg")) {
    item.addEventListener("click", () => {
      state.target = Number(item.dataset.id);
      void pickTarget(state);
    });
  }
  const send = document.querySelector<HTMLButtonElement>("#composer .send");
  send?.addEventListener("click", () => void submit(state));
}

async function pickTarget(state: AppState): Promise<void> {
  if (state.target === null) return;
  state.options = composerOptions(await state.gateway.replies(state.sid, state.target));
  state.notice = `replying to #${state.target}`;
  render(state);
}

async function submit(state: AppState): Promise<void> {
  const select = document.querySelector<HTMLSelectElement>("#composer .reply-kind");
  const input = document.querySelector<HTMLInputElement>("#composer .content");
  if (!select || state.target === null) return;
  const content = (input?.value ?? "")
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0);
  const moves: MoveWire[] = [
    { kind: select.value, content, target: state.target },
    { kind: "pass" },
  ];
  const result = await state.gateway.submitTurn(state.sid, state.viewer, moves);
  if (result.accepted) {
    state.notice = "";
    state.target = null;
    state.options = [];
    if (input) input.value = "";
  } else {
    state.notice = result.violations.map((v) => `${v.code}: ${v.message}`).join("; ");
  }
  await refresh(state);
}

async function start(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const base = params.get("gateway") ?? `${location.protocol}//${location.hostname}:8440`;
  const gateway = new Gateway(base);

  const form = el<HTMLFormElement>("#join-form");
  form.addEventListener("submit", (evt) => {
    evt.preventDefault();
    void (async () => {
      const sidField = el<HTMLInputElement>("#join-session").value.trim();
      const name = el<HTMLInputElement>("#join-name").value.trim();
      const role = el<HTMLSelectElement>("#join-role").value;
      const sid = sidField || (await gateway.createSession({ corpus: "" }));
      await gateway.join(sid, name, role);
      const state: AppState = {
        gateway,
        sid,
        viewer: name,
        labels: await gateway.labels(),
        snapshot: null,
        target: null,
        options: [],
        notice: "",
      };
      el("#join").hidden = true;
      el("#room").hidden = false;
      el("#session-id").textContent = sid;
      subscribeEvents(gateway, sid, () => void refresh(state), {
        onError: (err) => {
          state.notice = String(err);
          render(state);
        },
      });
      await refresh(state);
    })();
  });
}

document.addEventListener("DOMContentLoaded", () => void start());
