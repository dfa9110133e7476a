import { ApiError, ConsoleApi } from "./api.js";
import { ConsoleSessionView } from "./state.js";
import {
  renderBanner,
  renderNotFound,
  renderTracePanel,
  renderToolDetail,
  renderToolList,
  renderTranscript,
} from "./render.js";

const api = new ConsoleApi("");
const view = new ConsoleSessionView();

function byId(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node;
}

function redrawTranscript(): void {
  const holder = byId("transcript-holder");
  holder.replaceChildren(renderTranscript(document, view, showTrace));
  holder.scrollTop = holder.scrollHeight;
}

function showTrace(index: number): void {
  const trace = view.traces.get(index);
  const holder = byId("trace-holder");
  holder.replaceChildren();
  if (trace) holder.replaceChildren(renderTracePanel(document, trace));
}

function setBusy(busy: boolean): void {
  view.busy = busy;
  (byId("send") as HTMLButtonElement).disabled = busy || view.sessionId === null;
  (byId("input") as HTMLInputElement).disabled = busy;
}

async function startSession(): Promise<void> {
  const bannerHolder = byId("banner-holder");
  bannerHolder.replaceChildren();
  try {
    const sessionId = await api.startSession();
    view.reset(sessionId);
    byId("session-label").textContent = `session ${sessionId.slice(0, 8)}`;
    redrawTranscript();
    setBusy(false);
  } catch (err) {
    bannerHolder.replaceChildren(
      renderBanner(document, `Cannot reach the assistant: ${String(err)}`, () => void startSession()),
    );
    setBusy(true);
  }
}

async function send(): Promise<void> {
  const input = byId("input") as HTMLInputElement;
  const text = input.value.trim();
  if (!text || view.busy || view.sessionId === null) return;
  input.value = "";
  const userIndex = view.addUser(text);
  redrawTranscript();
  setBusy(true);
  try {
    const reply = await api.sendMessage(view.sessionId, text);
    const index = view.addAssistant(reply.answer, reply.trace);
    redrawTranscript();
    showTrace(index);
  } catch (err) {
    view.markFailed(userIndex);
    redrawTranscript();
    const message = err instanceof ApiError ? err.message : String(err);
    byId("banner-holder").replaceChildren(
      renderBanner(document, `Send failed: ${message}`, () => {
        input.value = text;
        byId("banner-holder").replaceChildren();
      }),
    );
  } finally {
    setBusy(false);
  }
}

async function openTools(): Promise<void> {
  const holder = byId("tools-holder");
  try {
    const tools = await api.listTools();
    holder.replaceChildren(renderToolList(document, tools, (name) => void openToolDetail(name)));
  } catch (err) {
    holder.replaceChildren(renderBanner(document, `Cannot list tools: ${String(err)}`));
  }
}

async function openToolDetail(name: string): Promise<void> {
  const holder = byId("tool-detail-holder");
  try {
    const spec = await api.toolDetail(name);
    holder.replaceChildren(renderToolDetail(document, spec));
  } catch (err) {
    if (err instanceof ApiError && err.status === 404) {
      holder.replaceChildren(renderNotFound(document, name));
    } else {
      holder.replaceChildren(renderBanner(document, `Cannot load ${name}: ${String(err)}`));
    }
  }
}

function switchTab(tab: "chat" | "tools"): void {
  byId("chat-page").classList.toggle("hidden", tab !== "chat");
  byId("tools-page").classList.toggle("hidden", tab !== "tools");
  if (tab === "tools") void openTools();
}

export function boot(): void {
  byId("send").addEventListener("click", () => void send());
  byId("input").addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") void send();
  });
  byId("tab-chat").addEventListener("click", () => switchTab("chat"));
  byId("tab-tools").addEventListener("click", () => switchTab("tools"));
  void startSession();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  boot();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", boot);
}
