import type { TurnTrace } from "./types.js";

export interface TranscriptEntry {
  speaker: "user" | "assistant";
  text: string;
  failed?: boolean;
}

/** Client-side view of one chat session: transcript plus per-answer traces. */
export class ConsoleSessionView {
  sessionId: string | null = null;
  transcript: TranscriptEntry[] = [];
  traces = new Map<number, TurnTrace>(); // transcript index of the assistant entry -> trace
  busy = false;

  addUser(text: string): number {
    this.transcript.push({ speaker: "user", text });
    return this.transcript.length - 1;
  }

  addAssistant(text: string, trace: TurnTrace): number {
    this.transcript.push({ speaker: "assistant", text });
    const index = this.transcript.length - 1;
    this.traces.set(index, trace);
    return index;
  }

  markFailed(index: number): void {
    const entry = this.transcript[index];
    if (entry) entry.failed = true;
  }

  reset(sessionId: string): void {
    this.sessionId = sessionId;
    this.transcript = [];
    this.traces.clear();
    this.busy = false;
  }
}
