import { describe, expect, it } from "vitest";

import { ApiError, ConsoleApi } from "../src/api.js";
import type { TurnTrace } from "../src/types.js";

function fakeFetch(routes: Record<string, { status: number; body: unknown }>) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const route = routes[url];
    if (!route) throw new Error(`unexpected fetch: ${url}`);
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "Content-Type": "application/json" },
    });
  };
  return { fetchFn, calls };
}

const trace: TurnTrace = {
  session_id: "s1",
  utterance: "check if machine 7 is down",
  routing: { target: "TOOL_CALLING_AGENT", mechanism: "cue_match", fired_cues: ["machine"] },
  retrieval_hits: null,
  candidate_tool: "GetMachineStatus",
  extraction: {
    filled: { machine_id: { raw: "7", value: "7", origin: "utterance" } },
    matched_patterns: ["check if {machine_id} is down"],
    unmatched_required: [],
  },
  calls: [
    {
      call: { call_id: "c1", tool: "GetMachineStatus", args: { machine_id: "7" } },
      result: { call_id: "c1", status: "ok", fields: { status: "Running" }, message: "" },
    },
  ],
  final_answer: "Machine 7 is Running.",
  notes: [],
};

describe("ConsoleApi", () => {
  it("starts a session", async () => {
    const { fetchFn, calls } = fakeFetch({
      "/api/session": { status: 200, body: { session_id: "abc123" } },
    });
    const api = new ConsoleApi("", fetchFn);
    expect(await api.startSession()).toBe("abc123");
    expect(calls[0]?.init?.method).toBe("POST");
  });

  it("sends a message and returns the typed reply", async () => {
    const { fetchFn, calls } = fakeFetch({
      "/api/session/abc123/message": { status: 200, body: { answer: "Machine 7 is Running.", trace } },
    });
    const api = new ConsoleApi("", fetchFn);
    const reply = await api.sendMessage("abc123", "check if machine 7 is down");
    expect(reply.answer).toContain("Running");
    expect(reply.trace.calls[0]?.call.tool).toBe("GetMachineStatus");
    const sent = JSON.parse(String(calls[0]?.init?.body));
    expect(sent).toEqual({ text: "check if machine 7 is down" });
  });

  it("lists tools", async () => {
    const { fetchFn } = fakeFetch({
      "/api/spec/tools": {
        status: 200,
        body: { tools: [{ name: "A", docstring: "A: x", params_schema: [], version: "1" }] },
      },
    });
    const api = new ConsoleApi("", fetchFn);
    const tools = await api.listTools();
    expect(tools.map((t) => t.name)).toEqual(["A"]);
  });

  it("raises ApiError with the server detail on 404", async () => {
    const { fetchFn } = fakeFetch({
      "/api/spec/tools/Nope": { status: 404, body: { error: "unknown tool 'Nope'" } },
    });
    const api = new ConsoleApi("", fetchFn);
    await expect(api.toolDetail("Nope")).rejects.toMatchObject({
      name: "ApiError",
      status: 404,
      message: "unknown tool 'Nope'",
    });
  });

  it("wraps network failures as status 0", async () => {
    const api = new ConsoleApi("", async () => {
      throw new Error("ECONNREFUSED");
    });
    await expect(api.startSession()).rejects.toMatchObject({ status: 0 });
    expect(await api.health()).toBe(false);
  });

  it("health is true only for an ok body", async () => {
    const { fetchFn } = fakeFetch({ "/healthz": { status: 200, body: { status: "ok" } } });
    expect(await new ConsoleApi("", fetchFn).health()).toBe(true);
  });
});

describe("ApiError", () => {
  it("keeps the HTTP status", () => {
    const err = new ApiError(502, "bad gateway");
    expect(err.status).toBe(502);
    expect(err.message).toBe("bad gateway");
  });
});
