import type { MessageReply, ToolDescriptor, ToolSpecDetail } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the assistant's HTTP API. */
export class ConsoleApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(0, `network failure: ${String(err)}`);
    }
    let payload: unknown = null;
    try {
      payload = await response.json();
    } catch {
      payload = null;
    }
    if (!response.ok) {
      const detail =
        payload && typeof payload === "object" && "error" in payload
          ? String((payload as { error: unknown }).error)
          : response.statusText;
      throw new ApiError(response.status, detail);
    }
    return payload as T;
  }

  async health(): Promise<boolean> {
    try {
      const body = await this.request<{ status: string }>("/healthz");
      return body.status === "ok";
    } catch {
      return false;
    }
  }

  async startSession(): Promise<string> {
    const body = await this.request<{ session_id: string }>("/api/session", { method: "POST" });
    return body.session_id;
  }

  async sendMessage(sessionId: string, text: string): Promise<MessageReply> {
    return this.request<MessageReply>(`/api/session/${encodeURIComponent(sessionId)}/message`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
  }

  async listTools(): Promise<ToolDescriptor[]> {
    const body = await this.request<{ tools: ToolDescriptor[] }>("/api/spec/tools");
    return body.tools;
  }

  async toolDetail(name: string): Promise<ToolSpecDetail> {
    return this.request<ToolSpecDetail>(`/api/spec/tools/${encodeURIComponent(name)}`);
  }
}
