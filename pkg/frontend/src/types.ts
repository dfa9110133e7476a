// JSON shapes served by the assistant's HTTP API. The console renders these
// verbatim; it holds no domain logic of its own.

export interface RoutingDecision {
  target: string;
  mechanism: string;
  fired_cues: string[];
}

export interface SlotFill {
  raw: string;
  value: unknown;
  origin: string;
}

export interface Extraction {
  filled: Record<string, SlotFill>;
  matched_patterns: string[];
  unmatched_required: string[];
}

export interface TraceCall {
  call: { call_id: string; tool: string; args: Record<string, unknown> };
  result: { call_id: string; status: string; fields: Record<string, unknown>; message: string };
}

export interface TurnTrace {
  session_id: string;
  utterance: string;
  routing: RoutingDecision;
  retrieval_hits: unknown[] | null;
  candidate_tool: string | null;
  extraction: Extraction | null;
  calls: TraceCall[];
  final_answer: string;
  timings?: Record<string, number>;
  notes: string[];
}

export interface MessageReply {
  answer: string;
  trace: TurnTrace;
}

export interface ParamSchemaEntry {
  name: string;
  kind: string;
  required: boolean;
}

export interface ToolDescriptor {
  name: string;
  docstring: string;
  params_schema: ParamSchemaEntry[];
  version: string;
}

export interface ParamSpec {
  name: string;
  kind: string;
  required: boolean;
  description: string;
  aliases: string[];
  enum_values: string[];
}

export interface OutputFieldSpec {
  name: string;
  kind: string;
  description: string;
  enum_values: string[];
  value_phrases: Record<string, string[]>;
}

export interface ToolSpecDetail {
  name: string;
  purpose: string;
  provider: string;
  inputs: ParamSpec[];
  outputs: OutputFieldSpec[];
  slot_patterns: { pattern: string; note: string }[];
  post_processing: { field: string; comparator: string; value: string; action: string; action_arg: string }[];
  render_hint: string | null;
  defaults: { trigger: string; param: string; action: string; text: string }[];
  related: { direction: string; target: string; cues: string[]; condition: [string, string, string] | null; auto_invoke: boolean }[];
  context_rules: { guard: string; pattern: string; effect: string; arg: string }[];
}
