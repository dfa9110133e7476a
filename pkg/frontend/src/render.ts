import type { ConsoleSessionView } from "./state.js";
import type { ToolDescriptor, ToolSpecDetail, TurnTrace } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderBanner(doc: Document, message: string, onRetry?: () => void): HTMLElement {
  const banner = el(doc, "div", "banner error");
  banner.appendChild(el(doc, "span", "", message));
  if (onRetry) {
    const retry = el(doc, "button", "retry", "Retry");
    retry.addEventListener("click", onRetry);
    banner.appendChild(retry);
  }
  return banner;
}

export function renderTranscript(
  doc: Document,
  view: ConsoleSessionView,
  onShowTrace: (index: number) => void,
): HTMLElement {
  const list = el(doc, "div", "transcript");
  view.transcript.forEach((entry, index) => {
    const bubble = el(doc, "div", `bubble ${entry.speaker}${entry.failed ? " failed" : ""}`);
    bubble.appendChild(el(doc, "div", "text", entry.text));
    if (entry.failed) {
      bubble.appendChild(el(doc, "div", "failed-note", "failed to send"));
    }
    if (view.traces.has(index)) {
      const link = el(doc, "button", "trace-link", "trace");
      link.addEventListener("click", () => onShowTrace(index));
      bubble.appendChild(link);
    }
    list.appendChild(bubble);
  });
  return list;
}

function kvTable(doc: Document, entries: [string, string][]): HTMLElement {
  const table = el(doc, "table", "kv");
  for (const [key, value] of entries) {
    const row = el(doc, "tr");
    row.appendChild(el(doc, "th", "", key));
    row.appendChild(el(doc, "td", "", value));
    table.appendChild(row);
  }
  return table;
}

/** The per-turn panel: routing, cues, selected tool, args, calls, final answer. */
export function renderTracePanel(doc: Document, trace: TurnTrace): HTMLElement {
  const panel = el(doc, "div", "trace-panel");
  panel.appendChild(el(doc, "h3", "", "Turn trace"));

  const routing = el(doc, "section", "routing");
  routing.appendChild(el(doc, "h4", "", "Routing"));
  routing.appendChild(
    kvTable(doc, [
      ["target", trace.routing.target],
      ["mechanism", trace.routing.mechanism],
      ["fired cues", trace.routing.fired_cues.join(", ") || "(none)"],
    ]),
  );
  panel.appendChild(routing);

  const selection = el(doc, "section", "selection");
  selection.appendChild(el(doc, "h4", "", "Tool"));
  selection.appendChild(el(doc, "div", "candidate", trace.candidate_tool ?? "(no tool)"));
  if (trace.extraction) {
    const args = Object.entries(trace.extraction.filled).map(
      ([name, fill]) => [name, `${String(fill.value)} (${fill.origin})`] as [string, string],
    );
    selection.appendChild(el(doc, "h5", "", "Arguments"));
    selection.appendChild(args.length ? kvTable(doc, args) : el(doc, "div", "empty", "(none)"));
    if (trace.extraction.unmatched_required.length) {
      selection.appendChild(
        el(doc, "div", "missing", `missing required: ${trace.extraction.unmatched_required.join(", ")}`),
      );
    }
  }
  panel.appendChild(selection);

  const calls = el(doc, "section", "calls");
  calls.appendChild(el(doc, "h4", "", `Tool calls (${trace.calls.length})`));
  for (const call of trace.calls) {
    const row = el(doc, "div", `call ${call.result.status}`);
    row.appendChild(el(doc, "span", "tool", call.call.tool));
    row.appendChild(el(doc, "span", "args", JSON.stringify(call.call.args)));
    row.appendChild(el(doc, "span", "status", call.result.status));
    if (call.result.message) row.appendChild(el(doc, "span", "message", call.result.message));
    calls.appendChild(row);
  }
  panel.appendChild(calls);

  const answer = el(doc, "section", "answer");
  answer.appendChild(el(doc, "h4", "", "Final answer"));
  answer.appendChild(el(doc, "div", "final", trace.final_answer));
  panel.appendChild(answer);

  if (trace.notes.length) {
    const notes = el(doc, "section", "notes");
    notes.appendChild(el(doc, "h4", "", "Notes"));
    for (const note of trace.notes) notes.appendChild(el(doc, "div", "note", note));
    panel.appendChild(notes);
  }
  return panel;
}

export function renderToolList(
  doc: Document,
  tools: ToolDescriptor[],
  onSelect: (name: string) => void,
): HTMLElement {
  const list = el(doc, "div", "tool-list");
  for (const tool of tools) {
    const item = el(doc, "button", "tool-item");
    item.appendChild(el(doc, "span", "name", tool.name));
    item.appendChild(el(doc, "span", "summary", tool.docstring.split("\n")[0] ?? ""));
    item.addEventListener("click", () => onSelect(tool.name));
    list.appendChild(item);
  }
  return list;
}

export function renderNotFound(doc: Document, name: string): HTMLElement {
  return el(doc, "div", "not-found", `No tool named "${name}" is loaded.`);
}

function section(doc: Document, title: string, body: HTMLElement | null): HTMLElement {
  const wrap = el(doc, "section", "spec-section");
  wrap.appendChild(el(doc, "h4", "", title));
  wrap.appendChild(body ?? el(doc, "div", "empty", "(none)"));
  return wrap;
}

function bulletList(doc: Document, items: string[]): HTMLElement | null {
  if (!items.length) return null;
  const ul = el(doc, "ul");
  for (const item of items) ul.appendChild(el(doc, "li", "", item));
  return ul;
}

/** Full detail view: all ten spec sections, rendered read-only. */
export function renderToolDetail(doc: Document, spec: ToolSpecDetail): HTMLElement {
  const panel = el(doc, "div", "tool-detail");
  panel.appendChild(el(doc, "h3", "", spec.name));
  panel.appendChild(section(doc, "Purpose", el(doc, "p", "", spec.purpose)));
  panel.appendChild(section(doc, "Provider", spec.provider ? el(doc, "p", "", spec.provider) : null));
  panel.appendChild(
    section(
      doc,
      "Inputs",
      bulletList(
        doc,
        spec.inputs.map((p) => {
          const required = p.required ? ", required" : "";
          const aliases = p.aliases.length ? ` — also called: ${p.aliases.join(", ")}` : "";
          const values = p.enum_values.length ? ` [${p.enum_values.join(", ")}]` : "";
          return `${p.name} (${p.kind}${required}): ${p.description}${values}${aliases}`;
        }),
      ),
    ),
  );
  panel.appendChild(
    section(
      doc,
      "Outputs",
      bulletList(
        doc,
        spec.outputs.map((o) => {
          const values = o.enum_values.length ? ` [${o.enum_values.join(", ")}]` : "";
          const phrases = Object.entries(o.value_phrases)
            .map(([canonical, synonyms]) => `${canonical} = ${synonyms.join(", ")}`)
            .join("; ");
          return `${o.name} (${o.kind})${values}: ${o.description}${phrases ? ` — phrases: ${phrases}` : ""}`;
        }),
      ),
    ),
  );
  panel.appendChild(
    section(doc, "Slot-Filling Phrases", bulletList(doc, spec.slot_patterns.map((p) => p.pattern))),
  );
  panel.appendChild(
    section(
      doc,
      "Output Post-processing",
      bulletList(
        doc,
        spec.post_processing.map(
          (r) => `when ${r.field} ${r.comparator} ${r.value} → ${r.action}: ${r.action_arg}`,
        ),
      ),
    ),
  );
  panel.appendChild(
    section(doc, "Visualization", spec.render_hint ? el(doc, "p", "", spec.render_hint) : null),
  );
  panel.appendChild(
    section(
      doc,
      "Default Behaviors",
      bulletList(
        doc,
        spec.defaults.map((b) =>
          b.trigger === "missing_input"
            ? `missing ${b.param}: ${b.action} "${b.text}"`
            : `empty output: ${b.action} "${b.text}"`,
        ),
      ),
    ),
  );
  panel.appendChild(
    section(
      doc,
      "Related Tools",
      bulletList(
        doc,
        spec.related.map((l) => {
          const condition = l.condition ? ` when ${l.condition[0]} ${l.condition[1]} ${l.condition[2]}` : "";
          const auto = l.auto_invoke ? " [auto]" : "";
          const cues = l.cues.length ? ` — cues: ${l.cues.join(", ")}` : "";
          return `${l.direction} ${l.target}${condition}${auto}${cues}`;
        }),
      ),
    ),
  );
  panel.appendChild(
    section(
      doc,
      "Contextual Usage",
      bulletList(
        doc,
        spec.context_rules.map((r) => {
          const guard = r.guard === "query_matches" ? `when query matches "${r.pattern}"` : "always";
          const effect = r.effect === "redirect" ? `redirect ${r.arg}` : r.effect === "deny" ? `deny "${r.arg}"` : "allow";
          return `${guard} → ${effect}`;
        }),
      ),
    ),
  );
  return panel;
}
