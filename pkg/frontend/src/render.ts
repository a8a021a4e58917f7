// DOM builders. Everything here renders data the server sent; the only
// "logic" is presentation (which CSS class, which label). No predicate is
// ever evaluated on the client.

import { formatMargin, witnessToDirac } from "./dirac";
import type {
  HoleJson,
  LedgerEntryJson,
  ObligationJson,
  RuleInfoJson,
  SessionJson,
  VerifyResponseJson,
} from "./types";

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) {
    if (k === "class") node.className = v;
    else node.setAttribute(k, v);
  }
  for (const c of children) node.append(c);
  return node;
}

function bindingText(binding: Record<string, number>): string {
  const parts = Object.entries(binding).map(([k, v]) => `${k}=${v}`);
  return parts.length ? `{${parts.join(", ")}}` : "";
}

// --- program view -----------------------------------------------------------

const HOLE_RE = /hole (\w+) \(\.\.\.\)/g;

function chipLabel(hole: HoleJson): string {
  const first = hole.clauses[0];
  const pre = first?.pre ?? "?";
  const post = first?.post ?? "?";
  const extra = hole.clauses.length > 1 ? ` (×${hole.clauses.length})` : "";
  return `⦃${pre} ⇒ ${post}⦄${extra}`;
}

/**
 * The program as an indented source block; every `hole h (...)` placeholder
 * in the server's rendering becomes a clickable chip showing its spec.
 */
export function renderProgram(
  state: SessionJson,
  selected: string | null,
  onSelect: (holeId: string) => void,
): HTMLElement {
  const holesById = new Map(state.holes.map((h) => [h.id, h]));
  const block = el("pre", { id: "program", class: "program" });
  let last = 0;
  for (const m of state.program.matchAll(HOLE_RE)) {
    block.append(state.program.slice(last, m.index));
    const hid = m[1]!;
    const hole = holesById.get(hid);
    const chip = el(
      "button",
      { class: "hole-chip" + (hid === selected ? " selected" : ""), "data-hole": hid },
      hole ? `${hid} ${chipLabel(hole)}` : m[0],
    );
    if (hole) {
      chip.title = hole.note ?? "refine this hole";
      chip.addEventListener("click", () => onSelect(hid));
    }
    block.append(chip);
    last = m.index! + m[0].length;
  }
  block.append(state.program.slice(last));
  return block;
}

// --- rule palette ------------------------------------------------------------

export function renderPalette(
  rules: RuleInfoJson[],
  mode: "total" | "partial",
  selected: string | null,
  onSelect: (rule: RuleInfoJson) => void,
): HTMLElement {
  const box = el("div", { id: "palette", class: "palette" });
  for (const rule of rules) {
    const usable = mode === "total" ? rule.available.total : rule.available.partial;
    const btn = el(
      "button",
      { class: "rule-btn" + (rule.name === selected ? " selected" : ""), "data-rule": rule.name },
      rule.name,
    );
    btn.title = rule.summary;
    if (!usable) btn.disabled = true;
    else btn.addEventListener("click", () => onSelect(rule));
    box.append(btn);
  }
  return box;
}

// --- argument form -----------------------------------------------------------

export interface ArgFormHandles {
  root: HTMLElement;
  /** Raw field text keyed by argument name, plus "names" when present. */
  read(): { args: Record<string, string>; names: string };
  showError(message: string): void;
  clearError(): void;
}

export function renderArgForm(rule: RuleInfoJson, onSubmit: () => void): ArgFormHandles {
  const root = el("form", { id: "argform", class: "argform" });
  root.append(el("div", { class: "argform-title" }, `${rule.name} — ${rule.summary}`));
  const inputs = new Map<string, HTMLInputElement>();
  for (const [name, doc] of Object.entries(rule.args)) {
    const input = el("input", {
      class: "arg-input",
      "data-arg": name,
      placeholder: doc,
      spellcheck: "false",
    });
    inputs.set(name, input);
    root.append(el("label", { class: "arg-row" }, el("span", {}, name), input));
  }
  let namesInput: HTMLInputElement | null = null;
  if (rule.children) {
    namesInput = el("input", {
      class: "arg-input",
      "data-arg": "names",
      placeholder: rule.children,
      spellcheck: "false",
    });
    root.append(el("label", { class: "arg-row" }, el("span", {}, "names"), namesInput));
  }
  const error = el("div", { class: "form-error" });
  const submit = el("button", { class: "apply-btn", type: "submit" }, "apply");
  root.append(submit, error);
  root.addEventListener("submit", (ev) => {
    ev.preventDefault();
    onSubmit();
  });
  return {
    root,
    read: () => ({
      args: Object.fromEntries([...inputs].map(([name, input]) => [name, input.value])),
      names: namesInput?.value ?? "",
    }),
    showError: (message) => {
      error.textContent = message;
    },
    clearError: () => {
      error.textContent = "";
    },
  };
}

// --- obligations -------------------------------------------------------------

export function renderObligationCard(ob: ObligationJson, cards: number[]): HTMLElement {
  const ok = ob.verdict === "holds";
  const card = el("div", { class: "ob-card " + (ok ? "ob-ok" : "ob-fail") });
  card.append(
    el("div", { class: "ob-head" }, `${ok ? "✓" : "✗"} ${ob.kind}`),
    el("div", { class: "ob-desc" }, ob.description),
  );
  const meta = [bindingText(ob.binding), formatMargin(ob.margin)].filter(Boolean).join("  ");
  if (meta) card.append(el("div", { class: "ob-meta" }, meta));
  if (ob.witness) {
    card.append(el("div", { class: "ob-witness" }, `witness: ${witnessToDirac(ob.witness, cards)}`));
  }
  return card;
}

export function renderObligations(
  title: string,
  obligations: ObligationJson[],
  cards: number[],
): HTMLElement {
  const panel = el("div", { id: "obligations", class: "obligations" });
  panel.append(el("h3", {}, title));
  if (obligations.length === 0) {
    panel.append(el("div", { class: "ob-none" }, "no obligations for this step"));
  }
  for (const ob of obligations) panel.append(renderObligationCard(ob, cards));
  return panel;
}

export function renderVerifyResults(resp: VerifyResponseJson, cards: number[]): HTMLElement {
  const panel = el("div", { id: "obligations", class: "obligations" });
  panel.append(el("h3", {}, "independent re-check"));
  for (const r of resp.results) {
    const ok = r.status === "holds";
    const card = el("div", {
      class: "ob-card " + (ok ? "ob-ok" : r.status === "inconclusive" ? "ob-warn" : "ob-fail"),
    });
    card.append(el("div", { class: "ob-head" }, `${ok ? "✓" : "✗"} ${r.status}`));
    const meta = [bindingText(r.binding), formatMargin(r.margin)].filter(Boolean).join("  ");
    if (meta) card.append(el("div", { class: "ob-meta" }, meta));
    if (r.detail) card.append(el("div", { class: "ob-desc" }, r.detail));
    if (r.witness) {
      card.append(el("div", { class: "ob-witness" }, `witness: ${witnessToDirac(r.witness, cards)}`));
    }
    panel.append(card);
  }
  return panel;
}

// --- ledger ------------------------------------------------------------------

export function renderLedger(ledger: LedgerEntryJson[], onUndo: (() => void) | null): HTMLElement {
  const box = el("div", { id: "ledger", class: "ledger" });
  const head = el("div", { class: "ledger-head" }, el("h3", {}, "ledger"));
  const undo = el("button", { class: "undo-btn" }, "undo");
  if (onUndo && ledger.length > 0) undo.addEventListener("click", onUndo);
  else undo.disabled = true;
  head.append(undo);
  box.append(head);
  const list = el("ol", { class: "ledger-list" });
  for (const entry of ledger) {
    const item = el("li", { class: "ledger-entry" }, el("code", {}, entry.text));
    const n = entry.obligations.length;
    item.append(el("span", { class: "ledger-obs" }, n ? ` ${n} obligation${n > 1 ? "s" : ""} held` : ""));
    list.append(item);
  }
  box.append(list);
  return box;
}

// --- banners -----------------------------------------------------------------

export function renderBanner(
  kind: "ok" | "err" | "info",
  text: string,
  retry?: () => void,
): HTMLElement {
  const banner = el("div", { class: `banner banner-${kind}` }, text);
  if (retry) {
    const btn = el("button", { class: "retry-btn" }, "retry");
    btn.addEventListener("click", retry);
    banner.append(" ", btn);
  }
  return banner;
}
