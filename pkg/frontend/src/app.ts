// Application wiring. The client holds no model of its own: `state` is
// always the latest session snapshot the server returned, and every
// mutation round-trips before anything on screen changes (no optimistic
// updates). 422 responses leave `state` untouched by construction — the
// server rejected the step — so only the obligation panel changes.

import { ApiError, QbcClient } from "./api";
import { FormError, encodeArgs, parseNames, parseParamsField, parseVarsField } from "./form";
import {
  ArgFormHandles,
  el,
  renderArgForm,
  renderBanner,
  renderLedger,
  renderObligations,
  renderPalette,
  renderProgram,
  renderVerifyResults,
} from "./render";
import type { ObligationJson, RuleInfoJson, SessionJson } from "./types";

interface ObPanel {
  title: string;
  obligations: ObligationJson[];
}

export class App {
  state: SessionJson | null = null;
  rules: RuleInfoJson[] = [];
  examples: string[] = [];

  private selectedHole: string | null = null;
  private selectedRule: RuleInfoJson | null = null;
  private obPanel: ObPanel | null = null;
  private verifyPanel: HTMLElement | null = null;
  private banner: HTMLElement | null = null;
  private form: ArgFormHandles | null = null;
  private scriptText: string | null = null;

  constructor(
    private root: HTMLElement,
    readonly client: QbcClient,
  ) {}

  async init(): Promise<void> {
    try {
      [this.rules, this.examples] = await Promise.all([this.client.rules(), this.client.examples()]);
    } catch (err) {
      this.root.replaceChildren(
        renderBanner("err", `cannot reach the session service: ${(err as Error).message}`),
      );
      return;
    }
    this.renderHome();
  }

  private cards(): number[] {
    return this.state ? this.state.vars.map(([, c]) => c) : [];
  }

  // --- home screen -----------------------------------------------------------

  renderHome(): void {
    this.state = null;
    const name = el("input", { id: "spec-name", value: "session", spellcheck: "false" });
    const vars = el("input", { id: "spec-vars", placeholder: "q:2, a:2", spellcheck: "false" });
    const mode = el("select", { id: "spec-mode" });
    mode.append(el("option", { value: "total" }, "total"), el("option", { value: "partial" }, "partial"));
    const params = el("input", { id: "spec-params", placeholder: "x in {0, 1}", spellcheck: "false" });
    const pre = el("input", { id: "spec-pre", placeholder: "precondition, e.g. 0.5*I", spellcheck: "false" });
    const post = el("input", { id: "spec-post", placeholder: "postcondition, e.g. proj(ket(x))", spellcheck: "false" });
    const error = el("div", { class: "form-error", id: "spec-error" });
    const create = el("button", { id: "spec-create" }, "start construction");

    create.addEventListener("click", async () => {
      error.textContent = "";
      let spec;
      try {
        spec = {
          name: name.value.trim() || "session",
          vars: parseVarsField(vars.value),
          mode: mode.value,
          params: parseParamsField(params.value),
          clauses: [{ pre: pre.value, post: post.value }],
        };
      } catch (err) {
        error.textContent = (err as FormError).message;
        return;
      }
      try {
        this.openSession(await this.client.createSession(spec));
      } catch (err) {
        error.textContent = err instanceof ApiError ? String(err.detail) : (err as Error).message;
      }
    });

    const exampleBox = el("div", { id: "examples", class: "examples" });
    for (const ex of this.examples) {
      const btn = el("button", { class: "example-btn", "data-example": ex }, ex);
      btn.addEventListener("click", async () => {
        try {
          this.openSession(await this.client.fromExample(ex));
        } catch (err) {
          error.textContent = (err as Error).message;
        }
      });
      exampleBox.append(btn);
    }

    this.root.replaceChildren(
      el("header", {}, el("h1", {}, "qbc"), el("p", {}, "grow a program out of its specification")),
      el(
        "section",
        { class: "spec-form" },
        el("h2", {}, "new construction"),
        el("label", {}, "name ", name),
        el("label", {}, "variables ", vars),
        el("label", {}, "mode ", mode),
        el("label", {}, "parameters ", params),
        el("label", {}, "pre ", pre),
        el("label", {}, "post ", post),
        create,
        error,
      ),
      el("section", {}, el("h2", {}, "or replay a worked example"), exampleBox),
    );
  }

  // --- session screen --------------------------------------------------------

  openSession(state: SessionJson): void {
    this.state = state;
    this.selectedHole = state.holes[0]?.id ?? null;
    this.selectedRule = null;
    this.obPanel = null;
    this.verifyPanel = null;
    this.banner = null;
    this.scriptText = null;
    this.renderSession();
  }

  /** Adopt a fresh snapshot after a successful mutation. */
  private adopt(state: SessionJson): void {
    this.state = state;
    this.scriptText = null; // any export on screen no longer matches the session
    if (this.selectedHole && !state.holes.some((h) => h.id === this.selectedHole)) {
      this.selectedHole = state.holes[0]?.id ?? null;
      this.selectedRule = null;
    }
    this.renderSession();
  }

  renderSession(): void {
    const state = this.state;
    if (!state) return this.renderHome();

    const header = el("header", { class: "session-head" });
    const title = el("h1", {}, state.name);
    const badge = el(
      "span",
      { class: "mode-badge" },
      `${state.mode} mode · ${state.vars.map(([n, c]) => `${n}:${c}`).join(", ")}`,
    );
    const back = el("button", { id: "back-btn" }, "← new session");
    back.addEventListener("click", () => this.renderHome());
    header.append(back, title, badge);
    if (state.complete) header.append(el("span", { class: "complete-badge" }, "concrete"));

    const toolbar = el("div", { class: "toolbar" });
    const verifyBtn = el("button", { id: "verify-btn" }, "verify");
    verifyBtn.disabled = !state.complete;
    verifyBtn.addEventListener("click", () => void this.doVerify());
    const exportBtn = el("button", { id: "export-btn" }, "export .qbc");
    exportBtn.addEventListener("click", () => void this.doExport());
    toolbar.append(verifyBtn, exportBtn);

    const program = renderProgram(state, this.selectedHole, (hid) => {
      this.selectedHole = hid;
      this.renderSession();
    });

    const right = el("div", { class: "side" });
    if (state.holes.length > 0) {
      right.append(el("h3", {}, this.selectedHole ? `refine ${this.selectedHole}` : "pick a hole"));
      right.append(
        renderPalette(this.rules, state.mode, this.selectedRule?.name ?? null, (rule) => {
          this.selectedRule = rule;
          this.renderSession();
        }),
      );
      if (this.selectedRule && this.selectedHole) {
        this.form = renderArgForm(this.selectedRule, () => void this.submitRefine());
        right.append(this.form.root);
      } else {
        this.form = null;
      }
    } else {
      right.append(el("div", { class: "done-note" }, "no holes left — verify and export"));
    }

    const panels = el("div", { class: "panels" });
    if (this.verifyPanel) panels.append(this.verifyPanel);
    else if (this.obPanel) {
      panels.append(renderObligations(this.obPanel.title, this.obPanel.obligations, this.cards()));
    }

    const ledger = renderLedger(state.ledger, () => void this.doUndo());

    const script = this.scriptText
      ? el(
          "section",
          { class: "script-box" },
          el("h3", {}, "exported script"),
          el("pre", { class: "script-view" }, this.scriptText),
        )
      : el("span", {});

    this.root.replaceChildren(
      header,
      this.banner ?? el("span", {}),
      toolbar,
      el("div", { class: "columns" }, el("div", { class: "main" }, program, panels, script), el("div", {}, right, ledger)),
    );
  }

  // --- actions ---------------------------------------------------------------

  async submitRefine(): Promise<void> {
    const state = this.state;
    const rule = this.selectedRule;
    const hole = this.selectedHole;
    if (!state || !rule || !hole || !this.form) return;
    this.form.clearError();
    this.banner = null;

    let args: Record<string, unknown>;
    let names: string[];
    try {
      const raw = this.form.read();
      args = encodeArgs(raw.args);
      names = parseNames(raw.names);
    } catch (err) {
      this.form.showError((err as FormError).message);
      return;
    }

    const request = { hole, rule: rule.name, args, ...(names.length ? { names } : {}) };
    try {
      const out = await this.client.refine(state.id, request);
      this.obPanel = { title: `${rule.name} on ${hole} — accepted`, obligations: out.obligations };
      this.verifyPanel = null;
      this.selectedRule = null;
      this.adopt(out.state);
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        // step rejected server-side; session unchanged, show the red cards
        const detail = err.detail as { obligations?: ObligationJson[] };
        this.obPanel = {
          title: `${rule.name} on ${hole} — rejected`,
          obligations: detail.obligations ?? [],
        };
        this.verifyPanel = null;
        this.renderSession();
      } else if (err instanceof ApiError && err.status === 409) {
        this.banner = renderBanner("err", "another request is mutating this session", () =>
          void this.submitRefine(),
        );
        this.renderSession();
      } else if (err instanceof ApiError) {
        this.form.showError(String(err.detail));
      } else {
        this.banner = renderBanner("err", `network failure: ${(err as Error).message}`);
        this.renderSession();
      }
    }
  }

  async doUndo(): Promise<void> {
    if (!this.state) return;
    try {
      const state = await this.client.undo(this.state.id);
      this.obPanel = null;
      this.verifyPanel = null;
      this.banner = null;
      this.adopt(state);
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.banner = renderBanner("err", "another request is mutating this session", () =>
          void this.doUndo(),
        );
      } else {
        this.banner = renderBanner("err", (err as Error).message);
      }
      this.renderSession();
    }
  }

  async doVerify(): Promise<void> {
    if (!this.state) return;
    try {
      const resp = await this.client.verify(this.state.id);
      this.verifyPanel = renderVerifyResults(resp, this.cards());
      this.banner = resp.holds
        ? renderBanner("ok", "concrete & verified")
        : renderBanner("err", "verification failed — see the re-check cards");
      this.renderSession();
    } catch (err) {
      this.banner = renderBanner("err", (err as Error).message);
      this.renderSession();
    }
  }

  async doExport(): Promise<void> {
    if (!this.state) return;
    try {
      const text = await this.client.script(this.state.id);
      this.scriptText = text;
      this.renderSession();
      this.offerDownload(text, `${this.state.name}.qbc`);
    } catch (err) {
      this.banner = renderBanner("err", (err as Error).message);
      this.renderSession();
    }
  }

  /** Best-effort file download; test environments may lack object URLs. */
  private offerDownload(text: string, filename: string): void {
    try {
      const url = URL.createObjectURL(new Blob([text], { type: "text/plain" }));
      const a = el("a", { href: url, download: filename });
      document.body.append(a);
      a.click();
      a.remove();
      setTimeout(() => URL.revokeObjectURL(url), 1000);
    } catch {
      // the script is already visible in the page; downloading is a bonus
    }
  }
}
