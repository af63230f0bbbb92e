// Console controller: start form, hash routing, one-in-flight
// submission, and full re-render after every service response. The
// client keeps no derived state; the latest SessionView is always a
// verbatim adaptation of the latest response body.

import { Api, ApiError, findFeature } from "./api.js";
import { renderSession } from "./render/session.js";
import { FeatureSpec, SchemaInfo, SessionView } from "./types.js";
import { validateInput } from "./validate.js";

export interface WindowLike {
  location: { hash: string };
  addEventListener: (type: string, fn: () => void) => void;
}

interface AppState {
  screen: "loading" | "start" | "session";
  schemas: SchemaInfo[];
  view: SessionView | null;
  busy: boolean;
  banner: string | null;
  inline: string | null;
  draft: string;
  datasetChoice: string;
  targetChoice: string;
  budgetDraft: string;
}

export class App {
  state: AppState = {
    screen: "loading",
    schemas: [],
    view: null,
    busy: false,
    banner: null,
    inline: null,
    draft: "",
    datasetChoice: "",
    targetChoice: "",
    budgetDraft: "5",
  };

  // resolves when the current boot or mutation settles; tests await it
  idle: Promise<void> = Promise.resolve();

  constructor(
    private readonly doc: Document,
    private readonly root: HTMLElement,
    private readonly api: Api,
    private readonly win: WindowLike,
  ) {}

  start(): Promise<void> {
    this.win.addEventListener("hashchange", () => {
      void this.track(this.boot());
    });
    return this.track(this.boot());
  }

  private track(p: Promise<void>): Promise<void> {
    this.idle = p;
    return p;
  }

  private sessionIdFromHash(): string | null {
    const m = /^#\/s\/(.+)$/.exec(this.win.location.hash);
    return m === null ? null : decodeURIComponent(m[1]);
  }

  private async boot(): Promise<void> {
    this.state.banner = null;
    try {
      if (this.state.schemas.length === 0) {
        this.state.schemas = await this.api.schemas();
      }
      const sid = this.sessionIdFromHash();
      if (sid !== null) {
        if (this.state.view?.sessionId !== sid) {
          this.state.view = await this.api.getSession(sid);
        }
        this.state.screen = "session";
      } else {
        this.state.view = null;
        this.state.screen = "start";
        if (this.state.datasetChoice === "" && this.state.schemas.length > 0) {
          this.state.datasetChoice = this.state.schemas[0].name;
          this.state.targetChoice = this.state.schemas[0].target_ids[0] ?? "";
        }
      }
    } catch (err) {
      this.state.banner = describeError(err);
      this.state.screen = this.state.view === null ? "start" : "session";
    }
    this.render();
  }

  private schema(): SchemaInfo | null {
    const name = this.state.view?.dataset ?? this.state.datasetChoice;
    for (const s of this.state.schemas) {
      if (s.name === name) return s;
    }
    return null;
  }

  private suggestedSpec(): FeatureSpec | null {
    const view = this.state.view;
    const schema = this.schema();
    if (view === null || schema === null || view.suggestion.featureId === null) {
      return null;
    }
    return findFeature(schema, view.suggestion.featureId);
  }

  createSession(): void {
    if (this.state.busy) return;
    const budget = Number(this.state.budgetDraft.trim());
    if (this.state.budgetDraft.trim() === "" || !Number.isFinite(budget) || budget < 0) {
      this.state.banner = "budget must be a non-negative number";
      this.render();
      return;
    }
    this.state.busy = true;
    this.state.banner = null;
    this.render();
    void this.track(
      (async () => {
        try {
          const view = await this.api.createSession({
            dataset: this.state.datasetChoice,
            target: this.state.targetChoice,
            budget,
          });
          this.state.view = view;
          this.state.screen = "session";
          this.state.draft = "";
          this.state.inline = null;
          this.win.location.hash = `#/s/${encodeURIComponent(view.sessionId)}`;
        } catch (err) {
          this.state.banner = describeError(err);
        } finally {
          this.state.busy = false;
          this.render();
        }
      })(),
    );
  }

  submitValue(): void {
    // one in-flight mutation: drop clicks while a request is pending
    if (this.state.busy) return;
    const view = this.state.view;
    const spec = this.suggestedSpec();
    if (view === null || spec === null) return;
    const checked = validateInput(spec, this.state.draft);
    if (!checked.ok) {
      // invalid input never reaches the network
      this.state.inline = checked.message;
      this.render();
      return;
    }
    this.state.busy = true;
    this.state.inline = null;
    this.render();
    void this.track(
      (async () => {
        try {
          const next = await this.api.submitValue(view.sessionId, spec.id, checked.value);
          this.state.view = next;
          this.state.draft = "";
          this.state.inline = null;
        } catch (err) {
          // 422/409 stay inline next to the input; the draft is kept
          if (err instanceof ApiError && (err.status === 422 || err.status === 409)) {
            this.state.inline = err.message;
          } else {
            this.state.banner = describeError(err);
          }
        } finally {
          this.state.busy = false;
          this.render();
        }
      })(),
    );
  }

  render(): void {
    this.root.textContent = "";
    if (this.state.banner !== null) {
      const banner = this.doc.createElement("div");
      banner.className = "error-banner";
      banner.id = "error-banner";
      banner.textContent = this.state.banner;
      this.root.appendChild(banner);
    }
    if (this.state.screen === "loading") {
      const p = this.doc.createElement("p");
      p.className = "loading";
      p.textContent = "loading";
      this.root.appendChild(p);
      return;
    }
    if (this.state.screen === "start" || this.state.view === null) {
      this.root.appendChild(this.renderStart());
      return;
    }
    this.root.appendChild(
      renderSession(
        this.doc,
        this.state.view,
        this.suggestedSpec(),
        this.state.draft,
        this.state.inline,
        this.state.busy,
        {
          onDraft: (v) => {
            this.state.draft = v;
          },
          onSubmit: () => this.submitValue(),
        },
      ),
    );
  }

  private renderStart(): HTMLElement {
    const wrap = this.doc.createElement("div");
    wrap.className = "start-screen";
    const title = this.doc.createElement("h1");
    title.textContent = "acquisition console";
    wrap.appendChild(title);

    const form = this.doc.createElement("form");
    form.className = "start-form";
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      this.createSession();
    });

    const dataset = this.doc.createElement("select");
    dataset.id = "dataset-select";
    for (const s of this.state.schemas) {
      const opt = this.doc.createElement("option");
      opt.value = s.name;
      opt.textContent = s.name;
      dataset.appendChild(opt);
    }
    dataset.value = this.state.datasetChoice;
    dataset.addEventListener("change", () => {
      this.state.datasetChoice = dataset.value;
      const schema = this.schema();
      this.state.targetChoice = schema?.target_ids[0] ?? "";
      this.render();
    });
    form.appendChild(labeled(this.doc, "dataset", dataset));

    const target = this.doc.createElement("select");
    target.id = "target-select";
    const schema = this.schema();
    for (const tid of schema?.target_ids ?? []) {
      const opt = this.doc.createElement("option");
      opt.value = tid;
      opt.textContent = tid;
      target.appendChild(opt);
    }
    target.value = this.state.targetChoice;
    target.addEventListener("change", () => {
      this.state.targetChoice = target.value;
    });
    form.appendChild(labeled(this.doc, "target", target));

    const budget = this.doc.createElement("input");
    budget.id = "budget-input";
    budget.type = "text";
    budget.inputMode = "decimal";
    budget.value = this.state.budgetDraft;
    budget.addEventListener("input", () => {
      this.state.budgetDraft = budget.value;
    });
    form.appendChild(labeled(this.doc, "budget", budget));

    const go = this.doc.createElement("button");
    go.type = "submit";
    go.id = "start-session";
    go.textContent = this.state.busy ? "starting" : "start session";
    go.disabled = this.state.busy;
    form.appendChild(go);

    wrap.appendChild(form);
    return wrap;
  }
}

function labeled(doc: Document, text: string, control: HTMLElement): HTMLElement {
  const label = doc.createElement("label");
  label.className = "field";
  const span = doc.createElement("span");
  span.textContent = text;
  label.appendChild(span);
  label.appendChild(control);
  return label;
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    const where = err.fieldName === null ? "" : ` [${err.fieldName}]`;
    return `service error ${err.status}${where}: ${err.message}`;
  }
  return String(err);
}

export function mountApp(doc: Document, root: HTMLElement, api: Api, win: WindowLike): App {
  const app = new App(doc, root, api, win);
  void app.start();
  return app;
}
