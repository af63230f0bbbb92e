// Renders one acquisition session: budget, suggestion, value entry,
// history, and the prediction panel. All displayed numbers are wire
// slices; this layer never computes anything from them.

import { FeatureSpec, SessionView } from "../types.js";
import { rangeHint } from "../validate.js";
import { renderPrediction } from "./prediction.js";

export interface SessionHandlers {
  onDraft: (value: string) => void;
  onSubmit: () => void;
}

export function renderSession(
  doc: Document,
  view: SessionView,
  suggestedSpec: FeatureSpec | null,
  draft: string,
  inlineError: string | null,
  busy: boolean,
  handlers: SessionHandlers,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "session";

  const header = doc.createElement("header");
  header.className = "session-header";
  const title = doc.createElement("h1");
  title.textContent = `session ${view.sessionId}`;
  const meta = doc.createElement("p");
  meta.className = "session-meta";
  meta.textContent = `dataset ${view.dataset} | target ${view.target} | phase ${view.phase}`;
  header.appendChild(title);
  header.appendChild(meta);
  root.appendChild(header);

  root.appendChild(renderBudget(doc, view));
  root.appendChild(
    renderSuggestion(doc, view, suggestedSpec, draft, inlineError, busy, handlers),
  );
  root.appendChild(renderPrediction(doc, view.prediction, view.target));
  root.appendChild(renderAcquired(doc, view));
  if (view.observed.length > 0) {
    root.appendChild(renderObserved(doc, view));
  }
  return root;
}

function renderBudget(doc: Document, view: SessionView): HTMLElement {
  const panel = doc.createElement("section");
  panel.className = "budget-panel";
  const pairs: Array<[string, string]> = [
    ["initial", view.budgetInitial.text],
    ["remaining", view.budgetRemaining.text],
    ["spent", view.spent.text],
  ];
  for (const [label, text] of pairs) {
    const cell = doc.createElement("div");
    cell.className = `budget-cell budget-${label}`;
    const dt = doc.createElement("span");
    dt.className = "budget-label";
    dt.textContent = label;
    const dd = doc.createElement("span");
    dd.className = "budget-value";
    dd.textContent = text;
    cell.appendChild(dt);
    cell.appendChild(dd);
    panel.appendChild(cell);
  }
  return panel;
}

function renderSuggestion(
  doc: Document,
  view: SessionView,
  spec: FeatureSpec | null,
  draft: string,
  inlineError: string | null,
  busy: boolean,
  handlers: SessionHandlers,
): HTMLElement {
  const panel = doc.createElement("section");
  panel.className = "suggestion-panel";
  const heading = doc.createElement("h2");
  heading.textContent = "next acquisition";
  panel.appendChild(heading);

  const s = view.suggestion;
  if (s.stop || s.featureId === null) {
    const stop = doc.createElement("p");
    stop.className = "suggestion-stop";
    stop.textContent =
      view.phase === "terminated"
        ? "Stop: session terminated, no further acquisition pays off"
        : "Stop: no suggestion";
    panel.appendChild(stop);
    return panel;
  }

  const line = doc.createElement("p");
  line.className = "suggestion-line";
  line.textContent = spec === null ? s.featureId : `${s.featureId}: ${spec.desc}`;
  panel.appendChild(line);

  const stats = doc.createElement("p");
  stats.className = "suggestion-stats";
  stats.textContent = `gain ${s.mi?.text ?? ""} | score ${s.score?.text ?? ""} | cost ${s.cost?.text ?? ""}`;
  panel.appendChild(stats);

  if (spec !== null) {
    panel.appendChild(renderValueForm(doc, spec, draft, inlineError, busy, handlers));
  }
  return panel;
}

function renderValueForm(
  doc: Document,
  spec: FeatureSpec,
  draft: string,
  inlineError: string | null,
  busy: boolean,
  handlers: SessionHandlers,
): HTMLElement {
  const form = doc.createElement("form");
  form.className = "value-form";
  form.addEventListener("submit", (ev) => {
    ev.preventDefault();
    handlers.onSubmit();
  });

  let input: HTMLSelectElement | HTMLInputElement;
  if (spec.type === "categorical") {
    const select = doc.createElement("select");
    select.className = "value-input";
    const blank = doc.createElement("option");
    blank.value = "";
    blank.textContent = "choose a value";
    select.appendChild(blank);
    for (const choice of spec.choices) {
      const opt = doc.createElement("option");
      opt.value = choice;
      opt.textContent = choice;
      select.appendChild(opt);
    }
    select.value = draft;
    input = select;
  } else {
    const num = doc.createElement("input");
    num.className = "value-input";
    num.type = "text";
    num.inputMode = "decimal";
    num.placeholder = rangeHint(spec);
    num.value = draft;
    input = num;
  }
  input.id = "value-input";
  input.addEventListener("input", () => handlers.onDraft(input.value));
  input.addEventListener("change", () => handlers.onDraft(input.value));
  form.appendChild(input);

  if (spec.type === "continuous") {
    const hint = doc.createElement("span");
    hint.className = "range-hint";
    hint.textContent = rangeHint(spec);
    form.appendChild(hint);
  }

  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.id = "submit-value";
  submit.textContent = busy ? "submitting" : "submit value";
  submit.disabled = busy;
  form.appendChild(submit);

  const err = doc.createElement("p");
  err.className = "inline-error";
  err.id = "inline-error";
  err.textContent = inlineError ?? "";
  if (inlineError === null) {
    err.setAttribute("hidden", "");
  }
  form.appendChild(err);
  return form;
}

function renderAcquired(doc: Document, view: SessionView): HTMLElement {
  const panel = doc.createElement("section");
  panel.className = "acquired-panel";
  const heading = doc.createElement("h2");
  heading.textContent = `acquired (${view.acquired.length})`;
  panel.appendChild(heading);

  if (view.acquired.length === 0) {
    const none = doc.createElement("p");
    none.className = "acquired-empty";
    none.textContent = "nothing acquired yet";
    panel.appendChild(none);
    return panel;
  }

  const table = doc.createElement("table");
  table.className = "acquired-table";
  const head = doc.createElement("tr");
  for (const col of ["step", "feature", "value", "cost"]) {
    const th = doc.createElement("th");
    th.textContent = col;
    head.appendChild(th);
  }
  table.appendChild(head);
  for (const row of view.acquired) {
    const tr = doc.createElement("tr");
    tr.className = "acquired-row";
    for (const text of [row.step.text, row.featureId, row.value.text, row.cost.text]) {
      const td = doc.createElement("td");
      td.textContent = text;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
  panel.appendChild(table);
  return panel;
}

function renderObserved(doc: Document, view: SessionView): HTMLElement {
  const panel = doc.createElement("section");
  panel.className = "observed-panel";
  const heading = doc.createElement("h2");
  heading.textContent = "observed at start";
  panel.appendChild(heading);
  const list = doc.createElement("ul");
  for (const entry of view.observed) {
    const li = doc.createElement("li");
    li.textContent = `${entry.featureId} = ${entry.value.text}`;
    list.appendChild(li);
  }
  panel.appendChild(list);
  return panel;
}
