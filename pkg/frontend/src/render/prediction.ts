// Renders the target's predictive distribution. This file is covered
// by a no-arithmetic lint: it contains no numeric operators and no
// Math calls, so every value shown is either a verbatim wire slice or
// the output of a scale.ts display helper.

import { barWidthPercent, first, last, polylinePoints } from "../scale.js";
import { PredictionView } from "../types.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const CURVE_WIDTH = 560;
const CURVE_HEIGHT = 180;
const CURVE_PAD = 12;

export function renderPrediction(
  doc: Document,
  view: PredictionView | null,
  targetLabel: string,
): HTMLElement {
  const panel = doc.createElement("section");
  panel.className = "prediction-panel";
  const heading = doc.createElement("h2");
  heading.textContent = `prediction: ${targetLabel}`;
  panel.appendChild(heading);

  if (view === null) {
    const placeholder = doc.createElement("p");
    placeholder.className = "prediction-placeholder";
    placeholder.textContent = "no prediction yet";
    panel.appendChild(placeholder);
    return panel;
  }

  if (view.type === "categorical") {
    panel.appendChild(renderBars(doc, view.probs, view.argmax));
  } else {
    panel.appendChild(renderCurve(doc, view));
  }
  return panel;
}

function renderBars(
  doc: Document,
  probs: Array<{ choice: string; p: { text: string; num: number } }>,
  argmax: string,
): HTMLElement {
  const list = doc.createElement("div");
  list.className = "prob-bars";
  for (const bar of probs) {
    const row = doc.createElement("div");
    row.className = bar.choice === argmax ? "prob-row argmax" : "prob-row";
    const label = doc.createElement("span");
    label.className = "prob-choice";
    label.textContent = bar.choice;
    const track = doc.createElement("div");
    track.className = "prob-track";
    const fill = doc.createElement("div");
    fill.className = "prob-fill";
    fill.style.width = barWidthPercent(bar.p.num);
    track.appendChild(fill);
    const value = doc.createElement("span");
    value.className = "prob-value";
    value.textContent = bar.p.text;
    row.appendChild(label);
    row.appendChild(track);
    row.appendChild(value);
    list.appendChild(row);
  }
  return list;
}

function renderCurve(
  doc: Document,
  view: {
    meanRaw: { text: string };
    curveX: Array<{ text: string; num: number }>;
    curveDensity: Array<{ text: string; num: number }>;
  },
): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "density-wrap";

  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("class", "density-curve");
  svg.setAttribute("viewBox", `0 0 ${CURVE_WIDTH} ${CURVE_HEIGHT}`);
  svg.setAttribute("preserveAspectRatio", "none");
  const line = doc.createElementNS(SVG_NS, "polyline");
  const xs = view.curveX.map((w) => w.num);
  const ds = view.curveDensity.map((w) => w.num);
  line.setAttribute("points", polylinePoints(xs, ds, CURVE_WIDTH, CURVE_HEIGHT, CURVE_PAD));
  svg.appendChild(line);
  wrap.appendChild(svg);

  const axis = doc.createElement("div");
  axis.className = "density-axis";
  const lo = doc.createElement("span");
  lo.className = "axis-lo";
  lo.textContent = first(view.curveX).text;
  const mean = doc.createElement("span");
  mean.className = "axis-mean";
  mean.textContent = `mean ${view.meanRaw.text}`;
  const hi = doc.createElement("span");
  hi.className = "axis-hi";
  hi.textContent = last(view.curveX).text;
  axis.appendChild(lo);
  axis.appendChild(mean);
  axis.appendChild(hi);
  wrap.appendChild(axis);
  return wrap;
}
