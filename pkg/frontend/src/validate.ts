// Client-side input validation against a FeatureSpec. Runs before any
// network call: an out-of-vocabulary category or a malformed number
// never leaves the browser.

import { FeatureSpec } from "./types.js";

export type ValidationResult =
  | { ok: true; value: string | number }
  | { ok: false; message: string };

export function validateInput(spec: FeatureSpec, raw: string): ValidationResult {
  if (spec.type === "categorical") {
    if (!spec.choices.includes(raw)) {
      return {
        ok: false,
        message: `${JSON.stringify(raw)} is not one of: ${spec.choices.join(", ")}`,
      };
    }
    return { ok: true, value: raw };
  }
  const trimmed = raw.trim();
  if (trimmed === "") {
    return { ok: false, message: "a numeric value is required" };
  }
  const num = Number(trimmed);
  if (!Number.isFinite(num)) {
    return { ok: false, message: `${JSON.stringify(raw)} is not a number` };
  }
  const [lo, hi] = spec.range;
  if (num < lo || num > hi) {
    return { ok: false, message: `value must be within [${lo}, ${hi}]` };
  }
  return { ok: true, value: num };
}

export function rangeHint(spec: FeatureSpec): string {
  const [lo, hi] = spec.range;
  return `range ${lo} to ${hi}`;
}
