// Lint: the prediction renderer must not compute numbers. Every value
// it shows is a wire slice or comes from a scale.ts helper, so the
// source may not contain arithmetic operators or numeric builtins once
// strings and comments are stripped.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

const HERE = dirname(fileURLToPath(import.meta.url));
const TARGET = join(HERE, "..", "src", "render", "prediction.ts");

function stripLiterals(source: string): string {
  let out = "";
  let i = 0;
  const n = source.length;
  while (i < n) {
    const c = source[i];
    const next = source[i + 1];
    if (c === "/" && next === "/") {
      while (i < n && source[i] !== "\n") i++;
      continue;
    }
    if (c === "/" && next === "*") {
      i += 2;
      while (i < n && !(source[i] === "*" && source[i + 1] === "/")) i++;
      i += 2;
      continue;
    }
    if (c === '"' || c === "'" || c === "`") {
      const quote = c;
      i++;
      while (i < n) {
        if (source[i] === "\\") {
          i += 2;
          continue;
        }
        // keep template interpolation code visible to the lint
        if (quote === "`" && source[i] === "$" && source[i + 1] === "{") {
          i += 2;
          let depth = 1;
          out += " ";
          while (i < n && depth > 0) {
            if (source[i] === "{") depth++;
            if (source[i] === "}") depth--;
            if (depth > 0) out += source[i];
            i++;
          }
          out += " ";
          continue;
        }
        if (source[i] === quote) {
          i++;
          break;
        }
        i++;
      }
      out += " ";
      continue;
    }
    out += c;
    i++;
  }
  return out;
}

describe("no-arithmetic lint on the prediction path", () => {
  const source = readFileSync(TARGET, "utf8");
  const code = stripLiterals(source);

  it("strips literals correctly", () => {
    expect(code).not.toContain("http://www.w3.org");
    expect(code).toContain("renderPrediction");
  });

  it("has no arithmetic operators", () => {
    expect(code).not.toMatch(/[+\-*/%]/);
    expect(code).not.toContain("**");
  });

  it("has no numeric builtins", () => {
    expect(code).not.toMatch(/\bMath\s*\./);
    expect(code).not.toMatch(/\bparseInt\b|\bparseFloat\b/);
    expect(code).not.toMatch(/\bNumber\s*\(/);
    expect(code).not.toMatch(/\btoFixed\b|\btoPrecision\b|\btoExponential\b/);
  });

  it("only scale.ts helpers produce layout numbers", () => {
    expect(source).toContain('from "../scale.js"');
  });
});
