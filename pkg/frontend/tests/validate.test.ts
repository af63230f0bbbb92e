import { describe, expect, it } from "vitest";
import { FeatureSpec } from "../src/types.js";
import { rangeHint, validateInput } from "../src/validate.js";

const CAT: FeatureSpec = {
  id: "b",
  desc: "binary reading",
  type: "categorical",
  choices: ["absent", "present"],
  range: [0, 1],
  cost: 1,
};

const CONT: FeatureSpec = {
  id: "c",
  desc: "sensor level",
  type: "continuous",
  choices: [],
  range: [0, 10],
  cost: 1,
};

describe("validateInput", () => {
  it("accepts a known category", () => {
    expect(validateInput(CAT, "present")).toEqual({ ok: true, value: "present" });
  });

  it("rejects out-of-vocabulary categories with the choice list", () => {
    const res = validateInput(CAT, "maybe");
    expect(res.ok).toBe(false);
    if (!res.ok) {
      expect(res.message).toContain("absent");
      expect(res.message).toContain("present");
    }
  });

  it("rejects the empty placeholder choice", () => {
    expect(validateInput(CAT, "").ok).toBe(false);
  });

  it("is case-sensitive on categories", () => {
    expect(validateInput(CAT, "Present").ok).toBe(false);
  });

  it("parses numeric input", () => {
    expect(validateInput(CONT, "4.5")).toEqual({ ok: true, value: 4.5 });
    expect(validateInput(CONT, " 7 ")).toEqual({ ok: true, value: 7 });
  });

  it("rejects non-numeric and non-finite input", () => {
    expect(validateInput(CONT, "abc").ok).toBe(false);
    expect(validateInput(CONT, "").ok).toBe(false);
    expect(validateInput(CONT, "Infinity").ok).toBe(false);
    expect(validateInput(CONT, "NaN").ok).toBe(false);
  });

  it("enforces the range hint bounds", () => {
    const res = validateInput(CONT, "11");
    expect(res.ok).toBe(false);
    if (!res.ok) {
      expect(res.message).toContain("[0, 10]");
    }
    expect(validateInput(CONT, "-0.5").ok).toBe(false);
    expect(validateInput(CONT, "0").ok).toBe(true);
    expect(validateInput(CONT, "10").ok).toBe(true);
  });

  it("formats the range hint", () => {
    expect(rangeHint(CONT)).toBe("range 0 to 10");
  });
});
