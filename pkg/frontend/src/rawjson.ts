// JSON parser that keeps the source slice of every scalar.
//
// The service serializes floats with Python's repr, which does not
// always match what String(Number(...)) produces in a JS engine
// (exponent thresholds, "1.0" vs "1"). Rendering the original slice is
// the only way to keep displayed values byte-equal to the response.

export type RawNode =
  | { kind: "num"; value: number; raw: string }
  | { kind: "str"; value: string; raw: string }
  | { kind: "bool"; value: boolean; raw: string }
  | { kind: "null"; value: null; raw: string }
  | { kind: "arr"; items: RawNode[] }
  | { kind: "obj"; entries: Map<string, RawNode> };

export function parseWithRaw(text: string): RawNode {
  const p = new Parser(text);
  const node = p.parseValue();
  p.skipWs();
  if (!p.done()) {
    throw new SyntaxError(`trailing characters at offset ${p.pos}`);
  }
  return node;
}

class Parser {
  pos = 0;

  constructor(private readonly src: string) {}

  done(): boolean {
    return this.pos >= this.src.length;
  }

  skipWs(): void {
    while (!this.done() && " \t\n\r".includes(this.src[this.pos])) {
      this.pos += 1;
    }
  }

  fail(what: string): never {
    throw new SyntaxError(`${what} at offset ${this.pos}`);
  }

  parseValue(): RawNode {
    this.skipWs();
    if (this.done()) {
      this.fail("unexpected end of input");
    }
    const c = this.src[this.pos];
    if (c === "{") return this.parseObject();
    if (c === "[") return this.parseArray();
    if (c === '"') return this.parseString();
    if (c === "t" || c === "f") return this.parseLiteral(c === "t" ? "true" : "false");
    if (c === "n") return this.parseLiteral("null");
    return this.parseNumber();
  }

  parseObject(): RawNode {
    this.pos += 1;
    const entries = new Map<string, RawNode>();
    this.skipWs();
    if (this.src[this.pos] === "}") {
      this.pos += 1;
      return { kind: "obj", entries };
    }
    for (;;) {
      this.skipWs();
      const key = this.parseString();
      this.skipWs();
      if (this.src[this.pos] !== ":") this.fail("expected ':'");
      this.pos += 1;
      entries.set(key.value, this.parseValue());
      this.skipWs();
      const c = this.src[this.pos];
      if (c === ",") {
        this.pos += 1;
        continue;
      }
      if (c === "}") {
        this.pos += 1;
        return { kind: "obj", entries };
      }
      this.fail("expected ',' or '}'");
    }
  }

  parseArray(): RawNode {
    this.pos += 1;
    const items: RawNode[] = [];
    this.skipWs();
    if (this.src[this.pos] === "]") {
      this.pos += 1;
      return { kind: "arr", items };
    }
    for (;;) {
      items.push(this.parseValue());
      this.skipWs();
      const c = this.src[this.pos];
      if (c === ",") {
        this.pos += 1;
        continue;
      }
      if (c === "]") {
        this.pos += 1;
        return { kind: "arr", items };
      }
      this.fail("expected ',' or ']'");
    }
  }

  parseString(): RawNode & { kind: "str" } {
    const start = this.pos;
    if (this.src[this.pos] !== '"') this.fail("expected string");
    this.pos += 1;
    let out = "";
    while (!this.done()) {
      const c = this.src[this.pos];
      if (c === '"') {
        this.pos += 1;
        return { kind: "str", value: out, raw: this.src.slice(start, this.pos) };
      }
      if (c === "\\") {
        const e = this.src[this.pos + 1];
        if (e === "u") {
          const hex = this.src.slice(this.pos + 2, this.pos + 6);
          if (!/^[0-9a-fA-F]{4}$/.test(hex)) this.fail("bad unicode escape");
          out += String.fromCharCode(parseInt(hex, 16));
          this.pos += 6;
          continue;
        }
        const simple: Record<string, string> = {
          '"': '"',
          "\\": "\\",
          "/": "/",
          b: "\b",
          f: "\f",
          n: "\n",
          r: "\r",
          t: "\t",
        };
        if (!(e in simple)) this.fail(`bad escape \\${e}`);
        out += simple[e];
        this.pos += 2;
        continue;
      }
      out += c;
      this.pos += 1;
    }
    this.fail("unterminated string");
  }

  parseNumber(): RawNode {
    const start = this.pos;
    const rest = this.src.slice(this.pos);
    const m = /^-?(?:0|[1-9]\d*)(?:\.\d+)?(?:[eE][+-]?\d+)?/.exec(rest);
    if (!m || m[0].length === 0) this.fail("expected a value");
    this.pos += m[0].length;
    const raw = this.src.slice(start, this.pos);
    return { kind: "num", value: Number(raw), raw };
  }

  parseLiteral(word: "true" | "false" | "null"): RawNode {
    if (this.src.slice(this.pos, this.pos + word.length) !== word) {
      this.fail(`expected ${word}`);
    }
    this.pos += word.length;
    if (word === "null") return { kind: "null", value: null, raw: word };
    return { kind: "bool", value: word === "true", raw: word };
  }
}

// Tree accessors. Wire shapes are trusted after parse; a missing or
// mistyped field is a contract violation worth failing loudly on.

export function asObj(node: RawNode, path: string): Map<string, RawNode> {
  if (node.kind !== "obj") throw new TypeError(`${path}: expected object, got ${node.kind}`);
  return node.entries;
}

export function asArr(node: RawNode, path: string): RawNode[] {
  if (node.kind !== "arr") throw new TypeError(`${path}: expected array, got ${node.kind}`);
  return node.items;
}

export function field(node: RawNode, name: string, path: string): RawNode {
  const entries = asObj(node, path);
  const child = entries.get(name);
  if (child === undefined) throw new TypeError(`${path}: missing field ${name}`);
  return child;
}

export function strOf(node: RawNode, path: string): string {
  if (node.kind !== "str") throw new TypeError(`${path}: expected string, got ${node.kind}`);
  return node.value;
}

export function boolOf(node: RawNode, path: string): boolean {
  if (node.kind !== "bool") throw new TypeError(`${path}: expected bool, got ${node.kind}`);
  return node.value;
}

export function numText(node: RawNode, path: string): { text: string; num: number } {
  if (node.kind !== "num") throw new TypeError(`${path}: expected number, got ${node.kind}`);
  return { text: node.raw, num: node.value };
}

// Scalar for display: numbers keep the wire slice, strings their
// decoded value.
export function scalarText(node: RawNode, path: string): { text: string; num: number | null } {
  if (node.kind === "num") return { text: node.raw, num: node.value };
  if (node.kind === "str") return { text: node.value, num: null };
  throw new TypeError(`${path}: expected a scalar, got ${node.kind}`);
}
