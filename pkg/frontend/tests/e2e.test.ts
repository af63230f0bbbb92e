// End-to-end: a scripted browser session against the live Python
// service. The suite generates a dataset, trains a tiny checkpoint,
// starts the HTTP service, then drives the real app through a
// 3-acquisition session and checks every rendered number against the
// raw bytes of the response that produced it.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { Api } from "../src/api.js";
import { App, WindowLike } from "../src/app.js";

const PORT = 18300 + (process.pid % 900);
const BASE = `http://127.0.0.1:${PORT}`;

let workDir: string;
let server: ChildProcess | null = null;
const rawBodies: string[] = [];
let fetchCount = 0;

// wraps real fetch: keeps the exact body text of every service response
const capturingFetch = async (url: string, init?: RequestInit): Promise<Response> => {
  fetchCount += 1;
  const resp = await fetch(url, init);
  const text = await resp.text();
  if (resp.ok) {
    rawBodies.push(text);
  }
  return new Response(text, { status: resp.status, headers: resp.headers });
};

function lastBody(): string {
  return rawBodies[rawBodies.length - 1];
}

function token(body: string, pattern: RegExp): string {
  const m = pattern.exec(body);
  if (m === null) {
    throw new Error(`pattern ${pattern} not found in response body`);
  }
  return m[1];
}

function makeWin(): WindowLike {
  return { location: { hash: "" }, addEventListener: () => undefined };
}

async function waitForService(): Promise<void> {
  const deadline = Date.now() + 120000;
  for (;;) {
    try {
      const resp = await fetch(`${BASE}/v1/schemas`);
      if (resp.ok) return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      throw new Error("service did not come up in time");
    }
    await new Promise((resolve) => setTimeout(resolve, 500));
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-e2e-"));
  const data = join(workDir, "panel.json");
  const ckpt = join(workDir, "model.json");
  const config = join(workDir, "config.json");
  writeFileSync(
    config,
    JSON.stringify({
      model: {
        d: 16,
        d_text: 32,
        d_tag: 8,
        heads: 4,
        layers_instance: 1,
        layers_aggregate: 1,
        mixture_components: 3,
      },
      train: { steps: 400, lr: 0.001, batch_size: 4, smax: 2, val_every: 100, log_every: 50 },
    }),
  );
  const cli = (...args: string[]) =>
    execFileSync("python3", ["-m", "setinfer.cli", ...args], {
      cwd: "/root/pkg",
      stdio: ["ignore", "pipe", "pipe"],
    });
  // seed 6 gives three genuinely informative predictors, so a trained
  // model suggests through all three before stopping
  cli(
    "--seed", "6", "synth", "--family", "categorical-bayes-net",
    "--rows", "48", "--predictors", "3", "--out", data,
  );
  cli("--seed", "1", "--config", config, "train", "--data", data, "--out", ckpt);
  server = spawn(
    "python3",
    ["-m", "setinfer.cli", "serve", "--checkpoint", ckpt, "--data", data,
     "--port", String(PORT)],
    { cwd: "/root/pkg", stdio: ["ignore", "inherit", "inherit"] },
  );
  await waitForService();
}, 240000);

afterAll(() => {
  if (server !== null) {
    server.kill("SIGTERM");
  }
  rmSync(workDir, { recursive: true, force: true });
});

describe("console against the live service", () => {
  it("completes a 3-acquisition session with byte-equal rendering", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const win = makeWin();
    const app = new App(document, root, new Api(BASE, capturingFetch), win);
    await app.start();

    // start screen lists the served dataset
    const datasetSelect = root.querySelector("#dataset-select") as HTMLSelectElement;
    expect(datasetSelect.value).toContain("categorical-bayes-net");
    expect((root.querySelector("#target-select") as HTMLSelectElement).value).toBe("flag");

    const budgetInput = root.querySelector("#budget-input") as HTMLInputElement;
    budgetInput.value = "3";
    budgetInput.dispatchEvent(new Event("input"));
    (root.querySelector(".start-form") as HTMLFormElement).dispatchEvent(
      new Event("submit", { cancelable: true }),
    );
    await app.idle;

    expect(win.location.hash).toMatch(/^#\/s\//);
    expect(root.querySelector(".session")).not.toBeNull();

    // the prior prediction (nothing acquired) is already on screen
    expect(root.querySelectorAll(".acquired-row")).toHaveLength(0);
    expect(root.querySelectorAll(".prob-row")).toHaveLength(2);

    for (let step = 1; step <= 3; step++) {
      const select = root.querySelector("#value-input") as HTMLSelectElement;
      expect(select).not.toBeNull();
      const suggested = root.querySelector(".suggestion-line")?.textContent ?? "";
      expect(suggested.length).toBeGreaterThan(0);

      if (step === 1) {
        // out-of-vocabulary attempt: inject a rogue option, select it,
        // and watch it get blocked before any network traffic
        const rogue = document.createElement("option");
        rogue.value = "extinct";
        rogue.textContent = "extinct";
        select.appendChild(rogue);
        select.value = "extinct";
        select.dispatchEvent(new Event("change"));
        const callsBefore = fetchCount;
        (root.querySelector(".value-form") as HTMLFormElement).dispatchEvent(
          new Event("submit", { cancelable: true }),
        );
        await app.idle;
        expect(fetchCount).toBe(callsBefore);
        expect(root.querySelector("#inline-error")?.textContent).toContain("not one of");
      }

      const fresh = root.querySelector("#value-input") as HTMLSelectElement;
      fresh.value = step === 2 ? "absent" : "present";
      fresh.dispatchEvent(new Event("change"));
      (root.querySelector(".value-form") as HTMLFormElement).dispatchEvent(
        new Event("submit", { cancelable: true }),
      );
      await app.idle;

      const body = lastBody();
      expect(body).toContain('"session_id"');
      const rows = [...root.querySelectorAll(".acquired-row")];
      expect(rows).toHaveLength(step);

      // budget figures are byte-equal to the response that set them
      const remaining = token(body, /"budget_remaining":([^,}]+)/);
      const spent = token(body, /"spent":([^,}]+)/);
      expect(root.querySelector(".budget-remaining .budget-value")?.textContent).toBe(remaining);
      expect(root.querySelector(".budget-spent .budget-value")?.textContent).toBe(spent);

      // probability bars: service order and byte-equal values
      const barEls = [...root.querySelectorAll(".prob-row")];
      const wireBars = [
        ...body.matchAll(/\{"choice":"([^"]+)","p":([^}]+)\}/g),
      ].map((m) => ({ choice: m[1], p: m[2] }));
      expect(barEls.length).toBe(wireBars.length);
      for (let i = 0; i < wireBars.length; i++) {
        expect(barEls[i].querySelector(".prob-choice")?.textContent).toBe(wireBars[i].choice);
        expect(barEls[i].querySelector(".prob-value")?.textContent).toBe(wireBars[i].p);
      }

      // acquired table: each row's value and cost match the wire text
      const acquiredWire = [
        ...body.matchAll(/\{"cost":([^,]+),"feature_id":"([^"]+)","step":(\d+),"value":("[^"]*"|[^}]+)\}/g),
      ];
      expect(acquiredWire.length).toBe(step);
      for (let i = 0; i < acquiredWire.length; i++) {
        const cells = [...rows[i].querySelectorAll("td")].map((td) => td.textContent);
        const wireValue = acquiredWire[i][4].startsWith('"')
          ? JSON.parse(acquiredWire[i][4])
          : acquiredWire[i][4];
        expect(cells[0]).toBe(acquiredWire[i][3]);
        expect(cells[1]).toBe(acquiredWire[i][2]);
        expect(cells[2]).toBe(wireValue);
        expect(cells[3]).toBe(acquiredWire[i][1]);
      }
    }

    // three 1.0-cost acquisitions against budget 3: the session is done
    const body = lastBody();
    expect(token(body, /"phase":"([^"]+)"/)).toBe("terminated");
    expect(root.querySelector(".session-meta")?.textContent).toContain("terminated");
    expect(root.querySelector(".suggestion-stop")).not.toBeNull();
    expect(root.querySelector("#value-input")).toBeNull();
  }, 120000);

  it("reproduces the identical view after a stateless refresh", async () => {
    const sessionRoot = document.querySelector(".session");
    expect(sessionRoot).not.toBeNull();
    const before = sessionRoot?.innerHTML;

    const win = makeWin();
    const firstHash = /#\/s\/.+/;
    // recover the session id from the previous test's final response
    const sid = token(lastBody(), /"session_id":"([^"]+)"/);
    win.location.hash = `#/s/${sid}`;
    expect(win.location.hash).toMatch(firstHash);

    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(document, root, new Api(BASE, capturingFetch), win);
    await app.start();

    const after = root.querySelector(".session")?.innerHTML;
    expect(after).toBe(before);
  }, 60000);

  it("starts a zero-budget session that stops immediately with a prior", async () => {
    const root = document.createElement("div");
    document.body.appendChild(root);
    const app = new App(document, root, new Api(BASE, capturingFetch), makeWin());
    await app.start();
    app.state.budgetDraft = "0";
    app.createSession();
    await app.idle;

    expect(root.querySelector(".suggestion-stop")?.textContent).toContain("Stop");
    expect(root.querySelectorAll(".acquired-row")).toHaveLength(0);
    expect(root.querySelectorAll(".prob-row")).toHaveLength(2);
    const body = lastBody();
    expect(token(body, /"phase":"([^"]+)"/)).toBe("terminated");
  }, 60000);
});
