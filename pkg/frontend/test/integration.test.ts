/** Live round trip against the real service over a real WebSocket. */

import assert from "node:assert/strict";
import { spawn } from "node:child_process";
import { mkdtempSync, readFileSync, existsSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { autopilotSession } from "../src/autopilot.js";

const PORT = 18000 + (process.pid % 1000);

function startServer(outPath: string) {
  const proc = spawn(
    "python3",
    ["-m", "skillplan.cli", "serve-demo", "--port", String(PORT), "--out", outPath],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  return proc;
}

async function waitForServer(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
      await new Promise<void>((resolve, reject) => {
        ws.onopen = () => resolve();
        ws.onerror = () => reject(new Error("not up"));
      });
      ws.close();
      return;
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  throw new Error("demo service did not come up");
}

function wsRequest(ws: WebSocket) {
  return (msg: object): Promise<Record<string, unknown>> =>
    new Promise((resolve, reject) => {
      ws.onmessage = (event) => resolve(JSON.parse(String(event.data)));
      ws.onerror = (err) => reject(err);
      ws.send(JSON.stringify(msg));
    });
}

test("autopilot completes a task through the live service and saves it", async () => {
  const dir = mkdtempSync(join(tmpdir(), "demo-ui-"));
  const out = join(dir, "demos.jsonl");
  const server = startServer(out);
  try {
    await waitForServer();
    const ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
    await new Promise<void>((resolve) => (ws.onopen = () => resolve()));
    const request = wsRequest(ws);
    const result = await autopilotSession(request, 12);
    assert.equal(result, "done");
    const finished = await request({ type: "finish", outcome: "save" });
    assert.deepEqual(finished, { type: "finished", outcome: "save", saved: true });
    ws.close();
    assert.ok(existsSync(out));
    const lines = readFileSync(out, "utf-8").trim().split("\n");
    assert.equal(lines.length, 2); // header + one demo
    const header = JSON.parse(lines[0]!);
    assert.equal(header.environment, "stick_button");
    const record = JSON.parse(lines[1]!);
    assert.equal(record.kind, "demo");
    assert.equal(record.states.length, record.actions.length + 1);
  } finally {
    server.kill();
  }
});

test("autopilot solves a spread of seeds", async () => {
  const dir = mkdtempSync(join(tmpdir(), "demo-ui-"));
  const server = startServer(join(dir, "demos.jsonl"));
  try {
    await waitForServer();
    let done = 0;
    for (const seed of [1, 2, 3, 4, 5]) {
      const ws = new WebSocket(`ws://127.0.0.1:${PORT}/ws`);
      await new Promise<void>((resolve) => (ws.onopen = () => resolve()));
      const result = await autopilotSession(wsRequest(ws), seed);
      if (result === "done") done += 1;
      ws.close();
    }
    assert.ok(done >= 4, `autopilot finished only ${done}/5 sessions`);
  } finally {
    server.kill();
  }
});
