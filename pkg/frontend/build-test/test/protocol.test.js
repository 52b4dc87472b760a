import assert from "node:assert/strict";
import { test } from "node:test";
import { ProtocolError, Viewport, parseServerMessage, serialize, } from "../src/protocol.js";
import { ZONE, snapshot } from "./helpers.js";
test("server messages round-trip through serialize/parse", () => {
    const snap = snapshot([]);
    const parsed = parseServerMessage(JSON.stringify(snap));
    assert.deepEqual(parsed, snap);
    const err = { type: "error", code: "bad-input", message: "nope" };
    assert.deepEqual(parseServerMessage(JSON.stringify(err)), err);
    const fin = { type: "finished", outcome: "save", saved: true };
    assert.deepEqual(parseServerMessage(JSON.stringify(fin)), fin);
});
test("malformed messages are rejected", () => {
    assert.throws(() => parseServerMessage("{nope"), ProtocolError);
    assert.throws(() => parseServerMessage('{"x": 1}'), ProtocolError);
    assert.throws(() => parseServerMessage('{"type":"mystery"}'), ProtocolError);
    assert.throws(() => parseServerMessage('{"type":"snapshot"}'), ProtocolError);
});
test("client messages serialize to documented shapes", () => {
    assert.equal(serialize({ type: "start", seed: 3 }), '{"type":"start","seed":3}');
    assert.equal(serialize({ type: "input", kind: "move", x: 1.5, y: 2 }), '{"type":"input","kind":"move","x":1.5,"y":2}');
    assert.equal(serialize({ type: "input", kind: "press_key" }), '{"type":"input","kind":"press_key"}');
});
test("viewport round-trips within one pixel's environment units", () => {
    const vp = new Viewport(ZONE, 640, 480);
    const pixel = 1 / vp.scale;
    for (const [x, y] of [
        [0, 0],
        [10, 10],
        [3.3, 7.7],
        [5, 5],
    ]) {
        const [cx, cy] = vp.toCanvas(x, y);
        const [bx, by] = vp.toEnv(cx, cy);
        assert.ok(Math.abs(bx - x) <= pixel, `${x} -> ${bx}`);
        assert.ok(Math.abs(by - y) <= pixel, `${y} -> ${by}`);
    }
});
test("canvas center of a symmetric viewport maps to the arena center", () => {
    const vp = new Viewport(ZONE, 500, 500);
    const [x, y] = vp.toEnv(250, 250);
    assert.ok(Math.abs(x - 5) < 1e-9);
    assert.ok(Math.abs(y - 5) < 1e-9);
});
test("clicks outside the arena clamp to the bounds", () => {
    const vp = new Viewport(ZONE, 500, 500);
    const [x1, y1] = vp.toEnv(-50, 250);
    assert.equal(x1, ZONE.x_lo);
    const [x2, y2] = vp.toEnv(9999, -9999);
    assert.equal(x2, ZONE.x_hi);
    assert.equal(y2, ZONE.y_hi);
    assert.ok(y1 >= ZONE.y_lo && y1 <= ZONE.y_hi);
});
