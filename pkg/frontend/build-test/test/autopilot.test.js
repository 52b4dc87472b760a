import assert from "node:assert/strict";
import { test } from "node:test";
import { graspIntervals, nextInput } from "../src/autopilot.js";
import { ZONE, obj, snapshot } from "./helpers.js";
const ROBOT = obj("robot", "robot", { x: 2, y: 2 });
const STICK = obj("stick", "stick", { x: 3, y: 1, held: 0 });
const HOLDER = obj("holder", "holder", { x: 6, y: 1 });
test("reachable buttons are approached and pressed with the gripper", () => {
    const far = snapshot([
        ROBOT,
        STICK,
        HOLDER,
        obj("button0", "button", { x: 8, y: 4, pressed: 0 }),
    ]);
    const step = nextInput(far);
    assert.deepEqual(step, { kind: "move", x: 8, y: 4 });
    const near = snapshot([
        obj("robot", "robot", { x: 8.05, y: 4.02 }),
        STICK,
        HOLDER,
        obj("button0", "button", { x: 8, y: 4, pressed: 0 }),
    ]);
    assert.deepEqual(nextInput(near), { kind: "press_key" });
});
test("unreachable buttons trigger a stick grasp first", () => {
    const snap = snapshot([
        ROBOT,
        STICK,
        HOLDER,
        obj("button0", "button", { x: 7, y: 8, pressed: 0 }),
    ]);
    const step = nextInput(snap);
    assert.equal(step?.kind, "move");
    // The target is a point along the resting stick.
    assert.ok(step.x >= 3 && step.x <= 3 + ZONE.stick_len);
    assert.ok(Math.abs(step.y - 1) < 1e-9);
});
test("carried stick presses aim the tip at the button", () => {
    const grasp = 1.0; // robot.y - stick.y
    const snap = snapshot([
        obj("robot", "robot", { x: 2, y: 3 }),
        obj("stick", "stick", { x: 2, y: 3 - grasp, held: 1 }),
        HOLDER,
        obj("button0", "button", { x: 7, y: 8, pressed: 0 }),
    ], { atoms: ["Grasped(robot,stick)"] });
    const step = nextInput(snap);
    const reach = ZONE.stick_len - grasp;
    assert.equal(step?.kind, "move");
    assert.equal(step.x, 7);
    assert.ok(Math.abs(step.y - (8 - reach)) < 1e-9);
});
test("pressed buttons and finished sessions produce no further input", () => {
    const done = snapshot([ROBOT, STICK, HOLDER, obj("button0", "button", { x: 8, y: 4, pressed: 1 })], { status: "done" });
    assert.equal(nextInput(done), null);
    const all_pressed = snapshot([
        ROBOT,
        STICK,
        HOLDER,
        obj("button0", "button", { x: 8, y: 4, pressed: 1 }),
    ]);
    assert.equal(nextInput(all_pressed), null);
});
test("grasp intervals avoid the holder and keep buttons in range", () => {
    const snap = snapshot([ROBOT, STICK, HOLDER, obj("b", "button", { x: 9, y: 8, pressed: 0 })]);
    const intervals = graspIntervals(snap, [{ x: 9, y: 8 }]);
    assert.ok(intervals.length > 0);
    for (const [lo, hi] of intervals) {
        assert.ok(hi > lo);
        for (const o of [lo, (lo + hi) / 2, hi]) {
            // Clear of the holder (its x span is 4.2 +- 0.8, robot radius 0.3).
            const gx = 3 + o;
            assert.ok(Math.abs(gx - 6) > ZONE.holder_w / 2 + 0.29);
            // The tip can still reach the button from inside the zone.
            assert.ok(8 - (ZONE.stick_len - o) <= ZONE.zone_y);
        }
    }
});
