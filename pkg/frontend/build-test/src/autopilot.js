/** Scripted demonstrator that plays through the protocol alone.
 *
 * Used to drive sessions headlessly (soak tests, bulk demo collection) with
 * the same observe-click-press interface a human has.  All geometry comes
 * from the snapshot; nothing touches the simulator directly.
 */
import { featureOf } from "./protocol.js";
function distance(ax, ay, bx, by) {
    return Math.hypot(ax - bx, ay - by);
}
function objectsOf(snap, type) {
    return snap.objects.filter((o) => o.type === type);
}
/** Grasp offsets along the stick that keep every listed button pressable
 * and keep the robot clear of the holder.  Mirrors the arithmetic a human
 * works out visually from the rendered scene. */
export function graspIntervals(snap, targets) {
    const zone = snap.reachable_zone;
    const stick = objectsOf(snap, "stick")[0];
    const holder = objectsOf(snap, "holder")[0];
    if (!stick || !holder)
        return [];
    const sx = featureOf(stick, "x");
    const sy = featureOf(stick, "y");
    const hx = featureOf(holder, "x");
    const margin = 0.15;
    let lo = 0;
    let hi = zone.stick_len;
    for (const t of targets) {
        hi = Math.min(hi, zone.zone_y + zone.stick_len - t.y - margin);
    }
    if (hi <= lo)
        return [];
    let intervals = [[lo, hi]];
    const blocked = [];
    const robotRadius = 0.3;
    blocked.push([
        hx - sx - zone.holder_w / 2 - robotRadius,
        hx - sx + zone.holder_w / 2 + robotRadius,
    ]);
    for (const t of targets) {
        if (Math.abs(t.x - hx) <= zone.holder_w / 2 + robotRadius + margin) {
            const center = sy + zone.stick_len - t.y;
            const half = zone.holder_h / 2 + robotRadius + margin;
            blocked.push([center - half, center + half]);
        }
    }
    for (const [blo, bhi] of blocked) {
        const next = [];
        for (const [ilo, ihi] of intervals) {
            if (bhi <= ilo || blo >= ihi) {
                next.push([ilo, ihi]);
                continue;
            }
            if (ilo < blo)
                next.push([ilo, blo]);
            if (bhi < ihi)
                next.push([bhi, ihi]);
        }
        intervals = next;
    }
    return intervals.filter(([a, b]) => b - a >= 0.2);
}
/** Decide the next input given the latest snapshot, or null when done. */
export function nextInput(snap) {
    if (snap.status !== "active")
        return null;
    const zone = snap.reachable_zone;
    const robot = objectsOf(snap, "robot")[0];
    const stick = objectsOf(snap, "stick")[0];
    if (!robot || !stick)
        return null;
    const rx = featureOf(robot, "x");
    const ry = featureOf(robot, "y");
    const unpressed = objectsOf(snap, "button").filter((b) => featureOf(b, "pressed") < 0.5);
    if (unpressed.length === 0)
        return null;
    const aim = zone.press_radius * 0.5;
    const reachable = unpressed.filter((b) => featureOf(b, "y") <= zone.zone_y);
    const held = featureOf(stick, "held") > 0.5;
    if (reachable.length > 0 && !held) {
        const target = reachable.reduce((best, b) => distance(rx, ry, featureOf(b, "x"), featureOf(b, "y")) <
            distance(rx, ry, featureOf(best, "x"), featureOf(best, "y"))
            ? b
            : best);
        const bx = featureOf(target, "x");
        const by = featureOf(target, "y");
        if (distance(rx, ry, bx, by) <= aim) {
            return { kind: "press_key" };
        }
        return { kind: "move", x: bx, y: by };
    }
    const high = unpressed.map((b) => ({
        x: featureOf(b, "x"),
        y: featureOf(b, "y"),
    }));
    if (!held) {
        const intervals = graspIntervals(snap, high.filter((t) => t.y > zone.zone_y));
        if (intervals.length === 0)
            return null;
        const first = intervals[0];
        const offset = (first[0] + first[1]) / 2;
        const gx = featureOf(stick, "x") + offset;
        const gy = featureOf(stick, "y");
        if (distance(rx, ry, gx, gy) <= 0.1) {
            return { kind: "press_key" };
        }
        return { kind: "move", x: gx, y: gy };
    }
    // Carrying the stick: its tip reaches stick_len above the grasp point.
    const reach = zone.stick_len - (ry - featureOf(stick, "y"));
    const target = unpressed.reduce((best, b) => distance(rx, ry, featureOf(b, "x"), featureOf(b, "y") - reach) <
        distance(rx, ry, featureOf(best, "x"), featureOf(best, "y") - reach)
        ? b
        : best);
    const tx = featureOf(target, "x");
    const ty = Math.min(Math.max(featureOf(target, "y") - reach, zone.y_lo), zone.zone_y);
    if (distance(rx, ry, tx, ty) <= aim) {
        return { kind: "press_key" };
    }
    return { kind: "move", x: tx, y: ty };
}
/** Drive one session to the goal with a request/reply transport. */
export async function autopilotSession(request, seed, maxInputs = 2000) {
    let reply = await request({ type: "start", seed });
    for (let i = 0; i < maxInputs; i++) {
        if (reply.type !== "snapshot")
            return "stuck";
        const snap = reply;
        if (snap.status === "done")
            return "done";
        const step = nextInput(snap);
        if (step === null)
            return "stuck";
        reply = await request(step.kind === "move"
            ? { type: "input", kind: "move", x: step.x, y: step.y }
            : { type: "input", kind: "press_key" });
    }
    return "stuck";
}
