/** Pure rendering of a snapshot onto a 2D context.
 *
 * The robot is a red circle, buttons are yellow circles (dimmed when
 * pressed), the stick is a brown rectangle, the holder a gray rectangle,
 * and the reachable region is tinted green.  Every visual change originates
 * from a server snapshot; render() holds no state of its own.
 */
import { Viewport, featureOf } from "./protocol.js";
export function emptyScene() {
    return {
        snapshot: null,
        connection: "connecting",
        dropped: 0,
        lastError: null,
        finished: null,
    };
}
const COLORS = {
    zone: "rgba(60, 180, 75, 0.18)",
    zoneEdge: "#3cb44b",
    robot: "#e6194b",
    button: "#ffe119",
    buttonPressed: "#b5a642",
    stick: "#9a6324",
    holder: "#a9a9a9",
    text: "#222222",
    placeholder: "#ff00ff",
};
export function render(scene, ctx, width, height) {
    const stats = {
        robots: 0,
        buttons: 0,
        pressedButtons: 0,
        sticks: 0,
        stickAttached: false,
        holders: 0,
        placeholders: 0,
        banner: null,
    };
    ctx.clearRect(0, 0, width, height);
    const snap = scene.snapshot;
    if (snap === null) {
        ctx.fillStyle = COLORS.text;
        ctx.font = "16px sans-serif";
        ctx.fillText(scene.connection === "closed" ? "disconnected" : "waiting for session...", 12, 24);
        stats.banner = "no-session";
        return stats;
    }
    const vp = new Viewport(snap.reachable_zone, width, height);
    const zone = snap.reachable_zone;
    // Reachable region: everything below the zone line is fair game.
    const [zx0, zy0] = vp.toCanvas(zone.x_lo, zone.zone_y);
    const [zx1, zy1] = vp.toCanvas(zone.x_hi, zone.y_lo);
    ctx.fillStyle = COLORS.zone;
    ctx.fillRect(zx0, zy0, zx1 - zx0, zy1 - zy0);
    ctx.strokeStyle = COLORS.zoneEdge;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(zx0, zy0);
    ctx.lineTo(zx1, zy0);
    ctx.stroke();
    const grasped = snap.atoms.some((a) => a.startsWith("Grasped("));
    const s = vp.scale;
    for (const obj of snap.objects) {
        switch (obj.type) {
            case "holder": {
                stats.holders += 1;
                const [cx, cy] = vp.toCanvas(featureOf(obj, "x"), featureOf(obj, "y"));
                ctx.fillStyle = COLORS.holder;
                ctx.fillRect(cx - (zone.holder_w / 2) * s, cy - (zone.holder_h / 2) * s, zone.holder_w * s, zone.holder_h * s);
                break;
            }
            case "stick": {
                stats.sticks += 1;
                const held = featureOf(obj, "held") > 0.5;
                stats.stickAttached = stats.stickAttached || (held && grasped);
                const [bx, by] = vp.toCanvas(featureOf(obj, "x"), featureOf(obj, "y"));
                ctx.fillStyle = COLORS.stick;
                const thick = Math.max(3, 0.12 * s);
                if (held) {
                    // Carried: the stick extends upward from the grasp point.
                    const [tx, ty] = vp.toCanvas(featureOf(obj, "x"), featureOf(obj, "y") + zone.stick_len);
                    ctx.fillRect(bx - thick / 2, ty, thick, by - ty);
                }
                else {
                    const [ex] = vp.toCanvas(featureOf(obj, "x") + zone.stick_len, featureOf(obj, "y"));
                    ctx.fillRect(bx, by - thick / 2, ex - bx, thick);
                }
                break;
            }
            case "button": {
                stats.buttons += 1;
                const pressed = featureOf(obj, "pressed") > 0.5;
                if (pressed)
                    stats.pressedButtons += 1;
                const [cx, cy] = vp.toCanvas(featureOf(obj, "x"), featureOf(obj, "y"));
                ctx.fillStyle = pressed ? COLORS.buttonPressed : COLORS.button;
                ctx.beginPath();
                ctx.arc(cx, cy, zone.press_radius * s, 0, 2 * Math.PI);
                ctx.fill();
                ctx.strokeStyle = COLORS.text;
                ctx.lineWidth = 1;
                ctx.stroke();
                break;
            }
            case "robot": {
                stats.robots += 1;
                const [cx, cy] = vp.toCanvas(featureOf(obj, "x"), featureOf(obj, "y"));
                ctx.fillStyle = COLORS.robot;
                ctx.beginPath();
                ctx.arc(cx, cy, Math.max(4, 0.3 * s), 0, 2 * Math.PI);
                ctx.fill();
                break;
            }
            default: {
                stats.placeholders += 1;
                console.warn(`unknown object kind ${obj.type}; drawing placeholder`);
                const x = featureOf(obj, "x");
                const y = featureOf(obj, "y");
                const [cx, cy] = vp.toCanvas(x, y);
                ctx.fillStyle = COLORS.placeholder;
                ctx.fillRect(cx - 4, cy - 4, 8, 8);
            }
        }
    }
    ctx.fillStyle = COLORS.text;
    ctx.font = "14px sans-serif";
    const pressedGoals = snap.goal.filter((g) => snap.atoms.includes(g)).length;
    let banner = `goal ${pressedGoals}/${snap.goal.length} - ${snap.steps} steps`;
    if (snap.status === "done") {
        banner = `task complete! save or discard (${snap.steps} steps)`;
    }
    else if (snap.status === "abandoned") {
        banner = "session abandoned";
    }
    if (scene.dropped > 0) {
        banner += ` [dropped ${scene.dropped}]`;
    }
    ctx.fillText(banner, 12, 20);
    stats.banner = banner;
    return stats;
}
