export const ZONE = {
    x_lo: 0,
    x_hi: 10,
    y_lo: 0,
    y_hi: 10,
    zone_y: 5,
    max_step: 0.5,
    press_radius: 0.4,
    stick_len: 4,
    holder_w: 1.6,
    holder_h: 0.5,
};
export function obj(name, type, features) {
    return { name, type, features };
}
export function snapshot(objects, overrides = {}) {
    return {
        type: "snapshot",
        session: "test",
        objects,
        atoms: [],
        goal: [],
        reachable_zone: ZONE,
        status: "active",
        steps: 0,
        ...overrides,
    };
}
/** A stand-in 2D context that records drawing operations. */
export class StubContext {
    fillStyle = "";
    strokeStyle = "";
    lineWidth = 1;
    font = "";
    globalAlpha = 1;
    calls = [];
    record(op, ...args) {
        this.calls.push({ op, args, fillStyle: String(this.fillStyle) });
    }
    clearRect(...args) {
        this.record("clearRect", ...args);
    }
    fillRect(...args) {
        this.record("fillRect", ...args);
    }
    strokeRect(...args) {
        this.record("strokeRect", ...args);
    }
    beginPath() {
        this.record("beginPath");
    }
    arc(...args) {
        this.record("arc", ...args);
    }
    moveTo(...args) {
        this.record("moveTo", ...args);
    }
    lineTo(...args) {
        this.record("lineTo", ...args);
    }
    fill() {
        this.record("fill");
    }
    stroke() {
        this.record("stroke");
    }
    fillText(text, x, y) {
        this.record("fillText", text, x, y);
    }
}
