/** Wire protocol for the demo-collection service, and coordinate mapping.
 *
 * The client never simulates anything: it sends inputs, the server steps the
 * environment and answers with full snapshots.
 */
export class ProtocolError extends Error {
}
export function parseServerMessage(raw) {
    let data;
    try {
        data = JSON.parse(raw);
    }
    catch {
        throw new ProtocolError(`not JSON: ${raw.slice(0, 80)}`);
    }
    if (typeof data !== "object" || data === null || !("type" in data)) {
        throw new ProtocolError("message has no type");
    }
    const msg = data;
    switch (msg.type) {
        case "snapshot": {
            for (const key of ["objects", "atoms", "goal", "reachable_zone", "status"]) {
                if (!(key in msg))
                    throw new ProtocolError(`snapshot missing ${key}`);
            }
            return msg;
        }
        case "error": {
            if (typeof msg.code !== "string")
                throw new ProtocolError("error missing code");
            return msg;
        }
        case "finished": {
            if (typeof msg.saved !== "boolean")
                throw new ProtocolError("finished missing saved");
            return msg;
        }
        default:
            throw new ProtocolError(`unknown message type ${String(msg.type)}`);
    }
}
export function serialize(msg) {
    return JSON.stringify(msg);
}
/** Maps environment coordinates onto a canvas.  The y axis flips so that
 * larger environment y (where the unreachable buttons live) draws upward. */
export class Viewport {
    zone;
    width;
    height;
    constructor(zone, width, height) {
        this.zone = zone;
        this.width = width;
        this.height = height;
    }
    get scale() {
        return Math.min(this.width / (this.zone.x_hi - this.zone.x_lo), this.height / (this.zone.y_hi - this.zone.y_lo));
    }
    toCanvas(x, y) {
        const s = this.scale;
        return [(x - this.zone.x_lo) * s, this.height - (y - this.zone.y_lo) * s];
    }
    /** Inverse of toCanvas, clamped to the arena bounds. */
    toEnv(cx, cy) {
        const s = this.scale;
        const x = this.zone.x_lo + cx / s;
        const y = this.zone.y_lo + (this.height - cy) / s;
        return [
            Math.min(Math.max(x, this.zone.x_lo), this.zone.x_hi),
            Math.min(Math.max(y, this.zone.y_lo), this.zone.y_hi),
        ];
    }
}
export function featureOf(obj, name) {
    const value = obj.features[name];
    if (value === undefined) {
        throw new ProtocolError(`object ${obj.name} lacks feature ${name}`);
    }
    return value;
}
