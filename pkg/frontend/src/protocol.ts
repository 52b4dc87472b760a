/** Wire protocol for the demo-collection service, and coordinate mapping.
 *
 * The client never simulates anything: it sends inputs, the server steps the
 * environment and answers with full snapshots.
 */

export interface ObjectSnapshot {
  name: string;
  type: string;
  features: Record<string, number>;
}

export interface ReachableZone {
  x_lo: number;
  x_hi: number;
  y_lo: number;
  y_hi: number;
  zone_y: number;
  max_step: number;
  press_radius: number;
  stick_len: number;
  holder_w: number;
  holder_h: number;
}

export type SessionStatus = "active" | "done" | "abandoned";

export interface Snapshot {
  type: "snapshot";
  session: string;
  objects: ObjectSnapshot[];
  atoms: string[];
  goal: string[];
  reachable_zone: ReachableZone;
  status: SessionStatus;
  steps: number;
}

export interface ErrorMessage {
  type: "error";
  code: string;
  message: string;
}

export interface FinishedMessage {
  type: "finished";
  outcome: "save" | "discard";
  saved: boolean;
}

export type ServerMessage = Snapshot | ErrorMessage | FinishedMessage;

export type ClientMessage =
  | { type: "start"; seed: number }
  | { type: "input"; kind: "move"; x: number; y: number }
  | { type: "input"; kind: "press_key" }
  | { type: "action"; vector: number[] }
  | { type: "finish"; outcome: "save" | "discard" };

export class ProtocolError extends Error {}

export function parseServerMessage(raw: string): ServerMessage {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new ProtocolError(`not JSON: ${raw.slice(0, 80)}`);
  }
  if (typeof data !== "object" || data === null || !("type" in data)) {
    throw new ProtocolError("message has no type");
  }
  const msg = data as Record<string, unknown>;
  switch (msg.type) {
    case "snapshot": {
      for (const key of ["objects", "atoms", "goal", "reachable_zone", "status"]) {
        if (!(key in msg)) throw new ProtocolError(`snapshot missing ${key}`);
      }
      return msg as unknown as Snapshot;
    }
    case "error": {
      if (typeof msg.code !== "string") throw new ProtocolError("error missing code");
      return msg as unknown as ErrorMessage;
    }
    case "finished": {
      if (typeof msg.saved !== "boolean") throw new ProtocolError("finished missing saved");
      return msg as unknown as FinishedMessage;
    }
    default:
      throw new ProtocolError(`unknown message type ${String(msg.type)}`);
  }
}

export function serialize(msg: ClientMessage): string {
  return JSON.stringify(msg);
}

/** Maps environment coordinates onto a canvas.  The y axis flips so that
 * larger environment y (where the unreachable buttons live) draws upward. */
export class Viewport {
  constructor(
    readonly zone: ReachableZone,
    readonly width: number,
    readonly height: number,
  ) {}

  get scale(): number {
    return Math.min(
      this.width / (this.zone.x_hi - this.zone.x_lo),
      this.height / (this.zone.y_hi - this.zone.y_lo),
    );
  }

  toCanvas(x: number, y: number): [number, number] {
    const s = this.scale;
    return [(x - this.zone.x_lo) * s, this.height - (y - this.zone.y_lo) * s];
  }

  /** Inverse of toCanvas, clamped to the arena bounds. */
  toEnv(cx: number, cy: number): [number, number] {
    const s = this.scale;
    const x = this.zone.x_lo + cx / s;
    const y = this.zone.y_lo + (this.height - cy) / s;
    return [
      Math.min(Math.max(x, this.zone.x_lo), this.zone.x_hi),
      Math.min(Math.max(y, this.zone.y_lo), this.zone.y_hi),
    ];
  }
}

export function featureOf(obj: ObjectSnapshot, name: string): number {
  const value = obj.features[name];
  if (value === undefined) {
    throw new ProtocolError(`object ${obj.name} lacks feature ${name}`);
  }
  return value;
}
