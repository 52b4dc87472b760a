import { ObjectSnapshot, ReachableZone, Snapshot } from "../src/protocol.js";
import { Draw2D } from "../src/scene.js";

export const ZONE: ReachableZone = {
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

export function obj(
  name: string,
  type: string,
  features: Record<string, number>,
): ObjectSnapshot {
  return { name, type, features };
}

export function snapshot(
  objects: ObjectSnapshot[],
  overrides: Partial<Snapshot> = {},
): Snapshot {
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

export interface RecordedCall {
  op: string;
  args: unknown[];
  fillStyle: string;
}

/** A stand-in 2D context that records drawing operations. */
export class StubContext implements Draw2D {
  fillStyle: string = "";
  strokeStyle: string = "";
  lineWidth = 1;
  font = "";
  globalAlpha = 1;
  calls: RecordedCall[] = [];

  private record(op: string, ...args: unknown[]): void {
    this.calls.push({ op, args, fillStyle: String(this.fillStyle) });
  }

  clearRect(...args: number[]): void {
    this.record("clearRect", ...args);
  }
  fillRect(...args: number[]): void {
    this.record("fillRect", ...args);
  }
  strokeRect(...args: number[]): void {
    this.record("strokeRect", ...args);
  }
  beginPath(): void {
    this.record("beginPath");
  }
  arc(...args: number[]): void {
    this.record("arc", ...args);
  }
  moveTo(...args: number[]): void {
    this.record("moveTo", ...args);
  }
  lineTo(...args: number[]): void {
    this.record("lineTo", ...args);
  }
  fill(): void {
    this.record("fill");
  }
  stroke(): void {
    this.record("stroke");
  }
  fillText(text: string, x: number, y: number): void {
    this.record("fillText", text, x, y);
  }
}
