/** Connection and input wiring for the demo service.
 *
 * Inputs map one-to-one onto protocol messages; while a message is in
 * flight, further inputs are dropped (the environment is turn-based per
 * action, so queuing would mislead the demonstrator).
 */

import {
  ClientMessage,
  ServerMessage,
  Viewport,
  parseServerMessage,
  serialize,
} from "./protocol.js";
import { SceneModel, emptyScene } from "./scene.js";

/** The slice of the WebSocket API the client uses (stubbed in tests). */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((event: { data: unknown }) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export class DemoClient {
  readonly scene: SceneModel = emptyScene();
  private inflight = false;

  constructor(
    private readonly socket: SocketLike,
    private readonly onChange: (scene: SceneModel) => void = () => {},
  ) {
    socket.onopen = () => {
      this.scene.connection = "open";
      this.onChange(this.scene);
    };
    socket.onclose = () => {
      this.scene.connection = "closed";
      this.onChange(this.scene);
    };
    socket.onmessage = (event) => this.receive(String(event.data));
  }

  private receive(raw: string): void {
    let message: ServerMessage;
    try {
      message = parseServerMessage(raw);
    } catch (err) {
      this.scene.lastError = String(err);
      this.onChange(this.scene);
      return;
    }
    this.inflight = false;
    if (message.type === "snapshot") {
      this.scene.snapshot = message;
      this.scene.lastError = null;
    } else if (message.type === "error") {
      this.scene.lastError = `${message.code}: ${message.message}`;
    } else {
      this.scene.finished = { outcome: message.outcome, saved: message.saved };
      this.scene.snapshot = null;
    }
    this.onChange(this.scene);
  }

  private send(message: ClientMessage): boolean {
    if (this.inflight || this.scene.connection !== "open") {
      this.scene.dropped += 1;
      this.onChange(this.scene);
      return false;
    }
    this.inflight = true;
    this.socket.send(serialize(message));
    return true;
  }

  start(seed: number): boolean {
    return this.send({ type: "start", seed });
  }

  /** Click at canvas coordinates: inverse-scale and emit a move input. */
  clickAt(canvasX: number, canvasY: number, width: number, height: number): boolean {
    const snap = this.scene.snapshot;
    if (snap === null || snap.status !== "active") {
      this.scene.dropped += 1;
      this.onChange(this.scene);
      return false;
    }
    const vp = new Viewport(snap.reachable_zone, width, height);
    const [x, y] = vp.toEnv(canvasX, canvasY);
    return this.send({ type: "input", kind: "move", x, y });
  }

  pressKey(): boolean {
    const snap = this.scene.snapshot;
    if (snap === null || snap.status !== "active") {
      this.scene.dropped += 1;
      this.onChange(this.scene);
      return false;
    }
    return this.send({ type: "input", kind: "press_key" });
  }

  finish(outcome: "save" | "discard"): boolean {
    return this.send({ type: "finish", outcome });
  }

  close(): void {
    this.socket.close();
  }
}
