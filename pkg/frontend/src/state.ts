/**
 * Console state store.
 *
 * A single store serializes every event (network or user input); the
 * renderers are pure functions of the snapshot.  Telemetry lives in a
 * bounded ring buffer; malformed lines are dropped and counted for the
 * diagnostics panel.
 */

import { TelemetryRecord, parseReply, parseTelemetry } from "./protocol.js";

export type ConnectionStatus = "disconnected" | "connecting" | "connected";
export type ControlStatus = "unknown" | "holding" | "observer";

export const TELEMETRY_BUFFER = 600;

export interface SliderValues {
  amplitudeMt: number;
  frequencyHz: number;
  alphaDeg: number;
  gammaDeg: number;
  strength: number;
}

export interface ConsoleState {
  connection: ConnectionStatus;
  endpoint: string;
  control: ControlStatus;
  activeMode: string;
  tweezerOn: boolean;
  sliders: SliderValues;
  leftStick: { x: number; y: number };
  rightStick: { x: number; y: number };
  telemetry: TelemetryRecord[];
  droppedLines: number;
  linesSeen: number;
  assemblyName: string;
  channelLimits: number[];
  lastError: string;
}

export function initialState(): ConsoleState {
  return {
    connection: "disconnected",
    endpoint: "",
    control: "unknown",
    activeMode: "STOP",
    tweezerOn: false,
    sliders: { amplitudeMt: 2.0, frequencyHz: 1.0, alphaDeg: 0, gammaDeg: 90, strength: 0.8 },
    leftStick: { x: 0, y: 0 },
    rightStick: { x: 0, y: 0 },
    telemetry: [],
    droppedLines: 0,
    linesSeen: 0,
    assemblyName: "",
    channelLimits: [],
    lastError: "",
  };
}

export type Listener = (state: ConsoleState) => void;

export class Store {
  private state = initialState();
  private listeners: Listener[] = [];

  get(): ConsoleState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  update(patch: Partial<ConsoleState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) listener(this.state);
  }

  /** Feed one raw line from the service into the state. */
  ingestLine(line: string): void {
    const telemetry = parseTelemetry(line);
    if (telemetry !== null) {
      const buffer = this.state.telemetry.concat([telemetry]);
      if (buffer.length > TELEMETRY_BUFFER) buffer.splice(0, buffer.length - TELEMETRY_BUFFER);
      this.update({
        telemetry: buffer,
        linesSeen: this.state.linesSeen + 1,
        activeMode: telemetry.mode,
      });
      return;
    }
    if (line.startsWith("TLM")) {
      // malformed telemetry: drop and count
      this.update({ droppedLines: this.state.droppedLines + 1 });
      return;
    }
    const reply = parseReply(line);
    if (reply === null) {
      this.update({ droppedLines: this.state.droppedLines + 1 });
      return;
    }
    if (reply.kind === "err") {
      if (reply.code === "busy") {
        this.update({ control: "observer", lastError: "another operator holds control" });
      } else {
        this.update({ lastError: `${reply.code ?? "error"} ${reply.payload}`.trim() });
      }
      return;
    }
    // OK replies: the subscribe acknowledgement carries assembly metadata
    if (reply.payload.startsWith("TLM")) {
      const fields = new Map(
        reply.payload
          .split(/\s+/)
          .slice(1)
          .map((token) => {
            const eq = token.indexOf("=");
            return [token.slice(0, eq), token.slice(eq + 1)] as const;
          }),
      );
      const limits = fields.get("limits")?.split(",").map(Number) ?? [];
      this.update({
        assemblyName: fields.get("assembly") ?? "",
        channelLimits: limits.every(Number.isFinite) ? limits : [],
      });
    }
  }

  markConnected(endpoint: string): void {
    this.update({ connection: "connected", endpoint, lastError: "" });
  }

  markConnecting(endpoint: string): void {
    this.update({ connection: "connecting", endpoint });
  }

  markDisconnected(reason = ""): void {
    // stale controls must not survive a drop
    this.update({
      connection: "disconnected",
      control: "unknown",
      activeMode: "STOP",
      lastError: reason,
    });
  }

  /** The first accepted actuation line acquires control. */
  markControlAcquired(): void {
    if (this.state.control === "unknown") this.update({ control: "holding" });
  }
}
