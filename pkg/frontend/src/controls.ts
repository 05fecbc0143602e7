/**
 * Control surfaces: widgets and gamepad events become protocol lines.
 *
 * Continuous inputs (sticks, sliders) are throttled to at most
 * 20 messages per second; the stop button bypasses the throttle and is
 * always enabled.  Once the service answers `ERR busy` the console is
 * observer-only and emits no actuation lines until reconnect.
 */

import { ConsoleSession } from "./connection.js";
import { buildLine, validateLine } from "./protocol.js";

export const CONTINUOUS_MESSAGE_HZ = 20;

const ACTUATION_VERBS = new Set([
  "ORIENT",
  "ROLL",
  "SPIN",
  "VIBRATE",
  "TWEEZER",
  "STOP",
  "SELECT_ASSEMBLY",
  "AXIS",
]);

export type Clock = () => number; // milliseconds

function round3(value: number): number {
  return Math.round(value * 1000) / 1000;
}

export class ControlSurface {
  private session: ConsoleSession;
  private clock: Clock;
  private lastContinuousMs = -Infinity;
  private pendingLine: string | null = null;

  constructor(session: ConsoleSession, clock: Clock = () => Date.now()) {
    this.session = session;
    this.clock = clock;
  }

  private get store() {
    return this.session.store;
  }

  /** Grammar-check, gate on control ownership, then send. */
  private emit(line: string): boolean {
    const check = validateLine(line);
    if (!check.ok) throw new Error(`console produced an invalid line: ${line} (${check.code})`);
    if (ACTUATION_VERBS.has(check.verb) && this.store.get().control === "observer") {
      return false;
    }
    const sent = this.session.send(line);
    if (sent && ACTUATION_VERBS.has(check.verb)) this.store.markControlAcquired();
    return sent;
  }

  /** Throttled path for continuous controls; trailing updates win. */
  private emitContinuous(line: string): boolean {
    const now = this.clock();
    const interval = 1000 / CONTINUOUS_MESSAGE_HZ;
    if (now - this.lastContinuousMs >= interval) {
      this.lastContinuousMs = now;
      this.pendingLine = null;
      return this.emit(line);
    }
    this.pendingLine = line;
    return false;
  }

  /** Flush a deferred trailing update once the throttle window reopens. */
  flushPending(): void {
    if (this.pendingLine !== null) {
      const line = this.pendingLine;
      const now = this.clock();
      if (now - this.lastContinuousMs >= 1000 / CONTINUOUS_MESSAGE_HZ) {
        this.lastContinuousMs = now;
        this.pendingLine = null;
        this.emit(line);
      }
    }
  }

  /** The stop button: unthrottled, enabled from every state. */
  stop(): boolean {
    this.store.update({ tweezerOn: false });
    return this.emit("STOP");
  }

  /** Quick direction buttons: fields along +x / +y / -x / -y. */
  quickDirection(angleDeg: 0 | 90 | 180 | 270): boolean {
    const s = this.store.get().sliders.strength;
    return this.emit(buildLine("ORIENT", { THETA: angleDeg, S: round3(s) }));
  }

  /** Left stick: orientation steering (or tweezer direction in tweezer mode). */
  leftStick(x: number, y: number): boolean {
    this.store.update({ leftStick: { x, y } });
    const norm = Math.hypot(x, y);
    if (norm < 0.05) return false;
    const theta = round3((Math.atan2(y, x) * 180) / Math.PI);
    const s = round3(Math.min(norm, 1));
    const verb = this.store.get().tweezerOn ? "TWEEZER" : "ORIENT";
    return this.emitContinuous(buildLine(verb, { THETA: theta, S: s }));
  }

  /** Right stick: steers the rolling direction (the polar angle). */
  rightStick(x: number, y: number): boolean {
    this.store.update({ rightStick: { x, y } });
    if (Math.hypot(x, y) < 0.05) return false;
    const alpha = round3((Math.atan2(y, x) * 180) / Math.PI);
    this.store.update({ sliders: { ...this.store.get().sliders, alphaDeg: alpha } });
    return this.emitContinuous(this.rollLine());
  }

  private rollLine(): string {
    const sliders = this.store.get().sliders;
    return buildLine("ROLL", {
      A: round3(sliders.amplitudeMt),
      ALPHA: round3(sliders.alphaDeg),
      GAMMA: round3(sliders.gammaDeg),
      F: round3(sliders.frequencyHz),
    });
  }

  /** Start (or re-parameterize) the rolling drive. */
  roll(): boolean {
    return this.emit(this.rollLine());
  }

  spin(): boolean {
    const sliders = this.store.get().sliders;
    return this.emit(
      buildLine("SPIN", { A: round3(sliders.amplitudeMt), F: round3(sliders.frequencyHz) }),
    );
  }

  vibrate(axis: "x" | "y" | "z"): boolean {
    const sliders = this.store.get().sliders;
    return this.emit(
      buildLine("VIBRATE", {
        AXIS: axis,
        F: round3(sliders.frequencyHz),
        S: round3(sliders.strength),
      }),
    );
  }

  /** Tweezer toggle: on sends a tweezer pull, off stops. */
  tweezerToggle(): boolean {
    const next = !this.store.get().tweezerOn;
    this.store.update({ tweezerOn: next });
    if (!next) return this.emit("STOP");
    const s = round3(this.store.get().sliders.strength);
    return this.emit(buildLine("TWEEZER", { THETA: 0, S: s }));
  }

  selectAssembly(name: string): boolean {
    this.store.update({ tweezerOn: name === "tweezer" });
    return this.emit(buildLine("SELECT_ASSEMBLY", { NAME: name }));
  }

  /**
   * Slider moves re-emit the active mode's command with the new values,
   * throttled like any continuous control.
   */
  slidersChanged(patch: Partial<import("./state.js").SliderValues>): boolean {
    const sliders = { ...this.store.get().sliders, ...patch };
    this.store.update({ sliders });
    const mode = this.store.get().activeMode;
    if (mode === "ROLL") return this.emitContinuous(this.rollLine());
    if (mode === "SPIN")
      return this.emitContinuous(
        buildLine("SPIN", { A: round3(sliders.amplitudeMt), F: round3(sliders.frequencyHz) }),
      );
    if (mode === "VIBRATE")
      return this.emitContinuous(
        buildLine("VIBRATE", { F: round3(sliders.frequencyHz), S: round3(sliders.strength) }),
      );
    if (mode === "ORIENT")
      return this.emitContinuous(buildLine("ORIENT", { S: round3(sliders.strength) }));
    return false;
  }

  /** Physical gamepad sticks map exactly like the virtual ones. */
  gamepadPoll(axes: readonly number[]): void {
    if (axes.length >= 2) this.leftStick(axes[0], -axes[1]);
    if (axes.length >= 4) this.rightStick(axes[2], -axes[3]);
    this.flushPending();
  }
}
