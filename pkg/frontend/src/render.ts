/**
 * Telemetry visuals.
 *
 * Geometry is computed by pure functions of the state snapshot (easy to
 * test); thin painters then draw the geometry onto 2D canvas contexts.
 * Views: field dials (top = x/y plane, front = x/z plane) with a |B|
 * readout, per-channel current bars with saturation highlighting, and
 * the robot's workspace-plane trace with a fading trail.
 */

import { TelemetryRecord } from "./protocol.js";
import { ConsoleState } from "./state.js";

export interface ArrowGeometry {
  magnitudeMt: number;
  topAngle: number; // rad, atan2(by, bx)
  frontAngle: number; // rad, atan2(bz, bx)
  sideAngle: number; // rad, atan2(bz, by)
  topFraction: number; // in-plane magnitude relative to |B| (dial arrow length)
  frontFraction: number;
  sideFraction: number;
}

export function fieldArrowGeometry(record: TelemetryRecord | null): ArrowGeometry {
  if (record === null) {
    return {
      magnitudeMt: 0,
      topAngle: 0,
      frontAngle: 0,
      sideAngle: 0,
      topFraction: 0,
      frontFraction: 0,
      sideFraction: 0,
    };
  }
  const [bx, by, bz] = record.fieldMt;
  const magnitude = Math.hypot(bx, by, bz);
  return {
    magnitudeMt: magnitude,
    topAngle: Math.atan2(by, bx),
    frontAngle: Math.atan2(bz, bx),
    sideAngle: Math.atan2(bz, by),
    topFraction: magnitude > 0 ? Math.hypot(bx, by) / magnitude : 0,
    frontFraction: magnitude > 0 ? Math.hypot(bx, bz) / magnitude : 0,
    sideFraction: magnitude > 0 ? Math.hypot(by, bz) / magnitude : 0,
  };
}

export interface CurrentBar {
  amps: number;
  fraction: number; // signed |i|/limit, clamped to [-1, 1]
  saturated: boolean;
}

export function currentBarGeometry(
  record: TelemetryRecord | null,
  limits: number[],
): CurrentBar[] {
  if (record === null) return [];
  return record.currentsA.map((amps, k) => {
    const limit = limits[k] ?? 3.0;
    const fraction = Math.max(-1, Math.min(1, amps / limit));
    return { amps, fraction, saturated: Math.abs(amps) >= limit * 0.999 };
  });
}

export interface TracePoint {
  xUm: number;
  yUm: number;
  alpha: number; // trail fade, 1 = newest
}

export function traceGeometry(records: TelemetryRecord[], maxPoints = 300): TracePoint[] {
  const positioned = records.filter((r) => r.positionUm !== undefined);
  const tail = positioned.slice(-maxPoints);
  const n = tail.length;
  return tail.map((record, index) => ({
    xUm: record.positionUm![0],
    yUm: record.positionUm![1],
    alpha: n > 1 ? (index + 1) / n : 1,
  }));
}

// ---------------------------------------------------------------------
// Painters
// ---------------------------------------------------------------------

type Ctx = CanvasRenderingContext2D;

export function paintDial(ctx: Ctx, angle: number, fraction: number, label: string): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  const cx = w / 2;
  const cy = h / 2;
  const radius = Math.min(w, h) / 2 - 8;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#445";
  ctx.lineWidth = 1;
  ctx.beginPath();
  ctx.arc(cx, cy, radius, 0, 2 * Math.PI);
  ctx.stroke();
  const len = radius * fraction;
  const tipX = cx + len * Math.cos(angle);
  const tipY = cy - len * Math.sin(angle); // canvas y grows downward
  ctx.strokeStyle = "#4fc3f7";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(cx, cy);
  ctx.lineTo(tipX, tipY);
  ctx.stroke();
  ctx.fillStyle = "#4fc3f7";
  ctx.beginPath();
  ctx.arc(tipX, tipY, 4, 0, 2 * Math.PI);
  ctx.fill();
  ctx.fillStyle = "#889";
  ctx.font = "11px sans-serif";
  ctx.fillText(label, 6, 14);
}

export function paintBars(ctx: Ctx, bars: CurrentBar[]): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  if (bars.length === 0) return;
  const slot = w / bars.length;
  const mid = h / 2;
  ctx.strokeStyle = "#445";
  ctx.beginPath();
  ctx.moveTo(0, mid);
  ctx.lineTo(w, mid);
  ctx.stroke();
  bars.forEach((bar, k) => {
    const x = k * slot + slot * 0.2;
    const width = slot * 0.6;
    const height = -bar.fraction * (h / 2 - 6);
    ctx.fillStyle = bar.saturated ? "#ef5350" : "#66bb6a";
    ctx.fillRect(x, mid, width, height);
    if (bar.saturated) {
      ctx.strokeStyle = "#ef5350";
      ctx.lineWidth = 2;
      ctx.strokeRect(x - 2, 4, width + 4, h - 8);
    }
  });
}

export function paintTrace(ctx: Ctx, points: TracePoint[], spanUm = 400): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#334";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  if (points.length === 0) return;
  const last = points[points.length - 1];
  const scale = Math.min(w, h) / spanUm;
  const toCanvas = (p: TracePoint): [number, number] => [
    w / 2 + (p.xUm - last.xUm) * scale,
    h / 2 - (p.yUm - last.yUm) * scale,
  ];
  for (let i = 1; i < points.length; i++) {
    const [x0, y0] = toCanvas(points[i - 1]);
    const [x1, y1] = toCanvas(points[i]);
    ctx.strokeStyle = `rgba(255, 202, 40, ${points[i].alpha.toFixed(3)})`;
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(x0, y0);
    ctx.lineTo(x1, y1);
    ctx.stroke();
  }
  const [cx, cy] = toCanvas(last);
  ctx.fillStyle = "#ffca28";
  ctx.beginPath();
  ctx.arc(cx, cy, 5, 0, 2 * Math.PI);
  ctx.fill();
}

export function latestRecord(state: ConsoleState): TelemetryRecord | null {
  return state.telemetry.length > 0 ? state.telemetry[state.telemetry.length - 1] : null;
}
