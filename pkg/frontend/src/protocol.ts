/**
 * Wire grammar shared with the control service.
 *
 * Lines are `VERB KEY=value ...`; angles in degrees, magnitudes in
 * millitesla, frequencies in hertz.  The tables below mirror the
 * service's grammar and back both the outgoing-line validator (every
 * line the console sends must pass) and the test-vector checks.
 */

export type KeyKind = "float" | "int" | "word";

export interface KeySpec {
  kind: KeyKind;
  lo?: number;
  hi?: number;
  choices?: readonly string[];
}

const ANGLE: KeySpec = { kind: "float", lo: -360, hi: 360 };
const FRACTION: KeySpec = { kind: "float", lo: 0, hi: 1 };
const STICK: KeySpec = { kind: "float", lo: -1, hi: 1 };
const FIELD_MT: KeySpec = { kind: "float", lo: 0, hi: 100 };
const FREQ_HZ: KeySpec = { kind: "float", lo: 1e-6, hi: 100 };

export const VERB_KEYS: Record<string, Record<string, KeySpec>> = {
  ORIENT: { THETA: ANGLE, PHI: ANGLE, S: FRACTION },
  ROLL: { A: FIELD_MT, ALPHA: ANGLE, GAMMA: ANGLE, F: FREQ_HZ },
  SPIN: { A: FIELD_MT, ALPHA: ANGLE, GAMMA: ANGLE, F: FREQ_HZ },
  VIBRATE: { AXIS: { kind: "word", choices: ["x", "y", "z"] }, F: FREQ_HZ, S: FRACTION },
  TWEEZER: { THETA: ANGLE, PHI: ANGLE, S: FRACTION },
  STOP: {},
  SELECT_ASSEMBLY: { NAME: { kind: "word" } },
  AXIS: { LX: STICK, LY: STICK, RX: STICK, RY: STICK },
  SUBSCRIBE: { DIV: { kind: "int", lo: 1, hi: 1000 } },
  PING: {},
};

const NAME_RE = /^[a-z0-9_-]{1,64}$/;
export const MAX_LINE_BYTES = 1024;

export type Validation =
  | { ok: true; verb: string; args: Record<string, number | string> }
  | { ok: false; code: string; detail: string };

/** Validate one command line against the grammar (mirror of the service parser). */
export function validateLine(line: string): Validation {
  if (new TextEncoder().encode(line).length > MAX_LINE_BYTES) {
    return { ok: false, code: "bad-arg", detail: "line" };
  }
  const tokens = line.split(/\s+/).filter((t) => t.length > 0);
  if (tokens.length === 0) return { ok: false, code: "unknown-verb", detail: "" };
  const verb = tokens[0].toUpperCase();
  const keyset = VERB_KEYS[verb];
  if (keyset === undefined) return { ok: false, code: "unknown-verb", detail: tokens[0] };
  const args: Record<string, number | string> = {};
  for (const token of tokens.slice(1)) {
    const eq = token.indexOf("=");
    const key = (eq < 0 ? token : token.slice(0, eq)).toUpperCase();
    const spec = keyset[key];
    if (eq < 0 || spec === undefined || key in args) {
      return { ok: false, code: "bad-arg", detail: key || token };
    }
    const raw = token.slice(eq + 1);
    if (spec.kind === "word") {
      const word = raw.toLowerCase();
      if (spec.choices !== undefined) {
        if (!spec.choices.includes(word)) return { ok: false, code: "range", detail: key };
      } else if (!NAME_RE.test(word)) {
        return { ok: false, code: "bad-arg", detail: key };
      }
      args[key] = word;
      continue;
    }
    if (!/^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$/.test(raw)) {
      return { ok: false, code: "bad-arg", detail: key };
    }
    const value = Number(raw);
    if (!Number.isFinite(value)) return { ok: false, code: "bad-arg", detail: key };
    if (spec.kind === "int" && !Number.isInteger(value)) {
      return { ok: false, code: "bad-arg", detail: key };
    }
    const lo = spec.lo ?? -Infinity;
    const hi = spec.hi ?? Infinity;
    if (value < lo || value > hi) return { ok: false, code: "range", detail: key };
    args[key] = value;
  }
  return { ok: true, verb, args };
}

/** Format a command line; numbers use the shortest exact representation. */
export function buildLine(verb: string, args: Record<string, number | string> = {}): string {
  const parts = [verb];
  for (const key of Object.keys(args)) {
    parts.push(`${key}=${args[key]}`);
  }
  return parts.join(" ");
}

export interface Reply {
  kind: "ok" | "err";
  payload: string;
  code?: string;
}

export function parseReply(line: string): Reply | null {
  if (line.startsWith("OK")) return { kind: "ok", payload: line.slice(2).trim() };
  if (line.startsWith("ERR")) {
    const rest = line.slice(3).trim();
    const space = rest.indexOf(" ");
    return {
      kind: "err",
      code: space < 0 ? rest : rest.slice(0, space),
      payload: space < 0 ? "" : rest.slice(space + 1),
    };
  }
  return null;
}

export interface TelemetryRecord {
  t: number;
  mode: string;
  currentsA: number[];
  fieldMt: [number, number, number];
  positionUm?: [number, number, number];
  momentDir?: [number, number, number];
}

function vec3(raw: string): [number, number, number] | null {
  const parts = raw.split(",").map(Number);
  if (parts.length !== 3 || parts.some((v) => !Number.isFinite(v))) return null;
  return [parts[0], parts[1], parts[2]];
}

/** Parse one TLM line; returns null for anything malformed. */
export function parseTelemetry(line: string): TelemetryRecord | null {
  const tokens = line.split(/\s+/).filter((t) => t.length > 0);
  if (tokens[0] !== "TLM") return null;
  const fields = new Map<string, string>();
  for (const token of tokens.slice(1)) {
    const eq = token.indexOf("=");
    if (eq <= 0) return null;
    fields.set(token.slice(0, eq), token.slice(eq + 1));
  }
  const t = Number(fields.get("t"));
  const mode = fields.get("mode");
  const currents = fields.get("i")?.split(",").map(Number);
  const field = vec3(fields.get("b") ?? "");
  if (!Number.isFinite(t) || !mode || !currents || currents.some((v) => !Number.isFinite(v)) || !field) {
    return null;
  }
  const record: TelemetryRecord = { t, mode, currentsA: currents, fieldMt: field };
  const pos = fields.get("pos");
  if (pos !== undefined) {
    const parsed = vec3(pos);
    if (!parsed) return null;
    record.positionUm = parsed;
  }
  const mdir = fields.get("mdir");
  if (mdir !== undefined) {
    const parsed = vec3(mdir);
    if (!parsed) return null;
    record.momentDir = parsed;
  }
  return record;
}
