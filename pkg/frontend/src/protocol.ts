/**
 * Wire grammar of the session server: line-delimited JSON, one object per
 * line, each carrying a `type` field. Numbers are decimal floating point;
 * the server sends `null` for not-yet-defined metric values.
 *
 * Parsing is total: malformed input yields an error result, never a throw,
 * so a fuzzed or corrupted stream cannot crash the client.
 */

export interface HelloMsg {
  type: "hello";
  config: Record<string, unknown>;
}

export interface HpMsg {
  type: "hp";
  t: number;
  x: number;
  y: number;
}

export interface SoloUploadMsg {
  type: "solo_upload";
  samples: [number, number, number][];
}

export interface SetGainsMsg {
  type: "set_gains";
  kp: number;
  kv: number;
  ks: number;
}

export interface ByeMsg {
  type: "bye";
}

export type ClientMsg = HelloMsg | HpMsg | SoloUploadMsg | SetGainsMsg | ByeMsg;

export interface WelcomeMsg {
  type: "welcome";
  session_id: string;
  dt_tick: number;
}

export interface VpMsg {
  type: "vp";
  t: number;
  x: number;
  y: number;
}

export interface MetricsMsg {
  type: "metrics";
  t: number;
  rmse: number | null;
  cv: number | null;
  svm: number | null;
  eps: number | null;
  k: number;
}

export interface FaultMsg {
  type: "fault";
  code: string;
  message: string;
  t: number;
}

export type ServerMsg = WelcomeMsg | VpMsg | MetricsMsg | FaultMsg;

export type ParseResult<T> =
  | { ok: true; msg: T }
  | { ok: false; error: string };

function isFiniteNumber(v: unknown): v is number {
  return typeof v === "number" && Number.isFinite(v);
}

function isNullableNumber(v: unknown): v is number | null {
  return v === null || isFiniteNumber(v);
}

function fail<T>(error: string): ParseResult<T> {
  return { ok: false, error };
}

export function parseServerLine(line: string): ParseResult<ServerMsg> {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (e) {
    return fail(`not valid JSON: ${String(e)}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    return fail("message must be an object");
  }
  const msg = raw as Record<string, unknown>;
  switch (msg.type) {
    case "welcome":
      if (typeof msg.session_id !== "string") return fail("welcome.session_id");
      if (!isFiniteNumber(msg.dt_tick) || msg.dt_tick <= 0) {
        return fail("welcome.dt_tick");
      }
      return {
        ok: true,
        msg: { type: "welcome", session_id: msg.session_id, dt_tick: msg.dt_tick },
      };
    case "vp":
      if (!isFiniteNumber(msg.t) || !isFiniteNumber(msg.x) || !isFiniteNumber(msg.y)) {
        return fail("vp fields must be finite numbers");
      }
      return { ok: true, msg: { type: "vp", t: msg.t, x: msg.x, y: msg.y } };
    case "metrics": {
      if (!isFiniteNumber(msg.t)) return fail("metrics.t");
      for (const key of ["rmse", "cv", "svm", "eps"] as const) {
        if (!isNullableNumber(msg[key])) return fail(`metrics.${key}`);
      }
      if (!isFiniteNumber(msg.k)) return fail("metrics.k");
      return {
        ok: true,
        msg: {
          type: "metrics",
          t: msg.t,
          rmse: msg.rmse as number | null,
          cv: msg.cv as number | null,
          svm: msg.svm as number | null,
          eps: msg.eps as number | null,
          k: msg.k,
        },
      };
    }
    case "fault":
      if (typeof msg.code !== "string" || typeof msg.message !== "string") {
        return fail("fault.code/message");
      }
      if (!isFiniteNumber(msg.t)) return fail("fault.t");
      return {
        ok: true,
        msg: { type: "fault", code: msg.code, message: msg.message, t: msg.t },
      };
    default:
      return fail(`unknown server message type ${String(msg.type)}`);
  }
}

/** Validation used both before sending and by the conformance tests. */
export function validateClientMsg(msg: ClientMsg): string | null {
  switch (msg.type) {
    case "hello":
      if (typeof msg.config !== "object" || msg.config === null) {
        return "hello.config must be an object";
      }
      return null;
    case "hp":
      for (const key of ["t", "x", "y"] as const) {
        if (!isFiniteNumber(msg[key])) return `hp.${key} must be finite`;
      }
      return null;
    case "solo_upload":
      if (!Array.isArray(msg.samples) || msg.samples.length < 2) {
        return "solo_upload.samples needs >= 2 rows";
      }
      for (const row of msg.samples) {
        if (!Array.isArray(row) || row.length !== 3 || !row.every(isFiniteNumber)) {
          return "solo_upload rows must be [t, x, y]";
        }
      }
      return null;
    case "set_gains":
      for (const key of ["kp", "kv", "ks"] as const) {
        if (!isFiniteNumber(msg[key])) return `set_gains.${key} must be finite`;
      }
      return null;
    case "bye":
      return null;
    default:
      return "unknown client message type";
  }
}

export function encodeClientMsg(msg: ClientMsg): string {
  const error = validateClientMsg(msg);
  if (error !== null) {
    throw new Error(`refusing to send malformed message: ${error}`);
  }
  return JSON.stringify(msg);
}
