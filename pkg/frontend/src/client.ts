/**
 * Session state machine of the browser client.
 *
 * Phases: idle -> solo-recording -> idle -> playing -> ended | faulted.
 * The client never simulates follower dynamics: every follower position it
 * exposes arrived in a server `vp` message. Pointer input is sampled at
 * the display rate via displayTick(), which records during solo capture
 * and streams `hp` lines during play.
 */

import {
  encodeClientMsg,
  parseServerLine,
  type FaultMsg,
  type MetricsMsg,
  type ServerMsg,
  type VpMsg,
  type WelcomeMsg,
} from "./protocol.js";
import type { Transport } from "./transport.js";

export type Phase = "idle" | "solo-recording" | "playing" | "ended" | "faulted";

export interface TraceSample {
  t: number;
  x: number;
  y: number;
}

export interface ClientEvents {
  onVp?: (msg: VpMsg) => void;
  onMetrics?: (msg: MetricsMsg) => void;
  onFault?: (msg: FaultMsg) => void;
  onPhase?: (phase: Phase) => void;
}

export class GameClient {
  phase: Phase = "idle";
  sessionId: string | null = null;
  dtTick = 1 / 60;
  hpTrace: TraceSample[] = [];
  vpTrace: TraceSample[] = [];
  soloSamples: TraceSample[] = [];
  soloUploaded = false;
  soloRetryNeeded = false;
  lastMetrics: MetricsMsg | null = null;
  lastFault: FaultMsg | null = null;
  parseErrors = 0;
  private pointer: { x: number; y: number } | null = null;
  private welcomeWaiter: ((msg: WelcomeMsg) => void) | null = null;

  constructor(
    private transport: Transport,
    private events: ClientEvents = {},
  ) {
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => this.handleDisconnect());
  }

  /** Tolerant inbound handling: malformed lines are counted, never thrown. */
  handleLine(line: string): void {
    const res = parseServerLine(line);
    if (!res.ok) {
      this.parseErrors += 1;
      return;
    }
    this.dispatch(res.msg);
  }

  private dispatch(msg: ServerMsg): void {
    switch (msg.type) {
      case "welcome":
        this.sessionId = msg.session_id;
        this.dtTick = msg.dt_tick;
        if (this.welcomeWaiter) {
          this.welcomeWaiter(msg);
          this.welcomeWaiter = null;
        }
        break;
      case "vp":
        this.vpTrace.push({ t: msg.t, x: msg.x, y: msg.y });
        this.events.onVp?.(msg);
        break;
      case "metrics":
        this.lastMetrics = msg;
        this.events.onMetrics?.(msg);
        break;
      case "fault":
        this.lastFault = msg;
        this.setPhase("faulted");
        this.events.onFault?.(msg);
        break;
    }
  }

  private setPhase(phase: Phase): void {
    if (this.phase === phase) return;
    this.phase = phase;
    this.events.onPhase?.(phase);
  }

  connect(config: Record<string, unknown>, timeoutMs = 5000): Promise<WelcomeMsg> {
    // a new session: clear the previous one's traces
    this.hpTrace = [];
    this.vpTrace = [];
    this.lastMetrics = null;
    this.lastFault = null;
    this.send({ type: "hello", config });
    return new Promise((resolve, reject) => {
      const timer = setTimeout(
        () => reject(new Error("timed out waiting for welcome")),
        timeoutMs,
      );
      this.welcomeWaiter = (msg) => {
        clearTimeout(timer);
        resolve(msg);
      };
    });
  }

  pointerMoved(x: number, y: number): void {
    this.pointer = { x, y };
  }

  startSoloRecording(): void {
    if (this.phase !== "idle") {
      throw new Error(`cannot record solo while ${this.phase}`);
    }
    this.soloSamples = [];
    this.soloUploaded = false;
    this.soloRetryNeeded = false;
    this.setPhase("solo-recording");
  }

  stopSoloRecording(): void {
    if (this.phase !== "solo-recording") {
      throw new Error("not recording");
    }
    this.setPhase("idle");
    this.uploadSolo();
  }

  /** Re-send a locally retained recording after a disconnect. */
  uploadSolo(): void {
    if (this.soloSamples.length < 2) return;
    try {
      this.send({
        type: "solo_upload",
        samples: this.soloSamples.map((s) => [s.t, s.x, s.y]),
      });
      this.soloUploaded = true;
      this.soloRetryNeeded = false;
    } catch {
      this.soloRetryNeeded = true;
    }
  }

  startPlaying(): void {
    if (this.phase !== "idle") {
      throw new Error(`cannot play while ${this.phase}`);
    }
    this.hpTrace = [];
    this.vpTrace = [];
    this.setPhase("playing");
  }

  /**
   * Display-rate hook (requestAnimationFrame in the browser, driven
   * manually in tests). Samples the latest pointer position: records it
   * during solo capture, streams it as an `hp` line during play.
   */
  displayTick(t: number): void {
    if (this.pointer === null) return;
    const sample = { t, x: this.pointer.x, y: this.pointer.y };
    if (this.phase === "solo-recording") {
      this.soloSamples.push(sample);
    } else if (this.phase === "playing") {
      this.hpTrace.push(sample);
      this.send({ type: "hp", t, x: sample.x, y: sample.y });
    }
  }

  /** One commit, one message — sliders call this on release, not on drag. */
  commitGains(kp: number, kv: number, ks: number): void {
    this.send({ type: "set_gains", kp, kv, ks });
  }

  endSession(): void {
    if (this.phase === "ended") return;
    try {
      this.send({ type: "bye" });
    } catch {
      // transport already gone; the phase change below still applies
    }
    this.setPhase("ended");
  }

  private handleDisconnect(): void {
    if (this.phase === "solo-recording") {
      // keep the samples for a retry once reconnected
      this.soloRetryNeeded = true;
      this.setPhase("idle");
    } else if (this.phase === "playing") {
      this.setPhase("ended"); // partial traces preserved
    }
  }

  private send(msg: Parameters<typeof encodeClientMsg>[0]): void {
    this.transport.send(encodeClientMsg(msg));
  }
}
