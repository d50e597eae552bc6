/** Canvas rendering: both traces, current markers, and the metrics panel. */

import type { GameClient, TraceSample } from "./client.js";
import { toScreen, type CanvasRect } from "./normalize.js";

const TRAIL = 240; // samples of trailing path to draw

function drawTrace(
  ctx: CanvasRenderingContext2D,
  rect: CanvasRect,
  trace: TraceSample[],
  color: string,
): void {
  const start = Math.max(0, trace.length - TRAIL);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  for (let i = start; i < trace.length; i++) {
    const s = trace[i]!;
    const p = toScreen(rect, { x: s.x, y: s.y });
    if (i === start) ctx.moveTo(p.px, p.py);
    else ctx.lineTo(p.px, p.py);
  }
  ctx.stroke();
  const last = trace[trace.length - 1];
  if (last) {
    const p = toScreen(rect, { x: last.x, y: last.y });
    ctx.fillStyle = color;
    ctx.beginPath();
    ctx.arc(p.px, p.py, 6, 0, 2 * Math.PI);
    ctx.fill();
  }
}

function fmt(v: number | null, digits = 3): string {
  return v === null ? "-" : v.toFixed(digits);
}

export function drawFrame(
  canvas: HTMLCanvasElement,
  client: GameClient,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const rect: CanvasRect = { width: canvas.width, height: canvas.height };
  ctx.clearRect(0, 0, rect.width, rect.height);

  // workspace square
  const s = Math.min(rect.width, rect.height);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect((rect.width - s) / 2, (rect.height - s) / 2, s, s);

  drawTrace(ctx, rect, client.hpTrace, "#2166ac");
  drawTrace(ctx, rect, client.vpTrace, "#b2182b");
  if (client.phase === "solo-recording") {
    drawTrace(ctx, rect, client.soloSamples, "#4dac26");
  }

  if (client.phase === "faulted" && client.lastFault) {
    ctx.fillStyle = "rgba(0,0,0,0.6)";
    ctx.fillRect(0, 0, rect.width, rect.height);
    ctx.fillStyle = "#fff";
    ctx.font = "16px monospace";
    ctx.fillText(`fault: ${client.lastFault.code}`, 20, rect.height / 2 - 12);
    ctx.fillText(client.lastFault.message.slice(0, 80), 20, rect.height / 2 + 12);
  }
}

export function metricsText(client: GameClient): string {
  const m = client.lastMetrics;
  if (!m) return "waiting for metrics...";
  return (
    `t=${m.t.toFixed(2)}  rmse=${fmt(m.rmse)}  cv=${fmt(m.cv)}  ` +
    `svm=${fmt(m.svm)}  eps=${fmt(m.eps)}  k=${m.k}`
  );
}
