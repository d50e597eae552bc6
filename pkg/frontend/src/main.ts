/**
 * Browser bootstrap: wires pointer events, the display-rate loop, gain
 * sliders, and the phase buttons to the session client.
 *
 * Query parameters: `server` (ws URL, default ws://<host>:7713) and
 * `dt_tick` (seconds, default 1/60).
 */

import { GameClient } from "./client.js";
import { clampWorkspace, toWorkspace } from "./normalize.js";
import { drawFrame, metricsText } from "./render.js";
import { WebSocketTransport } from "./transport.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(location.search).get(name) ?? fallback;
}

async function boot(): Promise<void> {
  const canvas = document.getElementById("game") as HTMLCanvasElement;
  const status = document.getElementById("status")!;
  const metrics = document.getElementById("metrics")!;
  const soloBtn = document.getElementById("solo") as HTMLButtonElement;
  const playBtn = document.getElementById("play") as HTMLButtonElement;
  const byeBtn = document.getElementById("bye") as HTMLButtonElement;
  const sliders = ["kp", "kv", "ks"].map(
    (id) => document.getElementById(id) as HTMLInputElement,
  );

  const url = param(
    "server",
    `ws://${location.hostname || "127.0.0.1"}:7713`,
  );
  const dtTick = Number(param("dt_tick", String(1 / 60)));

  const transport = new WebSocketTransport(url);
  await transport.ready();
  const client = new GameClient(transport, {
    onPhase: (phase) => {
      status.textContent = `phase: ${phase}`;
    },
  });
  await client.connect({ dt_tick: dtTick, controller: "ilc" });
  status.textContent = `phase: idle (session ${client.sessionId})`;

  canvas.addEventListener("pointermove", (ev) => {
    const box = canvas.getBoundingClientRect();
    const w = clampWorkspace(
      toWorkspace(
        { width: box.width, height: box.height },
        { px: ev.clientX - box.left, py: ev.clientY - box.top },
      ),
    );
    client.pointerMoved(w.x, w.y);
  });

  soloBtn.addEventListener("click", () => {
    if (client.phase === "idle") {
      client.startSoloRecording();
      soloBtn.textContent = "stop solo";
    } else if (client.phase === "solo-recording") {
      client.stopSoloRecording();
      soloBtn.textContent = "record solo";
    }
  });
  playBtn.addEventListener("click", () => client.startPlaying());
  byeBtn.addEventListener("click", () => client.endSession());

  // one set_gains per slider commit (change fires on release, not drag)
  for (const slider of sliders) {
    slider.addEventListener("change", () => {
      const [kp, kv, ks] = sliders.map((s) => Number(s.value));
      client.commitGains(kp!, kv!, ks!);
    });
  }

  const t0 = performance.now();
  const loop = (): void => {
    client.displayTick((performance.now() - t0) / 1000);
    drawFrame(canvas, client);
    metrics.textContent = metricsText(client);
    requestAnimationFrame(loop);
  };
  requestAnimationFrame(loop);
}

boot().catch((e) => {
  document.getElementById("status")!.textContent = `connect failed: ${e}`;
});
