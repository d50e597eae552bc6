/**
 * End-to-end: a scripted 30 s (game time) pointer playback through the
 * client against a live Python session server, paced one tick per leader
 * sample. Verifies no faults, exact agreement between the received
 * follower samples and the server archive, and the one-message-per-commit
 * gain contract.
 */

import { spawn, type ChildProcess } from "node:child_process";
import * as fs from "node:fs";
import * as net from "node:net";
import * as os from "node:os";
import * as path from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GameClient } from "../src/client.js";
import { TcpTransport } from "../src/tcp.js";

const PORT = 7741;
const HOST = "127.0.0.1";

let server: ChildProcess;
let archiveDir: string;

function waitForPort(port: number, host: string, ms = 15000): Promise<void> {
  const deadline = Date.now() + ms;
  return new Promise((resolve, reject) => {
    const tryOnce = () => {
      const sock = net.createConnection({ port, host }, () => {
        sock.end();
        resolve();
      });
      sock.on("error", () => {
        sock.destroy();
        if (Date.now() > deadline) reject(new Error("server never came up"));
        else setTimeout(tryOnce, 200);
      });
    };
    tryOnce();
  });
}

beforeAll(async () => {
  archiveDir = fs.mkdtempSync(path.join(os.tmpdir(), "mirrorgame-e2e-"));
  server = spawn(
    "python3",
    [
      "-m",
      "mirrorgame.cli",
      "serve",
      "--host",
      HOST,
      "--port",
      String(PORT),
      "--pace",
      "hp",
      "--archive-dir",
      archiveDir,
    ],
    { cwd: path.resolve(__dirname, "../.."), stdio: "ignore" },
  );
  await waitForPort(PORT, HOST);
}, 30000);

afterAll(() => {
  server?.kill();
  fs.rmSync(archiveDir, { recursive: true, force: true });
});

function lemniscate(t: number): { x: number; y: number } {
  const f = 0.25;
  return {
    x: 0.15 + 0.5 * Math.sin(2 * Math.PI * f * t),
    y: -0.1 + 0.3 * Math.sin(4 * Math.PI * f * t),
  };
}

describe("scripted playback against a live server", () => {
  it(
    "completes 30 s without faults; received vp equals the archive exactly",
    async () => {
      const transport = await TcpTransport.connect(HOST, PORT);
      const sent: string[] = [];
      const rawSend = transport.send.bind(transport);
      transport.send = (line: string) => {
        sent.push(line);
        rawSend(line);
      };
      const client = new GameClient(transport);
      const welcome = await client.connect({
        controller: "ilc",
        gains: { kp: 0.31, kv: 0.01, ks: 0.02 },
        online: { eps_th: 0.05, max_inner_iters: 10 },
      });
      const sessionId = welcome.session_id;
      const dt = welcome.dt_tick;
      expect(dt).toBeCloseTo(1 / 60, 9);

      // solo recording: 5 s of scripted pointer at the tick rate
      client.startSoloRecording();
      for (let j = 0; j < 300; j++) {
        const t = j * dt;
        const p = lemniscate(t);
        client.pointerMoved(p.x, p.y);
        client.displayTick(t);
      }
      client.stopSoloRecording();
      expect(client.soloUploaded).toBe(true);

      // leader playback: 30 s of game time at 60 Hz; hp-paced server ticks
      // once per sample, answering vp + metrics
      client.startPlaying();
      const ticks = 1800;
      let received = 0;
      const done = new Promise<void>((resolve) => {
        const check = () => {
          if (client.vpTrace.length >= ticks) resolve();
          else setTimeout(check, 20);
        };
        check();
      });
      for (let j = 0; j < ticks; j++) {
        const t = j * dt;
        const p = lemniscate(t);
        client.pointerMoved(p.x, p.y);
        client.displayTick(t);
        if (j === 900) client.commitGains(0.35, 0.02, 0.01);
        received = client.vpTrace.length;
        if (j % 200 === 0) {
          // let the socket flush so the stream stays interleaved
          await new Promise((r) => setImmediate(r));
        }
      }
      await done;

      expect(client.phase).toBe("playing");
      expect(client.lastFault).toBeNull();
      expect(client.parseErrors).toBe(0);
      expect(client.vpTrace.length).toBe(ticks);
      expect(client.lastMetrics).not.toBeNull();
      expect(client.lastMetrics!.rmse).not.toBeNull();

      // exactly one set_gains for the single slider commit
      const gainLines = sent.filter((l) => JSON.parse(l).type === "set_gains");
      expect(gainLines.length).toBe(1);

      client.endSession();
      expect(client.phase).toBe("ended");
      await new Promise((r) => setTimeout(r, 500)); // archive write

      const vpCsv = fs.readFileSync(
        path.join(archiveDir, sessionId, "vp.csv"),
        "utf-8",
      );
      const rows = vpCsv.trim().split("\n").slice(1);
      expect(rows.length).toBe(ticks + 1); // initial state + one per tick
      // every client-received sample equals its archived row bit for bit
      for (let j = 0; j < ticks; j++) {
        const cols = rows[j + 1]!.split(",");
        const got = client.vpTrace[j]!;
        expect(Number(cols[1])).toBe(got.x);
        expect(Number(cols[2])).toBe(got.y);
        expect(Number(cols[0])).toBeCloseTo(got.t, 12);
      }

      // the solo recording landed in the archive with identical positions
      const soloCsv = fs.readFileSync(
        path.join(archiveDir, sessionId, "solo.csv"),
        "utf-8",
      );
      const soloRows = soloCsv.trim().split("\n").slice(1);
      expect(soloRows.length).toBe(300);
      for (let j = 0; j < soloRows.length; j++) {
        const cols = soloRows[j]!.split(",");
        expect(Number(cols[1])).toBe(client.soloSamples[j]!.x);
        expect(Number(cols[2])).toBe(client.soloSamples[j]!.y);
      }

      transport.close();
    },
    60000,
  );
});
