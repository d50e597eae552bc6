/** Node-only TCP transport with newline framing; used by the test harness. */

import * as net from "node:net";

import type { Transport } from "./transport.js";

export class TcpTransport implements Transport {
  private socket: net.Socket;
  private buffer = "";
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.setNoDelay(true);
    socket.on("data", (chunk) => {
      this.buffer += chunk.toString("utf-8");
      let idx: number;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line.trim() && this.lineCb) this.lineCb(line);
      }
    });
    socket.on("close", () => {
      if (this.closeCb) this.closeCb();
    });
  }

  static connect(host: string, port: number): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () =>
        resolve(new TcpTransport(socket)),
      );
      socket.on("error", reject);
    });
  }

  send(line: string): void {
    this.socket.write(line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.socket.end();
  }
}
