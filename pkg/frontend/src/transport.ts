/**
 * Transports carry whole wire lines. The browser uses WebSocket (one JSON
 * object per text frame); tests in Node reach the same server over raw TCP
 * with newline framing (see tcp.ts).
 */

export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      if (this.lineCb && typeof ev.data === "string") this.lineCb(ev.data);
    };
    this.ws.onclose = () => {
      if (this.closeCb) this.closeCb();
    };
  }

  ready(): Promise<void> {
    if (this.ws.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve, reject) => {
      this.ws.addEventListener("open", () => resolve(), { once: true });
      this.ws.addEventListener("error", () => reject(new Error("ws error")), {
        once: true,
      });
    });
  }

  send(line: string): void {
    this.ws.send(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.ws.close();
  }
}
