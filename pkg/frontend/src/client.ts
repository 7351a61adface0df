// Newline-delimited JSON client over the service's TCP socket (Node side).

import * as net from "node:net";
import { Command, ServerMessage, envelope } from "./protocol.js";

export interface ServiceClientEvents {
  onMessage?: (msg: ServerMessage) => void;
  onClose?: () => void;
  onError?: (err: Error) => void;
}

export class ServiceClient {
  private socket: net.Socket | null = null;
  private buffer = "";

  constructor(private events: ServiceClientEvents = {}) {}

  connect(host: string, port: number): Promise<void> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => resolve());
      socket.setEncoding("utf-8");
      socket.on("data", (chunk: string) => this.feed(chunk));
      socket.on("error", (err) => {
        this.events.onError?.(err);
        reject(err);
      });
      socket.on("close", () => this.events.onClose?.());
      this.socket = socket;
    });
  }

  private feed(chunk: string): void {
    this.buffer += chunk;
    let index = this.buffer.indexOf("\n");
    while (index >= 0) {
      const line = this.buffer.slice(0, index).trim();
      this.buffer = this.buffer.slice(index + 1);
      if (line.length > 0) {
        this.events.onMessage?.(JSON.parse(line) as ServerMessage);
      }
      index = this.buffer.indexOf("\n");
    }
  }

  send(command: Command): number {
    if (!this.socket) {
      throw new Error("not connected");
    }
    const env = envelope(command);
    this.socket.write(JSON.stringify(env) + "\n");
    return env.request_id;
  }

  close(): void {
    this.socket?.end();
    this.socket = null;
  }
}

export function waitFor<T extends ServerMessage>(
  client: ServiceClient,
  events: { queue: ServerMessage[] },
  predicate: (msg: ServerMessage) => msg is T,
  timeoutMs = 30000
): Promise<T> {
  return new Promise((resolve, reject) => {
    const started = Date.now();
    const poll = () => {
      while (events.queue.length > 0) {
        const msg = events.queue.shift()!;
        if (predicate(msg)) {
          resolve(msg);
          return;
        }
      }
      if (Date.now() - started > timeoutMs) {
        reject(new Error("timed out waiting for message"));
        return;
      }
      setTimeout(poll, 10);
    };
    poll();
  });
}
