// Operator console bridge: serves the browser UI and relays it to the
// navigation service's public socket protocol. Browsers cannot open raw TCP
// sockets, so the bridge exposes the same traffic as server-sent events plus
// a command POST endpoint; it speaks nothing but the documented wire schema
// toward the service.

import * as fs from "node:fs";
import * as http from "node:http";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { ServiceClient } from "./client.js";
import { Command, ServerMessage } from "./protocol.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));

export interface BridgeOptions {
  serviceHost: string;
  servicePort: number;
  httpPort: number;
}

export async function startBridge(options: BridgeOptions): Promise<http.Server> {
  const sseClients = new Set<http.ServerResponse>();
  let latest: ServerMessage | null = null;

  const client = new ServiceClient({
    onMessage: (msg) => {
      if (msg.type === "snapshot") {
        latest = msg;
      }
      const line = `data: ${JSON.stringify(msg)}\n\n`;
      for (const res of sseClients) {
        res.write(line);
      }
    },
    onClose: () => {
      for (const res of sseClients) {
        res.end();
      }
      sseClients.clear();
    },
  });
  await client.connect(options.serviceHost, options.servicePort);

  const staticRoots = [path.join(HERE, "..", "public"), path.join(HERE, "..", "dist")];

  const server = http.createServer((req, res) => {
    const url = req.url ?? "/";
    if (req.method === "GET" && url === "/api/events") {
      res.writeHead(200, {
        "Content-Type": "text/event-stream",
        "Cache-Control": "no-cache",
        Connection: "keep-alive",
      });
      if (latest) {
        res.write(`data: ${JSON.stringify(latest)}\n\n`);
      }
      sseClients.add(res);
      req.on("close", () => sseClients.delete(res));
      return;
    }
    if (req.method === "GET" && url === "/api/snapshot") {
      res.writeHead(200, { "Content-Type": "application/json" });
      res.end(JSON.stringify(latest));
      return;
    }
    if (req.method === "POST" && url === "/api/command") {
      let body = "";
      req.on("data", (chunk) => (body += chunk));
      req.on("end", () => {
        try {
          const command = JSON.parse(body) as Command;
          const requestId = client.send(command);
          res.writeHead(200, { "Content-Type": "application/json" });
          res.end(JSON.stringify({ request_id: requestId }));
        } catch (err) {
          res.writeHead(400, { "Content-Type": "application/json" });
          res.end(JSON.stringify({ error: String(err) }));
        }
      });
      return;
    }
    // static files
    const rel = url === "/" ? "/index.html" : url;
    for (const root of staticRoots) {
      const file = path.join(root, rel);
      if (!file.startsWith(root)) {
        continue;
      }
      if (fs.existsSync(file) && fs.statSync(file).isFile()) {
        const type = file.endsWith(".html")
          ? "text/html"
          : file.endsWith(".js")
            ? "text/javascript"
            : file.endsWith(".css")
              ? "text/css"
              : "application/octet-stream";
        res.writeHead(200, { "Content-Type": type });
        res.end(fs.readFileSync(file));
        return;
      }
    }
    res.writeHead(404);
    res.end("not found");
  });

  await new Promise<void>((resolve) => server.listen(options.httpPort, resolve));
  return server;
}

const isMain = process.argv[1] && path.resolve(process.argv[1]) === fileURLToPath(import.meta.url);
if (isMain) {
  const servicePort = Number(process.env.ORION_SERVICE_PORT ?? "8700");
  const httpPort = Number(process.env.ORION_CONSOLE_PORT ?? "8780");
  startBridge({ serviceHost: "127.0.0.1", servicePort, httpPort })
    .then(() => console.log(`console on http://127.0.0.1:${httpPort} -> service :${servicePort}`))
    .catch((err) => {
      console.error("bridge failed:", err);
      process.exit(1);
    });
}
