// Spawn the real session service for end-to-end tests. The UI package has
// no business importing the backend, so the contract is exactly what a
// deployment would use: a child process and a port.

import { type ChildProcess, spawn, spawnSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface ServerHandle {
  base: string;
  stop(): void;
}

async function probe(base: string): Promise<boolean> {
  try {
    const r = await fetch(`${base}/limits`);
    return r.ok;
  } catch {
    return false;
  }
}

export async function startServer(): Promise<ServerHandle> {
  let lastLog = "";
  for (let attempt = 0; attempt < 3; attempt++) {
    const port = 21000 + Math.floor(Math.random() * 20000);
    const base = `http://127.0.0.1:${port}`;
    const proc: ChildProcess = spawn("python3", ["-m", "qbc.cli", "serve", "--port", String(port)], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let log = "";
    proc.stdout?.on("data", (d) => (log += d));
    proc.stderr?.on("data", (d) => (log += d));

    const deadline = Date.now() + 30_000;
    while (Date.now() < deadline && proc.exitCode === null) {
      if (await probe(base)) {
        return {
          base,
          stop: () => {
            proc.kill("SIGTERM");
          },
        };
      }
      await new Promise((r) => setTimeout(r, 150));
    }
    proc.kill("SIGTERM");
    lastLog = log; // most likely the port was taken; roll a new one
  }
  throw new Error(`session service did not come up:\n${lastLog}`);
}

/** Replay an exported script through the CLI checker; returns its exit code. */
export function checkScript(script: string): number {
  const dir = mkdtempSync(join(tmpdir(), "qbc-ui-"));
  const path = join(dir, "export.qbc");
  writeFileSync(path, script);
  const out = spawnSync("python3", ["-m", "qbc.cli", "check", path], { encoding: "utf8" });
  if (out.error) throw out.error;
  return out.status ?? -1;
}
