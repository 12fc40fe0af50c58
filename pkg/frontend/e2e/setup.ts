/** Spawns the fixture-loaded service for the e2e suite. */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import type { TestProject } from "vitest/node";

const PORT = 8799;

let child: ChildProcess | null = null;
let root = "";

export default async function setup(project: TestProject): Promise<() => void> {
  root = mkdtempSync(join(tmpdir(), "uclog-e2e-"));
  const serverPath = join(__dirname, "server.py");
  child = spawn("python3", [serverPath, "--root", root, "--port", String(PORT)],
                { stdio: ["ignore", "pipe", "pipe"] });
  let stderr = "";
  child.stderr?.on("data", (chunk) => { stderr += String(chunk); });

  const base = `http://127.0.0.1:${PORT}`;
  const deadline = Date.now() + 30000;
  let ready = false;
  while (Date.now() < deadline) {
    if (child.exitCode !== null) break;
    try {
      const resp = await fetch(`${base}/openapi.json`);
      if (resp.ok) {
        ready = true;
        break;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  if (!ready) {
    throw new Error(`e2e service failed to start: ${stderr}`);
  }

  project.provide("e2eBaseUrl", base);
  project.provide("e2eConfigPath", join(root, "uclog.ini"));

  return () => {
    child?.kill("SIGTERM");
    rmSync(root, { recursive: true, force: true });
  };
}

declare module "vitest" {
  export interface ProvidedContext {
    e2eBaseUrl: string;
    e2eConfigPath: string;
  }
}
