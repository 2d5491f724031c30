import assert from "node:assert/strict";
import { once } from "node:events";
import { spawn } from "node:child_process";
import { fileURLToPath } from "node:url";
import { join, dirname } from "node:path";
import { createInterface } from "node:readline";
import { test } from "node:test";

const MAIN = join(dirname(fileURLToPath(import.meta.url)), "..", "src", "main.js");

function request(id: string, mode: string) {
  return {
    id,
    mode,
    prompt_version: "v1",
    question: "what happens?",
    options: { A: "a", B: "b", C: "c", D: "d", E: "e" },
    frames: [],
    generation: { temperature: 0, max_tokens: 256, ...(mode === "letter" ? { logprob_top_k: 20 } : {}) },
  };
}

test("built binary serves the protocol end to end in dry-run mode", async () => {
  const proc = spawn(process.execPath, [MAIN, "--dry-run"], {
    stdio: ["pipe", "pipe", "inherit"],
  });
  const lines = createInterface({ input: proc.stdout });
  const replies: Array<Record<string, unknown>> = [];
  lines.on("line", (line) => replies.push(JSON.parse(line)));

  proc.stdin.write(JSON.stringify(request("q1:0", "json")) + "\n");
  proc.stdin.write(JSON.stringify(request("q2:0", "letter")) + "\n");
  proc.stdin.end();
  await once(proc, "exit");

  assert.equal(replies.length, 2);
  assert.equal(replies[0].id, "q1:0");
  assert.equal(replies[0].ok, true);
  const payload = JSON.parse(replies[0].raw_text as string);
  assert.deepEqual(Object.keys(payload).sort(), ["abstain", "choice", "confidence", "evidence_span"]);
  assert.equal(replies[1].id, "q2:0");
  const candidates = replies[1].candidates as Array<{ token: string }>;
  assert.deepEqual(new Set(candidates.map((c) => c.token)), new Set(["A", "B", "C", "D", "E"]));
});
