#!/usr/bin/env node
/**
 * Entry point: wire a Vertex AI client to the stdio protocol loop.
 *
 * Credentials follow the provider's standard environment configuration
 * (Application Default Credentials for Vertex, or GOOGLE_API_KEY for the
 * Gemini API endpoint). Generation parameters come from each request.
 */

import { parseArgs } from "node:util";

import { DEFAULT_MODEL_ID, DryRunClient, VertexClient } from "./client.js";
import { serve } from "./serve.js";

function usage(): string {
  return [
    "usage: vertex-adapter [--model ID] [--project P] [--location L]",
    "                      [--api-key KEY] [--timeout-ms N] [--retries N] [--dry-run]",
    "",
    `  --model       model id (default ${DEFAULT_MODEL_ID})`,
    "  --project     GCP project (default $GOOGLE_CLOUD_PROJECT)",
    "  --location    Vertex region (default $GOOGLE_CLOUD_LOCATION or us-central1)",
    "  --api-key     use the Gemini API with a key instead of Vertex ADC",
    "  --timeout-ms  per-request timeout (default 120000)",
    "  --retries     transport retry attempts (default 3)",
    "  --dry-run     no credentials, no network: canned schema-valid outputs",
  ].join("\n");
}

async function main(): Promise<number> {
  const { values } = parseArgs({
    options: {
      model: { type: "string", default: DEFAULT_MODEL_ID },
      project: { type: "string" },
      location: { type: "string" },
      "api-key": { type: "string" },
      "timeout-ms": { type: "string", default: "120000" },
      retries: { type: "string", default: "3" },
      "dry-run": { type: "boolean", default: false },
      help: { type: "boolean", default: false },
    },
  });
  if (values.help) {
    process.stdout.write(usage() + "\n");
    return 0;
  }
  const client = values["dry-run"]
    ? new DryRunClient()
    : new VertexClient({
        model: values.model,
        project: values.project,
        location: values.location,
        apiKey: values["api-key"] ?? process.env.GOOGLE_API_KEY,
        timeoutMs: Number(values["timeout-ms"]),
      });
  await serve(process.stdin, process.stdout, {
    client,
    retries: Number(values.retries),
  });
  return 0;
}

main().then(
  (code) => process.exit(code),
  (err) => {
    process.stderr.write(`fatal: ${String(err)}\n`);
    process.exit(1);
  }
);
