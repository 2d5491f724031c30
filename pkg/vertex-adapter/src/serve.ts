/**
 * The stdio loop: one request line in, exactly one response line out, in order.
 *
 * A single request is in flight at a time; the harness scales by spawning
 * more adapter processes. Every failure mode (unknown mode, unreadable frame,
 * transport exhaustion) becomes an ok=false response; this loop never throws
 * past a request.
 */

import { createInterface } from "node:readline";
import type { Readable, Writable } from "node:stream";

import { withRetries, type ModelClient, type PromptPart } from "./client.js";
import { readFrameParts, FrameReadError } from "./frames.js";
import { renderPrompt, PromptError } from "./prompts.js";
import {
  errorResponse,
  parseRequest,
  ProtocolError,
  type AdapterRequest,
  type AdapterResponse,
} from "./protocol.js";

export interface ServeOptions {
  client: ModelClient;
  retries?: number;
  baseDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
  log?: (message: string) => void;
}

const DEFAULT_RETRIES = 3;
const DEFAULT_BASE_DELAY_MS = 500;

async function handleRequest(request: AdapterRequest, opts: ServeOptions): Promise<AdapterResponse> {
  const { client } = opts;
  if (request.mode !== "json" && request.mode !== "letter") {
    return errorResponse(request.id, client.modelId, "bad_mode");
  }

  let prompt: string;
  try {
    prompt = renderPrompt(request);
  } catch (err) {
    if (err instanceof PromptError) return errorResponse(request.id, client.modelId, err.message);
    throw err;
  }

  let parts: PromptPart[];
  try {
    const frameParts = await readFrameParts(request.frames);
    parts = [...frameParts, { text: prompt }];
  } catch (err) {
    if (err instanceof FrameReadError) {
      return errorResponse(request.id, client.modelId, err.message);
    }
    throw err;
  }

  const settings = {
    temperature: request.generation.temperature,
    maxOutputTokens: request.generation.max_tokens,
    ...(request.mode === "letter"
      ? { responseLogprobs: true, logprobs: request.generation.logprob_top_k ?? 20 }
      : {}),
  };

  const started = Date.now();
  try {
    const result = await withRetries(() => client.generate(parts, settings), {
      attempts: opts.retries ?? DEFAULT_RETRIES,
      baseDelayMs: opts.baseDelayMs ?? DEFAULT_BASE_DELAY_MS,
      sleep: opts.sleep,
    });
    const response: AdapterResponse = {
      id: request.id,
      ok: true,
      raw_text: result.text,
      latency_ms: Date.now() - started,
      model_id: client.modelId,
    };
    if (request.mode === "letter" && result.firstPositionCandidates) {
      response.candidates = result.firstPositionCandidates;
    }
    return response;
  } catch (err) {
    const response = errorResponse(request.id, client.modelId, `transport: ${String(err)}`);
    response.latency_ms = Date.now() - started;
    return response;
  }
}

export async function serve(input: Readable, output: Writable, opts: ServeOptions): Promise<void> {
  const log = opts.log ?? ((msg: string) => process.stderr.write(msg + "\n"));
  const lines = createInterface({ input, crlfDelay: Infinity });
  for await (const line of lines) {
    if (!line.trim()) continue;
    let doc: unknown;
    try {
      doc = JSON.parse(line);
    } catch {
      log(`skipping non-JSON input line: ${line.slice(0, 80)}`);
      continue;
    }
    let response: AdapterResponse;
    try {
      response = await handleRequest(parseRequest(doc), opts);
    } catch (err) {
      const id = typeof (doc as { id?: unknown })?.id === "string" ? (doc as { id: string }).id : "";
      if (!id) {
        log(`dropping request with no usable id: ${String(err)}`);
        continue;
      }
      const reason = err instanceof ProtocolError ? `bad_request: ${err.message}` : String(err);
      response = errorResponse(id, opts.client.modelId, reason);
    }
    output.write(JSON.stringify(response) + "\n");
  }
}
