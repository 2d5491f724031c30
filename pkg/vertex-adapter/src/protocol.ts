/**
 * Wire types for the line-delimited adapter protocol.
 *
 * One JSON object per line on stdin, one response object per line on stdout,
 * ids echoed verbatim. Generation parameters always come from the request;
 * this process never overrides them from its own configuration.
 */

export const OPTION_LABELS = ["A", "B", "C", "D", "E"] as const;
export type OptionLabel = (typeof OPTION_LABELS)[number];

export interface FrameRef {
  path: string;
  timestamp: number;
}

export interface GenerationSpec {
  temperature: number;
  max_tokens: number;
  logprob_top_k?: number;
}

export interface AdapterRequest {
  id: string;
  mode: string; // "json" | "letter"; unknown values get an ok=false response
  prompt_version: string;
  question: string;
  options: Record<OptionLabel, string>;
  frames: FrameRef[];
  generation: GenerationSpec;
}

export interface TokenCandidate {
  token: string;
  logprob: number;
}

export interface AdapterResponse {
  id: string;
  ok: boolean;
  raw_text: string;
  candidates?: TokenCandidate[];
  latency_ms: number;
  model_id: string;
  error?: string;
}

export class ProtocolError extends Error {}

function isRecord(value: unknown): value is Record<string, unknown> {
  return typeof value === "object" && value !== null && !Array.isArray(value);
}

/** Validate one request line; throws ProtocolError on any shape violation. */
export function parseRequest(doc: unknown): AdapterRequest {
  if (!isRecord(doc)) throw new ProtocolError("request is not an object");
  const { id, mode, prompt_version, question, options, frames, generation } = doc;
  if (typeof id !== "string" || id.length === 0) throw new ProtocolError("missing id");
  if (typeof mode !== "string") throw new ProtocolError("missing mode");
  if (typeof prompt_version !== "string") throw new ProtocolError("missing prompt_version");
  if (typeof question !== "string") throw new ProtocolError("missing question");
  if (!isRecord(options)) throw new ProtocolError("missing options");
  for (const label of OPTION_LABELS) {
    if (typeof options[label] !== "string") {
      throw new ProtocolError(`options missing label ${label}`);
    }
  }
  if (!Array.isArray(frames)) throw new ProtocolError("frames must be an array");
  for (const frame of frames) {
    if (!isRecord(frame) || typeof frame.path !== "string" || typeof frame.timestamp !== "number") {
      throw new ProtocolError("frames entries need {path, timestamp}");
    }
  }
  if (!isRecord(generation)) throw new ProtocolError("missing generation");
  if (typeof generation.temperature !== "number" || typeof generation.max_tokens !== "number") {
    throw new ProtocolError("generation needs numeric temperature and max_tokens");
  }
  const topK = generation.logprob_top_k;
  if (topK !== undefined && typeof topK !== "number") {
    throw new ProtocolError("logprob_top_k must be a number when present");
  }
  return {
    id,
    mode,
    prompt_version,
    question,
    options: {
      A: options.A as string,
      B: options.B as string,
      C: options.C as string,
      D: options.D as string,
      E: options.E as string,
    },
    frames: frames.map((f) => ({ path: (f as FrameRef).path, timestamp: (f as FrameRef).timestamp })),
    generation: {
      temperature: generation.temperature,
      max_tokens: generation.max_tokens,
      ...(topK !== undefined ? { logprob_top_k: topK } : {}),
    },
  };
}

export function errorResponse(id: string, modelId: string, error: string): AdapterResponse {
  return { id, ok: false, raw_text: "", latency_ms: 0, model_id: modelId, error };
}
