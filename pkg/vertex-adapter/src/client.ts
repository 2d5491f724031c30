/**
 * Model transport: a narrow client interface plus the Vertex AI implementation.
 *
 * Transport-level retries (network hiccups, 5xx, timeouts) happen here with
 * exponential backoff. Malformed model TEXT is never retried here; validation
 * retries belong to the harness driving this process.
 */

import { GoogleGenAI } from "@google/genai";

import type { TokenCandidate } from "./protocol.js";
import type { InlinePart } from "./frames.js";

export const DEFAULT_MODEL_ID = "gemini-2.0-flash-001";

export interface GenerateSettings {
  temperature: number;
  maxOutputTokens: number;
  responseLogprobs?: boolean;
  logprobs?: number;
}

export interface ModelResult {
  text: string;
  firstPositionCandidates?: TokenCandidate[];
}

export type PromptPart = InlinePart | { text: string };

export interface ModelClient {
  readonly modelId: string;
  generate(parts: PromptPart[], settings: GenerateSettings): Promise<ModelResult>;
}

export class TransportError extends Error {}

interface MaybeStatusError {
  status?: number;
  code?: string | number;
}

/** Retry only what looks transient: network errors, 5xx, 429, timeouts. */
export function isTransient(err: unknown): boolean {
  if (err instanceof TransportError) return true;
  const status = (err as MaybeStatusError)?.status;
  if (typeof status === "number") {
    return status === 429 || status >= 500;
  }
  const code = (err as MaybeStatusError)?.code;
  if (typeof code === "string") {
    return ["ECONNRESET", "ETIMEDOUT", "ECONNREFUSED", "EPIPE", "ENOTFOUND", "EAI_AGAIN"].includes(code);
  }
  return false;
}

export interface RetryPolicy {
  attempts: number;
  baseDelayMs: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export async function withRetries<T>(fn: () => Promise<T>, policy: RetryPolicy): Promise<T> {
  const sleep = policy.sleep ?? defaultSleep;
  let lastError: unknown;
  for (let attempt = 0; attempt < Math.max(1, policy.attempts); attempt++) {
    try {
      return await fn();
    } catch (err) {
      lastError = err;
      if (!isTransient(err) || attempt === policy.attempts - 1) throw err;
      await sleep(policy.baseDelayMs * 2 ** attempt);
    }
  }
  throw lastError;
}

interface CandidateLike {
  content?: { parts?: Array<{ text?: string }> };
  logprobsResult?: {
    topCandidates?: Array<{ candidates?: Array<{ token?: string; logProbability?: number }> }>;
  };
}

interface ResponseLike {
  candidates?: CandidateLike[];
}

export function extractText(response: ResponseLike): string {
  const parts = response.candidates?.[0]?.content?.parts ?? [];
  return parts.map((p) => p.text ?? "").join("");
}

/** Top-k candidates at the FIRST generated token position, where the answer letter sits. */
export function extractFirstPositionCandidates(response: ResponseLike): TokenCandidate[] | undefined {
  const top = response.candidates?.[0]?.logprobsResult?.topCandidates;
  if (!top || top.length === 0) return undefined;
  const first = top[0]?.candidates ?? [];
  return first
    .filter((c) => typeof c.token === "string" && typeof c.logProbability === "number")
    .map((c) => ({ token: c.token as string, logprob: c.logProbability as number }));
}

/**
 * Credential-free stand-in returning schema-valid outputs, for wiring checks
 * (`--dry-run`): verifies the stdio plumbing end to end without quota.
 */
export class DryRunClient implements ModelClient {
  readonly modelId = "dry-run";

  async generate(parts: PromptPart[], settings: GenerateSettings): Promise<ModelResult> {
    const frameCount = parts.filter((p) => "inlineData" in p).length;
    if (settings.responseLogprobs) {
      const spread = [-0.11, -2.9, -3.4, -3.9, -4.2];
      return {
        text: "B",
        firstPositionCandidates: ["B", "A", "C", "D", "E"].map((token, i) => ({
          token,
          logprob: spread[i],
        })),
      };
    }
    const span = frameCount > 0 ? [0, frameCount - 1] : null;
    return {
      text: JSON.stringify({ choice: "B", confidence: 0.9, abstain: false, evidence_span: span }),
    };
  }
}

export interface VertexClientConfig {
  model?: string;
  project?: string;
  location?: string;
  apiKey?: string;
  timeoutMs?: number;
}

export class VertexClient implements ModelClient {
  readonly modelId: string;
  private readonly ai: GoogleGenAI;
  private readonly timeoutMs: number;

  constructor(config: VertexClientConfig = {}) {
    this.modelId = config.model ?? DEFAULT_MODEL_ID;
    this.timeoutMs = config.timeoutMs ?? 120_000;
    if (config.apiKey) {
      this.ai = new GoogleGenAI({ apiKey: config.apiKey });
    } else {
      this.ai = new GoogleGenAI({
        vertexai: true,
        project: config.project ?? process.env.GOOGLE_CLOUD_PROJECT,
        location: config.location ?? process.env.GOOGLE_CLOUD_LOCATION ?? "us-central1",
      });
    }
  }

  async generate(parts: PromptPart[], settings: GenerateSettings): Promise<ModelResult> {
    const call = this.ai.models.generateContent({
      model: this.modelId,
      contents: [{ role: "user", parts }],
      config: {
        temperature: settings.temperature,
        maxOutputTokens: settings.maxOutputTokens,
        ...(settings.responseLogprobs
          ? { responseLogprobs: true, logprobs: settings.logprobs }
          : {}),
      },
    });
    const timeout = new Promise<never>((_, reject) =>
      setTimeout(() => reject(new TransportError(`request timed out after ${this.timeoutMs}ms`)), this.timeoutMs).unref?.()
    );
    const response = await Promise.race([call, timeout]);
    return {
      text: extractText(response as ResponseLike),
      firstPositionCandidates: extractFirstPositionCandidates(response as ResponseLike),
    };
  }
}
