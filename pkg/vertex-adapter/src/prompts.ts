/**
 * Prompt templates, versioned so a request's prompt_version pins exact bytes.
 *
 * json mode demands a strict four-key JSON object the harness can parse
 * without repair; letter mode demands a bare option letter so the first
 * generated token carries the decision distribution.
 */

import { OPTION_LABELS, type AdapterRequest, type OptionLabel } from "./protocol.js";

export const SUPPORTED_PROMPT_VERSIONS = ["v1"] as const;

export class PromptError extends Error {}

function optionsBlock(options: Record<OptionLabel, string>): string {
  return OPTION_LABELS.map((label) => `${label}) ${options[label]}`).join("\n");
}

export function renderJsonPrompt(question: string, options: Record<OptionLabel, string>): string {
  return [
    "You are answering a multiple-choice video question using ONLY the provided frames.",
    "",
    "Rules:",
    "- Use only visual evidence from the frames. Do not assume details not visible.",
    "- Do not explain your reasoning. Do not write prose.",
    "- If the frames do not contain enough evidence to choose confidently, abstain.",
    "- If you do not abstain, you must select exactly one option A-E.",
    "- Your confidence must be a number in [0,1] reflecting probability of correctness.",
    "",
    "Output Format: JSON only with this exact schema (no extra keys):",
    "",
    "{",
    '  "choice": "A" | "B" | "C" | "D" | "E" | null,',
    '  "confidence": <number>,',
    '  "abstain": <boolean>,',
    '  "evidence_span": [start_idx, end_idx] | null',
    "}",
    "",
    `Question: ${question}`,
    "",
    "Options:",
    optionsBlock(options),
  ].join("\n");
}

export function renderLetterPrompt(question: string, options: Record<OptionLabel, string>): string {
  return [
    "You are answering a multiple choice question about a video. The video frames are provided in chronological order.",
    "",
    "Based on the video frames, answer the following question by selecting exactly ONE option (A, B, C, D, or E).",
    "",
    `Question: ${question}`,
    "",
    "Options:",
    optionsBlock(options),
    "",
    "Respond with ONLY a single letter (A, B, C, D, or E) and nothing else.",
  ].join("\n");
}

export function renderPrompt(request: AdapterRequest): string {
  if (!SUPPORTED_PROMPT_VERSIONS.includes(request.prompt_version as "v1")) {
    throw new PromptError(`unknown prompt_version ${request.prompt_version}`);
  }
  if (request.mode === "json") return renderJsonPrompt(request.question, request.options);
  if (request.mode === "letter") return renderLetterPrompt(request.question, request.options);
  throw new PromptError(`no prompt for mode ${request.mode}`);
}
