/** Frame attachment loading: files become inline base64 parts in request order. */

import { readFile } from "node:fs/promises";
import { extname } from "node:path";

import type { FrameRef } from "./protocol.js";

export interface InlinePart {
  inlineData: { mimeType: string; data: string };
}

export class FrameReadError extends Error {
  constructor(public readonly path: string, cause: unknown) {
    super(`unreadable frame ${path}: ${String(cause)}`);
  }
}

const MIME_BY_EXT: Record<string, string> = {
  ".jpg": "image/jpeg",
  ".jpeg": "image/jpeg",
  ".png": "image/png",
  ".webp": "image/webp",
};

export function mimeFor(path: string): string {
  return MIME_BY_EXT[extname(path).toLowerCase()] ?? "image/jpeg";
}

/** Read every frame, preserving the caller's (chronological) order. */
export async function readFrameParts(frames: FrameRef[]): Promise<InlinePart[]> {
  const parts: InlinePart[] = [];
  for (const frame of frames) {
    let data: Buffer;
    try {
      data = await readFile(frame.path);
    } catch (err) {
      throw new FrameReadError(frame.path, err);
    }
    parts.push({ inlineData: { mimeType: mimeFor(frame.path), data: data.toString("base64") } });
  }
  return parts;
}
