/**
 * Client-side replay of the shared log format. Used to verify round-trips
 * (an exported log must rebuild exactly what is on screen) and to rebuild
 * local state from a server export.
 */

import type { EditEvent, OriginTag } from "./types.js";

export interface ReplayedDoc {
  text: string;
  /** One origin per character, aligned with `text`. */
  origins: OriginTag[];
}

export class ReplayFault extends Error {
  constructor(message: string, readonly seq: number) {
    super(message);
  }
}

export function parseLog(jsonl: string): EditEvent[] {
  const events: EditEvent[] = [];
  for (const line of jsonl.split("\n")) {
    if (line.trim() === "") continue;
    events.push(JSON.parse(line) as EditEvent);
  }
  return events;
}

export function replayLog(events: EditEvent[], uptoSeq?: number): ReplayedDoc {
  const chars: string[] = [];
  const origins: OriginTag[] = [];
  let prevSeq = 0;
  for (const event of events) {
    if (event.seq !== prevSeq + 1) {
      throw new ReplayFault(
        `seq ${event.seq} breaks the sequence (expected ${prevSeq + 1})`,
        event.seq,
      );
    }
    prevSeq = event.seq;
    if (uptoSeq !== undefined && event.seq > uptoSeq) break;

    if (event.kind === "text-insert" || event.kind === "suggestion-inserted") {
      const position = event.position ?? -1;
      const text = event.text ?? "";
      const origin = event.origin;
      if (position < 0 || position > chars.length || !origin) {
        throw new ReplayFault(`event seq ${event.seq} cannot apply`, event.seq);
      }
      const glyphs = Array.from(text);
      chars.splice(position, 0, ...glyphs);
      origins.splice(position, 0, ...glyphs.map(() => origin));
    } else if (event.kind === "text-delete") {
      const position = event.position ?? -1;
      const length = event.length ?? -1;
      if (position < 0 || length < 0 || position + length > chars.length) {
        throw new ReplayFault(`event seq ${event.seq} cannot apply`, event.seq);
      }
      chars.splice(position, length);
      origins.splice(position, length);
    }
  }
  return { text: chars.join(""), origins };
}
