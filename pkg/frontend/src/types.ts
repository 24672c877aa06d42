/**
 * Wire types shared with the session service. Field names match the
 * line-delimited JSON log format exactly; absent fields are omitted.
 */

export type OriginKind = "user" | "ai";

export interface OriginTag {
  kind: OriginKind;
  suggestion_id?: string;
  fragment_index?: number;
}

export type EventKind =
  | "text-insert"
  | "text-delete"
  | "caret-move"
  | "suggestion-request"
  | "suggestion-shown"
  | "suggestion-inserted"
  | "save";

export interface EditEvent {
  seq: number;
  timestamp_ms: number;
  kind: EventKind;
  position?: number;
  text?: string;
  length?: number;
  origin?: OriginTag;
  suggestion_id?: string;
}

/** An event captured locally before a seq has been assigned at flush time. */
export type PendingEvent = Omit<EditEvent, "seq">;

export type SuggestionKind = "fluent" | "intermediate";

export interface SessionConfigView {
  min_context_chars: number;
  lock_minutes: number;
  lock_words: number;
  menu_order: "a-first" | "b-first";
  min_session_minutes: number;
  [key: string]: unknown;
}

export interface RunView {
  origin: OriginTag;
  length: number;
}

export interface SessionState {
  session_id: string;
  config: SessionConfigView;
  seq: number;
  text: string;
  runs: RunView[];
  word_count: number;
  elapsed_ms: number;
  last_saved_ms: number | null;
  suggestions_enabled: boolean;
  unlocked: boolean;
  gate_reason: string | null;
}

export interface SuggestionPreview {
  suggestion_id: string;
  kind: SuggestionKind;
  text: string;
  error: boolean;
  seq: number;
}

export interface SessionExport {
  session_id: string;
  started_epoch_ms: number;
  config: SessionConfigView;
  log: string;
  suggestions: unknown[];
  final_text: string;
}

/** Exact text the service inserts when generation fails end to end. */
export const GENERATION_FAILED_TEXT = "Text generation failed. Try again!";

export const USER_ORIGIN: OriginTag = { kind: "user" };
