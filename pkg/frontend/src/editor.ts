/**
 * Keyboard-first writing surface over the session service.
 *
 * Typed characters enter in the user color; accepted suggestions enter in the
 * AI color, per character, exactly as the session log records them. Tab
 * toggles the suggestion menu at the caret (two generically named options in
 * the session's configured order); Enter requests the highlighted option,
 * previews the returned text at the caret, and a second Enter accepts it.
 *
 * Outbound edits queue locally and flush in strict seq order, one batch in
 * flight at a time; seqs are assigned at flush time so server-appended events
 * (suggestion request/shown/inserted, save) never desynchronize the stream.
 * If the service rejects ordering, the editor resyncs from server state; if
 * the service is unreachable, events stay queued and flushing retries.
 */

import { ApiClient, ApiError, ServiceUnreachable } from "./api.js";
import {
  GENERATION_FAILED_TEXT,
  USER_ORIGIN,
  type OriginTag,
  type PendingEvent,
  type SessionState,
  type SuggestionKind,
  type SuggestionPreview,
} from "./types.js";

interface MenuOption {
  label: string;
  kind: SuggestionKind;
}

interface ActivePreview {
  text: string;
  position: number;
  /** null for a locally produced error preview (service unreachable). */
  suggestionId: string | null;
}

const FLUSH_DEBOUNCE_MS = 120;
const RETRY_MS = 1000;

export class Editor {
  doc: string[] = [];
  origins: OriginTag[] = [];
  caret = 0;

  private seq = 0;
  private pending: PendingEvent[] = [];
  private flushing = false;
  private flushTimer: ReturnType<typeof setTimeout> | null = null;
  private drainWaiters: (() => void)[] = [];

  menuOpen = false;
  menuHighlight = 0;
  readonly menuOptions: MenuOption[];
  preview: ActivePreview | null = null;
  banner: string | null = null;

  private unlocked: boolean;
  private lastSavedMs: number | null;
  private readonly minSessionMinutes: number;
  private readonly elapsedBase: number;
  private readonly attachedAt: number;
  private tickTimer: ReturnType<typeof setInterval> | null = null;

  private readonly surface: HTMLElement;
  private readonly menuEl: HTMLElement;
  private readonly bannerEl: HTMLElement;
  private readonly footerEl: HTMLElement;
  private readonly savedEl: HTMLElement;

  constructor(
    readonly root: HTMLElement,
    readonly api: ApiClient,
    readonly sessionId: string,
    state: SessionState,
  ) {
    this.seq = state.seq;
    this.doc = Array.from(state.text);
    this.origins = runsToOrigins(state.runs);
    this.caret = this.doc.length;
    this.unlocked = state.unlocked;
    this.lastSavedMs = state.last_saved_ms;
    this.minSessionMinutes = state.config.min_session_minutes;
    this.elapsedBase = state.elapsed_ms;
    this.attachedAt = Date.now();

    const aFirst = state.config.menu_order !== "b-first";
    const optionA: MenuOption = { label: "Suggestion A", kind: "fluent" };
    const optionB: MenuOption = { label: "Suggestion B", kind: "intermediate" };
    this.menuOptions = aFirst ? [optionA, optionB] : [optionB, optionA];

    this.root.innerHTML = "";
    this.root.classList.add("wt-editor");
    const toolbar = el("div", "wt-toolbar");
    for (const style of ["bold", "italic", "underline"]) {
      const button = el("button", `wt-style wt-style-${style}`);
      button.textContent = style[0]!.toUpperCase();
      // view-only affordance: styling is never part of the logged document
      button.addEventListener("click", () => button.classList.toggle("wt-style-on"));
      toolbar.appendChild(button);
    }
    this.savedEl = el("span", "wt-saved");
    toolbar.appendChild(this.savedEl);
    const saveButton = el("button", "wt-save");
    saveButton.textContent = "Save";
    saveButton.addEventListener("click", () => void this.save());
    toolbar.appendChild(saveButton);

    this.surface = el("div", "wt-surface");
    this.surface.tabIndex = 0;
    this.surface.addEventListener("keydown", (e) => this.onKeyDown(e as KeyboardEvent));

    this.menuEl = el("div", "wt-menu wt-hidden");
    this.bannerEl = el("div", "wt-banner wt-hidden");
    this.footerEl = el("div", "wt-footer");

    const shortcuts = el("div", "wt-shortcuts");
    shortcuts.innerHTML =
      "<strong>Editor shortcuts</strong><ul>" +
      "<li>tab &mdash; show/hide the AI menu</li>" +
      "<li>arrow keys &mdash; navigate the menu</li>" +
      "<li>enter &mdash; request / confirm a suggestion</li>" +
      "<li>esc &mdash; dismiss menu or preview</li></ul>";

    this.root.append(toolbar, this.surface, this.menuEl, this.bannerEl, this.footerEl, shortcuts);
    this.render();
    this.tickTimer = setInterval(() => this.renderFooter(), 1000);
  }

  static async connect(
    root: HTMLElement,
    api: ApiClient,
    configOverrides: Record<string, unknown> = {},
  ): Promise<Editor> {
    const created = await api.createSession(configOverrides);
    const state = await api.getState(created.session_id);
    return new Editor(root, api, created.session_id, state);
  }

  dispose(): void {
    if (this.tickTimer) clearInterval(this.tickTimer);
    if (this.flushTimer) clearTimeout(this.flushTimer);
  }

  get text(): string {
    return this.doc.join("");
  }

  elapsedMs(): number {
    return this.elapsedBase + (Date.now() - this.attachedAt);
  }

  // -- editing ---------------------------------------------------------------

  insertText(text: string): void {
    if (text.length === 0) return;
    this.dismissPreview();
    const glyphs = Array.from(text);
    this.doc.splice(this.caret, 0, ...glyphs);
    this.origins.splice(this.caret, 0, ...glyphs.map(() => USER_ORIGIN));
    this.queueEvent({
      timestamp_ms: this.elapsedMs(),
      kind: "text-insert",
      position: this.caret,
      text,
      origin: USER_ORIGIN,
    });
    this.caret += glyphs.length;
    this.render();
  }

  deleteRange(position: number, length: number): void {
    if (length <= 0 || position < 0 || position + length > this.doc.length) return;
    this.dismissPreview();
    this.doc.splice(position, length);
    this.origins.splice(position, length);
    this.queueEvent({
      timestamp_ms: this.elapsedMs(),
      kind: "text-delete",
      position,
      length,
    });
    this.caret = position;
    this.render();
  }

  setCaret(position: number): void {
    const clamped = Math.max(0, Math.min(position, this.doc.length));
    if (clamped === this.caret) return;
    this.caret = clamped;
    this.queueEvent({
      timestamp_ms: this.elapsedMs(),
      kind: "caret-move",
      position: clamped,
    });
    this.render();
  }

  private onKeyDown(event: KeyboardEvent): void {
    const key = event.key;
    if (key === "Tab") {
      event.preventDefault();
      void this.toggleMenu();
      return;
    }
    if (this.menuOpen) {
      event.preventDefault();
      if (key === "ArrowDown") {
        this.menuHighlight = (this.menuHighlight + 1) % this.menuOptions.length;
        this.render();
      } else if (key === "ArrowUp") {
        this.menuHighlight =
          (this.menuHighlight + this.menuOptions.length - 1) % this.menuOptions.length;
        this.render();
      } else if (key === "Enter") {
        void this.chooseHighlighted();
      } else if (key === "Escape") {
        this.menuOpen = false;
        this.render();
      }
      return;
    }
    if (this.preview) {
      if (key === "Enter") {
        event.preventDefault();
        void this.acceptPreview();
        return;
      }
      if (key === "Escape") {
        event.preventDefault();
        this.dismissPreview();
        this.render();
        return;
      }
      // any edit dismisses the preview, then applies normally
    }
    if (key === "Backspace") {
      event.preventDefault();
      if (this.caret > 0) this.deleteRange(this.caret - 1, 1);
    } else if (key === "Delete") {
      event.preventDefault();
      if (this.caret < this.doc.length) this.deleteRange(this.caret, 1);
    } else if (key === "ArrowLeft") {
      event.preventDefault();
      this.setCaret(this.caret - 1);
    } else if (key === "ArrowRight") {
      event.preventDefault();
      this.setCaret(this.caret + 1);
    } else if (key === "Home") {
      event.preventDefault();
      this.setCaret(0);
    } else if (key === "End") {
      event.preventDefault();
      this.setCaret(this.doc.length);
    } else if (key === "Enter") {
      event.preventDefault();
      this.insertText("\n");
    } else if (key.length === 1 && !event.ctrlKey && !event.metaKey && !event.altKey) {
      event.preventDefault();
      this.insertText(key);
    }
  }

  // -- suggestion menu ---------------------------------------------------------

  async toggleMenu(): Promise<void> {
    if (this.menuOpen) {
      this.menuOpen = false;
      this.render();
      return;
    }
    this.banner = null;
    await this.flushNow();
    let state: SessionState;
    try {
      state = await this.api.getState(this.sessionId);
    } catch {
      this.banner = "Cannot reach the writing service.";
      this.render();
      return;
    }
    this.unlocked = state.unlocked;
    if (!state.unlocked) {
      this.banner = state.gate_reason ?? "AI suggestions are locked.";
      this.render();
      return;
    }
    if (this.caret < state.config.min_context_chars) {
      this.banner =
        `story before the caret is too short (${this.caret} characters; ` +
        `suggestions need ${state.config.min_context_chars})`;
      this.render();
      return;
    }
    this.menuOpen = true;
    this.menuHighlight = 0;
    this.render();
  }

  async chooseHighlighted(): Promise<void> {
    const option = this.menuOptions[this.menuHighlight];
    this.menuOpen = false;
    this.render();
    if (option) await this.requestSuggestion(option.kind);
  }

  async requestSuggestion(kind: SuggestionKind): Promise<void> {
    await this.flushNow();
    const position = this.caret;
    let response: SuggestionPreview;
    try {
      response = await this.api.requestSuggestion(this.sessionId, kind, position);
    } catch (err) {
      if (err instanceof ApiError) {
        this.banner = err.detail;
      } else {
        // service unreachable: show the canonical failure text at the caret
        this.preview = {
          text: GENERATION_FAILED_TEXT,
          position,
          suggestionId: null,
        };
      }
      this.render();
      return;
    }
    this.seq = response.seq;
    this.preview = {
      text: response.text,
      position,
      suggestionId: response.suggestion_id,
    };
    this.render();
  }

  async acceptPreview(): Promise<void> {
    const preview = this.preview;
    if (!preview) return;
    if (preview.suggestionId === null) {
      this.dismissPreview();
      this.render();
      return;
    }
    await this.flushNow();
    let accepted: { seq: number; text: string };
    try {
      accepted = await this.api.acceptSuggestion(
        this.sessionId,
        preview.suggestionId,
        preview.position,
      );
    } catch (err) {
      this.banner = err instanceof ApiError ? err.detail : "Cannot reach the writing service.";
      this.dismissPreview();
      this.render();
      return;
    }
    this.seq = accepted.seq;
    const glyphs = Array.from(accepted.text);
    const origin: OriginTag = { kind: "ai", suggestion_id: preview.suggestionId };
    this.doc.splice(preview.position, 0, ...glyphs);
    this.origins.splice(preview.position, 0, ...glyphs.map(() => origin));
    this.caret = preview.position + glyphs.length;
    this.preview = null;
    this.render();
  }

  dismissPreview(): void {
    this.preview = null;
  }

  async save(): Promise<void> {
    await this.flushNow();
    try {
      const result = await this.api.save(this.sessionId);
      this.seq = result.seq;
      this.lastSavedMs = result.saved_at_ms;
    } catch (err) {
      this.banner = err instanceof ApiError ? err.detail : "Save failed: service unreachable.";
    }
    this.render();
  }

  // -- event pipeline -----------------------------------------------------------

  private queueEvent(event: PendingEvent): void {
    this.pending.push(event);
    if (this.flushTimer === null) {
      this.flushTimer = setTimeout(() => {
        this.flushTimer = null;
        void this.flush();
      }, FLUSH_DEBOUNCE_MS);
    }
  }

  /** Drain the queue completely (used before suggestion requests and save). */
  async flushNow(): Promise<void> {
    if (this.flushTimer !== null) {
      clearTimeout(this.flushTimer);
      this.flushTimer = null;
    }
    while (this.pending.length > 0 || this.flushing) {
      if (this.flushing) {
        await new Promise<void>((resolve) => this.drainWaiters.push(resolve));
      } else {
        await this.flush();
      }
    }
  }

  async flush(): Promise<void> {
    if (this.flushing || this.pending.length === 0) return;
    this.flushing = true;
    const batch = this.pending;
    this.pending = [];
    const withSeqs = batch.map((event, i) => ({ seq: this.seq + 1 + i, ...event }));
    try {
      const response = await this.api.postEvents(this.sessionId, withSeqs);
      this.seq = response.ack_seq;
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        await this.resync();
      } else if (err instanceof ServiceUnreachable) {
        // offline: keep the events queued, retry shortly
        this.pending = batch.concat(this.pending);
        setTimeout(() => void this.flush(), RETRY_MS);
      } else {
        this.banner = err instanceof ApiError ? err.detail : String(err);
        this.render();
      }
    } finally {
      this.flushing = false;
      const waiters = this.drainWaiters;
      this.drainWaiters = [];
      for (const resolve of waiters) resolve();
    }
  }

  /** Replace local state with the server's; drops unacknowledged edits. */
  async resync(): Promise<void> {
    const state = await this.api.getState(this.sessionId);
    this.seq = state.seq;
    this.doc = Array.from(state.text);
    this.origins = runsToOrigins(state.runs);
    this.caret = Math.min(this.caret, this.doc.length);
    this.pending = [];
    this.unlocked = state.unlocked;
    this.render();
  }

  // -- rendering ------------------------------------------------------------------

  render(): void {
    this.renderSurface();
    this.renderMenu();
    this.renderBanner();
    this.renderFooter();
  }

  private renderSurface(): void {
    this.surface.innerHTML = "";
    const pieces = this.renderPieces();
    for (const piece of pieces) this.surface.appendChild(piece);
  }

  private renderPieces(): HTMLElement[] {
    const pieces: HTMLElement[] = [];
    let index = 0;
    const flushRun = (end: number) => {
      while (index < end) {
        const origin = this.origins[index]!;
        let runEnd = index + 1;
        while (runEnd < end && sameOrigin(this.origins[runEnd]!, origin)) runEnd += 1;
        const span = el("span", origin.kind === "ai" ? "wt-ai" : "wt-user");
        if (origin.kind === "ai" && origin.suggestion_id) {
          span.dataset.suggestion = origin.suggestion_id;
        }
        span.textContent = this.doc.slice(index, runEnd).join("");
        pieces.push(span);
        index = runEnd;
      }
    };
    flushRun(this.caret);
    const caretEl = el("span", "wt-caret");
    pieces.push(caretEl);
    if (this.preview) {
      const previewEl = el("span", "wt-ai wt-preview");
      previewEl.textContent = this.preview.text;
      pieces.push(previewEl);
    }
    flushRun(this.doc.length);
    return pieces;
  }

  private renderMenu(): void {
    if (!this.menuOpen) {
      this.menuEl.classList.add("wt-hidden");
      return;
    }
    this.menuEl.classList.remove("wt-hidden");
    this.menuEl.innerHTML = "";
    this.menuOptions.forEach((option, i) => {
      const item = el("div", "wt-menu-option" + (i === this.menuHighlight ? " wt-highlight" : ""));
      item.textContent = option.label;
      item.addEventListener("click", () => {
        this.menuHighlight = i;
        void this.chooseHighlighted();
      });
      this.menuEl.appendChild(item);
    });
  }

  private renderBanner(): void {
    if (this.banner) {
      this.bannerEl.classList.remove("wt-hidden");
      this.bannerEl.textContent = this.banner;
    } else {
      this.bannerEl.classList.add("wt-hidden");
      this.bannerEl.textContent = "";
    }
  }

  private renderFooter(): void {
    const words = (this.text.match(/\S+/g) ?? []).length;
    const totalSeconds = Math.floor(this.elapsedMs() / 1000);
    const minutes = Math.floor(totalSeconds / 60);
    const seconds = String(totalSeconds % 60).padStart(2, "0");
    const status = this.unlocked ? "AI suggestions enabled" : "AI suggestions locked";
    this.footerEl.textContent =
      `${words} words · ${minutes}:${seconds} ` +
      `(write for at least ${this.minSessionMinutes} min) · ${status}`;
    this.savedEl.textContent =
      this.lastSavedMs === null
        ? "not saved yet"
        : `saved at ${Math.floor(this.lastSavedMs / 1000)}s`;
  }
}

function runsToOrigins(runs: { origin: OriginTag; length: number }[]): OriginTag[] {
  const origins: OriginTag[] = [];
  for (const run of runs) {
    for (let i = 0; i < run.length; i += 1) origins.push(run.origin);
  }
  return origins;
}

function sameOrigin(a: OriginTag, b: OriginTag): boolean {
  return (
    a.kind === b.kind &&
    a.suggestion_id === b.suggestion_id &&
    a.fragment_index === b.fragment_index
  );
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
