/**
 * Scripted browser-session tests against the real Python session service,
 * spawned as a subprocess. Covers the full round trip: type, open the menu
 * with Tab, select Suggestion B, accept, rewrite part of the suggestion,
 * save, then verify the exported log replays to exactly the on-screen text
 * with every character's color matching its logged origin. A second service
 * with a failing provider covers the error path.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Editor } from "../src/editor.js";
import { parseLog, replayLog } from "../src/replay.js";
import { GENERATION_FAILED_TEXT } from "../src/types.js";

interface Service {
  proc: ChildProcess;
  url: string;
}

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

async function startService(port: number, extraArgs: string[] = []): Promise<Service> {
  const dataDir = mkdtempSync(join(tmpdir(), "writetrace-ui-"));
  const proc = spawn(
    "python3",
    [
      "-m", "writetrace.service",
      "--port", String(port),
      "--data-dir", dataDir,
      "--provider", "mock",
      "--mock-seed", "5",
      ...extraArgs,
    ],
    { stdio: "ignore" },
  );
  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 45_000;
  for (;;) {
    try {
      const response = await fetch(`${url}/sessions/probe`);
      if (response.status === 404) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error("session service did not start");
    }
    await sleep(100);
  }
  return { proc, url };
}

const waitFor = async (cond: () => boolean, timeout = 15_000): Promise<void> => {
  const deadline = Date.now() + timeout;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error("waitFor timed out");
    await sleep(15);
  }
};

function press(target: HTMLElement, key: string): void {
  target.dispatchEvent(new KeyboardEvent("keydown", { key, bubbles: true, cancelable: true }));
}

function typeString(target: HTMLElement, text: string): void {
  for (const char of text) press(target, char);
}

function mount(): HTMLElement {
  const root = document.createElement("div");
  document.body.appendChild(root);
  return root;
}

/** (kind, suggestion id) per rendered character, read back from the DOM. */
function domOrigins(surface: HTMLElement): { kind: string; sid?: string }[] {
  const out: { kind: string; sid?: string }[] = [];
  for (const child of Array.from(surface.children) as HTMLElement[]) {
    if (child.classList.contains("wt-caret") || child.classList.contains("wt-preview")) {
      continue;
    }
    const kind = child.classList.contains("wt-ai") ? "ai" : "user";
    const sid = child.dataset.suggestion;
    for (const _char of Array.from(child.textContent ?? "")) {
      out.push(sid === undefined ? { kind } : { kind, sid });
    }
  }
  return out;
}

const OPENING =
  Array.from({ length: 155 }, (_, i) => `word${i}`).join(" ") + " ";

describe("scripted session against the live service", () => {
  let service: Service;
  let failingService: Service;
  const basePort = 8300 + Math.floor(Math.random() * 300);

  beforeAll(async () => {
    [service, failingService] = await Promise.all([
      startService(basePort),
      startService(basePort + 211, ["--mock-fail-rate", "1.0"]),
    ]);
  });

  afterAll(() => {
    service?.proc.kill();
    failingService?.proc.kill();
  });

  it("round-trips type / tab / select B / accept / rewrite / save", async () => {
    const api = new ApiClient(service.url);
    const root = mount();
    const editor = await Editor.connect(root, api);
    const surface = root.querySelector<HTMLElement>(".wt-surface")!;

    // write enough to unlock suggestions, partly pasted, partly typed
    editor.insertText(OPENING);
    typeString(surface, "The sea was calm that morning. ");

    press(surface, "Tab");
    await waitFor(() => editor.menuOpen);
    const options = Array.from(root.querySelectorAll(".wt-menu-option")).map(
      (node) => node.textContent,
    );
    expect(options).toEqual(["Suggestion A", "Suggestion B"]);

    press(surface, "ArrowDown"); // highlight Suggestion B (intermediate)
    press(surface, "Enter"); // request it
    await waitFor(() => editor.preview !== null);
    const previewText = editor.preview!.text;
    expect(previewText).toContain("...");
    expect(root.querySelector(".wt-preview")!.textContent).toBe(previewText);

    press(surface, "Enter"); // accept: the suggestion enters the document
    await waitFor(() => editor.text.includes(previewText));
    const suggestionStart = editor.origins.findIndex((o) => o.kind === "ai");
    expect(suggestionStart).toBeGreaterThan(0);

    // rewrite a fragment: delete two AI characters, type a user phrase inside
    editor.setCaret(suggestionStart + 8);
    press(surface, "Backspace");
    press(surface, "Backspace");
    typeString(surface, "rewritten by hand ");

    root.querySelector<HTMLElement>(".wt-save")!.click();
    await waitFor(() => root.querySelector(".wt-saved")!.textContent!.includes("saved at"));

    // the exported log must replay to exactly the on-screen text
    const exported = await api.exportSession(editor.sessionId);
    const replayed = replayLog(parseLog(exported.log));
    expect(replayed.text).toBe(editor.text);
    expect(exported.final_text).toBe(editor.text);

    // and every rendered character's color must match its logged origin
    const rendered = domOrigins(surface);
    expect(rendered.length).toBe(replayed.origins.length);
    rendered.forEach((char, i) => {
      const origin = replayed.origins[i]!;
      expect(char.kind).toBe(origin.kind);
      if (origin.kind === "ai") {
        expect(char.sid).toBe(origin.suggestion_id);
      }
    });

    // the rewrite produced alternating provenance inside the suggestion
    const kinds = replayed.origins.map((o) => o.kind).join("");
    expect(kinds).toContain("ai");
    expect(editor.origins.slice(suggestionStart).some((o) => o.kind === "user")).toBe(true);
    editor.dispose();
  }, 60_000);

  it("menu order follows the session config", async () => {
    const api = new ApiClient(service.url);
    const root = mount();
    const editor = await Editor.connect(root, api, { menu_order: "b-first" });
    expect(editor.menuOptions.map((o) => o.label)).toEqual([
      "Suggestion B",
      "Suggestion A",
    ]);
    editor.dispose();
  });

  it("tab toggles the menu closed again", async () => {
    const api = new ApiClient(service.url);
    const root = mount();
    const editor = await Editor.connect(root, api);
    const surface = root.querySelector<HTMLElement>(".wt-surface")!;
    editor.insertText(OPENING);
    press(surface, "Tab");
    await waitFor(() => editor.menuOpen);
    press(surface, "Tab");
    await waitFor(() => !editor.menuOpen);
    expect(root.querySelector(".wt-menu")!.classList.contains("wt-hidden")).toBe(true);
    editor.dispose();
  });

  it("typing during a preview dismisses it and enters as user text", async () => {
    const api = new ApiClient(service.url);
    const root = mount();
    const editor = await Editor.connect(root, api);
    const surface = root.querySelector<HTMLElement>(".wt-surface")!;
    editor.insertText(OPENING);
    press(surface, "Tab");
    await waitFor(() => editor.menuOpen);
    press(surface, "Enter"); // request Suggestion A
    await waitFor(() => editor.preview !== null);
    const before = editor.text;
    typeString(surface, "x");
    expect(editor.preview).toBeNull();
    expect(editor.text.length).toBe(before.length + 1);
    expect(editor.origins[editor.caret - 1]).toEqual({ kind: "user" });
    editor.dispose();
  }, 60_000);

  it("locked sessions show the gating banner instead of the menu", async () => {
    const api = new ApiClient(service.url);
    const root = mount();
    const editor = await Editor.connect(root, api);
    const surface = root.querySelector<HTMLElement>(".wt-surface")!;
    typeString(surface, "too short");
    press(surface, "Tab");
    await waitFor(() => editor.banner !== null);
    expect(editor.menuOpen).toBe(false);
    expect(root.querySelector(".wt-banner")!.textContent).toContain("unlock");
    editor.dispose();
  });

  it("error path displays and inserts the exact failure text", async () => {
    const api = new ApiClient(failingService.url);
    const root = mount();
    const editor = await Editor.connect(root, api);
    const surface = root.querySelector<HTMLElement>(".wt-surface")!;

    editor.insertText(OPENING);
    press(surface, "Tab");
    await waitFor(() => editor.menuOpen);
    press(surface, "Enter"); // Suggestion A
    await waitFor(() => editor.preview !== null);
    expect(editor.preview!.text).toBe(GENERATION_FAILED_TEXT);
    expect(root.querySelector(".wt-preview")!.textContent).toBe(
      "Text generation failed. Try again!",
    );

    press(surface, "Enter"); // even the error text is insertable AI text
    await waitFor(() => editor.text.includes(GENERATION_FAILED_TEXT));
    const start = editor.text.indexOf(GENERATION_FAILED_TEXT);
    const origin = editor.origins[start]!;
    expect(origin.kind).toBe("ai");

    const exported = await api.exportSession(editor.sessionId);
    const replayed = replayLog(parseLog(exported.log));
    expect(replayed.text).toBe(editor.text);
    editor.dispose();
  }, 60_000);
});
