/** Browser entry point: attach the editor to #editor. The service URL comes
 * from the `?service=` query parameter (default: same host, port 8040). */

import { ApiClient } from "./api.js";
import { Editor } from "./editor.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const serviceUrl =
    params.get("service") ?? `${window.location.protocol}//${window.location.hostname}:8040`;
  const root = document.getElementById("editor");
  if (!root) throw new Error("missing #editor element");
  const api = new ApiClient(serviceUrl);
  const editor = await Editor.connect(root, api);
  (window as unknown as { editor: Editor }).editor = editor;
  root.querySelector<HTMLElement>(".wt-surface")?.focus();
}

void boot();
