/** App shell: ingestion panel, the two recap tabs, toasts. */

import { RecapClient } from "./api";
import { el } from "./dom";
import { renderHighlights } from "./highlights";
import { renderHierarchical } from "./hierarchical";
import { RecapStore, type Tab } from "./store";

const POLL_INTERVAL_MS = 750;

async function waitUntilReady(client: RecapClient, meetingId: string): Promise<void> {
  for (;;) {
    const status = await client.status(meetingId);
    if (status === "ready") return;
    if (status === "failed") throw new Error("recap generation failed");
    await new Promise((resolve) => setTimeout(resolve, POLL_INTERVAL_MS));
  }
}

export class App {
  readonly client: RecapClient;
  readonly root: HTMLElement;
  store: RecapStore | null = null;

  private tabsBar: HTMLElement;
  private content: HTMLElement;
  private toasts: HTMLElement;

  constructor(root: HTMLElement, client: RecapClient) {
    this.root = root;
    this.client = client;
    this.tabsBar = el("nav", { className: "tabs" });
    this.content = el("main", { className: "tab-content" });
    this.toasts = el("div", { className: "toasts", attrs: { role: "status" } });
    this.renderIngestion();
  }

  private renderIngestion(): void {
    this.root.replaceChildren();
    const panel = el("section", { className: "ingestion" });
    panel.append(el("h1", {}, "Meeting recap"));
    const textarea = el("textarea", {
      className: "transcript-input",
      attrs: { placeholder: "Paste a meeting transcript…", rows: "12" },
    }) as HTMLTextAreaElement;
    const process = el("button", { className: "process", attrs: { type: "button" } }, "Process");
    const progress = el("p", { className: "progress" });
    process.addEventListener("click", () => {
      const transcript = textarea.value;
      if (!transcript.trim()) {
        progress.textContent = "Paste a transcript first.";
        return;
      }
      progress.textContent = "Processing…";
      void this.openTranscript(transcript).catch((error: unknown) => {
        progress.textContent = error instanceof Error ? error.message : String(error);
      });
    });
    panel.append(textarea, process, progress);
    this.root.append(panel, this.toasts);
  }

  async openTranscript(transcript: string): Promise<RecapStore> {
    const { meetingId, pending } = await this.client.createMeeting(transcript);
    if (pending) await waitUntilReady(this.client, meetingId);
    return this.openMeeting(meetingId);
  }

  async openMeeting(meetingId: string): Promise<RecapStore> {
    const store = new RecapStore(this.client, meetingId);
    store.onChange(() => this.renderActiveTab());
    store.onToast((message, kind) => this.showToast(message, kind));
    await store.refresh();
    this.store = store;
    this.renderShell();
    return store;
  }

  private renderShell(): void {
    this.root.replaceChildren();
    this.tabsBar.replaceChildren();
    for (const tab of ["highlights", "hierarchical"] as Tab[]) {
      const button = el(
        "button",
        { className: `tab tab-${tab}`, attrs: { type: "button" }, dataset: { tab } },
        tab === "highlights" ? "Highlights" : "Hierarchical",
      );
      button.addEventListener("click", () => this.store?.setTab(tab));
      this.tabsBar.append(button);
    }
    this.root.append(this.tabsBar, this.content, this.toasts);
    this.renderActiveTab();
  }

  renderActiveTab(): void {
    if (!this.store?.loaded()) return;
    for (const button of this.tabsBar.querySelectorAll(".tab")) {
      button.classList.toggle(
        "active",
        (button as HTMLElement).dataset.tab === this.store.activeTab,
      );
    }
    if (this.store.activeTab === "highlights") {
      renderHighlights(this.store, this.content);
    } else {
      renderHierarchical(this.store, this.content);
    }
  }

  private showToast(message: string, kind: "info" | "error"): void {
    const toast = el("p", { className: `toast toast-${kind}` }, message);
    this.toasts.append(toast);
    setTimeout(() => toast.remove(), 4000);
  }
}
