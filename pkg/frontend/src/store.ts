/** Client-side document state: optimistic edits, version tracking, events.
 *
 * Every mutating UI action posts exactly one FeedbackEvent. Content changes
 * are applied optimistically and keyed by node id; a 200 commits them (the
 * server version advances), a 409 rolls them back and refetches the
 * canonical document. There is no client-side pipeline: rendering always
 * derives from the last server document plus pending optimistic edits.
 */

import { RecapClient } from "./api";
import type {
  Chapter,
  DeleteReason,
  FeedbackEventBody,
  Note,
  NoteKind,
  RecapDocument,
  RollingNote,
  ShareDepth,
  Utterance,
} from "./types";

export type Tab = "highlights" | "hierarchical";

interface PendingEdit {
  apply(doc: RecapDocument): void;
}

export interface ToastListener {
  (message: string, kind: "info" | "error"): void;
}

export class RecapStore {
  readonly client: RecapClient;
  readonly meetingId: string;

  private doc: RecapDocument | null = null;
  private pending = new Map<string, PendingEdit>();

  activeTab: Tab = "highlights";
  expandedChapters = new Set<string>();
  expandedContexts = new Set<string>();
  /** rolling note to scroll to / emphasize after a badge click */
  emphasizedRolling: string | null = null;
  contextCache = new Map<string, Utterance[]>();

  private listeners: Array<() => void> = [];
  private toastListeners: ToastListener[] = [];

  constructor(client: RecapClient, meetingId: string) {
    this.client = client;
    this.meetingId = meetingId;
  }

  // ── wiring ────────────────────────────────────────────────

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  onToast(listener: ToastListener): void {
    this.toastListeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  private toast(message: string, kind: "info" | "error" = "info"): void {
    for (const listener of this.toastListeners) listener(message, kind);
  }

  // ── document access ───────────────────────────────────────

  get version(): number {
    return this.doc?.version ?? 0;
  }

  /** Last server document with pending optimistic edits overlaid. */
  document(): RecapDocument {
    if (!this.doc) throw new Error("document not loaded");
    const view = structuredClone(this.doc);
    for (const edit of this.pending.values()) edit.apply(view);
    return view;
  }

  loaded(): boolean {
    return this.doc !== null;
  }

  async refresh(): Promise<void> {
    this.doc = await this.client.getRecap(this.meetingId, "both");
    // Default expansion mirrors the document's collapsed flags.
    for (const ch of this.doc.chapters ?? []) {
      if (!ch.collapsed) this.expandedChapters.add(ch.chapter_id);
    }
    this.notify();
  }

  findNote(noteId: string): Note | undefined {
    const view = this.document().highlights;
    return [...(view?.key_points ?? []), ...(view?.action_items ?? [])].find(
      (n) => n.note_id === noteId,
    );
  }

  findChapter(chapterId: string): Chapter | undefined {
    return (this.document().chapters ?? []).find((ch) => ch.chapter_id === chapterId);
  }

  findRolling(rollingId: string): { chapter: Chapter; note: RollingNote } | undefined {
    for (const chapter of this.document().chapters ?? []) {
      const note = chapter.rolling_notes.find((rn) => rn.rolling_id === rollingId);
      if (note) return { chapter, note };
    }
    return undefined;
  }

  // ── event plumbing ────────────────────────────────────────

  private async send(
    body: Omit<FeedbackEventBody, "base_version">,
    optimisticKey?: string,
    optimistic?: PendingEdit,
  ): Promise<boolean> {
    if (!this.doc) throw new Error("document not loaded");
    if (optimisticKey && optimistic) {
      this.pending.set(optimisticKey, optimistic);
      this.notify();
    }
    const result = await this.client.postEvent(this.meetingId, {
      ...body,
      base_version: this.doc.version,
    });
    if (result.ok) {
      if (optimisticKey && optimistic) {
        // Fold the committed edit into the base document and clear it.
        optimistic.apply(this.doc);
        this.pending.delete(optimisticKey);
      }
      this.doc.version = result.newVersion;
      this.notify();
      return true;
    }
    if (optimisticKey) this.pending.delete(optimisticKey);
    if (result.status === 409) {
      this.toast("Someone else updated this recap; reloaded the latest version.", "error");
      await this.refresh();
    } else {
      this.toast(`Change rejected: ${"error" in result ? result.error : result.status}`, "error");
      this.notify();
    }
    return false;
  }

  private eachNote(doc: RecapDocument, noteId: string, update: (n: Note) => void): void {
    for (const list of [doc.highlights?.key_points ?? [], doc.highlights?.action_items ?? []]) {
      for (const note of list) if (note.note_id === noteId) update(note);
    }
  }

  // ── mutating actions (one FeedbackEvent each) ─────────────

  async editNote(noteId: string, summary: string): Promise<boolean> {
    return this.send(
      { action: "edit_note", payload: { note_id: noteId, summary } },
      `note:${noteId}`,
      {
        apply: (doc) =>
          this.eachNote(doc, noteId, (n) => {
            n.summary = summary;
            n.origin = "user";
          }),
      },
    );
  }

  async deleteNote(noteId: string, reason: DeleteReason): Promise<boolean> {
    return this.send(
      { action: "delete_note", payload: { note_id: noteId }, delete_reason: reason },
      `note:${noteId}`,
      {
        apply: (doc) =>
          this.eachNote(doc, noteId, (n) => {
            n.deleted = true;
            n.delete_reason = reason;
          }),
      },
    );
  }

  async addNote(kind: NoteKind, summary: string, anchorIndex: number): Promise<boolean> {
    // No stable id until the server assigns one, so this add is not
    // rendered optimistically; the version bump triggers a refetch path.
    const accepted = await this.send({
      action: "add_note",
      payload: { kind, summary, anchor_index: anchorIndex },
    });
    if (accepted) await this.refresh();
    return accepted;
  }

  async assignTask(noteId: string, assignee: string): Promise<boolean> {
    return this.send(
      { action: "assign_task", payload: { note_id: noteId, assignee } },
      `assign:${noteId}`,
      { apply: (doc) => this.eachNote(doc, noteId, (n) => (n.assignee = assignee)) },
    );
  }

  async setDueDate(noteId: string, dueDate: string): Promise<boolean> {
    return this.send(
      { action: "set_due_date", payload: { note_id: noteId, due_date: dueDate } },
      `due:${noteId}`,
      { apply: (doc) => this.eachNote(doc, noteId, (n) => (n.due_date = dueDate)) },
    );
  }

  async reorderNote(noteId: string, newPosition: number): Promise<boolean> {
    const accepted = await this.send({
      action: "reorder_note",
      payload: { note_id: noteId, new_position: newPosition },
    });
    if (accepted) await this.refresh();
    return accepted;
  }

  async editRollingNote(rollingId: string, summary: string): Promise<boolean> {
    return this.send(
      { action: "edit_rolling_note", payload: { rolling_id: rollingId, summary } },
      `rolling:${rollingId}`,
      {
        apply: (doc) => {
          for (const chapter of doc.chapters ?? []) {
            for (const rn of chapter.rolling_notes) {
              if (rn.rolling_id === rollingId) {
                rn.summary = summary;
                rn.origin = "user";
              }
            }
          }
        },
      },
    );
  }

  async editChapterTitle(chapterId: string, title: string): Promise<boolean> {
    return this.send(
      { action: "edit_chapter_title", payload: { chapter_id: chapterId, title } },
      `title:${chapterId}`,
      {
        apply: (doc) => {
          for (const chapter of doc.chapters ?? []) {
            if (chapter.chapter_id === chapterId) chapter.title = title;
          }
        },
      },
    );
  }

  /** Expand a chapter (badge or header click) and emit the navigation event. */
  async expandChapter(chapterId: string, emphasizeRolling?: string): Promise<boolean> {
    this.expandedChapters.add(chapterId);
    this.emphasizedRolling = emphasizeRolling ?? null;
    this.notify();
    return this.send({ action: "expand_chapter", payload: { chapter_id: chapterId } });
  }

  async collapseChapter(chapterId: string): Promise<boolean> {
    this.expandedChapters.delete(chapterId);
    this.notify();
    return this.send({ action: "collapse_chapter", payload: { chapter_id: chapterId } });
  }

  async collapseAll(): Promise<void> {
    const open = [...this.expandedChapters];
    for (const chapterId of open) {
      await this.collapseChapter(chapterId);
    }
  }

  /** Reveal the served context span for a note (up to 3 utterances each way). */
  async showContext(noteId: string): Promise<Utterance[]> {
    const note = this.findNote(noteId);
    if (!note) throw new Error(`unknown note ${noteId}`);
    const [start, end] = note.context;
    const utterances = await this.client.utterances(this.meetingId, start, end);
    this.contextCache.set(noteId, utterances);
    this.expandedContexts.add(noteId);
    this.notify();
    await this.send({ action: "expand_context", payload: { note_id: noteId } });
    return utterances;
  }

  hideContext(noteId: string): void {
    this.expandedContexts.delete(noteId);
    this.notify();
  }

  /** Copy a node's markdown rendering and record the share. */
  async shareNode(
    nodeId: string,
    depth: ShareDepth,
    copy: (text: string) => Promise<void>,
  ): Promise<string> {
    const markdown = await this.client.markdownForNode(this.meetingId, nodeId, depth);
    await copy(markdown);
    await this.send({ action: "share", payload: { node_id: nodeId, depth } });
    this.toast("Copied to clipboard.");
    return markdown;
  }

  setTab(tab: Tab): void {
    this.activeTab = tab;
    this.notify();
  }
}
