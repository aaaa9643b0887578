/** Highlights tab: notes and tasks with edit, delete-with-reason, context. */

import type { RecapStore } from "./store";
import type { Note, NoteKind } from "./types";
import { DELETE_REASONS, liveNotes } from "./types";
import { el, inlineEditor } from "./dom";

function contextBlock(store: RecapStore, note: Note): HTMLElement {
  const container = el("div", { className: "note-context" });
  const cached = store.contextCache.get(note.note_id) ?? [];
  for (const utterance of cached) {
    container.append(
      el(
        "blockquote",
        { className: "context-utterance", dataset: { index: String(utterance.index) } },
        `${utterance.speaker}: ${utterance.text}`,
      ),
    );
  }
  return container;
}

/** Reason picker shown on delete; confirm stays disabled until a choice. */
function reasonPicker(onConfirm: (reason: string) => void, onCancel: () => void): HTMLElement {
  const picker = el("div", { className: "delete-reason-picker" });
  picker.append(el("p", {}, "Why delete this item?"));
  const form = el("form", { className: "reason-options" });
  for (const reason of DELETE_REASONS) {
    const label = el("label", {});
    const radio = el("input", { attrs: { type: "radio", name: "delete-reason", value: reason } });
    label.append(radio, ` ${reason}`);
    form.append(label);
  }
  const confirm = el(
    "button",
    { className: "confirm-delete", attrs: { type: "button", disabled: "true" } },
    "Delete",
  ) as HTMLButtonElement;
  const cancel = el("button", { className: "cancel-delete", attrs: { type: "button" } }, "Cancel");
  form.addEventListener("change", () => {
    confirm.disabled = !form.querySelector("input:checked");
  });
  confirm.addEventListener("click", () => {
    const chosen = form.querySelector<HTMLInputElement>("input:checked");
    if (!chosen) return; // unreachable while disabled; guards programmatic clicks
    onConfirm(chosen.value);
  });
  cancel.addEventListener("click", onCancel);
  picker.append(form, confirm, cancel);
  return picker;
}

function noteItem(store: RecapStore, note: Note): HTMLElement {
  const item = el("li", {
    className: `note-item kind-${note.kind}`,
    dataset: { noteId: note.note_id },
  });
  const summary = el("span", { className: "note-summary" }, note.summary);
  item.append(el("span", { className: "note-glyph" }, note.kind === "key_point" ? "★" : "☐"), summary);

  if (note.kind === "action_item") {
    const assignee = el(
      "button",
      { className: "assignee-field", attrs: { type: "button", title: "assigned to" } },
      note.assignee ? `@${note.assignee}` : "@assign",
    );
    assignee.addEventListener("click", () => {
      const name = window.prompt("Assign to", note.assignee ?? "");
      if (name) void store.assignTask(note.note_id, name);
    });
    const due = el(
      "button",
      { className: "due-field", attrs: { type: "button", title: "due date" } },
      note.due_date ? `due ${note.due_date}` : "due date",
    );
    due.addEventListener("click", () => {
      const date = window.prompt("Due date (YYYY-MM-DD)", note.due_date ?? "");
      if (date) void store.setDueDate(note.note_id, date);
    });
    item.append(assignee, due);
  }

  const edit = el("button", { className: "edit-note", attrs: { type: "button" } }, "Edit");
  edit.addEventListener("click", () => {
    inlineEditor(summary, note.summary, (value) => void store.editNote(note.note_id, value));
  });

  const menu = el("button", { className: "note-menu", attrs: { type: "button" } }, "…");
  menu.addEventListener("click", () => {
    if (store.expandedContexts.has(note.note_id)) {
      store.hideContext(note.note_id);
    } else {
      void store.showContext(note.note_id);
    }
  });

  const share = el("button", { className: "share-note", attrs: { type: "button" } }, "Share");
  share.addEventListener("click", () => {
    void store.shareNode(note.note_id, "one_liner", (text) => navigator.clipboard.writeText(text));
  });

  const remove = el("button", { className: "delete-note", attrs: { type: "button" } }, "Delete");
  remove.addEventListener("click", () => {
    if (item.querySelector(".delete-reason-picker")) return;
    const picker = reasonPicker(
      (reason) => {
        picker.remove();
        void store.deleteNote(note.note_id, reason as never);
      },
      () => picker.remove(),
    );
    item.append(picker);
  });

  const up = el("button", { className: "move-up", attrs: { type: "button", title: "move up" } }, "↑");
  up.addEventListener("click", () => {
    if (note.position > 0) void store.reorderNote(note.note_id, note.position - 1);
  });
  const down = el("button", { className: "move-down", attrs: { type: "button", title: "move down" } }, "↓");
  down.addEventListener("click", () => void store.reorderNote(note.note_id, note.position + 1));

  item.append(edit, menu, share, remove, up, down);

  // Drag-to-reorder within the list; drops emit one reorder event.
  item.draggable = true;
  item.addEventListener("dragstart", (event) => {
    event.dataTransfer?.setData("text/note-id", note.note_id);
  });
  item.addEventListener("dragover", (event) => event.preventDefault());
  item.addEventListener("drop", (event) => {
    event.preventDefault();
    const dragged = event.dataTransfer?.getData("text/note-id");
    if (dragged && dragged !== note.note_id) {
      void store.reorderNote(dragged, note.position);
    }
  });

  if (store.expandedContexts.has(note.note_id)) {
    item.append(contextBlock(store, note));
  }
  return item;
}

function composer(store: RecapStore, kind: NoteKind): HTMLElement {
  const form = el("div", { className: `composer composer-${kind}` });
  const input = el("input", {
    className: "composer-text",
    attrs: { type: "text", placeholder: kind === "key_point" ? "Add a note…" : "Add a task…" },
  }) as HTMLInputElement;
  const anchor = el("input", {
    className: "composer-anchor",
    attrs: { type: "number", min: "0", value: "0", title: "transcript position" },
  }) as HTMLInputElement;
  const button = el("button", { className: "composer-add", attrs: { type: "button" } }, "Add");
  button.addEventListener("click", () => {
    const summary = input.value.trim();
    if (!summary) return;
    void store.addNote(kind, summary, Number(anchor.value) || 0);
    input.value = "";
  });
  form.append(input, anchor, button);
  return form;
}

export function renderHighlights(store: RecapStore, root: HTMLElement): void {
  root.replaceChildren();
  const doc = store.document();
  const { keyPoints, actionItems } = liveNotes(doc.highlights);

  const notesSection = el("section", { className: "notes-section" });
  notesSection.append(el("h2", {}, "Notes"));
  if (keyPoints.length === 0) {
    notesSection.append(el("p", { className: "empty-state" }, "No highlights detected."));
  } else {
    const list = el("ul", { className: "note-list key-points" });
    for (const note of keyPoints) list.append(noteItem(store, note));
    notesSection.append(list);
  }
  notesSection.append(composer(store, "key_point"));

  const tasksSection = el("section", { className: "tasks-section" });
  tasksSection.append(el("h2", {}, "Tasks"));
  if (actionItems.length === 0) {
    tasksSection.append(el("p", { className: "empty-state" }, "No tasks detected."));
  } else {
    const list = el("ul", { className: "note-list action-items" });
    for (const note of actionItems) list.append(noteItem(store, note));
    tasksSection.append(list);
  }
  tasksSection.append(composer(store, "action_item"));

  root.append(notesSection, tasksSection);
}
