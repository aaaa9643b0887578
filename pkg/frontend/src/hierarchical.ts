/** Hierarchical tab: collapsible chapters, marker badges, inline edits. */

import type { RecapStore } from "./store";
import type { Chapter, RollingNote, ShareDepth } from "./types";
import { el, formatClock, inlineEditor } from "./dom";

function shareControl(store: RecapStore, nodeId: string, depths: ShareDepth[]): HTMLElement {
  const wrap = el("span", { className: "share-control", dataset: { shareFor: nodeId } });
  const select = el("select", { className: "share-depth" }) as HTMLSelectElement;
  for (const depth of depths) {
    select.append(el("option", { attrs: { value: depth } }, depth.replace("_", " ")));
  }
  const button = el("button", { className: "share-node", attrs: { type: "button" } }, "Share");
  button.addEventListener("click", () => {
    void store.shareNode(nodeId, select.value as ShareDepth, (text) =>
      navigator.clipboard.writeText(text),
    );
  });
  wrap.append(select, button);
  return wrap;
}

function rollingItem(store: RecapStore, rolling: RollingNote): HTMLElement {
  const item = el("li", {
    className: "rolling-note",
    dataset: { rollingId: rolling.rolling_id },
  });
  if (store.emphasizedRolling === rolling.rolling_id) {
    item.classList.add("emphasized");
  }
  const markers = el("span", { className: "rolling-markers" });
  const doc = store.document();
  const byId = new Map(
    [...(doc.highlights?.key_points ?? []), ...(doc.highlights?.action_items ?? [])].map((n) => [
      n.note_id,
      n,
    ]),
  );
  for (const markerId of rolling.markers) {
    const note = byId.get(markerId);
    if (!note || note.deleted) continue;
    markers.append(
      el("span", { className: "marker", dataset: { markerFor: markerId } }, note.kind === "key_point" ? "★" : "☐"),
    );
  }
  const summary = el("span", { className: "rolling-summary" }, rolling.summary);
  const edit = el("button", { className: "edit-rolling", attrs: { type: "button" } }, "Edit");
  edit.addEventListener("click", () => {
    inlineEditor(summary, rolling.summary, (value) =>
      void store.editRollingNote(rolling.rolling_id, value),
    );
  });
  const span = el(
    "span",
    { className: "rolling-span" },
    `(${rolling.span[0]}–${rolling.span[1]})`,
  );
  item.append(markers, summary, span, edit, shareControl(store, rolling.rolling_id, ["notes"]));
  return item;
}

function chapterSection(store: RecapStore, chapter: Chapter): HTMLElement {
  const expanded = store.expandedChapters.has(chapter.chapter_id);
  const section = el("section", {
    className: `chapter ${expanded ? "expanded" : "collapsed"}`,
    dataset: { chapterId: chapter.chapter_id },
  });

  const header = el("header", { className: "chapter-header" });
  const title = el("span", { className: "chapter-title" }, chapter.title);
  const editTitle = el("button", { className: "edit-title", attrs: { type: "button" } }, "Edit");
  editTitle.addEventListener("click", (event) => {
    event.stopPropagation();
    inlineEditor(title, chapter.title, (value) =>
      void store.editChapterTitle(chapter.chapter_id, value),
    );
  });
  const timespan = el(
    "button",
    { className: "chapter-timespan", attrs: { type: "button" } },
    `${formatClock(chapter.timespan[0])}–${formatClock(chapter.timespan[1])}`,
  );
  timespan.addEventListener("click", (event) => {
    event.stopPropagation();
    void (expanded
      ? store.collapseChapter(chapter.chapter_id)
      : store.expandChapter(chapter.chapter_id));
  });

  // Clicking a badge expands the chapter and emphasizes the first marked
  // rolling note of that kind.
  const starBadge = el(
    "button",
    { className: "badge star-badge", attrs: { type: "button" } },
    `★ ${chapter.star_count}`,
  );
  const boxBadge = el(
    "button",
    { className: "badge checkbox-badge", attrs: { type: "button" } },
    `☐ ${chapter.checkbox_count}`,
  );
  const firstMarked = (kind: "key_point" | "action_item"): string | undefined => {
    const doc = store.document();
    const byId = new Map(
      [...(doc.highlights?.key_points ?? []), ...(doc.highlights?.action_items ?? [])].map((n) => [
        n.note_id,
        n,
      ]),
    );
    for (const rolling of chapter.rolling_notes) {
      for (const markerId of rolling.markers) {
        const note = byId.get(markerId);
        if (note && !note.deleted && note.kind === kind) return rolling.rolling_id;
      }
    }
    return undefined;
  };
  starBadge.addEventListener("click", (event) => {
    event.stopPropagation();
    void store.expandChapter(chapter.chapter_id, firstMarked("key_point"));
  });
  boxBadge.addEventListener("click", (event) => {
    event.stopPropagation();
    void store.expandChapter(chapter.chapter_id, firstMarked("action_item"));
  });

  header.append(title, editTitle, timespan, starBadge, boxBadge);
  header.addEventListener("click", () => {
    void (expanded
      ? store.collapseChapter(chapter.chapter_id)
      : store.expandChapter(chapter.chapter_id));
  });
  section.append(header);
  section.append(el("p", { className: "chapter-one-liner" }, chapter.one_liner));

  if (expanded) {
    const list = el("ul", { className: "rolling-notes" });
    for (const rolling of chapter.rolling_notes) list.append(rollingItem(store, rolling));
    section.append(list, shareControl(store, chapter.chapter_id, ["one_liner", "notes", "full"]));
  }
  return section;
}

export function renderHierarchical(store: RecapStore, root: HTMLElement): void {
  root.replaceChildren();
  const collapseAll = el(
    "button",
    { className: "collapse-all", attrs: { type: "button" } },
    "Collapse all",
  );
  collapseAll.addEventListener("click", () => void store.collapseAll());
  root.append(collapseAll);
  for (const chapter of store.document().chapters ?? []) {
    root.append(chapterSection(store, chapter));
  }
  const emphasized = root.querySelector(".rolling-note.emphasized");
  if (emphasized) {
    try {
      (emphasized as HTMLElement).scrollIntoView({ block: "center" });
    } catch {
      // scrollIntoView is unavailable under jsdom; emphasis class suffices.
    }
  }
}
