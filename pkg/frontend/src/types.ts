/** Wire types for the /v1 recap service. Spans are inclusive [start, end]. */

export type Span = [number, number];

export type NoteKind = "key_point" | "action_item";

export interface Note {
  note_id: string;
  kind: NoteKind;
  summary: string;
  anchor: Span;
  context: Span;
  position: number;
  origin: "model" | "user";
  assignee: string | null;
  due_date: string | null;
  deleted: boolean;
  delete_reason: string | null;
}

export interface RollingNote {
  rolling_id: string;
  span: Span;
  summary: string;
  markers: string[];
  origin: "model" | "user";
}

export interface Chapter {
  chapter_id: string;
  range: Span;
  title: string;
  one_liner: string;
  timespan: [number, number];
  rolling_notes: RollingNote[];
  star_count: number;
  checkbox_count: number;
  collapsed: boolean;
}

export interface HighlightsView {
  key_points: Note[];
  action_items: Note[];
}

export interface RecapDocument {
  schema_version: number;
  meeting_id: string;
  version: number;
  transcript_ref: string;
  utterance_count: number;
  created_at: string | null;
  pipeline_config_snapshot: Record<string, unknown>;
  highlights?: HighlightsView;
  chapters?: Chapter[];
}

export interface Utterance {
  index: number;
  speaker: string;
  start: number;
  end: number | null;
  text: string;
}

export type FeedbackAction =
  | "add_note"
  | "edit_note"
  | "delete_note"
  | "mark_important"
  | "unmark_important"
  | "assign_task"
  | "set_due_date"
  | "reorder_note"
  | "edit_chapter_title"
  | "edit_rolling_note"
  | "collapse_chapter"
  | "expand_chapter"
  | "expand_context"
  | "share";

export type DeleteReason = "done" | "redundant" | "inaccurate" | "irrelevant" | "unspecified";

export const DELETE_REASONS: DeleteReason[] = ["done", "redundant", "inaccurate", "irrelevant"];

export type ShareDepth = "one_liner" | "notes" | "full";

export interface FeedbackEventBody {
  base_version: number;
  action: FeedbackAction;
  payload: Record<string, unknown>;
  actor?: string;
  delete_reason?: DeleteReason;
}

export interface EventAccepted {
  ok: true;
  newVersion: number;
}

export interface EventConflict {
  ok: false;
  status: 409;
  currentVersion: number;
}

export interface EventRejected {
  ok: false;
  status: number;
  error: string;
}

export type EventResult = EventAccepted | EventConflict | EventRejected;

export function liveNotes(view: HighlightsView | undefined): { keyPoints: Note[]; actionItems: Note[] } {
  return {
    keyPoints: (view?.key_points ?? []).filter((n) => !n.deleted),
    actionItems: (view?.action_items ?? []).filter((n) => !n.deleted),
  };
}

/** Chapter owning a note anchor, by range containment. */
export function owningChapter(chapters: Chapter[], anchorIndex: number): Chapter | undefined {
  return chapters.find((ch) => ch.range[0] <= anchorIndex && anchorIndex <= ch.range[1]);
}
