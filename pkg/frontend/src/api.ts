/** Thin typed client for the /v1 endpoints. Only network access in the app. */

import type {
  EventResult,
  FeedbackEventBody,
  RecapDocument,
  ShareDepth,
  Utterance,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientOptions {
  baseUrl?: string;
  actor: string;
  fetchImpl?: FetchLike;
}

export class RecapClient {
  private readonly baseUrl: string;
  readonly actor: string;
  private readonly fetchImpl: FetchLike;

  constructor(options: ClientOptions) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.actor = options.actor;
    this.fetchImpl = options.fetchImpl ?? ((input, init) => fetch(input, init));
  }

  private headers(extra?: Record<string, string>): Record<string, string> {
    return { "X-Actor": this.actor, ...extra };
  }

  async createMeeting(
    transcript: string,
    format?: "plain" | "srt" | "vtt",
  ): Promise<{ meetingId: string; pending: boolean }> {
    const query = format ? `?format=${format}` : "";
    const response = await this.fetchImpl(`${this.baseUrl}/v1/meetings${query}`, {
      method: "POST",
      body: transcript,
      headers: this.headers({ "Content-Type": "text/plain" }),
    });
    if (response.status !== 201 && response.status !== 202) {
      throw new Error(`ingestion failed (${response.status}): ${await response.text()}`);
    }
    const body = (await response.json()) as { meeting_id: string };
    return { meetingId: body.meeting_id, pending: response.status === 202 };
  }

  async status(meetingId: string): Promise<string> {
    const response = await this.fetchImpl(`${this.baseUrl}/v1/meetings/${meetingId}/status`, {
      headers: this.headers(),
    });
    if (!response.ok) throw new Error(`status failed (${response.status})`);
    return ((await response.json()) as { status: string }).status;
  }

  async getRecap(meetingId: string, view: "highlights" | "hierarchical" | "both" = "both"): Promise<RecapDocument> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/meetings/${meetingId}/recap?view=${view}`,
      { headers: this.headers() },
    );
    if (!response.ok) throw new Error(`recap fetch failed (${response.status})`);
    return (await response.json()) as RecapDocument;
  }

  async postEvent(meetingId: string, body: FeedbackEventBody): Promise<EventResult> {
    const response = await this.fetchImpl(`${this.baseUrl}/v1/meetings/${meetingId}/events`, {
      method: "POST",
      body: JSON.stringify({ ...body, actor: this.actor }),
      headers: this.headers({ "Content-Type": "application/json" }),
    });
    if (response.status === 200) {
      const data = (await response.json()) as { new_version: number };
      return { ok: true, newVersion: data.new_version };
    }
    if (response.status === 409) {
      const data = (await response.json()) as { current_version: number };
      return { ok: false, status: 409, currentVersion: data.current_version };
    }
    const data = (await response.json().catch(() => ({ error: response.statusText }))) as {
      error?: string;
    };
    return { ok: false, status: response.status, error: data.error ?? "request rejected" };
  }

  /** Raw transcript span; the service only serves this to the meeting owner. */
  async utterances(meetingId: string, start: number, end: number): Promise<Utterance[]> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/meetings/${meetingId}/utterances?start=${start}&end=${end}`,
      { headers: this.headers() },
    );
    if (!response.ok) throw new Error(`utterances fetch failed (${response.status})`);
    return ((await response.json()) as { utterances: Utterance[] }).utterances;
  }

  async markdownForNode(meetingId: string, nodeId: string, depth: ShareDepth): Promise<string> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/meetings/${meetingId}/export/markdown?node=${encodeURIComponent(nodeId)}&depth=${depth}`,
      { headers: this.headers() },
    );
    if (!response.ok) throw new Error(`markdown export failed (${response.status})`);
    return await response.text();
  }
}
