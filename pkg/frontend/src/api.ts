// Thin typed client over fetch. Every ordering and score shown in the UI
// comes from these responses untouched.
import type {
  DistributionsResponse,
  GroupResponse,
  ProposalsResponse,
  SearchQueryBody,
  SearchResponse,
  SelectionRecord,
  SelectionsResponse,
  VideoDetail,
  VideoSummary,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
    public fields: Record<string, string> = {},
  ) {
    super(message);
  }
}

async function handle<T>(resp: Response): Promise<T> {
  if (resp.ok) {
    return (await resp.json()) as T;
  }
  let code = "http-error";
  let message = `${resp.status} ${resp.statusText}`;
  let fields: Record<string, string> = {};
  try {
    const body = await resp.json();
    if (body?.error) {
      code = body.error.code;
      message = body.error.message;
      fields = body.error.fields ?? {};
    }
  } catch {
    // non-JSON error body; keep the HTTP status text
  }
  throw new ApiError(resp.status, code, message, fields);
}

export class ReviewApi {
  constructor(private base: string = "") {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async listVideos(): Promise<VideoSummary[]> {
    const body = await handle<{ videos: VideoSummary[] }>(
      await fetch(this.url("/videos")),
    );
    return body.videos;
  }

  async video(videoId: string): Promise<VideoDetail> {
    return handle(await fetch(this.url(`/videos/${encodeURIComponent(videoId)}`)));
  }

  async proposals(
    videoId: string,
    preset: string,
    aspect: string,
  ): Promise<ProposalsResponse> {
    const params = new URLSearchParams({ preset, aspect });
    return handle(
      await fetch(
        this.url(`/videos/${encodeURIComponent(videoId)}/proposals?${params}`),
      ),
    );
  }

  async search(videoId: string, body: SearchQueryBody): Promise<SearchResponse> {
    return handle(
      await fetch(this.url(`/videos/${encodeURIComponent(videoId)}/search`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      }),
    );
  }

  async group(videoId: string, groupId: number): Promise<GroupResponse> {
    return handle(
      await fetch(
        this.url(`/videos/${encodeURIComponent(videoId)}/groups/${groupId}`),
      ),
    );
  }

  imageUrl(videoId: string, candidateId: string, aspect?: string): string {
    const suffix = aspect ? `?aspect=${encodeURIComponent(aspect)}` : "";
    return this.url(
      `/videos/${encodeURIComponent(videoId)}/images/${encodeURIComponent(candidateId)}${suffix}`,
    );
  }

  async selections(videoId: string): Promise<SelectionsResponse> {
    return handle(
      await fetch(this.url(`/videos/${encodeURIComponent(videoId)}/selections`)),
    );
  }

  async select(
    videoId: string,
    candidateId: string,
    aspect: string,
    chosenBy: string,
    note = "",
  ): Promise<SelectionRecord> {
    const body = await handle<{ record: SelectionRecord }>(
      await fetch(this.url(`/videos/${encodeURIComponent(videoId)}/selections`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({
          candidate_id: candidateId,
          aspect,
          chosen_by: chosenBy,
          note,
        }),
      }),
    );
    return body.record;
  }

  async addKeyword(
    videoId: string,
    text: string,
    embedding?: number[],
  ): Promise<string[]> {
    const body = await handle<{ id: string; keywords: string[] }>(
      await fetch(this.url(`/videos/${encodeURIComponent(videoId)}/keywords`), {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(embedding ? { text, embedding } : { text }),
      }),
    );
    return body.keywords;
  }

  async distributions(videoId: string): Promise<DistributionsResponse> {
    return handle(
      await fetch(
        this.url(`/videos/${encodeURIComponent(videoId)}/score-distributions`),
      ),
    );
  }
}
