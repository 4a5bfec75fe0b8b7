import type {
  ErrorBody,
  KeyframeInfo,
  QaResponse,
  RerankResponse,
  SearchHit,
  TextHit,
  VideoGroup,
} from "./types";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** Thin typed client over the engine's JSON API; fetch is injectable for tests. */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      let code = "http_error";
      let message = `${resp.status}`;
      try {
        const parsed = (await resp.json()) as ErrorBody;
        code = parsed.error.code;
        message = parsed.error.message;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(resp.status, code, message);
    }
    return (await resp.json()) as T;
  }

  search(text: string, k?: number, alpha?: number): Promise<{ hits: SearchHit[] }> {
    return this.request("POST", "/search", { text, k, alpha });
  }

  searchGrouped(text: string, k?: number, alpha?: number): Promise<{ groups: VideoGroup[] }> {
    return this.request("POST", "/search", { text, k, alpha, group: true });
  }

  searchText(query: string, source?: "ocr" | "asr", k?: number): Promise<{ hits: TextHit[] }> {
    return this.request("POST", "/search/text", { query, source, k });
  }

  rerankQuestions(query: string): Promise<{ questions: string[] }> {
    return this.request("POST", "/rerank/questions", { query });
  }

  rerankExecute(
    query: string,
    questions: string[],
    hits: string[],
    budget?: number,
  ): Promise<RerankResponse> {
    return this.request("POST", "/rerank/execute", { query, questions, hits, budget });
  }

  qa(question: string, target: { keyframe_id?: string; video_id?: string }, maxFrames?: number): Promise<QaResponse> {
    return this.request("POST", "/qa", { question, ...target, max_frames: maxFrames });
  }

  keyframes(videoId: string): Promise<{ video_id: string; keyframes: KeyframeInfo[] }> {
    return this.request("GET", `/videos/${encodeURIComponent(videoId)}/keyframes`);
  }
}
