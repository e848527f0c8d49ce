import type {
  DatasetsResponse,
  RetrievalResponse,
  TextQueryBody,
  VideoDetail,
  VideoQueryBody,
  VocabResponse,
} from "./types.js"

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>

/** Error carrying the HTTP status and the service's `detail` message. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail)
    this.name = "ApiError"
  }
}

async function parseOrThrow<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = `request failed with status ${response.status}`
    try {
      const body = (await response.json()) as { detail?: unknown }
      if (typeof body.detail === "string") detail = body.detail
    } catch {
      // non-JSON error body; keep the generic message
    }
    throw new ApiError(response.status, detail)
  }
  return (await response.json()) as T
}

/** Thin typed wrapper over the /v1 endpoints; adds no logic of its own. */
export class ApiClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private url(path: string): string {
    return this.baseUrl.replace(/\/$/, "") + path
  }

  getVocab(): Promise<VocabResponse> {
    return this.fetchFn(this.url("/v1/vocab")).then((r) => parseOrThrow<VocabResponse>(r))
  }

  getDatasets(): Promise<DatasetsResponse> {
    return this.fetchFn(this.url("/v1/datasets")).then((r) =>
      parseOrThrow<DatasetsResponse>(r),
    )
  }

  getVideo(videoId: string): Promise<VideoDetail> {
    return this.fetchFn(this.url(`/v1/videos/${encodeURIComponent(videoId)}`)).then(
      (r) => parseOrThrow<VideoDetail>(r),
    )
  }

  retrieveText(body: TextQueryBody, signal?: AbortSignal): Promise<RetrievalResponse> {
    return this.fetchFn(this.url("/v1/retrieve/text"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    }).then((r) => parseOrThrow<RetrievalResponse>(r))
  }

  retrieveVideo(body: VideoQueryBody, signal?: AbortSignal): Promise<RetrievalResponse> {
    return this.fetchFn(this.url("/v1/retrieve/video"), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    }).then((r) => parseOrThrow<RetrievalResponse>(r))
  }
}
