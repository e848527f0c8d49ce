import type { FetchLike } from "../src/api.js"
import type { RankedResult, VocabEntry } from "../src/types.js"

export const FIXTURE_VOCAB: VocabEntry[] = [
  { lemma: "rotate", type: "Manner", index: 0 },
  { lemma: "press", type: "Manner", index: 1 },
  { lemma: "turn off", type: "Result", index: 2 },
  { lemma: "open", type: "Result", index: 3 },
]

export const FINGERPRINT = "f".repeat(64)

/** Fixture corpus: a tap turned off by rotating vs one turned off by pressing. */
export const VIDEO_SCORES: Record<string, number[]> = {
  tap_rotate: [0.8, 0.05, 0.9, 0.1],
  tap_press: [0.06, 0.8, 0.89, 0.1],
  door_open: [0.1, 0.09, 0.05, 0.95],
}

function minScore(videoId: string, verbs: string[]): number {
  const scores = VIDEO_SCORES[videoId]!
  return Math.min(
    ...verbs.map((v) => scores[FIXTURE_VOCAB.findIndex((e) => e.lemma === v)]!),
  )
}

export interface RecordedRequest {
  url: string
  method: string
  body: Record<string, unknown> | null
  signal: AbortSignal | undefined
}

export interface FixtureService {
  fetch: FetchLike
  requests: RecordedRequest[]
  /** requests for one endpoint suffix, e.g. "/v1/retrieve/text" */
  of(path: string): RecordedRequest[]
}

function json(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  })
}

/** In-memory /v1 service with the conjunctive min-scoring semantics. */
export function fixtureService(
  overrides: { datasets?: Record<string, string> } = {},
): FixtureService {
  const datasetOf: Record<string, string> =
    overrides.datasets ?? { tap_rotate: "A", tap_press: "A", door_open: "A" }
  const requests: RecordedRequest[] = []

  const fetchImpl: FetchLike = async (url, init) => {
    const body = init?.body ? (JSON.parse(init.body as string) as any) : null
    requests.push({
      url,
      method: init?.method ?? "GET",
      body,
      signal: init?.signal ?? undefined,
    })
    if (init?.signal?.aborted) {
      throw new DOMException("aborted", "AbortError")
    }
    if (url.endsWith("/v1/vocab")) {
      return json(200, { fingerprint: FINGERPRINT, verbs: FIXTURE_VOCAB })
    }
    if (url.includes("/v1/videos/")) {
      const id = decodeURIComponent(url.split("/v1/videos/")[1]!)
      if (!(id in VIDEO_SCORES)) {
        return json(404, { detail: `unknown video id '${id}'` })
      }
      return json(200, {
        fingerprint: FINGERPRINT,
        video_id: id,
        dataset_id: datasetOf[id],
        scores: VIDEO_SCORES[id],
        gt: null,
      })
    }
    if (url.endsWith("/v1/retrieve/text")) {
      const verbs = body.verbs as string[]
      const unknown = verbs.find(
        (v) => !FIXTURE_VOCAB.some((e) => e.lemma === v),
      )
      if (unknown) return json(400, { detail: `unknown verb lemma '${unknown}'` })
      const ranked: RankedResult[] = Object.keys(VIDEO_SCORES)
        .map((id) => ({ video_id: id, score: minScore(id, verbs) }))
        .sort((a, b) => b.score - a.score || a.video_id.localeCompare(b.video_id))
      const offset = (body.offset ?? 0) as number
      const limit = (body.limit ?? 0) as number
      return json(200, {
        fingerprint: FINGERPRINT,
        query: { protocol: "text_to_video", verbs },
        total: ranked.length,
        offset,
        results: limit === 0 ? ranked.slice(offset) : ranked.slice(offset, offset + limit),
      })
    }
    if (url.endsWith("/v1/retrieve/video")) {
      const id = body.video_id as string
      if (!(id in VIDEO_SCORES)) {
        return json(404, { detail: `unknown video id '${id}'` })
      }
      if (body.cross_dataset && new Set(Object.values(datasetOf)).size < 2) {
        return json(400, {
          detail: "cross-dataset retrieval needs at least two datasets",
        })
      }
      const q = VIDEO_SCORES[id]!
      const cosine = (a: number[], b: number[]) => {
        const dot = a.reduce((s, x, i) => s + x * b[i]!, 0)
        const na = Math.hypot(...a)
        const nb = Math.hypot(...b)
        return dot / (na * nb)
      }
      const ranked = Object.entries(VIDEO_SCORES)
        .filter(([other]) => other !== id)
        .filter(([other]) => !body.cross_dataset || datasetOf[other] !== datasetOf[id])
        .map(([other, scores]) => ({ video_id: other, score: cosine(q, scores) }))
        .sort((a, b) => b.score - a.score || a.video_id.localeCompare(b.video_id))
      const offset = (body.offset ?? 0) as number
      const limit = (body.limit ?? 0) as number
      return json(200, {
        fingerprint: FINGERPRINT,
        query: { protocol: "video_to_video", video_id: id },
        total: ranked.length,
        offset,
        results: limit === 0 ? ranked.slice(offset) : ranked.slice(offset, offset + limit),
      })
    }
    return json(404, { detail: `no route for ${url}` })
  }

  return {
    fetch: fetchImpl,
    requests,
    of: (path: string) => requests.filter((r) => r.url.endsWith(path)),
  }
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0))
}
