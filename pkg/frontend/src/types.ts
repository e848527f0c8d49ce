export type VerbType = "Manner" | "Result"

export interface VocabEntry {
  lemma: string
  type: VerbType
  index: number
}

export interface VocabResponse {
  fingerprint: string
  verbs: VocabEntry[]
}

export interface DatasetsResponse {
  fingerprint: string
  datasets: { id: string; videos: number }[]
}

export interface VideoDetail {
  fingerprint: string
  video_id: string
  dataset_id: string
  scores: number[]
  gt: unknown | null
}

export interface RankedResult {
  video_id: string
  score: number
}

export interface RetrievalResponse {
  fingerprint: string
  query: Record<string, unknown>
  total: number
  offset: number
  results: RankedResult[]
}

export type ScoringMode = "min" | "mean"

export interface TextQueryBody {
  verbs: string[]
  mode: ScoringMode
  limit: number
  offset: number
}

export interface VideoQueryBody {
  video_id: string
  cross_dataset: boolean
  limit: number
  offset: number
}
