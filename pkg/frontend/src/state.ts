import type { ScoringMode } from "./types.js"

/**
 * The whole explorer view is a function of this state, and the state
 * round-trips through the URL so sessions are shareable. `pivotVideoId`
 * switches the view from a text query to a "find similar" ranking.
 */
export interface QueryState {
  verbs: string[] // ordered selection chips
  mode: ScoringMode
  crossDataset: boolean
  page: number
  pivotVideoId: string | null
}

export const PAGE_SIZE = 10

export function emptyState(): QueryState {
  return { verbs: [], mode: "min", crossDataset: false, page: 0, pivotVideoId: null }
}

/** At least one chip is required before a text query may be issued. */
export function canIssueTextQuery(state: QueryState): boolean {
  return state.verbs.length > 0
}

export function toggleVerb(state: QueryState, lemma: string): QueryState {
  const verbs = state.verbs.includes(lemma)
    ? state.verbs.filter((v) => v !== lemma)
    : [...state.verbs, lemma]
  // editing the query leaves any pivot view and restarts paging
  return { ...state, verbs, page: 0, pivotVideoId: null }
}

export function encodeState(state: QueryState): string {
  const params = new URLSearchParams()
  if (state.verbs.length > 0) params.set("v", state.verbs.join("|"))
  if (state.mode !== "min") params.set("mode", state.mode)
  if (state.crossDataset) params.set("xd", "1")
  if (state.page > 0) params.set("page", String(state.page))
  if (state.pivotVideoId) params.set("pivot", state.pivotVideoId)
  return params.toString()
}

export function decodeState(search: string, knownVerbs?: Set<string>): QueryState {
  const params = new URLSearchParams(search)
  const raw = params.get("v")
  let verbs = raw ? raw.split("|").filter((v) => v.length > 0) : []
  verbs = [...new Set(verbs)]
  if (knownVerbs) verbs = verbs.filter((v) => knownVerbs.has(v))
  const page = Number(params.get("page") ?? "0")
  return {
    verbs,
    mode: params.get("mode") === "mean" ? "mean" : "min",
    crossDataset: params.get("xd") === "1",
    page: Number.isFinite(page) && page > 0 ? Math.floor(page) : 0,
    pivotVideoId: params.get("pivot"),
  }
}
