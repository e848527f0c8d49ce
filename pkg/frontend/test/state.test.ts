import { describe, expect, it } from "vitest"

import {
  canIssueTextQuery,
  decodeState,
  emptyState,
  encodeState,
  toggleVerb,
} from "../src/state.js"

describe("query state", () => {
  it("round-trips through the URL", () => {
    let state = emptyState()
    state = toggleVerb(state, "turn off")
    state = toggleVerb(state, "rotate")
    state = { ...state, mode: "mean", crossDataset: true, page: 2 }
    const decoded = decodeState(encodeState(state))
    expect(decoded).toEqual(state)
  })

  it("round-trips the find-similar pivot", () => {
    const state = { ...emptyState(), verbs: ["open"], pivotVideoId: "vid 7" }
    expect(decodeState(encodeState(state))).toEqual(state)
  })

  it("defaults are omitted from the encoded form", () => {
    expect(encodeState(emptyState())).toBe("")
  })

  it("toggle adds then removes, clearing any pivot", () => {
    let state = { ...emptyState(), pivotVideoId: "x", page: 3 }
    state = toggleVerb(state, "rotate")
    expect(state).toMatchObject({ verbs: ["rotate"], pivotVideoId: null, page: 0 })
    state = toggleVerb(state, "rotate")
    expect(state.verbs).toEqual([])
  })

  it("requires at least one verb for a text query", () => {
    expect(canIssueTextQuery(emptyState())).toBe(false)
    expect(canIssueTextQuery({ ...emptyState(), verbs: ["open"] })).toBe(true)
  })

  it("drops verbs outside the served vocabulary when decoding", () => {
    const known = new Set(["rotate", "open"])
    const decoded = decodeState("v=rotate%7Cflamb%C3%A9%7Copen", known)
    expect(decoded.verbs).toEqual(["rotate", "open"])
  })

  it("deduplicates verbs and sanitizes the page number", () => {
    expect(decodeState("v=a%7Ca&page=-3").verbs).toEqual(["a"])
    expect(decodeState("page=zzz").page).toBe(0)
  })
})
