import type { RetrievalResponse, VideoDetail, VocabEntry } from "./types.js"

export interface ResultsHandlers {
  onFindSimilar: (videoId: string) => void
}

const BAR_COUNT = 8

/** Scores are displayed to three decimals; bars carry the exact value too. */
export function formatScore(score: number): string {
  return score.toFixed(3)
}

/**
 * Ranked result cards, in exactly the order the service returned: this
 * renderer never sorts, filters, or rescores. Per-verb score bars fill in
 * once each card's detail record arrives.
 */
export function renderResults(
  root: HTMLElement,
  response: RetrievalResponse,
  handlers: ResultsHandlers,
  options: { queryLabel: string },
): void {
  root.textContent = ""

  const header = document.createElement("div")
  header.className = "results-header"
  header.dataset.role = "results-header"
  header.textContent =
    response.results.length === 0
      ? `No results for ${options.queryLabel}`
      : `${response.total} results for ${options.queryLabel}`
  root.appendChild(header)

  const list = document.createElement("ol")
  list.className = "result-list"
  list.dataset.role = "result-list"
  list.start = response.offset + 1
  for (const item of response.results) {
    const card = document.createElement("li")
    card.className = "result-card"
    card.dataset.videoId = item.video_id

    const title = document.createElement("div")
    title.className = "card-title"
    const name = document.createElement("span")
    name.className = "video-id"
    name.textContent = item.video_id
    const score = document.createElement("span")
    score.className = "query-score"
    score.dataset.score = String(item.score)
    score.textContent = formatScore(item.score)
    title.append(name, score)
    card.appendChild(title)

    const thumb = document.createElement("div")
    thumb.className = "thumb-placeholder"
    thumb.textContent = item.video_id
    card.appendChild(thumb)

    const bars = document.createElement("div")
    bars.className = "verb-bars"
    bars.dataset.role = "verb-bars"
    card.appendChild(bars)

    const similar = document.createElement("button")
    similar.type = "button"
    similar.className = "find-similar"
    similar.dataset.role = "find-similar"
    similar.textContent = "find similar"
    similar.addEventListener("click", () => handlers.onFindSimilar(item.video_id))
    card.appendChild(similar)

    list.appendChild(card)
  }
  root.appendChild(list)
}

/** Fill one card's bars from its served detail record (top verbs first). */
export function renderVerbBars(
  card: HTMLElement,
  detail: VideoDetail,
  vocab: VocabEntry[],
): void {
  const container = card.querySelector<HTMLElement>('[data-role="verb-bars"]')
  if (!container) return
  container.textContent = ""
  const ranked = detail.scores
    .map((score, index) => ({ score, index }))
    .sort((a, b) => b.score - a.score || a.index - b.index)
    .slice(0, BAR_COUNT)
  for (const { score, index } of ranked) {
    const entry = vocab[index]
    if (!entry) continue
    const row = document.createElement("div")
    row.className = "bar-row"
    const label = document.createElement("span")
    label.className =
      entry.type === "Manner" ? "bar-label label-manner" : "bar-label label-result"
    label.textContent = entry.lemma
    const track = document.createElement("div")
    track.className = "bar-track"
    const fill = document.createElement("div")
    fill.className = "bar-fill"
    fill.dataset.score = String(score)
    fill.style.width = `${Math.round(score * 100)}%`
    track.appendChild(fill)
    const value = document.createElement("span")
    value.className = "bar-value"
    value.textContent = formatScore(score)
    row.append(label, track, value)
    container.appendChild(row)
  }
}

export function renderErrorBanner(root: HTMLElement, message: string | null): void {
  root.textContent = ""
  if (message === null) {
    root.hidden = true
    return
  }
  root.hidden = false
  const banner = document.createElement("div")
  banner.className = "banner"
  banner.dataset.role = "error-banner"
  banner.textContent = message
  root.appendChild(banner)
}
