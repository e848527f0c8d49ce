import { ApiClient, ApiError } from "./api.js"
import { renderQueryBuilder } from "./query_builder.js"
import { renderErrorBanner, renderResults, renderVerbBars } from "./results.js"
import {
  PAGE_SIZE,
  QueryState,
  canIssueTextQuery,
  decodeState,
  emptyState,
  encodeState,
  toggleVerb,
} from "./state.js"
import type { RetrievalResponse, VocabEntry } from "./types.js"

export interface AppElements {
  banner: HTMLElement
  builder: HTMLElement
  results: HTMLElement
}

/**
 * Explorer wiring: the view is re-derived from QueryState; every state
 * change re-issues at most one retrieval request, cancelling any request
 * still in flight. Navigation (query edits, find-similar pivots, back)
 * goes through the history API so sessions stay shareable.
 */
export class ExplorerApp {
  private vocab: VocabEntry[] = []
  private state: QueryState = emptyState()
  private inflight: AbortController | null = null
  private generation = 0

  constructor(
    private readonly api: ApiClient,
    private readonly elements: AppElements,
    private readonly history: Pick<History, "pushState"> = window.history,
    private readonly location: Pick<Location, "search"> = window.location,
  ) {}

  async start(): Promise<void> {
    try {
      const vocabResponse = await this.api.getVocab()
      this.vocab = vocabResponse.verbs
    } catch {
      // persistent banner; retried only by reloading, never in a loop
      renderErrorBanner(
        this.elements.banner,
        `service unreachable at ${this.api.baseUrl}; start it and reload`,
      )
      return
    }
    renderErrorBanner(this.elements.banner, null)
    const known = new Set(this.vocab.map((v) => v.lemma))
    this.state = decodeState(this.location.search, known)
    this.renderBuilder()
    await this.refresh(false)
  }

  getState(): QueryState {
    return this.state
  }

  /** Browser back/forward: re-derive the view from the restored URL. */
  async onPopState(search: string): Promise<void> {
    const known = new Set(this.vocab.map((v) => v.lemma))
    this.state = decodeState(search, known)
    this.renderBuilder()
    await this.refresh(false)
  }

  async setState(next: QueryState): Promise<void> {
    this.state = next
    this.renderBuilder()
    await this.refresh(true)
  }

  toggleVerb(lemma: string): Promise<void> {
    return this.setState(toggleVerb(this.state, lemma))
  }

  findSimilar(videoId: string): Promise<void> {
    return this.setState({ ...this.state, pivotVideoId: videoId, page: 0 })
  }

  private renderBuilder(): void {
    renderQueryBuilder(this.elements.builder, this.vocab, this.state, {
      onToggleVerb: (lemma) => void this.toggleVerb(lemma),
      onModeChange: (mode) =>
        void this.setState({ ...this.state, mode, page: 0, pivotVideoId: null }),
      onCrossDatasetChange: (enabled) =>
        void this.setState({ ...this.state, crossDataset: enabled, page: 0 }),
    })
  }

  private queryLabel(): string {
    if (this.state.pivotVideoId) return `videos similar to ${this.state.pivotVideoId}`
    return `{${this.state.verbs.join(", ")}}`
  }

  private async refresh(push: boolean): Promise<void> {
    if (push) {
      const encoded = encodeState(this.state)
      this.history.pushState(null, "", encoded ? `?${encoded}` : "?")
    }
    this.inflight?.abort()
    const controller = new AbortController()
    this.inflight = controller
    const generation = ++this.generation

    if (!this.state.pivotVideoId && !canIssueTextQuery(this.state)) {
      this.elements.results.textContent = ""
      return
    }

    let response: RetrievalResponse
    try {
      if (this.state.pivotVideoId) {
        response = await this.api.retrieveVideo(
          {
            video_id: this.state.pivotVideoId,
            cross_dataset: this.state.crossDataset,
            limit: PAGE_SIZE,
            offset: this.state.page * PAGE_SIZE,
          },
          controller.signal,
        )
      } else {
        response = await this.api.retrieveText(
          {
            verbs: this.state.verbs,
            mode: this.state.mode,
            limit: PAGE_SIZE,
            offset: this.state.page * PAGE_SIZE,
          },
          controller.signal,
        )
      }
    } catch (error) {
      if (controller.signal.aborted) return
      const message =
        error instanceof ApiError
          ? `query failed (${error.status}): ${error.message}`
          : `service unreachable at ${this.api.baseUrl}`
      renderErrorBanner(this.elements.banner, message)
      return
    }
    if (generation !== this.generation) return
    renderErrorBanner(this.elements.banner, null)

    renderResults(
      this.elements.results,
      response,
      { onFindSimilar: (videoId) => void this.findSimilar(videoId) },
      { queryLabel: this.queryLabel() },
    )
    await this.fillBars(response, generation)
  }

  private async fillBars(response: RetrievalResponse, generation: number): Promise<void> {
    await Promise.all(
      response.results.map(async (item) => {
        try {
          const detail = await this.api.getVideo(item.video_id)
          if (generation !== this.generation) return
          const card = this.elements.results.querySelector<HTMLElement>(
            `[data-video-id="${item.video_id}"]`,
          )
          if (card) renderVerbBars(card, detail, this.vocab)
        } catch {
          // cards remain usable without bars
        }
      }),
    )
  }
}

export function mount(root: Document, apiBaseUrl: string): ExplorerApp {
  const banner = root.querySelector<HTMLElement>("#banner")
  const builder = root.querySelector<HTMLElement>("#builder")
  const results = root.querySelector<HTMLElement>("#results")
  if (!banner || !builder || !results) {
    throw new Error("missing #banner, #builder, or #results containers")
  }
  const app = new ExplorerApp(new ApiClient(apiBaseUrl), { banner, builder, results })
  window.addEventListener("popstate", () => void app.onPopState(window.location.search))
  void app.start()
  return app
}
