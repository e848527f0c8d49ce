import type { QueryState } from "./state.js"
import type { VocabEntry } from "./types.js"

export interface QueryBuilderHandlers {
  onToggleVerb: (lemma: string) => void
  onModeChange: (mode: "min" | "mean") => void
  onCrossDatasetChange: (enabled: boolean) => void
}

/**
 * Vocabulary-bound verb chips: the selector only ever offers served lemmas,
 * so an unknown chip cannot be created. Manner and result verbs carry
 * distinct CSS classes for the colour split.
 */
export function renderQueryBuilder(
  root: HTMLElement,
  vocab: VocabEntry[],
  state: QueryState,
  handlers: QueryBuilderHandlers,
): void {
  root.textContent = ""

  const selectedRow = document.createElement("div")
  selectedRow.className = "selected-row"
  if (state.verbs.length === 0) {
    const hint = document.createElement("span")
    hint.className = "hint"
    hint.dataset.role = "query-hint"
    hint.textContent = "Pick at least one verb to run a query"
    selectedRow.appendChild(hint)
  } else {
    for (const lemma of state.verbs) {
      const chip = document.createElement("button")
      chip.type = "button"
      chip.className = "chip chip-selected"
      chip.dataset.lemma = lemma
      chip.textContent = `${lemma} ×`
      chip.addEventListener("click", () => handlers.onToggleVerb(lemma))
      selectedRow.appendChild(chip)
    }
  }
  root.appendChild(selectedRow)

  const toggles = document.createElement("div")
  toggles.className = "toggles"

  const modeLabel = document.createElement("label")
  const modeBox = document.createElement("input")
  modeBox.type = "checkbox"
  modeBox.dataset.role = "mode-toggle"
  modeBox.checked = state.mode === "mean"
  modeBox.addEventListener("change", () =>
    handlers.onModeChange(modeBox.checked ? "mean" : "min"),
  )
  modeLabel.append(modeBox, " mean scoring (default: every verb must apply)")
  toggles.appendChild(modeLabel)

  const xdLabel = document.createElement("label")
  const xdBox = document.createElement("input")
  xdBox.type = "checkbox"
  xdBox.dataset.role = "cross-dataset-toggle"
  xdBox.checked = state.crossDataset
  xdBox.addEventListener("change", () => handlers.onCrossDatasetChange(xdBox.checked))
  xdLabel.append(xdBox, " cross-dataset only (find similar)")
  toggles.appendChild(xdLabel)
  root.appendChild(toggles)

  const grid = document.createElement("div")
  grid.className = "verb-grid"
  for (const entry of vocab) {
    const chip = document.createElement("button")
    chip.type = "button"
    chip.dataset.lemma = entry.lemma
    chip.dataset.verbType = entry.type
    const selected = state.verbs.includes(entry.lemma)
    chip.className = [
      "chip",
      entry.type === "Manner" ? "chip-manner" : "chip-result",
      selected ? "chip-selected" : "",
    ]
      .filter(Boolean)
      .join(" ")
    chip.textContent = entry.lemma
    chip.addEventListener("click", () => handlers.onToggleVerb(entry.lemma))
    grid.appendChild(chip)
  }
  root.appendChild(grid)
}
