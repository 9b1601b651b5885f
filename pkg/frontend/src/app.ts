import { ApiClient, ApiError } from "./api.js";
import type { NextPayload, StatsPayload } from "./types.js";
import {
  renderDone,
  renderErrorBanner,
  renderNotice,
  renderPredictions,
  renderReport,
  renderStatsBar,
} from "./view.js";

export interface AppState {
  payload: NextPayload | null;
  selected: Set<string>;
  focusIndex: number;
  done: boolean;
  stats: StatsPayload | null;
  error: string | null;
  notice: string | null;
  searchResults: string[];
  searchOpen: boolean;
}

export interface TriageApp {
  state: AppState;
  loadNext(): Promise<void>;
  confirmSelected(): Promise<void>;
  confirmEmpty(): Promise<void>;
  setSelection(labels: string[]): void;
  toggleFocused(): void;
  toggleLabel(label: string): void;
  moveFocus(delta: number): void;
  search(query: string): Promise<void>;
  addFromSearch(label: string): void;
  refreshStats(): Promise<void>;
  handleKey(event: KeyboardEvent): void;
  render(): void;
}

export function createApp(root: HTMLElement, api: ApiClient): TriageApp {
  const state: AppState = {
    payload: null,
    selected: new Set(),
    focusIndex: 0,
    done: false,
    stats: null,
    error: null,
    notice: null,
    searchResults: [],
    searchOpen: false,
  };

  function render(): void {
    root.replaceChildren();
    if (state.error) {
      const banner = renderErrorBanner(state.error);
      banner.querySelector("[data-action=retry]")?.addEventListener("click", () => {
        void loadNext();
      });
      root.appendChild(banner);
      return;
    }
    if (state.done) {
      root.appendChild(renderDone(state.stats));
      return;
    }
    if (!state.payload) return;

    root.appendChild(renderStatsBar(state.stats));
    root.appendChild(renderReport(state.payload.report));
    const predictions = renderPredictions(state.payload, state.selected, state.focusIndex);
    predictions.querySelectorAll<HTMLElement>(".prediction-row").forEach((row) => {
      row.addEventListener("click", () => {
        if (row.dataset.label) toggleLabel(row.dataset.label);
      });
    });
    root.appendChild(predictions);
    if (state.notice) root.appendChild(renderNotice(state.notice));

    const search = document.createElement("div");
    search.className = "label-search";
    const input = document.createElement("input");
    input.type = "search";
    input.placeholder = "add label (/)";
    input.id = "label-search-input";
    input.addEventListener("input", () => void searchLabels(input.value));
    search.appendChild(input);
    const results = document.createElement("ul");
    results.className = "search-results";
    for (const label of state.searchResults) {
      const item = document.createElement("li");
      item.textContent = label;
      item.dataset.label = label;
      item.addEventListener("click", () => addFromSearch(label));
      results.appendChild(item);
    }
    search.appendChild(results);
    root.appendChild(search);

    const help = document.createElement("footer");
    help.className = "help";
    help.textContent =
      "enter confirm - space toggle - arrows move - s skip (empty confirm) - / search";
    root.appendChild(help);
  }

  async function loadNext(): Promise<void> {
    state.error = null;
    state.notice = null;
    state.searchResults = [];
    try {
      const payload = await api.nextReport();
      if (payload === null) {
        state.done = true;
        state.payload = null;
        await refreshStats().catch(() => undefined);
      } else {
        state.payload = payload;
        // the editable confirmation set starts as the service's top-k
        state.selected = new Set(payload.predictions.map((row) => row.label));
        state.focusIndex = 0;
        state.done = false;
      }
    } catch (err) {
      state.error = err instanceof Error ? `service unreachable: ${err.message}` : "service unreachable";
    }
    render();
  }

  async function confirm(labels: string[]): Promise<void> {
    if (!state.payload) return;
    const reportId = state.payload.report.id;
    try {
      await api.confirmLabels(reportId, labels);
      await refreshStats().catch(() => undefined);
      await loadNext();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        // somebody else advanced the queue; resync from the service
        await loadNext();
      } else if (err instanceof ApiError && err.status === 422) {
        state.notice = err.detail;
        render();
      } else {
        state.error = err instanceof Error ? err.message : "confirmation failed";
        render();
      }
    }
  }

  async function confirmSelected(): Promise<void> {
    await confirm([...state.selected].sort());
  }

  async function confirmEmpty(): Promise<void> {
    await confirm([]);
  }

  function setSelection(labels: string[]): void {
    state.selected = new Set(labels);
    render();
  }

  function toggleLabel(label: string): void {
    if (state.selected.has(label)) state.selected.delete(label);
    else state.selected.add(label);
    render();
  }

  function toggleFocused(): void {
    const row = state.payload?.predictions[state.focusIndex];
    if (row) toggleLabel(row.label);
  }

  function moveFocus(delta: number): void {
    const count = state.payload?.predictions.length ?? 0;
    if (!count) return;
    state.focusIndex = Math.min(Math.max(state.focusIndex + delta, 0), count - 1);
    render();
  }

  async function searchLabels(query: string): Promise<void> {
    if (!query.trim()) {
      state.searchResults = [];
      render();
      return;
    }
    try {
      state.searchResults = await api.searchLabels(query);
    } catch {
      state.searchResults = [];
    }
    renderSearchResultsOnly();
  }

  function renderSearchResultsOnly(): void {
    // avoid re-rendering the input (which would lose focus mid-typing)
    const results = root.querySelector(".search-results");
    if (!results) return;
    results.replaceChildren();
    for (const label of state.searchResults) {
      const item = document.createElement("li");
      item.textContent = label;
      item.dataset.label = label;
      item.addEventListener("click", () => addFromSearch(label));
      results.appendChild(item);
    }
  }

  function addFromSearch(label: string): void {
    state.selected.add(label);
    state.searchResults = [];
    render();
  }

  async function refreshStats(): Promise<void> {
    state.stats = await api.stats();
  }

  function handleKey(event: KeyboardEvent): void {
    const target = event.target as HTMLElement | null;
    if (target && target.tagName === "INPUT") {
      if (event.key === "Escape") (target as HTMLInputElement).blur();
      return;
    }
    switch (event.key) {
      case "ArrowDown":
      case "j":
        moveFocus(+1);
        event.preventDefault();
        break;
      case "ArrowUp":
      case "k":
        moveFocus(-1);
        event.preventDefault();
        break;
      case " ":
        toggleFocused();
        event.preventDefault();
        break;
      case "Enter":
        void confirmSelected();
        event.preventDefault();
        break;
      case "s":
        void confirmEmpty();
        event.preventDefault();
        break;
      case "/": {
        const input = root.querySelector<HTMLInputElement>("#label-search-input");
        input?.focus();
        event.preventDefault();
        break;
      }
    }
  }

  return {
    state,
    loadNext,
    confirmSelected,
    confirmEmpty,
    setSelection,
    toggleFocused,
    toggleLabel,
    moveFocus,
    search: searchLabels,
    addFromSearch,
    refreshStats,
    handleKey,
    render,
  };
}
