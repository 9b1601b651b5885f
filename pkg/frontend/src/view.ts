import type { NextPayload, PredictionRow, ReportPayload, StatsPayload } from "./types.js";

// All DOM built here displays service values verbatim; there is no
// client-side re-ranking or recomputation.

function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderReport(report: ReportPayload): HTMLElement {
  const card = el("section", "report-card");
  card.dataset.reportId = report.id;

  const header = el("header", "report-header");
  header.appendChild(el("h2", "report-id", report.id));
  header.appendChild(el("span", "report-date", report.published));
  card.appendChild(header);

  card.appendChild(el("p", "report-description", report.description));

  if (report.cpe.length) {
    const cpeBlock = el("div", "cpe-block");
    cpeBlock.appendChild(el("h3", "block-title", "CPE configuration"));
    for (const entry of report.cpe) {
      cpeBlock.appendChild(el("code", "cpe-entry", entry));
    }
    card.appendChild(cpeBlock);
  }

  if (report.references.length) {
    const refBlock = el("div", "ref-block");
    refBlock.appendChild(el("h3", "block-title", `References (${report.references.length})`));
    for (const ref of report.references) {
      const details = document.createElement("details");
      details.className = "reference";
      const summary = document.createElement("summary");
      summary.textContent = ref.title || ref.url;
      details.appendChild(summary);
      details.appendChild(el("div", "ref-url", ref.url));
      if (ref.text) details.appendChild(el("pre", "ref-text", ref.text));
      refBlock.appendChild(details);
    }
    card.appendChild(refBlock);
  }
  return card;
}

export function renderPredictionRow(
  row: PredictionRow,
  selected: boolean,
  focused: boolean,
): HTMLElement {
  const li = el("li", "prediction-row");
  if (focused) li.classList.add("focused");
  li.dataset.label = row.label;
  li.dataset.score = String(row.score);

  const checkbox = el("span", "checkbox", selected ? "[x]" : "[ ]");
  li.appendChild(checkbox);
  li.appendChild(el("span", "label-name", row.label));
  li.appendChild(el("span", "score", String(row.score)));

  if (row.in_cache) {
    const badge = el("span", "badge cache", `cache ${row.recency_index}`);
    badge.dataset.recency = String(row.recency_index);
    li.appendChild(badge);
  }
  if (row.version_transferred) {
    li.appendChild(el("span", "badge transfer", "version transfer"));
  }
  return li;
}

export function renderPredictions(
  payload: NextPayload,
  selected: Set<string>,
  focusIndex: number,
): HTMLElement {
  const wrap = el("section", "predictions");
  wrap.appendChild(el("h3", "block-title", "Predicted libraries"));
  const list = el("ul", "prediction-list");
  payload.predictions.forEach((row, idx) => {
    list.appendChild(renderPredictionRow(row, selected.has(row.label), idx === focusIndex));
  });
  wrap.appendChild(list);

  const extras = [...selected].filter(
    (label) => !payload.predictions.some((row) => row.label === label),
  );
  if (extras.length) {
    const added = el("div", "added-labels");
    added.appendChild(el("h3", "block-title", "Added manually"));
    for (const label of extras.sort()) {
      const chip = el("span", "chip", label);
      chip.dataset.label = label;
      added.appendChild(chip);
    }
    wrap.appendChild(added);
  }
  return wrap;
}

export function renderStatsBar(stats: StatsPayload | null): HTMLElement {
  const bar = el("aside", "stats-bar");
  if (!stats) {
    bar.appendChild(el("span", "stat", "no confirmations yet"));
    return bar;
  }
  bar.appendChild(el("span", "stat", `confirmed ${stats.confirmed}`));
  bar.appendChild(el("span", "stat", `remaining ${stats.remaining}`));
  bar.appendChild(
    el("span", "stat", `cache ${stats.cache.size}/${stats.cache.capacity}`),
  );
  if (stats.metrics) {
    bar.appendChild(el("span", "stat", `avg F1 ${stats.metrics.avg_f1.toFixed(3)}`));
  }
  bar.appendChild(el("span", "stat", `unseen hits ${stats.unseen_label_hits}`));
  return bar;
}

export function renderDone(stats: StatsPayload | null): HTMLElement {
  const card = el("section", "done-card");
  card.appendChild(el("h2", undefined, "Session complete"));
  card.appendChild(renderStatsBar(stats));
  return card;
}

export function renderErrorBanner(message: string): HTMLElement {
  const banner = el("div", "error-banner");
  banner.appendChild(el("span", "error-text", message));
  const button = el("button", "retry-button", "retry");
  button.setAttribute("data-action", "retry");
  banner.appendChild(button);
  return banner;
}

export function renderNotice(message: string): HTMLElement {
  return el("div", "notice", message);
}
