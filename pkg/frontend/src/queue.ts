/**
 * Vetting queue: every NotReviewed version, oldest introduction first, with
 * approved same-category alternatives shown inline so the first checklist
 * question ("is there an approved component with the same functionality?")
 * answers itself.
 */

import { escapeHtml } from "./html.js";
import type { DependencyRow } from "./types.js";

/** Oldest introduced_date first; canonical coordinate breaks ties. */
export function orderQueue(rows: DependencyRow[]): DependencyRow[] {
  return [...rows].sort((a, b) => {
    if (a.introduced_date !== b.introduced_date) {
      return a.introduced_date < b.introduced_date ? -1 : 1;
    }
    return a.coordinate < b.coordinate ? -1 : a.coordinate > b.coordinate ? 1 : 0;
  });
}

/**
 * Approved libraries sharing the row's category, excluding the row's own
 * library. Purely a filter over rows the API already returned.
 */
export function approvedAlternatives(
  row: DependencyRow,
  approvedRows: DependencyRow[],
): string[] {
  if (!row.category) return [];
  const names = new Set<string>();
  for (const candidate of approvedRows) {
    if (candidate.category !== row.category) continue;
    if (candidate.group === row.group && candidate.name === row.name) continue;
    names.add(`${candidate.group}:${candidate.name}`);
  }
  return [...names].sort();
}

export function renderQueueRow(row: DependencyRow, alternatives: string[]): string {
  const vulns = row.vulnerability_ids.length
    ? `<span class="badge danger">${row.vulnerability_ids.length} advisories</span>`
    : `<span class="badge ok">no known advisories</span>`;
  const alternativesHtml = alternatives.length
    ? `<div class="alternatives">approved alternatives: ${alternatives
        .map((a) => `<code>${escapeHtml(a)}</code>`)
        .join(", ")}</div>`
    : `<div class="alternatives none">no approved alternative in this category yet</div>`;
  return `
    <li class="queue-row" data-version-id="${row.dependency_version_id}">
      <div class="coordinate"><code>${escapeHtml(row.coordinate)}</code></div>
      <div class="meta">
        introduced ${escapeHtml(row.introduced_date)} ·
        category ${escapeHtml(row.category ?? "(uncategorized)")} ·
        used by ${row.applications.map((a) => escapeHtml(a)).join(", ") || "(none)"}
      </div>
      ${vulns}
      ${alternativesHtml}
      <button class="open-checklist" data-version-id="${row.dependency_version_id}">review</button>
    </li>`;
}

export function renderQueue(rows: DependencyRow[], approvedRows: DependencyRow[]): string {
  if (rows.length === 0) {
    return `<p class="empty-state">Nothing waiting for review. New dependencies appear here the first time a build declares them.</p>`;
  }
  const ordered = orderQueue(rows);
  const items = ordered
    .map((row) => renderQueueRow(row, approvedAlternatives(row, approvedRows)))
    .join("\n");
  return `<ul class="queue">${items}</ul>`;
}
