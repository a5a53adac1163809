/**
 * Dashboards render report responses verbatim: every number on screen is a
 * field of a /v1/reports payload, never recomputed client-side.
 */

import { escapeHtml } from "./html.js";
import type {
  CategoryBreakdownRow,
  DuplicationCategory,
  EcosystemStats,
  VulnSummaryRow,
} from "./types.js";

export function renderBreakdownChart(rows: CategoryBreakdownRow[]): string {
  if (rows.length === 0) return `<p class="empty-state">No libraries recorded yet.</p>`;
  const widest = rows[0].distinct_libraries; // rows arrive sorted largest-first
  const bars = rows
    .map((row) => {
      const width = widest > 0 ? Math.round((row.distinct_libraries / widest) * 100) : 0;
      return `
      <div class="bar-row">
        <span class="bar-label">${escapeHtml(row.category)}</span>
        <span class="bar" style="width:${width}%"></span>
        <span class="bar-value">${row.distinct_libraries}</span>
      </div>`;
    })
    .join("\n");
  return `<div class="chart">${bars}</div>`;
}

export function renderVulnTable(category: string, rows: VulnSummaryRow[]): string {
  const body = rows
    .map(
      (row) => `
      <tr class="${row.vuln_count > 0 ? "vulnerable" : ""}">
        <td>${escapeHtml(row.library)}</td>
        <td>${escapeHtml(row.group)}</td>
        <td class="num">${row.vuln_count}</td>
        <td class="num">${row.version_count}</td>
      </tr>`,
    )
    .join("\n");
  return `
    <table class="report">
      <caption>${escapeHtml(category)}</caption>
      <thead><tr><th>Library</th><th>Group</th><th># Vulns</th><th># Versions</th></tr></thead>
      <tbody>${body}</tbody>
    </table>`;
}

export function renderStatsPanel(stats: EcosystemStats): string {
  const perEcosystem = Object.entries(stats.repositories_by_ecosystem)
    .map(([name, count]) => `<li>${escapeHtml(name)}: ${count}</li>`)
    .join("");
  return `
    <dl class="stats">
      <dt>Repositories</dt><dd>${stats.repositories_total}</dd>
      <dt>By ecosystem</dt><dd><ul>${perEcosystem}</ul></dd>
      <dt>Tracked library versions</dt><dd>${stats.distinct_library_versions}</dd>
      <dt>Open vulnerabilities</dt><dd>${stats.total_open_vulnerabilities}</dd>
      <dt>New vulnerabilities/day</dt><dd>${stats.new_vulns_per_day}</dd>
    </dl>`;
}

export function renderDuplicationList(rows: DuplicationCategory[]): string {
  if (rows.length === 0) return `<p class="empty-state">No category exceeds the threshold.</p>`;
  const sections = rows
    .map((category) => {
      const members = category.members
        .map(
          (m) => `
          <li>
            <code>${escapeHtml(m.group)}:${escapeHtml(m.library)}</code>
            · ${m.vuln_count} vulns · latest ${escapeHtml(m.latest_version)}
            · ${m.statuses.map((s) => escapeHtml(s)).join("/")}
          </li>`,
        )
        .join("\n");
      return `
      <section class="duplication">
        <h3>${escapeHtml(category.category)} — ${category.distinct_libraries} libraries</h3>
        <ol>${members}</ol>
      </section>`;
    })
    .join("\n");
  return sections;
}
