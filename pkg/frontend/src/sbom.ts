/** Read-only per-application SBOM view and gate-decision timeline. */

import { escapeHtml } from "./html.js";
import type { DecisionHistory, Sbom } from "./types.js";

export function renderSbom(sbom: Sbom): string {
  const rows = sbom.dependencies
    .map(
      (dep) => `
      <tr>
        <td>${escapeHtml(dep.ecosystem)}</td>
        <td>${escapeHtml(dep.group)}</td>
        <td>${escapeHtml(dep.name)}</td>
        <td>${escapeHtml(dep.version)}${dep.spec ? ` <small>(${escapeHtml(dep.spec)})</small>` : ""}</td>
        <td>${escapeHtml(dep.scope ?? "")}</td>
      </tr>`,
    )
    .join("\n");
  return `
    <p>commit <code>${escapeHtml(sbom.commit)}</code> · captured ${escapeHtml(sbom.captured_at)}</p>
    <table class="report">
      <thead><tr><th>Ecosystem</th><th>Group</th><th>Name</th><th>Version</th><th>Scope</th></tr></thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderGateHistory(history: DecisionHistory): string {
  const entries = history.decisions
    .map((decision) => {
      const findings = decision.findings
        .map(
          (f) => `
          <li class="verdict-${f.verdict}">
            <code>${escapeHtml(f.coordinate)}</code> — ${escapeHtml(f.rule)}
            ${f.deadline ? `(deadline ${escapeHtml(f.deadline)})` : ""}
            <small>${escapeHtml(f.message)}</small>
          </li>`,
        )
        .join("\n");
      return `
      <details class="decision verdict-${decision.verdict}">
        <summary>${escapeHtml(decision.evaluated_at)} · commit ${escapeHtml(
          decision.commit,
        )} · <strong>${decision.verdict.toUpperCase()}</strong></summary>
        <ul>${findings}</ul>
      </details>`;
    })
    .join("\n");
  return `<div class="timeline">${entries}</div>`;
}

export function renderUnknownApplication(application: string): string {
  return `
    <div class="not-found">
      <h2>404 — no such application</h2>
      <p>Nothing has been recorded for <code>${escapeHtml(application)}</code>.
      An application appears here after its first gated build.</p>
    </div>`;
}
