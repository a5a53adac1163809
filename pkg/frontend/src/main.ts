/**
 * Console shell: hash router, data fetching, checklist drawer wiring.
 *
 * Views are rendered from pure functions over API payloads; this file only
 * glues them to the DOM. Data refetches on tab focus and on a 30-second
 * poll; API failures show as a dismissible banner without blocking the page.
 */

import { submitDecision, createCategory, assignCategory } from "./actions.js";
import { emptyChecklist, submitEnabled, type ChecklistForm } from "./checklist.js";
import { ApiClient } from "./client.js";
import { ApiCallError } from "./client.js";
import {
  renderBreakdownChart,
  renderDuplicationList,
  renderStatsPanel,
  renderVulnTable,
} from "./dashboard.js";
import { renderCategoryManager } from "./categories.js";
import { escapeHtml } from "./html.js";
import { renderQueue } from "./queue.js";
import { renderGateHistory, renderSbom, renderUnknownApplication } from "./sbom.js";
import type { DependencyRow } from "./types.js";

declare global {
  interface Window {
    DEPGATE_API_BASE?: string;
    DEPGATE_API_TOKEN?: string;
  }
}

const client = new ApiClient(
  window.DEPGATE_API_BASE ?? "",
  (url, init) => fetch(url, init),
  window.DEPGATE_API_TOKEN ?? null,
);

const content = () => document.getElementById("content")!;
const bannerBox = () => document.getElementById("banner")!;

function showBanner(message: string) {
  bannerBox().innerHTML = `<div class="banner">${escapeHtml(message)} <button id="dismiss">×</button></div>`;
  document.getElementById("dismiss")?.addEventListener("click", () => {
    bannerBox().innerHTML = "";
  });
}

let queueRows: DependencyRow[] = [];
let approvedRows: DependencyRow[] = [];
let openForm: { row: DependencyRow; form: ChecklistForm } | null = null;

async function loadQueueView() {
  try {
    const [queue, approved] = await Promise.all([
      client.listDependencies({ status: "NotReviewed", limit: 500 }),
      client.listDependencies({ status: "Approved", limit: 500 }),
    ]);
    queueRows = queue.rows;
    approvedRows = approved.rows;
  } catch (error) {
    showBanner(error instanceof Error ? error.message : String(error));
    return;
  }
  content().innerHTML = `<h2>Vetting queue (${queueRows.length})</h2>` + renderQueue(queueRows, approvedRows);
  for (const button of content().querySelectorAll<HTMLButtonElement>(".open-checklist")) {
    button.addEventListener("click", () => {
      const id = Number(button.dataset.versionId);
      const row = queueRows.find((r) => r.dependency_version_id === id);
      if (row) openChecklistDrawer(row);
    });
  }
}

function checklistHtml(row: DependencyRow, errors: Record<string, string>): string {
  const error = (field: string) =>
    errors[field] ? `<span class="field-error">${escapeHtml(errors[field])}</span>` : "";
  return `
  <div class="drawer">
    <h3>Review <code>${escapeHtml(row.coordinate)}</code></h3>
    <p>${row.vulnerability_ids.length} linked advisories: ${row.vulnerability_ids
      .map((v) => escapeHtml(v))
      .join(", ") || "none"}</p>
    <form id="checklist">
      <label>Duplicate of approved component <input name="duplicateOf"></label>
      <label>Actively maintained?
        <select name="activelyMaintained">
          <option value="unknown">unknown</option><option value="yes">yes</option><option value="no">no</option>
        </select>
      </label>
      <label>Maintainer <input name="maintainer"></label>
      <label>Security posture <textarea name="securityPostureNote"></textarea></label>
      <label>Issue history <textarea name="issueHistoryNote"></textarea></label>
      <fieldset>
        <legend>Decision ${error("decision")}</legend>
        <label><input type="radio" name="decision" value="approve"> approve</label>
        <label><input type="radio" name="decision" value="reject"> reject</label>
        <label><input type="radio" name="decision" value="deprecate"> deprecate</label>
      </fieldset>
      <label>Justification (required to reject) <textarea name="justification"></textarea> ${error(
        "justification",
      )}</label>
      <label>End date (required to deprecate) <input name="endDate" placeholder="2025-12-31T00:00:00Z"> ${error(
        "endDate",
      )}</label>
      <button type="submit" id="submit-decision" disabled>submit decision</button>
      <button type="button" id="close-drawer">close</button>
    </form>
  </div>`;
}

function openChecklistDrawer(row: DependencyRow, errors: Record<string, string> = {}) {
  openForm = { row, form: emptyChecklist() };
  const host = document.getElementById("drawer-host")!;
  host.innerHTML = checklistHtml(row, errors);
  const formElement = document.getElementById("checklist") as HTMLFormElement;
  const submit = document.getElementById("submit-decision") as HTMLButtonElement;

  const readForm = (): ChecklistForm => {
    const data = new FormData(formElement);
    return {
      duplicateOf: String(data.get("duplicateOf") ?? ""),
      activelyMaintained: String(data.get("activelyMaintained") ?? "unknown") as ChecklistForm["activelyMaintained"],
      maintainer: String(data.get("maintainer") ?? ""),
      securityPostureNote: String(data.get("securityPostureNote") ?? ""),
      issueHistoryNote: String(data.get("issueHistoryNote") ?? ""),
      decision: String(data.get("decision") ?? "") as ChecklistForm["decision"],
      justification: String(data.get("justification") ?? ""),
      endDate: String(data.get("endDate") ?? ""),
    };
  };

  formElement.addEventListener("input", () => {
    submit.disabled = !submitEnabled(readForm());
  });
  document.getElementById("close-drawer")?.addEventListener("click", () => {
    host.innerHTML = "";
    openForm = null;
  });
  formElement.addEventListener("submit", async (event) => {
    event.preventDefault();
    if (!openForm) return;
    formElement.querySelectorAll("button, input, select, textarea").forEach((el) => {
      (el as HTMLInputElement).disabled = true; // one in-flight write per entity
    });
    const outcome = await submitDecision(
      client,
      { rows: queueRows, banner: null, fieldErrors: {} },
      openForm.row,
      readForm(),
      "console",
    );
    if (outcome.submitted) {
      host.innerHTML = "";
      openForm = null;
      await loadQueueView();
    } else if (outcome.state.banner) {
      showBanner(outcome.state.banner);
      openChecklistDrawer(row, {});
    } else {
      openChecklistDrawer(row, outcome.state.fieldErrors);
    }
  });
}

async function loadDashboardView() {
  try {
    const [breakdown, stats, duplication] = await Promise.all([
      client.categoryBreakdown(),
      client.ecosystemStats(7),
      client.duplicationReport(5),
    ]);
    const firstCategory = breakdown.rows[0]?.category;
    const vulns = firstCategory ? await client.vulnerabilityReport(firstCategory) : { rows: [] };
    content().innerHTML = `
      <h2>Dashboards</h2>
      <section><h3>Libraries per category</h3>${renderBreakdownChart(breakdown.rows)}</section>
      <section><h3>Ecosystem</h3>${renderStatsPanel(stats)}</section>
      <section>${firstCategory ? renderVulnTable(firstCategory, vulns.rows) : ""}</section>
      <section><h3>Consolidation candidates</h3>${renderDuplicationList(duplication.rows)}</section>`;
  } catch (error) {
    showBanner(error instanceof Error ? error.message : String(error));
  }
}

async function loadCategoriesView() {
  try {
    const [categories, uncategorized] = await Promise.all([
      client.listCategories(),
      client.listDependencies({ category: "(uncategorized)", limit: 500 }),
    ]);
    content().innerHTML = `<h2>Category manager</h2>` + renderCategoryManager(categories.categories, uncategorized.rows);
    const form = document.getElementById("new-category") as HTMLFormElement;
    form?.addEventListener("submit", async (event) => {
      event.preventDefault();
      const data = new FormData(form);
      const failure = await createCategory(
        client,
        String(data.get("name") ?? ""),
        String(data.get("description") ?? "") || undefined,
        loadCategoriesView,
      );
      if (failure) showBanner(failure);
    });
    for (const select of content().querySelectorAll<HTMLSelectElement>(".assign-category")) {
      select.addEventListener("change", async () => {
        if (!select.value) return;
        select.disabled = true;
        const failure = await assignCategory(
          client,
          Number(select.dataset.dependencyId),
          Number(select.value),
          "console",
          loadCategoriesView,
        );
        if (failure) showBanner(failure);
      });
    }
  } catch (error) {
    showBanner(error instanceof Error ? error.message : String(error));
  }
}

async function loadSbomView(application: string) {
  if (!application) {
    content().innerHTML = `
      <h2>Application SBOM</h2>
      <form id="sbom-lookup"><input name="application" placeholder="application name">
      <button type="submit">show</button></form>`;
    (document.getElementById("sbom-lookup") as HTMLFormElement).addEventListener("submit", (e) => {
      e.preventDefault();
      const name = String(new FormData(e.target as HTMLFormElement).get("application") ?? "");
      location.hash = `#/sbom/${encodeURIComponent(name)}`;
    });
    return;
  }
  try {
    const sbom = await client.latestSbom(application);
    let historyHtml = "";
    try {
      historyHtml = renderGateHistory(await client.decisionHistory(application));
    } catch {
      historyHtml = "<p class='empty-state'>No gate decisions recorded.</p>";
    }
    content().innerHTML = `
      <h2>${escapeHtml(application)}</h2>
      <section><h3>Direct dependencies</h3>${renderSbom(sbom)}</section>
      <section><h3>Gate history</h3>${historyHtml}</section>`;
  } catch (error) {
    if (error instanceof ApiCallError && error.status === 404) {
      content().innerHTML = renderUnknownApplication(application);
    } else {
      showBanner(error instanceof Error ? error.message : String(error));
    }
  }
}

async function route() {
  const hash = location.hash || "#/queue";
  document.querySelectorAll("nav a").forEach((a) => {
    a.classList.toggle("active", a.getAttribute("href") === hash.split("/").slice(0, 2).join("/"));
  });
  if (hash.startsWith("#/dashboard")) return loadDashboardView();
  if (hash.startsWith("#/categories")) return loadCategoriesView();
  if (hash.startsWith("#/sbom")) {
    return loadSbomView(decodeURIComponent(hash.split("/")[2] ?? ""));
  }
  return loadQueueView();
}

window.addEventListener("hashchange", route);
window.addEventListener("focus", route); // stale rows refetch on focus
setInterval(route, 30_000); // desk-scale polling
route();
