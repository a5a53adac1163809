/** Category management: create categories, assign libraries. */

import { escapeHtml } from "./html.js";
import type { Category, DependencyRow } from "./types.js";

export function renderCategoryManager(
  categories: Category[],
  uncategorized: DependencyRow[],
): string {
  const options = categories
    .map((c) => `<option value="${c.id}">${escapeHtml(c.name)}</option>`)
    .join("");
  const list = categories
    .map(
      (c) =>
        `<li>${escapeHtml(c.name)}${c.description ? ` — ${escapeHtml(c.description)}` : ""}</li>`,
    )
    .join("");
  const seen = new Set<number>();
  const pendingRows: string[] = [];
  for (const row of uncategorized) {
    if (seen.has(row.dependency_id)) continue;
    seen.add(row.dependency_id);
    pendingRows.push(`
      <li data-dependency-id="${row.dependency_id}">
        <code>${escapeHtml(row.ecosystem)}:${escapeHtml(row.group)}:${escapeHtml(row.name)}</code>
        <select class="assign-category" data-dependency-id="${row.dependency_id}">
          <option value="">assign…</option>${options}
        </select>
      </li>`);
  }
  return `
    <section>
      <h3>Categories</h3>
      <ul class="categories">${list || "<li>(none yet)</li>"}</ul>
      <form id="new-category">
        <input name="name" placeholder="new category name" required>
        <input name="description" placeholder="description (optional)">
        <button type="submit">create</button>
      </form>
    </section>
    <section>
      <h3>Uncategorized libraries</h3>
      <ul class="uncategorized">${pendingRows.join("\n") || "<li>(none)</li>"}</ul>
    </section>`;
}
