import { describe, expect, it } from "vitest";

import {
  renderBreakdownChart,
  renderDuplicationList,
  renderStatsPanel,
  renderVulnTable,
} from "../src/dashboard.js";
import type {
  CategoryBreakdownRow,
  DuplicationCategory,
  EcosystemStats,
  VulnSummaryRow,
} from "../src/types.js";
import { fixture } from "./helpers.js";

const breakdown = fixture<{ rows: CategoryBreakdownRow[] }>("report_categories.json").rows;
const vulns = fixture<{ rows: VulnSummaryRow[] }>("report_vulns_xml.json").rows;
const stats = fixture<EcosystemStats>("report_stats.json");
const duplication = fixture<{ rows: DuplicationCategory[] }>("report_duplication.json").rows;

/** Every integer rendered must be traceable to a field of the payload. */
function renderedNumbers(html: string): number[] {
  const text = html.replace(/<[^>]+>/g, " ").replace(/style="[^"]*"/g, " ");
  return [...text.matchAll(/(?<![\w.\-:])\d+(?![\w.\-:])/g)].map((m) => Number(m[0]));
}

describe("dashboards render API numbers verbatim", () => {
  it("breakdown chart shows each category count as-is", () => {
    const html = renderBreakdownChart(breakdown);
    for (const row of breakdown) {
      expect(html).toContain(`>${row.distinct_libraries}</span>`);
    }
  });

  it("vuln table carries the exact recorded counts", () => {
    const html = renderVulnTable("XML Parser", vulns);
    const allowed = new Set<number>();
    for (const row of vulns) {
      allowed.add(row.vuln_count);
      allowed.add(row.version_count);
    }
    for (const value of renderedNumbers(html)) {
      expect(allowed.has(value), `rendered ${value} has no source field`).toBe(true);
    }
    // The recorded census shape survives verbatim: two 6-vuln libraries first.
    const bolded = vulns.filter((r) => r.vuln_count > 0);
    expect(bolded[0]).toMatchObject({ library: "xmlsec", vuln_count: 6, version_count: 3 });
    expect(bolded[1]).toMatchObject({ library: "xstream", vuln_count: 6, version_count: 4 });
    expect(html).not.toContain("total"); // no client-side totals row
  });

  it("stats panel shows each field without recomputation", () => {
    const html = renderStatsPanel(stats);
    expect(html).toContain(`<dd>${stats.repositories_total}</dd>`);
    expect(html).toContain(`<dd>${stats.distinct_library_versions}</dd>`);
    expect(html).toContain(`<dd>${stats.total_open_vulnerabilities}</dd>`);
    expect(html).toContain(`<dd>${stats.new_vulns_per_day}</dd>`);
    for (const [name, count] of Object.entries(stats.repositories_by_ecosystem)) {
      expect(html).toContain(`${name}: ${count}`);
    }
  });

  it("duplication list preserves the server's member ordering", () => {
    const html = renderDuplicationList(duplication);
    for (const category of duplication) {
      expect(html).toContain(`${category.category} — ${category.distinct_libraries} libraries`);
      // Walk the members in API order; each (group, library) pair must appear
      // after the previous one. Handles duplicate library names across groups.
      let cursor = 0;
      for (const member of category.members) {
        const needle = `<code>${member.group}:${member.library}</code>`;
        const at = html.indexOf(needle, cursor);
        expect(at, `${needle} missing after position ${cursor}`).toBeGreaterThanOrEqual(0);
        cursor = at + needle.length;
      }
    }
  });

  it("empty payloads render empty states, not zeros", () => {
    expect(renderBreakdownChart([])).toContain("No libraries recorded");
    expect(renderDuplicationList([])).toContain("No category exceeds");
  });
});
