import { describe, expect, it } from "vitest";

import { approvedAlternatives, orderQueue, renderQueue } from "../src/queue.js";
import type { DependencyPage, DependencyRow } from "../src/types.js";
import { fixture } from "./helpers.js";

const queueRows = fixture<DependencyPage>("queue.json").rows;
const xmlRows = fixture<DependencyPage>("dependencies_xml.json").rows;

function withDates(rows: DependencyRow[], dates: string[]): DependencyRow[] {
  return rows.slice(0, dates.length).map((row, i) => ({ ...row, introduced_date: dates[i] }));
}

describe("queue ordering", () => {
  it("sorts oldest introduced first", () => {
    const shuffled = withDates(queueRows, [
      "2024-03-05T00:00:00Z",
      "2024-01-02T00:00:00Z",
      "2024-02-10T00:00:00Z",
    ]);
    const ordered = orderQueue(shuffled);
    expect(ordered.map((r) => r.introduced_date)).toEqual([
      "2024-01-02T00:00:00Z",
      "2024-02-10T00:00:00Z",
      "2024-03-05T00:00:00Z",
    ]);
  });

  it("does not mutate the input", () => {
    const before = [...queueRows];
    orderQueue(queueRows);
    expect(queueRows).toEqual(before);
  });

  it("ties break on the canonical coordinate", () => {
    const sameDay = queueRows.map((r) => ({ ...r, introduced_date: "2024-03-01T12:00:00Z" }));
    const ordered = orderQueue(sameDay);
    const coordinates = ordered.map((r) => r.coordinate);
    expect(coordinates).toEqual([...coordinates].sort());
  });
});

describe("approved same-category alternatives", () => {
  it("filters approved rows of the same category, excluding the library itself", () => {
    const target: DependencyRow = { ...xmlRows[0], category: "XML Parser" };
    const approved = xmlRows
      .filter((r) => !(r.group === target.group && r.name === target.name))
      .map((r) => ({ ...r, status: "Approved" as const }));
    const alternatives = approvedAlternatives(target, approved);
    expect(alternatives.length).toBeGreaterThan(0);
    expect(alternatives).not.toContain(`${target.group}:${target.name}`);
    expect(alternatives).toEqual([...alternatives].sort());
  });

  it("is empty for uncategorized rows", () => {
    const target = { ...xmlRows[0], category: null };
    expect(approvedAlternatives(target, xmlRows)).toEqual([]);
  });

  it("ignores approved rows from other categories", () => {
    const target = { ...xmlRows[0], category: "XML Parser" };
    const otherCategory = xmlRows.map((r) => ({
      ...r,
      status: "Approved" as const,
      category: "JSON Parser",
    }));
    expect(approvedAlternatives(target, otherCategory)).toEqual([]);
  });
});

describe("queue rendering", () => {
  it("shows every queued coordinate", () => {
    const html = renderQueue(queueRows, []);
    for (const row of queueRows) {
      expect(html).toContain(row.coordinate);
    }
  });

  it("renders the empty state without rows", () => {
    expect(renderQueue([], [])).toContain("Nothing waiting for review");
  });

  it("escapes markup in API strings", () => {
    const hostile = {
      ...queueRows[0],
      applications: ['<img src=x onerror="alert(1)">'],
    };
    const html = renderQueue([hostile], []);
    expect(html).not.toContain("<img src=x");
    expect(html).toContain("&lt;img");
  });
});
