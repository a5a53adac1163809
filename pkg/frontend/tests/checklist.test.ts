import { describe, expect, it } from "vitest";

import {
  buildStatusRequest,
  checklistNotes,
  emptyChecklist,
  submitEnabled,
  validateChecklist,
} from "../src/checklist.js";

describe("vetting checklist validation", () => {
  it("submit is disabled until a decision is chosen", () => {
    const form = emptyChecklist();
    expect(submitEnabled(form)).toBe(false);
    expect(validateChecklist(form).errors.decision).toBeDefined();
    form.decision = "approve";
    expect(submitEnabled(form)).toBe(true);
  });

  it("reject requires a justification client-side", () => {
    const form = emptyChecklist();
    form.decision = "reject";
    expect(submitEnabled(form)).toBe(false);
    expect(validateChecklist(form).errors.justification).toMatch(/justification/);
    form.justification = "unpatched deserialization issues";
    expect(submitEnabled(form)).toBe(true);
  });

  it("whitespace-only justification stays blocked", () => {
    const form = emptyChecklist();
    form.decision = "reject";
    form.justification = "   ";
    expect(submitEnabled(form)).toBe(false);
  });

  it("deprecate requires an end date client-side", () => {
    const form = emptyChecklist();
    form.decision = "deprecate";
    expect(submitEnabled(form)).toBe(false);
    expect(validateChecklist(form).errors.endDate).toMatch(/end date/);
    form.endDate = "2025-12-31T00:00:00Z";
    expect(submitEnabled(form)).toBe(true);
  });
});

describe("status request building", () => {
  it("approve carries the checklist answers as notes", () => {
    const form = emptyChecklist();
    form.decision = "approve";
    form.activelyMaintained = "yes";
    form.maintainer = "Apache Foundation";
    const request = buildStatusRequest(form, "committee");
    expect(request.status).toBe("Approved");
    expect(request.actor).toBe("committee");
    expect(request.justification).toContain("actively maintained: yes");
    expect(request.justification).toContain("maintainer: Apache Foundation");
  });

  it("reject folds notes after the justification", () => {
    const form = emptyChecklist();
    form.decision = "reject";
    form.justification = "known exploit chain";
    form.securityPostureNote = "slow CVE response";
    const request = buildStatusRequest(form, "committee");
    expect(request.status).toBe("Rejected");
    expect(request.justification).toMatch(/^known exploit chain/);
    expect(request.justification).toContain("security posture: slow CVE response");
  });

  it("deprecate carries the end date", () => {
    const form = emptyChecklist();
    form.decision = "deprecate";
    form.endDate = "2025-06-30T00:00:00Z";
    const request = buildStatusRequest(form, "committee");
    expect(request.status).toBe("Deprecated");
    expect(request.end_date).toBe("2025-06-30T00:00:00Z");
  });

  it("duplicate-of answer lands in the notes", () => {
    const form = emptyChecklist();
    form.duplicateOf = "com.fasterxml.jackson.core:jackson-databind";
    expect(checklistNotes(form)).toContain("duplicate of approved: com.fasterxml.jackson.core:jackson-databind");
  });
});
