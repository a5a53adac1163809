/**
 * Vetting checklist form: the committee's review questions plus the decision.
 *
 * Submission is blocked client-side until the decision's mandatory fields
 * are filled (justification for Reject, end date for Deprecate); the server
 * enforces the same rules, so a forced submit still comes back as 422.
 */

import type { StatusChangeRequest } from "./client.js";

export type Decision = "approve" | "reject" | "deprecate" | "";

export interface ChecklistForm {
  duplicateOf: string; // an approved same-category alternative, if any
  activelyMaintained: "yes" | "no" | "unknown";
  maintainer: string;
  securityPostureNote: string;
  issueHistoryNote: string;
  decision: Decision;
  justification: string;
  endDate: string; // ISO date for deprecation
}

export function emptyChecklist(): ChecklistForm {
  return {
    duplicateOf: "",
    activelyMaintained: "unknown",
    maintainer: "",
    securityPostureNote: "",
    issueHistoryNote: "",
    decision: "",
    justification: "",
    endDate: "",
  };
}

export interface ValidationResult {
  ok: boolean;
  errors: Partial<Record<"decision" | "justification" | "endDate", string>>;
}

export function validateChecklist(form: ChecklistForm): ValidationResult {
  const errors: ValidationResult["errors"] = {};
  if (!form.decision) {
    errors.decision = "choose approve, reject or deprecate";
  }
  if (form.decision === "reject" && !form.justification.trim()) {
    errors.justification = "a rejection requires a justification";
  }
  if (form.decision === "deprecate" && !form.endDate.trim()) {
    errors.endDate = "a deprecation requires an end date";
  }
  return { ok: Object.keys(errors).length === 0, errors };
}

/** Submit stays disabled until every decision-specific mandatory field is filled. */
export function submitEnabled(form: ChecklistForm): boolean {
  return validateChecklist(form).ok;
}

/** Fold the checklist answers into the persisted justification text. */
export function checklistNotes(form: ChecklistForm): string {
  const parts: string[] = [];
  if (form.duplicateOf) parts.push(`duplicate of approved: ${form.duplicateOf}`);
  parts.push(`actively maintained: ${form.activelyMaintained}`);
  if (form.maintainer) parts.push(`maintainer: ${form.maintainer}`);
  if (form.securityPostureNote) parts.push(`security posture: ${form.securityPostureNote}`);
  if (form.issueHistoryNote) parts.push(`issue history: ${form.issueHistoryNote}`);
  return parts.join("; ");
}

export function buildStatusRequest(form: ChecklistForm, actor: string): StatusChangeRequest {
  const notes = checklistNotes(form);
  if (form.decision === "approve") {
    return { status: "Approved", actor, justification: notes };
  }
  if (form.decision === "reject") {
    const justification = form.justification.trim();
    return {
      status: "Rejected",
      actor,
      justification: notes ? `${justification} (${notes})` : justification,
    };
  }
  if (form.decision === "deprecate") {
    return {
      status: "Deprecated",
      actor,
      end_date: form.endDate,
      justification: notes,
    };
  }
  throw new Error("no decision selected");
}
