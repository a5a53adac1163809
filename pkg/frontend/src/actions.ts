/**
 * Mutation controllers. No optimistic updates anywhere: the visible state
 * mutates only after the server answered 2xx; API rejections surface as
 * field-level messages (409/422) or a non-blocking banner.
 */

import { ApiCallError, type ApiClient } from "./client.js";
import { buildStatusRequest, validateChecklist, type ChecklistForm } from "./checklist.js";
import type { DependencyRow } from "./types.js";

export interface QueueState {
  rows: DependencyRow[];
  banner: string | null;
  fieldErrors: Record<string, string>;
}

export interface DecideOutcome {
  state: QueueState;
  submitted: boolean;
}

export async function submitDecision(
  client: ApiClient,
  state: QueueState,
  row: DependencyRow,
  form: ChecklistForm,
  actor: string,
): Promise<DecideOutcome> {
  const validation = validateChecklist(form);
  if (!validation.ok) {
    // Blocked client-side; nothing leaves the browser.
    return {
      submitted: false,
      state: { ...state, fieldErrors: { ...validation.errors } },
    };
  }
  try {
    await client.setVersionStatus(row.dependency_id, row.version, buildStatusRequest(form, actor));
  } catch (error) {
    if (error instanceof ApiCallError && (error.status === 409 || error.status === 422)) {
      const field = error.body.code === "missing_end_date" ? "endDate" : "justification";
      return {
        submitted: false,
        state: {
          ...state,
          fieldErrors:
            error.status === 409 ? { decision: error.body.message } : { [field]: error.body.message },
        },
      };
    }
    const message = error instanceof Error ? error.message : String(error);
    return { submitted: false, state: { ...state, banner: message } };
  }
  // 2xx: only now does the row leave the queue.
  return {
    submitted: true,
    state: {
      rows: state.rows.filter((r) => r.dependency_version_id !== row.dependency_version_id),
      banner: null,
      fieldErrors: {},
    },
  };
}

export async function createCategory(
  client: ApiClient,
  name: string,
  description: string | undefined,
  onDone: () => Promise<void>,
): Promise<string | null> {
  try {
    await client.createCategory(name, description);
  } catch (error) {
    return error instanceof Error ? error.message : String(error);
  }
  await onDone(); // refetch after the 2xx, never before
  return null;
}

export async function assignCategory(
  client: ApiClient,
  dependencyId: number,
  categoryId: number,
  actor: string,
  onDone: () => Promise<void>,
): Promise<string | null> {
  try {
    await client.assignCategory(dependencyId, categoryId, actor);
  } catch (error) {
    return error instanceof Error ? error.message : String(error);
  }
  await onDone();
  return null;
}
