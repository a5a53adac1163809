/**
 * Typed client over the depgate HTTP API.
 *
 * The console consumes exactly these endpoints and performs no counting or
 * policy logic of its own: every number shown in a view is a field of one
 * of these responses.
 */

import type {
  ApiErrorBody,
  Category,
  CategoryBreakdownRow,
  DecisionHistory,
  DependencyPage,
  DuplicationCategory,
  EcosystemStats,
  EventRecord,
  Sbom,
  StatusName,
  VersionStatusResponse,
  VulnSummaryRow,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiCallError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiErrorBody,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface StatusChangeRequest {
  status: StatusName;
  justification?: string;
  end_date?: string;
  actor: string;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
    private readonly token: string | null = null,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["Authorization"] = `Bearer ${this.token}`;
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        parsed = { code: "unreadable_error", message: `HTTP ${response.status}` };
      }
      throw new ApiCallError(response.status, parsed);
    }
    return (await response.json()) as T;
  }

  listDependencies(filters: {
    status?: StatusName;
    category?: string;
    application?: string;
    has_vulns?: boolean;
    limit?: number;
    offset?: number;
  } = {}): Promise<DependencyPage> {
    const params = new URLSearchParams();
    if (filters.status) params.set("status", filters.status);
    if (filters.category) params.set("category", filters.category);
    if (filters.application) params.set("application", filters.application);
    if (filters.has_vulns !== undefined) params.set("has_vulns", String(filters.has_vulns));
    params.set("limit", String(filters.limit ?? 500));
    if (filters.offset) params.set("offset", String(filters.offset));
    return this.request("GET", `/v1/dependencies?${params.toString()}`);
  }

  setVersionStatus(
    dependencyId: number,
    version: string,
    change: StatusChangeRequest,
  ): Promise<VersionStatusResponse> {
    return this.request(
      "POST",
      `/v1/dependencies/${dependencyId}/versions/${encodeURIComponent(version)}/status`,
      change,
    );
  }

  listCategories(): Promise<{ categories: Category[] }> {
    return this.request("GET", "/v1/categories");
  }

  createCategory(name: string, description?: string): Promise<Category> {
    return this.request("POST", "/v1/categories", { name, description });
  }

  assignCategory(dependencyId: number, categoryId: number, actor: string): Promise<unknown> {
    return this.request("PUT", `/v1/dependencies/${dependencyId}/category`, {
      category_id: categoryId,
      actor,
    });
  }

  categoryBreakdown(): Promise<{ rows: CategoryBreakdownRow[] }> {
    return this.request("GET", "/v1/reports/categories");
  }

  vulnerabilityReport(category: string): Promise<{ rows: VulnSummaryRow[] }> {
    return this.request(
      "GET",
      `/v1/reports/vulnerabilities?category=${encodeURIComponent(category)}`,
    );
  }

  ecosystemStats(windowDays: number): Promise<EcosystemStats> {
    return this.request("GET", `/v1/reports/stats?window_days=${windowDays}`);
  }

  duplicationReport(threshold: number): Promise<{ rows: DuplicationCategory[] }> {
    return this.request("GET", `/v1/reports/duplication?threshold=${threshold}`);
  }

  latestSbom(application: string): Promise<Sbom> {
    return this.request("GET", `/v1/sbom/${encodeURIComponent(application)}`);
  }

  decisionHistory(application: string): Promise<DecisionHistory> {
    return this.request("GET", `/v1/decisions/${encodeURIComponent(application)}`);
  }

  events(sinceSeq: number): Promise<{ events: EventRecord[] }> {
    return this.request("GET", `/v1/events?since_seq=${sinceSeq}`);
  }
}
