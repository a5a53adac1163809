/** Wire types mirroring the depgate HTTP API exactly. */

export type StatusName = "NotReviewed" | "Approved" | "Deprecated" | "Rejected";

export interface DependencyRow {
  dependency_id: number;
  dependency_version_id: number;
  coordinate: string;
  ecosystem: string;
  group: string;
  name: string;
  version: string;
  status: StatusName;
  category: string | null;
  introduced_date: string;
  effective_date: string;
  end_date: string | null;
  justification: string | null;
  blacklisted: boolean;
  vulnerability_ids: string[];
  applications: string[];
}

export interface DependencyPage {
  rows: DependencyRow[];
  limit: number;
  offset: number;
}

export interface Category {
  id: number;
  name: string;
  description: string | null;
}

export interface CategoryBreakdownRow {
  category: string;
  distinct_libraries: number;
}

export interface VulnSummaryRow {
  library: string;
  group: string;
  vuln_count: number;
  version_count: number;
}

export interface EcosystemStats {
  repositories_total: number;
  repositories_by_ecosystem: Record<string, number>;
  distinct_library_versions: number;
  total_open_vulnerabilities: number;
  new_vulns_per_day: number;
}

export interface DuplicationMember {
  library: string;
  group: string;
  statuses: string[];
  vuln_count: number;
  latest_version: string;
}

export interface DuplicationCategory {
  category: string;
  distinct_libraries: number;
  members: DuplicationMember[];
}

export interface SbomDependency {
  ecosystem: string;
  group: string;
  name: string;
  version: string;
  scope?: string;
  spec?: string;
  flags?: string[];
}

export interface Sbom {
  application: string;
  commit: string;
  captured_at: string;
  dependencies: SbomDependency[];
}

export interface Finding {
  coordinate: string;
  status: StatusName;
  rule: string;
  verdict: "pass" | "warn" | "fail";
  deadline?: string;
  vulnerabilities: string[];
  message: string;
}

export interface GateDecision {
  application: string;
  commit: string;
  evaluated_at: string;
  verdict: "pass" | "warn" | "fail";
  findings: Finding[];
}

export interface DecisionHistory {
  application: string;
  decisions: GateDecision[];
}

export interface EventRecord {
  seq: number;
  at: string;
  actor: string;
  stream: string;
  action: string;
  subject: string;
  detail: string;
}

export interface VersionStatusResponse {
  dependency_version_id: number;
  dependency_id: number;
  coordinate: string;
  version: string;
  status: StatusName;
  introduced_date: string;
  effective_date: string;
  end_date: string | null;
  justification: string | null;
  blacklisted: boolean;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
