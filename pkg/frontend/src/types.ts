// Wire types mirroring the service's session resource (snake_case JSON).

export type Methodology = 'zero_shot' | 'linddun_go' | 'linddun_pro';

export type LinddunCategory =
  | 'linking'
  | 'identifying'
  | 'non_repudiation'
  | 'detecting'
  | 'data_disclosure'
  | 'unawareness'
  | 'non_compliance';

export const ALL_CATEGORIES: LinddunCategory[] = [
  'linking', 'identifying', 'non_repudiation', 'detecting',
  'data_disclosure', 'unawareness', 'non_compliance',
];

export const CATEGORY_LABELS: Record<LinddunCategory, string> = {
  linking: 'Linking',
  identifying: 'Identifying',
  non_repudiation: 'Non-repudiation',
  detecting: 'Detecting',
  data_disclosure: 'Data Disclosure',
  unawareness: 'Unawareness',
  non_compliance: 'Non-compliance',
};

export type NodeKind = 'entity' | 'process' | 'data_store';
export const NODE_KINDS: NodeKind[] = ['entity', 'process', 'data_store'];

export type AppTypeValue = 'web' | 'mobile' | 'desktop' | 'iot' | 'other';

export interface DataTypeRow {
  name: string;
  category: string;
  collected_from: string;
  stored: boolean;
  encrypted_at_rest: boolean;
  shared_with_third_parties: boolean;
  notes: string;
}

export interface Profile {
  app_type: AppTypeValue;
  app_type_label: string;
  description: string;
  data_policy: string;
  authentication_methods: string[];
  data_types: DataTypeRow[];
}

export interface DfdEdge {
  id: string;
  from_name: string;
  from_kind: NodeKind;
  to_name: string;
  to_kind: NodeKind;
  data_label: string;
  crosses_trust_boundary: boolean;
}

export interface Dfd {
  edges: DfdEdge[];
}

export interface ValidationIssue {
  severity: 'error' | 'warning';
  code: string;
  message: string;
  edge_ref: string | null;
}

export interface ControlMeasure {
  pattern_name: string;
  relevance: string;
  implementation_guidance: string;
}

export interface Threat {
  id: string;
  methodology: Methodology;
  category: LinddunCategory;
  title: string;
  description: string;
  location: 'source' | 'flow' | 'destination' | null;
  edge_ref: string | null;
  tree_node: string | null;
  card_ref: string | null;
  included: boolean;
  impact: string | null;
  controls: ControlMeasure[];
}

export interface ReportMeta {
  app_name: string;
  author: string;
  organization: string;
  date: string;
  scope_notes: string;
  include_dfd: boolean;
}

export interface SessionResource {
  schema_version: number;
  id: string;
  created_at: string;
  updated_at: string;
  profile: Profile;
  dfd: Dfd | null;
  elicitation_results: Record<Methodology, Threat[]>;
  assessment_source: Methodology | null;
  report_meta: ReportMeta;
  go_transcripts: Record<string, unknown>[];
}

export interface SessionSummary {
  id: string;
  app_name: string;
  updated_at: string;
}

export interface ProblemDetails {
  code: string;
  message: string;
  detail: unknown;
}

export interface GoCardView {
  id: string;
  title: string;
  category: LinddunCategory;
  description: string;
  hotspots: string[];
  elicitation_question: string;
}

export interface GoVerdict {
  threat_present: boolean;
  reason: string;
  provider_id: string;
  persona_id: string | null;
}

export interface DebateTranscript {
  card_id: string;
  rounds: GoVerdict[][];
  judge: GoVerdict | null;
}

export interface GoOutcome {
  card: GoCardView;
  verdict: GoVerdict | null;
  transcript: DebateTranscript | null;
}

export interface GoRunResponse {
  threats: Threat[];
  outcomes: GoOutcome[];
  failures: { card_id: string; error: string }[];
}

export interface ProRunResponse {
  threats: Threat[];
  failures: { category: string; location: string; error: string }[];
}

export interface DfdResponse {
  dfd: Dfd | null;
  issues: ValidationIssue[];
}

export interface ProfileResponse {
  profile: Profile;
  issues: ValidationIssue[];
}

export interface ControlsResponse {
  shortlist: string[];
  threat: Threat;
  controls: ControlMeasure[];
}

export interface ReportResponse {
  markdown: string;
  dfd_dot: string | null;
  generated_at: string;
  empty: boolean;
}

export function emptyProfile(): Profile {
  return {
    app_type: 'web',
    app_type_label: '',
    description: '',
    data_policy: '',
    authentication_methods: [],
    data_types: [],
  };
}

export function emptyDataTypeRow(): DataTypeRow {
  return {
    name: '',
    category: '',
    collected_from: '',
    stored: false,
    encrypted_at_rest: false,
    shared_with_third_parties: false,
    notes: '',
  };
}
