// Typed client for the PILLAR service. The UI performs no domain logic:
// every state change goes through these calls.

import type {
  ControlsResponse,
  Dfd,
  DfdResponse,
  GoRunResponse,
  ProblemDetails,
  Profile,
  ProfileResponse,
  ProRunResponse,
  ReportMeta,
  ReportResponse,
  SessionResource,
  SessionSummary,
  Threat,
} from './types';

export class ApiError extends Error {
  readonly problem: ProblemDetails;
  readonly status: number;

  constructor(status: number, problem: ProblemDetails) {
    super(`${problem.code}: ${problem.message}`);
    this.status = status;
    this.problem = problem;
  }
}

export interface RequestOptions {
  signal?: AbortSignal;
}

export class PillarApi {
  constructor(readonly baseUrl: string = '') {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
    options: RequestOptions = {},
    parse: 'json' | 'text' = 'json',
  ): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? {} : { 'Content-Type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
      signal: options.signal,
    });
    if (!response.ok) {
      let problem: ProblemDetails;
      try {
        problem = (await response.json()) as ProblemDetails;
      } catch {
        problem = { code: 'HTTP_' + response.status, message: response.statusText, detail: null };
      }
      throw new ApiError(response.status, problem);
    }
    if (parse === 'text') {
      return (await response.text()) as unknown as T;
    }
    return (await response.json()) as T;
  }

  // sessions
  createSession(appName: string): Promise<SessionResource> {
    return this.request('POST', '/sessions', { app_name: appName });
  }

  listSessions(): Promise<SessionSummary[]> {
    return this.request('GET', '/sessions');
  }

  getSession(id: string): Promise<SessionResource> {
    return this.request('GET', `/sessions/${id}`);
  }

  // profile
  getProfile(id: string): Promise<ProfileResponse> {
    return this.request('GET', `/sessions/${id}/profile`);
  }

  putProfile(id: string, profile: Profile): Promise<ProfileResponse> {
    return this.request('PUT', `/sessions/${id}/profile`, profile);
  }

  // dfd
  getDfd(id: string): Promise<DfdResponse> {
    return this.request('GET', `/sessions/${id}/dfd`);
  }

  putDfd(id: string, dfd: Dfd): Promise<DfdResponse> {
    return this.request('PUT', `/sessions/${id}/dfd`, dfd);
  }

  importCsv(id: string, csv: string): Promise<DfdResponse> {
    return this.request('POST', `/sessions/${id}/dfd/import-csv`, { csv });
  }

  exportCsv(id: string): Promise<string> {
    return this.request('GET', `/sessions/${id}/dfd/export-csv`, undefined, {}, 'text');
  }

  getDot(id: string, highlightEdge?: string): Promise<string> {
    const query = highlightEdge ? `?highlight_edge=${encodeURIComponent(highlightEdge)}` : '';
    return this.request('GET', `/sessions/${id}/dfd/dot${query}`, undefined, {}, 'text');
  }

  generateDfd(
    id: string,
    body: { source: 'description' | 'image'; image_base64?: string; media_type?: string; seed?: number },
    options: RequestOptions = {},
  ): Promise<DfdResponse> {
    return this.request('POST', `/sessions/${id}/dfd/generate`, body, options);
  }

  // elicitation
  elicitZeroShot(id: string, body: { seed?: number } = {}, options: RequestOptions = {}):
      Promise<{ threats: Threat[] }> {
    return this.request('POST', `/sessions/${id}/elicit/zero-shot`, body, options);
  }

  elicitGo(
    id: string,
    body: { n_cards: number; multi_agent?: boolean; rounds?: number; seed?: number },
    options: RequestOptions = {},
  ): Promise<GoRunResponse> {
    return this.request('POST', `/sessions/${id}/elicit/go`, body, options);
  }

  elicitPro(
    id: string,
    body: { edge_id: string; flow_description: string; categories: string[]; seed?: number },
    options: RequestOptions = {},
  ): Promise<ProRunResponse> {
    return this.request('POST', `/sessions/${id}/elicit/pro`, body, options);
  }

  // assessment
  importThreats(id: string, methodology: string):
      Promise<{ assessment_source: string; threats: Threat[] }> {
    return this.request('POST', `/sessions/${id}/assessment/import`, { methodology });
  }

  generateImpact(id: string, threatId: string, options: RequestOptions = {}):
      Promise<{ threat: Threat }> {
    return this.request('POST', `/sessions/${id}/assessment/${threatId}/impact`, {}, options);
  }

  generateControls(id: string, threatId: string, options: RequestOptions = {}):
      Promise<ControlsResponse> {
    return this.request('POST', `/sessions/${id}/assessment/${threatId}/controls`, {}, options);
  }

  patchThreat(id: string, threatId: string, body: { included?: boolean; impact?: string }):
      Promise<{ threat: Threat }> {
    return this.request('PATCH', `/sessions/${id}/assessment/${threatId}`, body);
  }

  // report
  putReportMeta(id: string, meta: ReportMeta): Promise<{ report_meta: ReportMeta }> {
    return this.request('PUT', `/sessions/${id}/report/meta`, meta);
  }

  buildReport(id: string, now?: string, options: RequestOptions = {}): Promise<ReportResponse> {
    return this.request('POST', `/sessions/${id}/report`, now ? { now } : {}, options);
  }
}
