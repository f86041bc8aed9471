import type { ScenarioView, StudySummary } from './types';

// Thin typed wrapper over fetch. Injectable so tests can run against a
// scripted in-memory daemon instead of a real one.
export interface Http {
  get(path: string): Promise<{ status: number; body: unknown }>;
  post(path: string, body?: unknown): Promise<{ status: number; body: unknown }>;
}

export class FetchHttp implements Http {
  constructor(private readonly baseUrl: string = '') {}

  private async run(path: string, init?: RequestInit) {
    const response = await fetch(this.baseUrl + path, init);
    let body: unknown = null;
    try {
      body = await response.json();
    } catch {
      body = null;
    }
    return { status: response.status, body };
  }

  get(path: string) {
    return this.run(path);
  }

  post(path: string, body?: unknown) {
    return this.run(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body ?? {}),
    });
  }
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: unknown,
  ) {
    super(`request failed with status ${status}`);
  }
}

export interface AdvancePayload {
  kind: string;
  task_id?: string;
  answers?: Record<string, unknown>;
}

/** Client for the local study daemon (scenario + survey endpoints). */
export class DaemonClient {
  constructor(private readonly http: Http) {}

  async scenario(): Promise<ScenarioView> {
    const { status, body } = await this.http.get('/v1/scenario');
    if (status !== 200) throw new ApiError(status, body);
    return body as ScenarioView;
  }

  async advance(action: AdvancePayload): Promise<ScenarioView> {
    const { status, body } = await this.http.post('/v1/scenario/advance', action);
    if (status !== 200) throw new ApiError(status, body);
    return body as ScenarioView;
  }

  async answerSurvey(
    surveyId: string,
    answers: Record<string, unknown>,
  ): Promise<ScenarioView> {
    const { status, body } = await this.http.post(`/v1/survey/${surveyId}`, { answers });
    if (status !== 200) throw new ApiError(status, body);
    return body as ScenarioView;
  }
}

/** Client for the ingestion server's public stats endpoint. */
export class StatsClient {
  constructor(private readonly http: Http) {}

  async studySummary(studyId: string): Promise<StudySummary> {
    const { status, body } = await this.http.get(
      `/api/v1/studies/${encodeURIComponent(studyId)}/summary`,
    );
    if (status !== 200) throw new ApiError(status, body);
    return body as StudySummary;
  }
}
