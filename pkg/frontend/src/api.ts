/** Typed client for the living-arch service. The UI never talks to GitHub directly. */

import type { EditCommand, Job, Preview } from './types.js';

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === 'string') detail = body.detail;
    else if (body.detail) detail = JSON.stringify(body.detail);
  } catch {
    /* non-JSON error body: keep the status text */
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(private readonly baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { 'Content-Type': 'application/json' },
      ...init,
    });
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  createSession(repo: string, branch = 'main', provider = 'auto'): Promise<Preview> {
    return this.request<Preview>('/api/sessions', {
      method: 'POST',
      body: JSON.stringify({ repo, branch, provider }),
    });
  }

  getPreview(sessionId: string, highlight = false): Promise<Preview> {
    return this.request<Preview>(
      `/api/sessions/${encodeURIComponent(sessionId)}/preview?highlight=${highlight}`,
    );
  }

  postCommand(sessionId: string, command: EditCommand, highlight = false): Promise<Preview> {
    return this.request<Preview>(`/api/sessions/${encodeURIComponent(sessionId)}/commands`, {
      method: 'POST',
      body: JSON.stringify({ ...command, highlight }),
    });
  }

  revertCommand(sessionId: string, commandId: string, highlight = false): Promise<Preview> {
    return this.request<Preview>(
      `/api/sessions/${encodeURIComponent(sessionId)}/commands/${encodeURIComponent(commandId)}?highlight=${highlight}`,
      { method: 'DELETE' },
    );
  }

  submit(sessionId: string, updateReadme: boolean): Promise<{ job_id: string }> {
    return this.request<{ job_id: string }>(
      `/api/sessions/${encodeURIComponent(sessionId)}/submit`,
      { method: 'POST', body: JSON.stringify({ update_readme: updateReadme }) },
    );
  }

  getJob(jobId: string): Promise<Job> {
    return this.request<Job>(`/api/jobs/${encodeURIComponent(jobId)}`);
  }

  async waitForJob(jobId: string, timeoutMs = 60_000, pollMs = 150): Promise<Job> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
      const job = await this.getJob(jobId);
      if (job.status === 'done' || job.status === 'failed') return job;
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
    throw new ApiError(504, `job ${jobId} did not finish in time`);
  }
}
