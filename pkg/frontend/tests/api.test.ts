import { afterEach, describe, expect, test, vi } from 'vitest';

import { ApiClient, ApiError } from '../src/api.js';

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe('ApiClient', () => {
  test('createSession posts repo, branch and provider', async () => {
    const fetchMock = vi.fn(async () => jsonResponse(201, { session_id: 's' }));
    vi.stubGlobal('fetch', fetchMock);
    const client = new ApiClient('http://svc.test');
    await client.createSession('octo/app', 'dev', 'github');
    expect(fetchMock).toHaveBeenCalledOnce();
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe('http://svc.test/api/sessions');
    expect(JSON.parse(init.body as string)).toEqual({
      repo: 'octo/app',
      branch: 'dev',
      provider: 'github',
    });
  });

  test('commands are posted with the highlight flag', async () => {
    const fetchMock = vi.fn(async () => jsonResponse(200, {}));
    vi.stubGlobal('fetch', fetchMock);
    await new ApiClient('').postCommand(
      'sid',
      { kind: 'remove_element', payload: { target: 'component:db' } },
      true,
    );
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe('/api/sessions/sid/commands');
    expect(JSON.parse(init.body as string)).toEqual({
      kind: 'remove_element',
      payload: { target: 'component:db' },
      highlight: true,
    });
  });

  test('error responses surface status and detail', async () => {
    vi.stubGlobal('fetch', vi.fn(async () => jsonResponse(410, { detail: 'session expired' })));
    const client = new ApiClient('');
    const error = await client.getPreview('gone').catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect((error as ApiError).status).toBe(410);
    expect((error as ApiError).message).toContain('expired');
  });

  test('revert uses DELETE on the command resource', async () => {
    const fetchMock = vi.fn(async () => jsonResponse(200, {}));
    vi.stubGlobal('fetch', fetchMock);
    await new ApiClient('').revertCommand('sid', '0001-a');
    const [url, init] = fetchMock.mock.calls[0] as unknown as [string, RequestInit];
    expect(url).toBe('/api/sessions/sid/commands/0001-a?highlight=false');
    expect(init.method).toBe('DELETE');
  });
});
