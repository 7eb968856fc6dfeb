/**
 * End-to-end editor round-trip against the real HTTP service.
 *
 * Spawns `larch serve` on a scratch repository, then drives the exact flows
 * the edit page uses: rename via context menu, revert, highlight toggle,
 * submit. Requires the Python package to be installed (larch on PATH).
 */

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, mkdirSync, readFileSync, rmSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { afterAll, beforeAll, describe, expect, test } from 'vitest';

import { ApiClient } from '../src/api.js';
import { commandsForAction, lineContextMenu } from '../src/menu.js';
import { addedRefs, knownRefs, lineSet, markedRefs, stateFromPreview } from '../src/state.js';
import type { Preview } from '../src/types.js';

const PORT = 18000 + (process.pid % 10000);
const BASE = `http://127.0.0.1:${PORT}`;

const COMPOSE = [
  'services:',
  '  web:',
  '    image: nginx',
  '    depends_on:',
  '      - db',
  '  db:',
  '    image: postgres',
  '',
].join('\n');

const COMMITTED_EDITS = JSON.stringify(
  {
    version: 1,
    commands: [
      {
        command_id: '0001-c0ffee00',
        issued_at: '2026-01-01T00:00:00Z',
        kind: 'rename_element',
        payload: { target: 'component:db', new_name: 'Database' },
      },
    ],
  },
  null,
  2,
) + '\n';

let repoDir: string;
let server: ChildProcess;
const api = new ApiClient(BASE);

async function serverReady(timeoutMs = 30_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/api/jobs/ping`);
      if (response.status === 404) return; // answering means alive
    } catch {
      /* not listening yet */
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  throw new Error('larch serve did not come up');
}

beforeAll(async () => {
  repoDir = mkdtempSync(join(tmpdir(), 'larch-editor-'));
  writeFileSync(join(repoDir, 'docker-compose.yml'), COMPOSE);
  mkdirSync(join(repoDir, '.living-arch'));
  writeFileSync(join(repoDir, '.living-arch', 'edits.json'), COMMITTED_EDITS);
  server = spawn('larch', ['serve', '--bind', `127.0.0.1:${PORT}`], {
    stdio: ['ignore', 'pipe', 'pipe'],
  });
  await serverReady();
}, 60_000);

afterAll(() => {
  server?.kill();
  rmSync(repoDir, { recursive: true, force: true });
});

describe('editor round-trip', () => {
  let initial: Preview;

  test('session opens with the committed log replayed', async () => {
    initial = await api.createSession(repoDir);
    const state = stateFromPreview(initial, false);
    expect(state.commands).toHaveLength(1);
    expect(state.commands[0]?.committed).toBe(true);
    expect(lineSet(state)).toContain('component "Database" as component_db');
    expect(state.previewImageUrl).toMatch(/\/svg\//);
  }, 30_000);

  test('rename via context menu updates the preview; revert restores it', async () => {
    const state = stateFromPreview(initial, false);
    const refs = knownRefs(state);
    const actions = lineContextMenu('component:web', refs);
    expect(actions.map((a) => a.id)).toContain('rename');

    const [command] = commandsForAction('rename', 'component:web', { value: 'Storefront' });
    const renamed = await api.postCommand(initial.session_id, command!);
    const renamedState = stateFromPreview(renamed, false);
    expect(lineSet(renamedState)).toContain('component "Storefront" as component_web');
    expect(renamedState.previewImageUrl).not.toBe(initial.preview_url);

    const tail = renamedState.commands.find((c) => !c.committed);
    expect(tail).toBeDefined();
    const reverted = await api.revertCommand(initial.session_id, tail!.command_id);
    const revertedState = stateFromPreview(reverted, false);
    expect(revertedState.previewImageUrl).toBe(initial.preview_url);
    expect(lineSet(revertedState)).toEqual(lineSet(stateFromPreview(initial, false)));
  }, 30_000);

  test('highlight toggle marks exactly the ChangeSet lines', async () => {
    const [command] = commandsForAction('connect-from-here', 'component:web', {
      target: 'component:db',
      label: 'queries',
    });
    await api.postCommand(initial.session_id, command!);

    const plain = await api.getPreview(initial.session_id, false);
    const plainState = stateFromPreview(plain, false);
    expect(markedRefs(plainState).size).toBe(0);
    expect(plain.puml).not.toContain('#lightblue');

    const marked = await api.getPreview(initial.session_id, true);
    const markedState = stateFromPreview(marked, true);
    expect(markedRefs(markedState)).toEqual(addedRefs(marked.changeset));
    expect(markedRefs(markedState).size).toBeGreaterThan(0);
    expect(marked.puml).toContain('[#lightblue]');
  }, 30_000);

  test('submit writes committed plus tail to the repository', async () => {
    const [note] = commandsForAction('note', 'component:db', { value: 'primary store' });
    const preview = await api.postCommand(initial.session_id, note!);
    const tailCount = preview.commands.filter((c) => !c.committed).length;
    expect(tailCount).toBe(2); // connector + note (the rename was reverted)

    const { job_id } = await api.submit(initial.session_id, false);
    const job = await api.waitForJob(job_id);
    expect(job.status).toBe('done');

    const written = JSON.parse(
      readFileSync(join(repoDir, '.living-arch', 'edits.json'), 'utf-8'),
    ) as { commands: unknown[] };
    expect(written.commands).toHaveLength(1 + tailCount);
  }, 60_000);
});
