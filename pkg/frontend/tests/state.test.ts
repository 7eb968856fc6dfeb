import { describe, expect, test } from 'vitest';

import { addedRefs, knownRefs, lineSet, markedRefs, stateFromPreview } from '../src/state.js';
import type { Preview } from '../src/types.js';

const PREVIEW: Preview = {
  session_id: 'abc123',
  base_head: 'deadbeef',
  expires_at: '2026-08-11T12:00:00Z',
  highlight: false,
  puml: [
    '@startuml',
    "' living-arch v1 model:ffff",
    'skinparam shadowing false',
    'skinparam componentStyle rectangle',
    'component "web" as component_web',
    'component "cache" as manual_cache',
    'component_web --> manual_cache',
    '@enduml',
    '',
  ].join('\n'),
  preview_url: 'https://puml.test/plantuml/svg/xyz',
  source_map: [
    { line: 5, ref: 'component:web' },
    { line: 6, ref: 'manual:cache' },
    { line: 7, ref: 'manual|component:web|manual:cache' },
  ],
  changeset: {
    added_elements: ['manual:cache'],
    removed_elements: [],
    renamed: {},
    added_connectors: ['manual|component:web|manual:cache'],
    removed_connectors: [],
    annotated: [],
  },
  report: [{ command_id: '0001-a', status: 'applied' }],
  commands: [
    {
      command_id: '0001-a',
      issued_at: '2026-08-11T10:00:00Z',
      kind: 'add_element',
      payload: { kind: 'component', name: 'cache' },
      committed: false,
    },
  ],
};

describe('stateFromPreview', () => {
  test('mirrors the preview exactly', () => {
    const state = stateFromPreview(PREVIEW, false);
    expect(state.sessionId).toBe('abc123');
    expect(state.pumlLines).toHaveLength(8);
    expect(state.pumlLines[4]?.ref).toBe('component:web');
    expect(state.pumlLines[0]?.ref).toBeNull();
    expect(state.previewImageUrl).toBe(PREVIEW.preview_url);
  });

  test('is_new derives from ChangeSet membership', () => {
    const state = stateFromPreview(PREVIEW, true);
    expect(state.pumlLines[5]?.isNew).toBe(true); // manual:cache
    expect(state.pumlLines[6]?.isNew).toBe(true); // added connector
    expect(state.pumlLines[4]?.isNew).toBe(false); // extracted component
  });

  test('rebuilding from the same response yields identical state (refresh-safe)', () => {
    expect(stateFromPreview(PREVIEW, true)).toEqual(stateFromPreview(PREVIEW, true));
  });

  test('submit form state survives preview refreshes', () => {
    const form = { updateReadme: true, summary: 'tidy up' };
    const state = stateFromPreview(PREVIEW, false, form);
    expect(state.pendingSubmitForm).toEqual(form);
  });
});

describe('markedRefs', () => {
  test('highlight on marks exactly the ChangeSet refs', () => {
    const state = stateFromPreview(PREVIEW, true);
    expect(markedRefs(state)).toEqual(addedRefs(PREVIEW.changeset));
  });

  test('highlight off marks nothing', () => {
    const state = stateFromPreview(PREVIEW, false);
    expect(markedRefs(state).size).toBe(0);
  });
});

describe('helpers', () => {
  test('knownRefs collects every mapped ref', () => {
    const state = stateFromPreview(PREVIEW, false);
    expect(knownRefs(state)).toEqual(
      new Set(['component:web', 'manual:cache', 'manual|component:web|manual:cache']),
    );
  });

  test('lineSet preserves order and text', () => {
    const state = stateFromPreview(PREVIEW, false);
    expect(lineSet(state)[0]).toBe('@startuml');
    expect(lineSet(state)).toHaveLength(8);
  });
});
