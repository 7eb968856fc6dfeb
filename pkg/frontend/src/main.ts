/**
 * Three-zone edit page: (1) rendered diagram, (2) per-line structured editor,
 * (3) preview/highlight/submit form.
 */

import { ApiClient, ApiError } from './api.js';
import { commandsForAction, lineContextMenu } from './menu.js';
import {
  EditorState,
  knownRefs,
  revertableCommands,
  stateFromPreview,
} from './state.js';
import type { EditCommand, Preview } from './types.js';

const api = new ApiClient('');

let state: EditorState | null = null;
let busy = false;
const queued: EditCommand[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function showError(message: string) {
  const banner = el<HTMLDivElement>('error-banner');
  banner.textContent = message;
  banner.hidden = false;
}

function clearError() {
  el<HTMLDivElement>('error-banner').hidden = true;
}

function applyPreview(preview: Preview) {
  const highlight = el<HTMLInputElement>('highlight-toggle').checked;
  const form = state?.pendingSubmitForm;
  state = stateFromPreview(preview, highlight, form);
  render();
}

function render() {
  if (!state) return;
  el<HTMLImageElement>('diagram').src = state.previewImageUrl;
  el<HTMLSpanElement>('session-info').textContent =
    `session ${state.sessionId.slice(0, 8)} @ ${state.baseHead.slice(0, 7)}`;

  const linesBox = el<HTMLDivElement>('lines');
  linesBox.replaceChildren();
  const refs = knownRefs(state);
  for (const line of state.pumlLines) {
    const row = document.createElement('div');
    row.className = 'line';
    if (state.highlightEnabled && line.isNew) row.classList.add('is-new');
    const text = document.createElement('code');
    text.textContent = line.text;
    row.appendChild(text);
    const actions = lineContextMenu(line.ref, refs);
    if (actions.length > 0 && line.ref) {
      const menu = document.createElement('span');
      menu.className = 'menu';
      for (const action of actions) {
        const button = document.createElement('button');
        button.textContent = action.label;
        button.onclick = () => runAction(action.id, line.ref as string);
        menu.appendChild(button);
      }
      row.appendChild(menu);
    } else {
      row.classList.add('menu-disabled');
    }
    linesBox.appendChild(row);
  }

  const commandsBox = el<HTMLUListElement>('commands');
  commandsBox.replaceChildren();
  for (const command of revertableCommands(state)) {
    const item = document.createElement('li');
    const entry = state.report.find((r) => r.command_id === command.command_id);
    const status = entry ? (entry.reason ? `${entry.status} (${entry.reason})` : entry.status) : '';
    item.textContent = `${command.kind} ${JSON.stringify(command.payload)} — ${status} `;
    const revert = document.createElement('button');
    revert.textContent = '↺ revert';
    revert.onclick = () => revertCommand(command.command_id);
    item.appendChild(revert);
    commandsBox.appendChild(item);
  }
}

function promptInputs(actionId: string): Record<string, string> | null {
  const ask = (label: string): string | null => window.prompt(label);
  if (actionId === 'rename') {
    const value = ask('New display name');
    return value === null ? null : { value };
  }
  if (actionId === 'note') {
    const value = ask('Note text');
    return value === null ? null : { value };
  }
  if (actionId === 'stereotype') {
    const value = ask('Stereotype');
    return value === null ? null : { value };
  }
  if (actionId === 'relabel') {
    const value = ask('New connector label');
    return value === null ? null : { value };
  }
  if (actionId === 'connect-from-here') {
    const target = ask('Target element id (e.g. component:db)');
    if (target === null) return null;
    const label = ask('Label (optional)') ?? '';
    return label ? { target, label } : { target };
  }
  return {};
}

async function withBusy(work: () => Promise<void>) {
  if (!state) return;
  if (busy) return; // one in-flight request; later clicks feed the queue below
  busy = true;
  clearError();
  try {
    await work();
    while (queued.length > 0) {
      const next = queued.shift() as EditCommand;
      await postCommand(next);
    }
  } catch (error) {
    if (error instanceof ApiError && error.status === 410) {
      showError('Session expired. Reload the page to start a new one.');
    } else {
      showError(error instanceof Error ? error.message : String(error));
    }
  } finally {
    busy = false;
  }
}

async function postCommand(command: EditCommand) {
  if (!state) return;
  const highlight = el<HTMLInputElement>('highlight-toggle').checked;
  applyPreview(await api.postCommand(state.sessionId, command, highlight));
}

function runAction(actionId: string, ref: string) {
  if (!state) return;
  const inputs = promptInputs(actionId);
  if (inputs === null) return;
  let commands: EditCommand[];
  try {
    commands = commandsForAction(actionId, ref, inputs);
  } catch (error) {
    showError(error instanceof Error ? error.message : String(error));
    return;
  }
  if (busy) {
    queued.push(...commands);
    return;
  }
  void withBusy(async () => {
    for (const command of commands) await postCommand(command);
  });
}

function revertCommand(commandId: string) {
  void withBusy(async () => {
    if (!state) return;
    const highlight = el<HTMLInputElement>('highlight-toggle').checked;
    applyPreview(await api.revertCommand(state.sessionId, commandId, highlight));
  });
}

function refreshPreview() {
  void withBusy(async () => {
    if (!state) return;
    const highlight = el<HTMLInputElement>('highlight-toggle').checked;
    applyPreview(await api.getPreview(state.sessionId, highlight));
  });
}

function submit() {
  void withBusy(async () => {
    if (!state) return;
    const updateReadme = el<HTMLInputElement>('update-readme').checked;
    const progress = el<HTMLParagraphElement>('submit-progress');
    progress.textContent = 'Submitting…';
    const { job_id } = await api.submit(state.sessionId, updateReadme);
    const job = await api.waitForJob(job_id);
    if (job.status === 'failed') {
      progress.textContent = '';
      showError(`Submission failed: ${job.error ?? 'unknown error'}`);
      return;
    }
    const result = job.result ?? '';
    if (result.startsWith('http')) {
      progress.innerHTML = '';
      const link = document.createElement('a');
      link.href = result;
      link.textContent = result;
      link.target = '_blank';
      progress.append('Pull request: ', link);
    } else {
      progress.textContent = `Committed: ${result}`;
    }
  });
}

async function start() {
  const params = new URLSearchParams(window.location.search);
  const repo = params.get('repo') ?? el<HTMLInputElement>('repo-input').value;
  const branch = params.get('branch') ?? el<HTMLInputElement>('branch-input').value ?? 'main';
  const provider = params.get('provider') ?? 'auto';
  if (!repo) {
    showError('Provide a repository (local path or owner/name).');
    return;
  }
  clearError();
  try {
    applyPreview(await api.createSession(repo, branch || 'main', provider));
    el<HTMLDivElement>('start-form').hidden = true;
    el<HTMLDivElement>('editor').hidden = false;
  } catch (error) {
    showError(error instanceof Error ? error.message : String(error));
  }
}

export function init() {
  el<HTMLButtonElement>('start-button').onclick = () => void start();
  el<HTMLButtonElement>('preview-button').onclick = refreshPreview;
  el<HTMLButtonElement>('submit-button').onclick = submit;
  el<HTMLInputElement>('highlight-toggle').onchange = refreshPreview;
  const params = new URLSearchParams(window.location.search);
  if (params.get('repo')) void start();
}

if (typeof document !== 'undefined' && document.readyState !== 'loading') {
  init();
} else if (typeof document !== 'undefined') {
  document.addEventListener('DOMContentLoaded', init);
}
