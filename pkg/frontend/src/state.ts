/**
 * Editor state derived purely from server previews.
 *
 * Nothing here is authoritative: a refresh rebuilds the same state from the
 * same responses, which is what keeps the editor refresh-safe.
 */

import type { ChangeSet, CommandInfo, Preview, ReplayEntry } from './types.js';

export interface PumlLine {
  number: number; // 1-based, matches the source map
  text: string;
  ref: string | null;
  isNew: boolean;
}

export interface SubmitForm {
  updateReadme: boolean;
  summary: string;
}

export interface EditorState {
  sessionId: string;
  baseHead: string;
  expiresAt: string;
  pumlLines: PumlLine[];
  previewImageUrl: string;
  highlightEnabled: boolean;
  pendingSubmitForm: SubmitForm;
  changeset: ChangeSet;
  commands: CommandInfo[];
  report: ReplayEntry[];
}

export function addedRefs(changeset: ChangeSet): Set<string> {
  return new Set([...changeset.added_elements, ...changeset.added_connectors]);
}

export function stateFromPreview(
  preview: Preview,
  highlightEnabled: boolean,
  form?: SubmitForm,
): EditorState {
  const refByLine = new Map<number, string>();
  for (const entry of preview.source_map) refByLine.set(entry.line, entry.ref);
  const added = addedRefs(preview.changeset);
  const lines = preview.puml.replace(/\n$/, '').split('\n');
  const pumlLines = lines.map((text, index) => {
    const ref = refByLine.get(index + 1) ?? null;
    return {
      number: index + 1,
      text,
      ref,
      isNew: ref !== null && added.has(ref),
    };
  });
  return {
    sessionId: preview.session_id,
    baseHead: preview.base_head,
    expiresAt: preview.expires_at,
    pumlLines,
    previewImageUrl: preview.preview_url,
    highlightEnabled,
    pendingSubmitForm: form ?? { updateReadme: false, summary: '' },
    changeset: preview.changeset,
    commands: preview.commands,
    report: preview.report,
  };
}

/** Refs whose lines are visually marked when the highlight toggle is on. */
export function markedRefs(state: EditorState): Set<string> {
  if (!state.highlightEnabled) return new Set();
  return new Set(state.pumlLines.filter((l) => l.isNew && l.ref).map((l) => l.ref as string));
}

export function knownRefs(state: EditorState): Set<string> {
  return new Set(state.pumlLines.filter((l) => l.ref !== null).map((l) => l.ref as string));
}

/** Tail commands (uncommitted in this session) carry the revert affordance first. */
export function revertableCommands(state: EditorState): CommandInfo[] {
  return [...state.commands].reverse();
}

export function lineSet(state: EditorState): string[] {
  return state.pumlLines.map((l) => l.text);
}
