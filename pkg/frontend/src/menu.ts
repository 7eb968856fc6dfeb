/**
 * Per-line context menus.
 *
 * Free-text PlantUML is never an option: each line offers exactly the
 * structured actions its model reference allows, and every action maps onto
 * one of the seven edit-command kinds (relabel composes two of them).
 */

import type { EditCommand } from './types.js';

export type RefKind = 'element' | 'connector' | 'unknown';

export interface MenuAction {
  id: string;
  label: string;
}

const ELEMENT_ACTIONS: MenuAction[] = [
  { id: 'rename', label: 'Rename' },
  { id: 'remove', label: 'Remove' },
  { id: 'note', label: 'Add note' },
  { id: 'stereotype', label: 'Add stereotype' },
  { id: 'connect-from-here', label: 'Add connector from here' },
];

const CONNECTOR_ACTIONS: MenuAction[] = [
  { id: 'remove-connector', label: 'Remove' },
  { id: 'relabel', label: 'Relabel' },
];

export function refKind(ref: string | null, knownRefs: Set<string>): RefKind {
  if (ref === null || !knownRefs.has(ref)) return 'unknown';
  return ref.includes('|') ? 'connector' : 'element';
}

/** Actions for one source-map ref; empty means the menu renders disabled. */
export function lineContextMenu(ref: string | null, knownRefs: Set<string>): MenuAction[] {
  switch (refKind(ref, knownRefs)) {
    case 'element':
      return ELEMENT_ACTIONS;
    case 'connector':
      return CONNECTOR_ACTIONS;
    default:
      return [];
  }
}

export function connectorEndpoints(ref: string): { source: string; target: string } {
  const [, source, target] = ref.split('|');
  if (!source || !target) throw new Error(`not a connector ref: ${ref}`);
  return { source, target };
}

/**
 * Translate a menu action into edit commands. Inputs (new names, labels,
 * targets) arrive via the `input` argument, already collected by the UI.
 */
export function commandsForAction(
  actionId: string,
  ref: string,
  input: Record<string, string>,
): EditCommand[] {
  switch (actionId) {
    case 'rename':
      return [{ kind: 'rename_element', payload: { target: ref, new_name: input.value ?? '' } }];
    case 'remove':
      return [{ kind: 'remove_element', payload: { target: ref } }];
    case 'note':
      return [{ kind: 'set_note', payload: { target: ref, note: input.value ?? '' } }];
    case 'stereotype':
      return [
        { kind: 'set_stereotype', payload: { target: ref, stereotype: input.value ?? '' } },
      ];
    case 'connect-from-here': {
      const payload: Record<string, string> = { source: ref, target: input.target ?? '' };
      if (input.label) payload.label = input.label;
      return [{ kind: 'add_connector', payload }];
    }
    case 'remove-connector': {
      const { source, target } = connectorEndpoints(ref);
      return [{ kind: 'remove_connector', payload: { source, target } }];
    }
    case 'relabel': {
      // No relabel primitive exists; compose removal with a labeled manual connector.
      const { source, target } = connectorEndpoints(ref);
      return [
        { kind: 'remove_connector', payload: { source, target } },
        { kind: 'add_connector', payload: { source, target, label: input.value ?? '' } },
      ];
    }
    default:
      throw new Error(`unknown action ${actionId}`);
  }
}
