/** Wire types for the living-arch HTTP API. */

export interface SourceMapEntry {
  line: number;
  ref: string;
}

export interface ChangeSet {
  added_elements: string[];
  removed_elements: string[];
  renamed: Record<string, [string, string]>;
  added_connectors: string[];
  removed_connectors: string[];
  annotated: string[];
}

export interface ReplayEntry {
  command_id: string;
  status: 'applied' | 'skipped';
  reason?: string;
}

export interface CommandInfo {
  command_id: string;
  issued_at: string;
  kind: string;
  payload: Record<string, string>;
  committed: boolean;
}

export interface Preview {
  session_id: string;
  base_head: string;
  expires_at: string;
  highlight: boolean;
  puml: string;
  preview_url: string;
  source_map: SourceMapEntry[];
  changeset: ChangeSet;
  report: ReplayEntry[];
  commands: CommandInfo[];
}

export type CommandKind =
  | 'add_element'
  | 'remove_element'
  | 'rename_element'
  | 'add_connector'
  | 'remove_connector'
  | 'set_note'
  | 'set_stereotype';

export interface EditCommand {
  kind: CommandKind;
  payload: Record<string, string>;
}

export interface Job {
  job_id: string;
  status: 'queued' | 'running' | 'done' | 'failed';
  result: string | null;
  error: string | null;
}
