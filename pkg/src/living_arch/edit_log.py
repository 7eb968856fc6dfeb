"""Ordered, replayable user edits.

Edits are stored as commands, never as model snapshots, so they can be
reapplied against every fresh extraction. Replay never fails: a command whose
target vanished is skipped (with a reason) and stays in the log, ready to
apply again when the sources change back.
"""

from __future__ import annotations

import json
import re
import secrets
from dataclasses import dataclass, replace
from datetime import datetime, timezone

from .arch_model import (
    ArchitectureModel,
    Connector,
    Element,
    ID_RE,
    EmptySlugError,
    slug_of,
    slugify,
)
from .errors import UserError

LOG_VERSION = 1

COMMAND_KINDS = (
    "add_element",
    "remove_element",
    "rename_element",
    "add_connector",
    "remove_connector",
    "set_note",
    "set_stereotype",
)

# Canonical payload key order per kind; optional keys are serialized only when set.
PAYLOAD_FIELDS: dict[str, tuple[str, ...]] = {
    "add_element": ("kind", "name"),
    "remove_element": ("target",),
    "rename_element": ("target", "new_name"),
    "add_connector": ("source", "target", "label"),
    "remove_connector": ("source", "target"),
    "set_note": ("target", "note"),
    "set_stereotype": ("target", "stereotype"),
}
OPTIONAL_FIELDS: dict[str, frozenset[str]] = {"add_connector": frozenset({"label"})}

ADDABLE_ELEMENT_KINDS = ("component", "datastore", "network")

_ISSUED_AT_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(\.\d+)?Z$")


class MalformedCommandError(UserError):
    """Command violates the schema; rejected before it ever reaches the log."""


class UnknownCommandError(UserError):
    def __init__(self, command_id: str):
        super().__init__(f"no command with id {command_id!r} in the log")


class SchemaViolationError(UserError):
    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class EditCommand:
    kind: str
    payload: dict
    command_id: str | None = None
    issued_at: str | None = None


@dataclass(frozen=True)
class EditLog:
    commands: tuple[EditCommand, ...] = ()


@dataclass(frozen=True)
class ReplayEntry:
    command_id: str
    status: str  # "applied" | "skipped"
    reason: str | None = None


@dataclass(frozen=True)
class ReplayReport:
    entries: tuple[ReplayEntry, ...] = ()

    @property
    def applied_count(self) -> int:
        return sum(1 for e in self.entries if e.status == "applied")

    @property
    def skipped_count(self) -> int:
        return sum(1 for e in self.entries if e.status == "skipped")


def _payload_problem(kind: str, payload: dict) -> tuple[str, str] | None:
    """Returns (field path, problem) or None. Shared by record and parse."""
    fields = PAYLOAD_FIELDS[kind]
    optional = OPTIONAL_FIELDS.get(kind, frozenset())
    for key in payload:
        if key not in fields:
            return key, f"unknown payload field for {kind}"
    for key in fields:
        if key in optional:
            continue
        if key not in payload:
            return key, "missing required payload field"
    for key, value in payload.items():
        if key in optional and value is None:
            continue
        if not isinstance(value, str):
            return key, "must be a string"
    if kind == "add_element":
        if payload["kind"] not in ADDABLE_ELEMENT_KINDS:
            return "kind", f"must be one of {', '.join(ADDABLE_ELEMENT_KINDS)}"
        try:
            slugify(payload["name"])
        except EmptySlugError:
            return "name", "yields an empty slug"
    if kind == "rename_element" and not payload["new_name"]:
        return "new_name", "must be non-empty"
    if kind == "set_note" and not payload["note"]:
        return "note", "must be non-empty"
    if kind == "set_stereotype" and not payload["stereotype"]:
        return "stereotype", "must be non-empty"
    for key in ("source", "target"):
        if key in payload and not ID_RE.match(payload[key]):
            return key, f"not a valid element id: {payload[key]!r}"
    return None


def validate_command(cmd: EditCommand) -> None:
    if cmd.kind not in COMMAND_KINDS:
        raise MalformedCommandError(f"unknown command kind {cmd.kind!r}")
    if not isinstance(cmd.payload, dict):
        raise MalformedCommandError("payload must be an object")
    problem = _payload_problem(cmd.kind, cmd.payload)
    if problem is not None:
        field, message = problem
        raise MalformedCommandError(f"payload.{field}: {message}")
    if cmd.command_id is not None and not cmd.command_id:
        raise MalformedCommandError("command_id must be non-empty when given")
    if cmd.issued_at is not None and not _ISSUED_AT_RE.match(cmd.issued_at):
        raise MalformedCommandError(f"issued_at is not an RFC 3339 UTC timestamp: {cmd.issued_at!r}")


def _normalized_payload(kind: str, payload: dict) -> dict:
    ordered = {}
    for key in PAYLOAD_FIELDS[kind]:
        if key in payload and payload[key] is not None:
            ordered[key] = payload[key]
    return ordered


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def record(log: EditLog, cmd: EditCommand) -> EditLog:
    """Validate and append; assigns command_id and issued_at when absent."""
    validate_command(cmd)
    command_id = cmd.command_id or f"{len(log.commands) + 1:04d}-{secrets.token_hex(4)}"
    if any(c.command_id == command_id for c in log.commands):
        raise MalformedCommandError(f"duplicate command_id {command_id!r}")
    normalized = EditCommand(
        kind=cmd.kind,
        payload=_normalized_payload(cmd.kind, cmd.payload),
        command_id=command_id,
        issued_at=cmd.issued_at or _utc_now(),
    )
    return EditLog(commands=log.commands + (normalized,))


def revert(log: EditLog, command_id: str) -> EditLog:
    """Drop one command. Later commands are untouched; replay will re-judge them."""
    if all(c.command_id != command_id for c in log.commands):
        raise UnknownCommandError(command_id)
    return EditLog(commands=tuple(c for c in log.commands if c.command_id != command_id))


def _rebuild(model: ArchitectureModel, elements, connectors) -> ArchitectureModel:
    return ArchitectureModel.build(elements, connectors, model.warnings, model.source_hash)


def apply_command(
    model: ArchitectureModel, cmd: EditCommand
) -> tuple[ArchitectureModel, str, str | None]:
    """Apply one command; never errors. Returns (model, status, skip reason)."""
    payload = cmd.payload
    if cmd.kind == "add_element":
        slug = slugify(payload["name"])
        if any(slug_of(eid) == slug for eid in model.elements):
            # An extracted element with the same slug supersedes the manual one.
            return model, "skipped", "already-present"
        elem = Element(
            id=f"manual:{slug}",
            kind=payload["kind"],
            display_name=payload["name"],
            origin="manual",
        )
        return (
            _rebuild(model, [*model.elements.values(), elem], model.connectors.values()),
            "applied",
            None,
        )

    if cmd.kind == "remove_element":
        target = payload["target"]
        if target not in model.elements:
            return model, "skipped", "target-missing"
        # Ports attached to the removed element must not dangle; cascade them.
        removed = {target} | {
            e.id for e in model.elements.values() if e.attached_to == target
        }
        elements = [e for e in model.elements.values() if e.id not in removed]
        connectors = [
            c
            for c in model.connectors.values()
            if c.source not in removed and c.target not in removed
        ]
        return _rebuild(model, elements, connectors), "applied", None

    if cmd.kind == "rename_element":
        target = payload["target"]
        if target not in model.elements:
            return model, "skipped", "target-missing"
        elements = [
            replace(e, display_name=payload["new_name"]) if e.id == target else e
            for e in model.elements.values()
        ]
        return _rebuild(model, elements, model.connectors.values()), "applied", None

    if cmd.kind == "add_connector":
        source, target = payload["source"], payload["target"]
        if source not in model.elements or target not in model.elements:
            return model, "skipped", "endpoint-missing"
        conn = Connector(
            kind="manual",
            source=source,
            target=target,
            label=payload.get("label"),
            origin="manual",
        )
        if conn.id in model.connectors:
            return model, "skipped", "already-present"
        return (
            _rebuild(model, model.elements.values(), [*model.connectors.values(), conn]),
            "applied",
            None,
        )

    if cmd.kind == "remove_connector":
        source, target = payload["source"], payload["target"]
        keep = [
            c
            for c in model.connectors.values()
            if not (c.source == source and c.target == target)
        ]
        if len(keep) == len(model.connectors):
            return model, "skipped", "target-missing"
        return _rebuild(model, model.elements.values(), keep), "applied", None

    if cmd.kind == "set_note":
        target = payload["target"]
        if target not in model.elements:
            return model, "skipped", "target-missing"
        elements = [
            replace(e, notes=e.notes + (payload["note"],)) if e.id == target else e
            for e in model.elements.values()
        ]
        return _rebuild(model, elements, model.connectors.values()), "applied", None

    if cmd.kind == "set_stereotype":
        target = payload["target"]
        if target not in model.elements:
            return model, "skipped", "target-missing"
        stereotype = payload["stereotype"]
        elements = [
            replace(e, stereotypes=e.stereotypes + (stereotype,))
            if e.id == target and stereotype not in e.stereotypes
            else e
            for e in model.elements.values()
        ]
        return _rebuild(model, elements, model.connectors.values()), "applied", None

    raise AssertionError(f"unreachable command kind {cmd.kind!r}")


def replay(
    pristine: ArchitectureModel, log: EditLog
) -> tuple[ArchitectureModel, ReplayReport]:
    """Fold the full command sequence, in issuance order, over a pristine model."""
    model = pristine
    entries: list[ReplayEntry] = []
    for cmd in log.commands:
        model, status, reason = apply_command(model, cmd)
        entries.append(ReplayEntry(cmd.command_id or "", status, reason))
    return model, ReplayReport(tuple(entries))


def _command_obj(cmd: EditCommand) -> dict:
    return {
        "command_id": cmd.command_id,
        "issued_at": cmd.issued_at,
        "kind": cmd.kind,
        "payload": _normalized_payload(cmd.kind, cmd.payload),
    }


def serialize_log(log: EditLog) -> str:
    obj = {"version": LOG_VERSION, "commands": [_command_obj(c) for c in log.commands]}
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def parse_log(text: str) -> EditLog:
    """Strict parse of the edits file; unknown fields are rejected."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolationError("$", f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaViolationError("$", "expected an object")
    for key in obj:
        if key not in ("version", "commands"):
            raise SchemaViolationError(f"$.{key}", "unknown field")
    if obj.get("version") != LOG_VERSION:
        raise SchemaViolationError("$.version", f"expected {LOG_VERSION}")
    commands_obj = obj.get("commands")
    if not isinstance(commands_obj, list):
        raise SchemaViolationError("$.commands", "expected an array")
    commands: list[EditCommand] = []
    seen_ids: set[str] = set()
    for i, item in enumerate(commands_obj):
        path = f"$.commands[{i}]"
        if not isinstance(item, dict):
            raise SchemaViolationError(path, "expected an object")
        for key in item:
            if key not in ("command_id", "issued_at", "kind", "payload"):
                raise SchemaViolationError(f"{path}.{key}", "unknown field")
        for key in ("command_id", "issued_at", "kind"):
            if not isinstance(item.get(key), str) or not item[key]:
                raise SchemaViolationError(f"{path}.{key}", "expected a non-empty string")
        if item["command_id"] in seen_ids:
            raise SchemaViolationError(
                f"{path}.command_id", f"duplicate command_id {item['command_id']!r}"
            )
        seen_ids.add(item["command_id"])
        if not _ISSUED_AT_RE.match(item["issued_at"]):
            raise SchemaViolationError(f"{path}.issued_at", "not an RFC 3339 UTC timestamp")
        kind = item["kind"]
        if kind not in COMMAND_KINDS:
            raise SchemaViolationError(f"{path}.kind", f"unknown command kind {kind!r}")
        payload = item.get("payload")
        if not isinstance(payload, dict):
            raise SchemaViolationError(f"{path}.payload", "expected an object")
        problem = _payload_problem(kind, payload)
        if problem is not None:
            field, message = problem
            raise SchemaViolationError(f"{path}.payload.{field}", message)
        commands.append(
            EditCommand(
                kind=kind,
                payload=_normalized_payload(kind, payload),
                command_id=item["command_id"],
                issued_at=item["issued_at"],
            )
        )
    return EditLog(commands=tuple(commands))


def _entry_obj(entry: ReplayEntry) -> dict:
    obj = {"command_id": entry.command_id, "status": entry.status}
    if entry.reason is not None:
        obj["reason"] = entry.reason
    return obj


def serialize_report(report: ReplayReport) -> str:
    obj = {"version": LOG_VERSION, "entries": [_entry_obj(e) for e in report.entries]}
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
