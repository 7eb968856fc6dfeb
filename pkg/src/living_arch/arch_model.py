"""Unified architecture representation.

Everything else in the tool flows through this module: extraction produces a
model, edit replay rewrites it, diagram generation renders it. Models are
immutable values with a canonical ordering, a canonical JSON form, and a
content hash, so equal inputs always produce byte-equal artifacts.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import UserError

MODEL_VERSION = 1

ELEMENT_KINDS = ("component", "datastore", "network", "port")
CONNECTOR_KINDS = (
    "depends_on",
    "link",
    "network_membership",
    "volume_attachment",
    "inferred_env",
    "manual",
)

ID_RE = re.compile(
    r"^(component|datastore|network|port|manual):[a-z0-9]([a-z0-9-]*[a-z0-9])?(-[0-9]+)?$"
)


class EmptySlugError(UserError):
    """The name contains no alphanumeric characters, so no slug can be derived."""

    def __init__(self, name: str):
        super().__init__(f"cannot derive a slug from {name!r}: no alphanumeric characters")


def slugify(name: str) -> str:
    """Lowercase the name, collapse runs of non-alphanumerics to single dashes, trim dashes."""
    slug = re.sub(r"[^a-z0-9]+", "-", name.lower()).strip("-")
    if not slug:
        raise EmptySlugError(name)
    return slug


def element_id(kind: str, name: str) -> str:
    """Build the stable ID for an element: ``<kind>:<slug>``."""
    return f"{kind}:{slugify(name)}"


def slug_of(eid: str) -> str:
    """Return the slug part of an element ID."""
    return eid.split(":", 1)[1]


class SlugAllocator:
    """Hands out model-unique element IDs.

    Slug collisions get ``-2``, ``-3``, ... suffixes in first-come order.
    """

    def __init__(self) -> None:
        self._taken: set[str] = set()

    def allocate(self, kind: str, name: str) -> str:
        base = element_id(kind, name)
        candidate, n = base, 1
        while candidate in self._taken:
            n += 1
            candidate = f"{base}-{n}"
        self._taken.add(candidate)
        return candidate


@dataclass(frozen=True)
class Element:
    """A node of the architecture: component, datastore, network or port."""

    id: str
    kind: str
    display_name: str
    stereotypes: tuple[str, ...] = ()
    notes: tuple[str, ...] = ()
    attached_to: str | None = None  # ports only: the owning component
    origin: str = "extracted"  # "extracted" | "manual"
    provenance: tuple[str, ...] = ()


@dataclass(frozen=True)
class Connector:
    """An edge between two elements. The ID is fully derived."""

    kind: str
    source: str
    target: str
    label: str | None = None
    directed: bool = True
    origin: str = "extracted"
    confidence: str = "definite"  # "definite" | "heuristic"

    @property
    def id(self) -> str:
        return f"{self.kind}|{self.source}|{self.target}"


@dataclass(frozen=True)
class ArchitectureModel:
    """Elements plus connectors, in canonical iteration order.

    ``elements`` is keyed by element ID and ordered by (kind, id);
    ``connectors`` is keyed by connector ID and ordered by (source, target, kind).
    Construct through :meth:`build`, which enforces that ordering.
    """

    elements: dict[str, Element] = field(default_factory=dict)
    connectors: dict[str, Connector] = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    source_hash: str = ""

    @classmethod
    def build(
        cls,
        elements: Iterable[Element] = (),
        connectors: Iterable[Connector] = (),
        warnings: Iterable[str] = (),
        source_hash: str = "",
    ) -> "ArchitectureModel":
        ordered_elements = sorted(elements, key=lambda e: (e.kind, e.id))
        ordered_connectors = sorted(connectors, key=lambda c: (c.source, c.target, c.kind))
        element_map = {e.id: e for e in ordered_elements}
        connector_map = {c.id: c for c in ordered_connectors}
        if len(element_map) != len(ordered_elements):
            raise AssertionError("duplicate element IDs")
        if len(connector_map) != len(ordered_connectors):
            raise AssertionError("duplicate connector identities")
        return cls(element_map, connector_map, tuple(warnings), source_hash)


@dataclass(frozen=True)
class ChangeSet:
    """Structured diff between a pristine and an edited model."""

    added_elements: frozenset[str] = frozenset()
    removed_elements: frozenset[str] = frozenset()
    renamed: dict[str, tuple[str, str]] = field(default_factory=dict)
    added_connectors: frozenset[str] = frozenset()
    removed_connectors: frozenset[str] = frozenset()
    annotated: frozenset[str] = frozenset()

    @property
    def is_empty(self) -> bool:
        return not (
            self.added_elements
            or self.removed_elements
            or self.renamed
            or self.added_connectors
            or self.removed_connectors
            or self.annotated
        )


def _dedup(items: Iterable[str]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for item in items:
        seen.setdefault(item)
    return tuple(seen)


def merge_models(models: list[ArchitectureModel]) -> ArchitectureModel:
    """Unify per-file models into one.

    Elements with equal IDs are merged: provenance concatenated and
    deduplicated, first display name wins (a warning records any conflict),
    stereotypes and notes unioned. Connectors deduplicate on
    (kind, source, target).
    """
    if not models:
        raise ValueError("merge_models requires at least one model")
    elements: dict[str, Element] = {}
    connectors: dict[str, Connector] = {}
    warnings: list[str] = []
    for model in models:
        warnings.extend(model.warnings)
        for elem in model.elements.values():
            current = elements.get(elem.id)
            if current is None:
                elements[elem.id] = elem
                continue
            if current.kind != elem.kind:
                # Impossible by ID construction; a violation means corrupted input.
                raise AssertionError(f"conflicting kinds for {elem.id}")
            if elem.display_name != current.display_name:
                warnings.append(
                    f"display name conflict for {elem.id}: keeping "
                    f"{current.display_name!r}, ignoring {elem.display_name!r}"
                )
            elements[elem.id] = replace(
                current,
                stereotypes=_dedup(current.stereotypes + elem.stereotypes),
                notes=_dedup(current.notes + elem.notes),
                provenance=_dedup(current.provenance + elem.provenance),
            )
        for conn in model.connectors.values():
            connectors.setdefault(conn.id, conn)
    if len(models) == 1:
        source_hash = models[0].source_hash
    else:
        joined = "".join(m.source_hash for m in models)
        source_hash = hashlib.sha256(joined.encode("ascii")).hexdigest()
    return ArchitectureModel.build(
        elements.values(), connectors.values(), warnings, source_hash
    )


def diff_models(pristine: ArchitectureModel, edited: ArchitectureModel) -> ChangeSet:
    """Compute what the edits changed relative to the pristine extraction."""
    pristine_ids = set(pristine.elements)
    edited_ids = set(edited.elements)
    renamed: dict[str, tuple[str, str]] = {}
    annotated: set[str] = set()
    for eid in pristine_ids & edited_ids:
        before, after = pristine.elements[eid], edited.elements[eid]
        if before.display_name != after.display_name:
            renamed[eid] = (before.display_name, after.display_name)
        if before.notes != after.notes or before.stereotypes != after.stereotypes:
            annotated.add(eid)
    return ChangeSet(
        added_elements=frozenset(edited_ids - pristine_ids),
        removed_elements=frozenset(pristine_ids - edited_ids),
        renamed=renamed,
        added_connectors=frozenset(set(edited.connectors) - set(pristine.connectors)),
        removed_connectors=frozenset(set(pristine.connectors) - set(edited.connectors)),
        annotated=frozenset(annotated),
    )


def _element_obj(elem: Element) -> dict:
    return {
        "id": elem.id,
        "kind": elem.kind,
        "display_name": elem.display_name,
        "stereotypes": list(elem.stereotypes),
        "notes": list(elem.notes),
        "attached_to": elem.attached_to,
        "origin": elem.origin,
        "provenance": list(elem.provenance),
    }


def _connector_obj(conn: Connector) -> dict:
    return {
        "id": conn.id,
        "kind": conn.kind,
        "source": conn.source,
        "target": conn.target,
        "label": conn.label,
        "directed": conn.directed,
        "origin": conn.origin,
        "confidence": conn.confidence,
    }


def model_to_json(model: ArchitectureModel) -> str:
    """Canonical serialization: fixed key order, two-space indent, trailing newline."""
    obj = {
        "version": MODEL_VERSION,
        "elements": [_element_obj(e) for e in model.elements.values()],
        "connectors": [_connector_obj(c) for c in model.connectors.values()],
        "warnings": list(model.warnings),
        "source_hash": model.source_hash,
    }
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def model_from_json(text: str) -> ArchitectureModel:
    obj = json.loads(text)
    if obj.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version: {obj.get('version')!r}")
    elements = [
        Element(
            id=e["id"],
            kind=e["kind"],
            display_name=e["display_name"],
            stereotypes=tuple(e["stereotypes"]),
            notes=tuple(e["notes"]),
            attached_to=e["attached_to"],
            origin=e["origin"],
            provenance=tuple(e["provenance"]),
        )
        for e in obj["elements"]
    ]
    connectors = [
        Connector(
            kind=c["kind"],
            source=c["source"],
            target=c["target"],
            label=c["label"],
            directed=c["directed"],
            origin=c["origin"],
            confidence=c["confidence"],
        )
        for c in obj["connectors"]
    ]
    return ArchitectureModel.build(
        elements, connectors, tuple(obj["warnings"]), obj["source_hash"]
    )


def canonical_hash(model: ArchitectureModel) -> str:
    """SHA-256 of the canonical JSON serialization."""
    return hashlib.sha256(model_to_json(model).encode("utf-8")).hexdigest()


def changeset_to_obj(changeset: ChangeSet) -> dict:
    """JSON-friendly view of a ChangeSet with deterministic ordering."""
    return {
        "added_elements": sorted(changeset.added_elements),
        "removed_elements": sorted(changeset.removed_elements),
        "renamed": {
            eid: list(names) for eid, names in sorted(changeset.renamed.items())
        },
        "added_connectors": sorted(changeset.added_connectors),
        "removed_connectors": sorted(changeset.removed_connectors),
        "annotated": sorted(changeset.annotated),
    }


def validate_model(model: ArchitectureModel) -> list[str]:
    """Check the model invariants; returns a list of violations (empty when sound)."""
    problems: list[str] = []
    for eid, elem in model.elements.items():
        if eid != elem.id:
            problems.append(f"element keyed {eid} but carries id {elem.id}")
        if not ID_RE.match(elem.id):
            problems.append(f"malformed element id: {elem.id}")
        if elem.kind not in ELEMENT_KINDS:
            problems.append(f"unknown element kind: {elem.kind} ({eid})")
        if (elem.attached_to is not None) != (elem.kind == "port"):
            problems.append(f"attached_to must be set iff kind=port ({eid})")
        if elem.kind == "port":
            owner = model.elements.get(elem.attached_to or "")
            if owner is None:
                problems.append(f"port {eid} attached to missing element {elem.attached_to}")
            elif owner.kind != "component":
                problems.append(f"port {eid} attached to non-component {elem.attached_to}")
        if (elem.origin == "manual") != eid.startswith("manual:"):
            problems.append(f"origin/id prefix mismatch for {eid}")
    for cid, conn in model.connectors.items():
        if cid != conn.id:
            problems.append(f"connector keyed {cid} but derives id {conn.id}")
        if conn.kind not in CONNECTOR_KINDS:
            problems.append(f"unknown connector kind: {conn.kind}")
        if conn.source not in model.elements or conn.target not in model.elements:
            problems.append(f"dangling connector endpoints: {cid}")
        if (not conn.directed) and conn.kind != "network_membership":
            problems.append(f"only network_membership may be undirected: {cid}")
        if conn.kind == "inferred_env" and conn.confidence != "heuristic":
            problems.append(f"inferred_env must be heuristic: {cid}")
    element_order = [(e.kind, e.id) for e in model.elements.values()]
    if element_order != sorted(element_order):
        problems.append("elements are not in canonical (kind, id) order")
    connector_order = [(c.source, c.target, c.kind) for c in model.connectors.values()]
    if connector_order != sorted(connector_order):
        problems.append("connectors are not in canonical (source, target, kind) order")
    return problems
