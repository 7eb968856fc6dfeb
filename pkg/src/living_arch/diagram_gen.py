"""Deterministic PlantUML emission.

The generated text is canonical: same model, same bytes. Layout is left
entirely to PlantUML (no coordinates ever). A source map ties every emitted
line back to the element or connector it renders, which is what makes
structured per-line editing possible.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass

from .arch_model import ArchitectureModel, ChangeSet, canonical_hash

HEADER_COMMENT_PREFIX = "' living-arch v1 model:"

SKINPARAM_BLOCK = (
    "skinparam shadowing false",
    "skinparam componentStyle rectangle",
)

_DECLARATION = {
    "component": "component",
    "datastore": "database",
    "network": "cloud",
    "port": "interface",
}

_ARROWS = {
    "depends_on": ("-->", "depends on"),
    "link": ("-->", "links"),
    "network_membership": ("..", None),
    "volume_attachment": ("-->", "mounts"),
    "inferred_env": ("..>", "env (inferred)"),
}

HIGHLIGHT_COLOR = "#lightblue"


@dataclass(frozen=True)
class RenderOptions:
    highlight: ChangeSet | None = None
    include_networks: bool = True
    include_ports: bool = True
    include_heuristic: bool = True


@dataclass(frozen=True)
class DiagramDocument:
    puml_text: str
    source_map: tuple[tuple[int, str], ...]  # (1-based line, element or connector id)
    model_hash: str


def _alias(eid: str) -> str:
    return eid.replace(":", "_").replace("-", "_")


def _quoted(name: str) -> str:
    # PlantUML quoted names cannot themselves contain double quotes.
    return '"' + name.replace('"', "'") + '"'


def _colored(arrow: str) -> str:
    return arrow[0] + f"[{HIGHLIGHT_COLOR}]" + arrow[1:]


def generate_plantuml(
    model: ArchitectureModel, opts: RenderOptions = RenderOptions()
) -> DiagramDocument:
    """Render the model as a UML component diagram.

    Emits header, fixed skinparam block, element declarations and connector
    lines in canonical model order, then ``@enduml``. With a highlight
    ChangeSet, additions are colored, renamed or annotated elements carry an
    ``<<edited>>`` stereotype, and removals are listed in a trailing note.
    """
    changes = opts.highlight
    added_elements = changes.added_elements if changes else frozenset()
    added_connectors = changes.added_connectors if changes else frozenset()
    edited = (set(changes.renamed) | set(changes.annotated)) if changes else set()
    removed = (
        sorted(changes.removed_elements) + sorted(changes.removed_connectors)
        if changes
        else []
    )

    model_hash = canonical_hash(model)
    lines = ["@startuml", HEADER_COMMENT_PREFIX + model_hash, *SKINPARAM_BLOCK]
    source_map: list[tuple[int, str]] = []

    rendered: set[str] = set()
    for elem in model.elements.values():
        if elem.kind == "network" and not opts.include_networks:
            continue
        if elem.kind == "port" and not opts.include_ports:
            continue
        rendered.add(elem.id)
        decl = f"{_DECLARATION[elem.kind]} {_quoted(elem.display_name)} as {_alias(elem.id)}"
        if elem.kind == "network":
            decl += " <<network>>"
        for stereotype in elem.stereotypes:
            decl += f" <<{stereotype}>>"
        if elem.id in edited:
            decl += " <<edited>>"
        if elem.id in added_elements:
            decl += f" {HIGHLIGHT_COLOR}"
        lines.append(decl)
        source_map.append((len(lines), elem.id))
        if elem.kind == "port" and elem.attached_to:
            lines.append(f"{_alias(elem.attached_to)} -- {_alias(elem.id)}")
            source_map.append((len(lines), elem.id))

    for conn in model.connectors.values():
        if conn.kind == "inferred_env" and not opts.include_heuristic:
            continue
        if conn.source not in rendered or conn.target not in rendered:
            continue
        arrow, label = _ARROWS.get(conn.kind, ("-->", conn.label))
        if conn.id in added_connectors:
            arrow = _colored(arrow)
        line = f"{_alias(conn.source)} {arrow} {_alias(conn.target)}"
        if label:
            line += f" : {label}"
        lines.append(line)
        source_map.append((len(lines), conn.id))

    if removed:
        lines.append("note as removed_note")
        lines.append("  Removed since last generation")
        lines.extend(f"  {rid}" for rid in removed)
        lines.append("end note")

    lines.append("@enduml")
    return DiagramDocument(
        puml_text="\n".join(lines) + "\n",
        source_map=tuple(source_map),
        model_hash=model_hash,
    )


# --- PlantUML server text encoding -------------------------------------------
#
# The deflate mode packs a raw DEFLATE stream 3 bytes -> 4 chars over the
# PlantUML alphabet (digits, upper, lower, -, _). The hex mode is "~h" plus
# the uppercase hex of the UTF-8 bytes.

_ENCODE_ALPHABET = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz-_"
_DECODE_INDEX = {c: i for i, c in enumerate(_ENCODE_ALPHABET)}


def _encode64(data: bytes) -> str:
    out = []
    for i in range(0, len(data), 3):
        b1 = data[i]
        b2 = data[i + 1] if i + 1 < len(data) else 0
        b3 = data[i + 2] if i + 2 < len(data) else 0
        out.append(_ENCODE_ALPHABET[b1 >> 2])
        out.append(_ENCODE_ALPHABET[((b1 & 0x3) << 4) | (b2 >> 4)])
        out.append(_ENCODE_ALPHABET[((b2 & 0xF) << 2) | (b3 >> 6)])
        out.append(_ENCODE_ALPHABET[b3 & 0x3F])
    return "".join(out)


def _decode64(text: str) -> bytes:
    out = bytearray()
    for i in range(0, len(text), 4):
        chunk = text[i : i + 4]
        values = [_DECODE_INDEX[c] for c in chunk] + [0] * (4 - len(chunk))
        out.append((values[0] << 2) | (values[1] >> 4))
        if len(chunk) >= 3:
            out.append(((values[1] & 0xF) << 4) | (values[2] >> 2))
        if len(chunk) == 4:
            out.append(((values[2] & 0x3) << 6) | values[3])
    return bytes(out)


def encode_plantuml(text: str, mode: str = "deflate") -> str:
    """Encode diagram text for a PlantUML server URL ("deflate" or "hex")."""
    data = text.encode("utf-8")
    if mode == "hex":
        return "~h" + data.hex().upper()
    if mode == "deflate":
        compressor = zlib.compressobj(9, zlib.DEFLATED, -15)
        return _encode64(compressor.compress(data) + compressor.flush())
    raise ValueError(f"unknown encoding mode {mode!r}")


def decode_plantuml(encoded: str, mode: str = "deflate") -> str:
    """Inverse of encode_plantuml; exists so the encoding is testable."""
    if mode == "hex":
        if not encoded.startswith("~h"):
            raise ValueError("hex encoding must start with '~h'")
        return bytes.fromhex(encoded[2:]).decode("utf-8")
    if mode == "deflate":
        decompressor = zlib.decompressobj(-15)
        return decompressor.decompress(_decode64(encoded)).decode("utf-8")
    raise ValueError(f"unknown encoding mode {mode!r}")


def render_url(
    doc: DiagramDocument, server_base: str, format: str = "svg", mode: str = "deflate"
) -> str:
    """Build the URL a PlantUML server renders this document at."""
    return f"{server_base.rstrip('/')}/{format}/{encode_plantuml(doc.puml_text, mode)}"


MAP_VERSION = 1


def serialize_map(doc: DiagramDocument) -> str:
    """Canonical JSON for the line -> model-ID source map artifact."""
    obj = {
        "version": MAP_VERSION,
        "lines": [{"line": line, "ref": ref} for line, ref in doc.source_map],
    }
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"
