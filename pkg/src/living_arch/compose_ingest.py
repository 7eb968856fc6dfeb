"""Docker Compose ingestion.

Parses a restricted Compose subset (the keys that matter for a component
diagram: image, build, container_name, depends_on, links, networks, volumes,
ports, environment) and maps it onto an ArchitectureModel. Everything else in
the file is ignored, never rejected. Variable interpolation is not performed;
``${VAR}`` stays a literal string.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from typing import Iterable

import yaml

from .arch_model import ArchitectureModel, Connector, Element, SlugAllocator
from .errors import UserError

COMPOSE_FILENAMES = (
    "docker-compose.yml",
    "docker-compose.yaml",
    "compose.yml",
    "compose.yaml",
)


class ComposeError(UserError):
    """Base class for compose-file problems."""


class YamlSyntaxError(ComposeError):
    def __init__(self, message: str, source_path: str, line: int | None = None, column: int | None = None):
        self.source_path = source_path
        self.line = line
        self.column = column
        position = f":{line}:{column}" if line is not None else ""
        super().__init__(f"{source_path}{position}: {message}")


class DuplicateServiceError(ComposeError):
    def __init__(self, name: str, source_path: str, line: int | None = None):
        self.name = name
        position = f":{line}" if line is not None else ""
        super().__init__(f"{source_path}{position}: duplicate service {name!r}")


class InvalidPortError(ComposeError):
    def __init__(self, service: str, value: object, source_path: str, reason: str):
        super().__init__(
            f"{source_path}: invalid port {value!r} in service {service!r}: {reason}"
        )


class MissingServicesSectionError(ComposeError):
    def __init__(self, source_path: str):
        super().__init__(f"{source_path}: no top-level 'services' mapping")


class NoComposeFoundError(ComposeError):
    def __init__(self) -> None:
        super().__init__(
            "no compose file found (looked for " + ", ".join(COMPOSE_FILENAMES) + ")"
        )


@dataclass(frozen=True)
class PortSpec:
    container: int
    host: int | None = None
    protocol: str = "tcp"


@dataclass(frozen=True)
class VolumeMount:
    source: str | None  # named volume, host path, or None for anonymous
    target: str

    @property
    def is_named(self) -> bool:
        """True when the source names a volume rather than a host path."""
        return (
            self.source is not None
            and "/" not in self.source
            and not self.source.startswith((".", "~"))
        )


@dataclass(frozen=True)
class ServiceDef:
    name: str
    image: str | None = None
    build: str | None = None
    container_name: str | None = None
    depends_on: tuple[str, ...] = ()
    links: tuple[tuple[str, str | None], ...] = ()
    networks: tuple[str, ...] = ()
    volumes: tuple[VolumeMount, ...] = ()
    ports: tuple[PortSpec, ...] = ()
    environment: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ComposeSpec:
    services: dict[str, ServiceDef]
    networks: frozenset[str]
    volumes: frozenset[str]
    source_path: str


@dataclass(frozen=True)
class HeuristicsConfig:
    """Tunable inference knobs; every heuristic must be suppressible."""

    env_inference: bool = True


def _construct(node: yaml.Node) -> object:
    loader = yaml.SafeLoader("")
    return loader.construct_object(node, deep=True)


def _compose_root(text: str, source_path: str) -> yaml.Node | None:
    try:
        return yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark
        line = mark.line + 1 if mark else None
        column = mark.column + 1 if mark else None
        raise YamlSyntaxError(exc.problem or "invalid YAML", source_path, line, column) from exc
    except yaml.YAMLError as exc:
        raise YamlSyntaxError(str(exc), source_path) from exc


def _is_empty(node: yaml.Node | None) -> bool:
    return node is None or (
        isinstance(node, yaml.ScalarNode) and node.tag == "tag:yaml.org,2002:null"
    )


def _scalar_str(node: yaml.Node, source_path: str, what: str) -> str:
    value = _construct(node)
    if isinstance(value, bool) or value is None:
        raise YamlSyntaxError(
            f"{what} must be a string, got {value!r}", source_path, node.start_mark.line + 1
        )
    return str(value)


def _string_list(node: yaml.Node, source_path: str, what: str) -> list[str]:
    """Accepts a sequence of scalars, or a mapping whose keys are taken in order."""
    if _is_empty(node):
        return []
    if isinstance(node, yaml.SequenceNode):
        return [_scalar_str(item, source_path, what) for item in node.value]
    if isinstance(node, yaml.MappingNode):
        return [_scalar_str(key, source_path, what) for key, _ in node.value]
    raise YamlSyntaxError(
        f"{what} must be a list or mapping", source_path, node.start_mark.line + 1
    )


def _parse_port_number(raw: str, service: str, value: object, source_path: str, what: str) -> int:
    try:
        number = int(raw, 10)
    except ValueError:
        raise InvalidPortError(service, value, source_path, f"{what} is not a number") from None
    if not 1 <= number <= 65535:
        raise InvalidPortError(service, value, source_path, f"{what} {number} out of range 1..65535")
    return number


def _parse_port_entry(node: yaml.Node, service: str, source_path: str) -> PortSpec:
    if isinstance(node, yaml.MappingNode):
        mapping = {str(_construct(k)): _construct(v) for k, v in node.value}
        target = mapping.get("target")
        if target is None:
            raise InvalidPortError(service, mapping, source_path, "long form needs 'target'")
        container = _parse_port_number(str(target), service, mapping, source_path, "container port")
        host = None
        if mapping.get("published") is not None:
            host = _parse_port_number(
                str(mapping["published"]), service, mapping, source_path, "host port"
            )
        protocol = str(mapping.get("protocol") or "tcp")
        if protocol not in ("tcp", "udp"):
            raise InvalidPortError(service, mapping, source_path, f"unknown protocol {protocol!r}")
        return PortSpec(container=container, host=host, protocol=protocol)
    value = _construct(node)
    text = str(value)
    protocol = "tcp"
    if "/" in text:
        text, protocol = text.split("/", 1)
        if protocol not in ("tcp", "udp"):
            raise InvalidPortError(service, value, source_path, f"unknown protocol {protocol!r}")
    parts = text.split(":")
    if len(parts) == 1:
        return PortSpec(
            container=_parse_port_number(parts[0], service, value, source_path, "container port"),
            protocol=protocol,
        )
    if len(parts) == 2:
        return PortSpec(
            host=_parse_port_number(parts[0], service, value, source_path, "host port"),
            container=_parse_port_number(parts[1], service, value, source_path, "container port"),
            protocol=protocol,
        )
    if len(parts) == 3:  # "ip:host:container"; the bind address is not architectural
        return PortSpec(
            host=_parse_port_number(parts[1], service, value, source_path, "host port"),
            container=_parse_port_number(parts[2], service, value, source_path, "container port"),
            protocol=protocol,
        )
    raise InvalidPortError(service, value, source_path, "unrecognized port syntax")


def _parse_volume_entry(node: yaml.Node, source_path: str) -> VolumeMount | None:
    if isinstance(node, yaml.MappingNode):
        mapping = {str(_construct(k)): _construct(v) for k, v in node.value}
        target = mapping.get("target")
        if not target:
            return None
        source = mapping.get("source")
        return VolumeMount(source=str(source) if source is not None else None, target=str(target))
    text = str(_construct(node))
    parts = text.split(":")
    if len(parts) == 1:
        return VolumeMount(source=None, target=parts[0])
    # "source:target" or "source:target:mode"; access mode is not architectural
    return VolumeMount(source=parts[0], target=parts[1])


def _env_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def _parse_environment(node: yaml.Node, source_path: str) -> list[tuple[str, str]]:
    if _is_empty(node):
        return []
    if isinstance(node, yaml.MappingNode):
        return [
            (str(_construct(k)), _env_value(_construct(v))) for k, v in node.value
        ]
    if isinstance(node, yaml.SequenceNode):
        entries = []
        for item in node.value:
            text = str(_construct(item))
            key, sep, value = text.partition("=")
            entries.append((key, value if sep else ""))
        return entries
    raise YamlSyntaxError(
        "environment must be a list or mapping", source_path, node.start_mark.line + 1
    )


def _parse_service(name: str, node: yaml.Node | None, source_path: str) -> ServiceDef:
    if _is_empty(node):
        return ServiceDef(name=name)
    if not isinstance(node, yaml.MappingNode):
        raise YamlSyntaxError(
            f"service {name!r} must be a mapping",
            source_path,
            node.start_mark.line + 1,
        )
    image = build = container_name = None
    depends_on: list[str] = []
    links: list[tuple[str, str | None]] = []
    networks: list[str] = []
    volumes: list[VolumeMount] = []
    ports: list[PortSpec] = []
    environment: list[tuple[str, str]] = []
    for key_node, value_node in node.value:
        key = str(_construct(key_node))
        if key == "image":
            image = _scalar_str(value_node, source_path, "image")
        elif key == "build":
            if isinstance(value_node, yaml.MappingNode):
                mapping = {str(_construct(k)): _construct(v) for k, v in value_node.value}
                context = mapping.get("context")
                build = str(context) if context is not None else None
            else:
                build = _scalar_str(value_node, source_path, "build")
        elif key == "container_name":
            container_name = _scalar_str(value_node, source_path, "container_name")
        elif key == "depends_on":
            depends_on = _string_list(value_node, source_path, "depends_on entry")
        elif key == "links":
            for raw in _string_list(value_node, source_path, "links entry"):
                target, sep, alias = raw.partition(":")
                links.append((target, alias if sep else None))
        elif key == "networks":
            networks = _string_list(value_node, source_path, "networks entry")
        elif key == "volumes":
            if not _is_empty(value_node):
                if not isinstance(value_node, yaml.SequenceNode):
                    raise YamlSyntaxError(
                        "volumes must be a list", source_path, value_node.start_mark.line + 1
                    )
                for item in value_node.value:
                    mount = _parse_volume_entry(item, source_path)
                    if mount is not None:
                        volumes.append(mount)
        elif key == "ports":
            if not _is_empty(value_node):
                if not isinstance(value_node, yaml.SequenceNode):
                    raise YamlSyntaxError(
                        "ports must be a list", source_path, value_node.start_mark.line + 1
                    )
                ports = [_parse_port_entry(item, name, source_path) for item in value_node.value]
        elif key == "environment":
            environment = _parse_environment(value_node, source_path)
        # any other service key is out of the supported subset: ignored
    return ServiceDef(
        name=name,
        image=image,
        build=build,
        container_name=container_name,
        depends_on=tuple(depends_on),
        links=tuple(links),
        networks=tuple(networks),
        volumes=tuple(volumes),
        ports=tuple(ports),
        environment=tuple(environment),
    )


def parse_compose(text: str, source_path: str) -> ComposeSpec:
    """Parse compose YAML into a normalized ComposeSpec.

    Both depends_on syntaxes (list of names, mapping with conditions) collapse
    to the same flat list; environment is accepted as mapping or KEY=VALUE
    list; short and long port forms populate the same PortSpec. Networks and
    volumes referenced by services are materialized in the top-level sets.
    """
    root = _compose_root(text, source_path)
    if root is None or not isinstance(root, yaml.MappingNode):
        raise MissingServicesSectionError(source_path)
    services_node = networks_node = volumes_node = None
    for key_node, value_node in root.value:
        key = _construct(key_node)
        if key == "services":
            services_node = value_node
        elif key == "networks":
            networks_node = value_node
        elif key == "volumes":
            volumes_node = value_node
        # unsupported top-level keys are ignored, not rejected
    if services_node is None:
        raise MissingServicesSectionError(source_path)

    services: dict[str, ServiceDef] = {}
    if not _is_empty(services_node):
        if not isinstance(services_node, yaml.MappingNode):
            raise YamlSyntaxError(
                "'services' must be a mapping",
                source_path,
                services_node.start_mark.line + 1,
            )
        for name_node, service_node in services_node.value:
            name = str(_construct(name_node))
            if not name:
                raise YamlSyntaxError(
                    "service name must be non-empty",
                    source_path,
                    name_node.start_mark.line + 1,
                )
            if name in services:
                raise DuplicateServiceError(name, source_path, name_node.start_mark.line + 1)
            services[name] = _parse_service(name, service_node, source_path)

    networks = set(_string_list(networks_node, source_path, "network name"))
    volumes = set(_string_list(volumes_node, source_path, "volume name"))
    for service in services.values():
        networks.update(service.networks)
        volumes.update(m.source for m in service.volumes if m.is_named)

    return ComposeSpec(
        services=services,
        networks=frozenset(networks),
        volumes=frozenset(volumes),
        source_path=source_path,
    )


_PLAIN_SCALAR_RE = re.compile(r"[A-Za-z0-9._/=-]+")
_AMBIGUOUS_PLAIN = frozenset({"true", "false", "null", "yes", "no", "on", "off", "~"})


def _yaml_scalar(value: str) -> str:
    if (
        _PLAIN_SCALAR_RE.fullmatch(value)
        and value.lower() not in _AMBIGUOUS_PLAIN
        and not re.fullmatch(r"[0-9.]+", value)
        and not value.startswith("-")
    ):
        return value
    return json.dumps(value, ensure_ascii=False)


def _port_text(port: PortSpec) -> str:
    text = f"{port.host}:{port.container}" if port.host is not None else str(port.container)
    if port.protocol != "tcp":
        text += f"/{port.protocol}"
    return text


def _mount_text(mount: VolumeMount) -> str:
    return mount.target if mount.source is None else f"{mount.source}:{mount.target}"


def serialize_compose(spec: ComposeSpec) -> str:
    """Canonical YAML for the supported subset.

    Services sorted by name, service keys in a fixed order, depends_on always
    in list form, environment always in KEY=VALUE list form. Reparsing the
    output yields an equal ComposeSpec.
    """
    lines = ["services:"]
    for name in sorted(spec.services):
        svc = spec.services[name]
        body: list[str] = []
        if svc.build is not None:
            body.append(f"    build: {_yaml_scalar(svc.build)}")
        if svc.container_name is not None:
            body.append(f"    container_name: {_yaml_scalar(svc.container_name)}")
        if svc.depends_on:
            body.append("    depends_on:")
            body.extend(f"      - {_yaml_scalar(dep)}" for dep in svc.depends_on)
        if svc.environment:
            body.append("    environment:")
            body.extend(
                f"      - {_yaml_scalar(f'{key}={value}')}" for key, value in svc.environment
            )
        if svc.image is not None:
            body.append(f"    image: {_yaml_scalar(svc.image)}")
        if svc.links:
            body.append("    links:")
            body.extend(
                f"      - {_yaml_scalar(target if alias is None else f'{target}:{alias}')}"
                for target, alias in svc.links
            )
        if svc.networks:
            body.append("    networks:")
            body.extend(f"      - {_yaml_scalar(net)}" for net in svc.networks)
        if svc.ports:
            body.append("    ports:")
            body.extend(f"      - {json.dumps(_port_text(port))}" for port in svc.ports)
        if svc.volumes:
            body.append("    volumes:")
            body.extend(f"      - {_yaml_scalar(_mount_text(mount))}" for mount in svc.volumes)
        if body:
            lines.append(f"  {_yaml_scalar(name)}:")
            lines.extend(body)
        else:
            lines.append(f"  {_yaml_scalar(name)}: {{}}")
    for section, names in (("networks", spec.networks), ("volumes", spec.volumes)):
        if names:
            lines.append(f"{section}:")
            lines.extend(f"  {_yaml_scalar(n)}: {{}}" for n in sorted(names))
    return "\n".join(lines) + "\n"


def discover_compose_files(tree: Iterable[str]) -> list[str]:
    """Find compose files anywhere in a file listing, lexicographically sorted."""
    found = sorted(
        path for path in tree if path.rsplit("/", 1)[-1] in COMPOSE_FILENAMES
    )
    if not found:
        raise NoComposeFoundError()
    return found


def extract_model(
    spec: ComposeSpec, heuristics: HeuristicsConfig | None = None
) -> ArchitectureModel:
    """Map a ComposeSpec onto an ArchitectureModel.

    Mapping rules: service -> component; named volume mounted by at least one
    service -> datastore; network with at least one member -> network element;
    exposed port -> port element attached to its component. depends_on, links,
    network membership and volume mounts become connectors; environment values
    that name another service become heuristic connectors when env_inference
    is on. A depends_on or link to an unknown service is recorded as a model
    warning and the connector is dropped.
    """
    heuristics = heuristics or HeuristicsConfig()
    alloc = SlugAllocator()
    elements: list[Element] = []
    warnings: list[str] = []
    provenance = (spec.source_path,)

    service_ids: dict[str, str] = {}
    for name in sorted(spec.services):
        svc = spec.services[name]
        eid = alloc.allocate("component", name)
        service_ids[name] = eid
        elements.append(
            Element(
                id=eid,
                kind="component",
                display_name=svc.container_name or name,
                provenance=provenance,
            )
        )

    mounted = sorted(
        {m.source for svc in spec.services.values() for m in svc.volumes if m.is_named}
    )
    volume_ids = {}
    for volume in mounted:
        eid = alloc.allocate("datastore", volume)
        volume_ids[volume] = eid
        elements.append(
            Element(id=eid, kind="datastore", display_name=volume, provenance=provenance)
        )

    populated = sorted({n for svc in spec.services.values() for n in svc.networks})
    network_ids = {}
    for network in populated:
        eid = alloc.allocate("network", network)
        network_ids[network] = eid
        elements.append(
            Element(id=eid, kind="network", display_name=network, provenance=provenance)
        )

    port_elements: list[Element] = []
    for name in sorted(spec.services):
        for port in spec.services[name].ports:
            label = f"{port.container}/{port.protocol}"
            display = f"{port.host}:{label}" if port.host is not None else label
            eid = alloc.allocate("port", f"{name} {port.container} {port.protocol}")
            port_elements.append(
                Element(
                    id=eid,
                    kind="port",
                    display_name=display,
                    attached_to=service_ids[name],
                    provenance=provenance,
                )
            )
    elements.extend(port_elements)

    connectors: dict[str, Connector] = {}

    def add(conn: Connector) -> None:
        connectors.setdefault(conn.id, conn)

    for name in sorted(spec.services):
        svc = spec.services[name]
        source = service_ids[name]
        for dep in svc.depends_on:
            if dep in service_ids:
                add(Connector(kind="depends_on", source=source, target=service_ids[dep]))
            else:
                warnings.append(
                    f"dangling depends_on: service {name!r} references unknown "
                    f"service {dep!r} ({spec.source_path})"
                )
        for target, _alias in svc.links:
            if target in service_ids:
                add(Connector(kind="link", source=source, target=service_ids[target]))
            else:
                warnings.append(
                    f"dangling link: service {name!r} references unknown "
                    f"service {target!r} ({spec.source_path})"
                )
        for network in svc.networks:
            add(
                Connector(
                    kind="network_membership",
                    source=source,
                    target=network_ids[network],
                    directed=False,
                )
            )
        for mount in svc.volumes:
            if mount.is_named:
                add(
                    Connector(
                        kind="volume_attachment",
                        source=source,
                        target=volume_ids[mount.source],
                    )
                )
        if heuristics.env_inference:
            for _key, value in svc.environment:
                target_name = None
                if value in service_ids:
                    target_name = value
                else:
                    match = re.fullmatch(r"([^:]+):[0-9]+", value)
                    if match and match.group(1) in service_ids:
                        target_name = match.group(1)
                if target_name is not None and target_name != name:
                    add(
                        Connector(
                            kind="inferred_env",
                            source=source,
                            target=service_ids[target_name],
                            confidence="heuristic",
                        )
                    )

    source_hash = hashlib.sha256(serialize_compose(spec).encode("utf-8")).hexdigest()
    return ArchitectureModel.build(elements, connectors.values(), warnings, source_hash)
