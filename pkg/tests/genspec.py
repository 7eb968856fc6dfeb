"""Random spec and edit-log generators for property tests.

Name pools are deliberately disjoint: SERVICE_POOL feeds compose services,
MANUAL_POOL feeds add_element commands, MUTATION_POOL feeds the add/remove
mutations of the preservation property. That disjointness is what makes a
mutated service provably "untouched" by every command in a generated log.
"""

from __future__ import annotations

import random

from living_arch.arch_model import slug_of
from living_arch.compose_ingest import (
    ComposeSpec,
    PortSpec,
    ServiceDef,
    VolumeMount,
    extract_model,
)
from living_arch.edit_log import EditCommand, EditLog, record

SERVICE_POOL = ["web", "db", "cache", "queue", "api", "proxy", "worker", "search"]
MANUAL_POOL = ["metrics", "logger", "tracer", "backup", "gateway"]
MUTATION_POOL = ["zetaone", "zetatwo", "zetathree"]
NETWORK_POOL = ["front", "back"]

FIXED_TIMESTAMP = "2026-01-01T00:00:00Z"


def gen_service(rng: random.Random, name: str, others: list[str]) -> ServiceDef:
    depends = tuple(o for o in others if rng.random() < 0.25)
    links = tuple(
        (o, "alias" if rng.random() < 0.5 else None) for o in others if rng.random() < 0.1
    )
    ports = []
    if rng.random() < 0.4:
        container = rng.randint(1, 65535)
        host = rng.randint(1, 65535) if rng.random() < 0.5 else None
        ports.append(PortSpec(container=container, host=host, protocol=rng.choice(["tcp", "udp"])))
    volumes = []
    if rng.random() < 0.3:
        volumes.append(VolumeMount(source=f"{name}data", target=f"/var/lib/{name}"))
    networks = tuple(n for n in NETWORK_POOL if rng.random() < 0.35)
    environment = []
    if others and rng.random() < 0.35:
        other = rng.choice(others)
        value = other if rng.random() < 0.5 else f"{other}:{rng.randint(1, 9999)}"
        environment.append(("SERVICE_HOST", value))
    return ServiceDef(
        name=name,
        image=f"img-{name}",
        depends_on=depends,
        links=links,
        networks=networks,
        volumes=tuple(volumes),
        ports=tuple(ports),
        environment=tuple(environment),
    )


def gen_spec(rng: random.Random, max_services: int = 8) -> ComposeSpec:
    count = rng.randint(1, max_services)
    names = rng.sample(SERVICE_POOL, count)
    services = {}
    for name in names:
        others = [n for n in names if n != name]
        services[name] = gen_service(rng, name, others)
    networks = {n for svc in services.values() for n in svc.networks}
    volumes = {m.source for svc in services.values() for m in svc.volumes if m.is_named}
    return ComposeSpec(
        services=services,
        networks=frozenset(networks),
        volumes=frozenset(volumes),
        source_path="docker-compose.yml",
    )


def gen_command(
    rng: random.Random,
    index: int,
    real_ids: list[str],
    manual_added: list[str],
) -> EditCommand:
    """One random well-formed command; targets mix real, manual and ghost IDs."""
    kind = rng.choice(
        [
            "add_element",
            "remove_element",
            "rename_element",
            "add_connector",
            "remove_connector",
            "set_note",
            "set_stereotype",
        ]
    )

    def pick_id() -> str:
        bucket = rng.random()
        if bucket < 0.6 and real_ids:
            return rng.choice(real_ids)
        if bucket < 0.8 and manual_added:
            return rng.choice(manual_added)
        return f"component:ghost-{rng.randint(1, 5)}"

    if kind == "add_element":
        name = rng.choice(MANUAL_POOL)
        payload = {"kind": rng.choice(["component", "datastore", "network"]), "name": name}
        manual_added.append(f"manual:{name}")
    elif kind == "remove_element":
        payload = {"target": pick_id()}
    elif kind == "rename_element":
        payload = {"target": pick_id(), "new_name": f"Renamed {index}"}
    elif kind == "add_connector":
        payload = {"source": pick_id(), "target": pick_id()}
        if rng.random() < 0.4:
            payload["label"] = f"label-{index}"
    elif kind == "remove_connector":
        payload = {"source": pick_id(), "target": pick_id()}
    elif kind == "set_note":
        payload = {"target": pick_id(), "note": f"note {index}"}
    else:
        payload = {"target": pick_id(), "stereotype": f"tag{index}"}
    return EditCommand(kind=kind, payload=payload)


def gen_log(rng: random.Random, spec: ComposeSpec, max_commands: int = 10) -> EditLog:
    model = extract_model(spec)
    real_ids = list(model.elements)
    manual_added: list[str] = []
    log = EditLog()
    count = rng.randint(0, max_commands)
    for index in range(count):
        cmd = gen_command(rng, index, real_ids, manual_added)
        log = record(
            log,
            EditCommand(
                kind=cmd.kind,
                payload=cmd.payload,
                command_id=f"{index + 1:04d}-feed{index:04x}",
                issued_at=FIXED_TIMESTAMP,
            ),
        )
    return log


def referenced_ids(log: EditLog) -> set[str]:
    """Every element ID any command in the log is sensitive to."""
    ids: set[str] = set()
    for cmd in log.commands:
        payload = cmd.payload
        if cmd.kind == "add_element":
            ids.add(f"manual:{payload['name'].lower()}")
            continue
        for key in ("source", "target"):
            if key in payload:
                ids.add(payload[key])
    return ids


def _rebuild_spec(spec: ComposeSpec, services: dict[str, ServiceDef]) -> ComposeSpec:
    networks = {n for svc in services.values() for n in svc.networks}
    volumes = {m.source for svc in services.values() for m in svc.volumes if m.is_named}
    return ComposeSpec(
        services=services,
        networks=frozenset(networks),
        volumes=frozenset(volumes),
        source_path=spec.source_path,
    )


def mutate_spec(rng: random.Random, spec: ComposeSpec, log: EditLog) -> ComposeSpec:
    """Add or remove one service that no command in the log touches.

    Removal cascades (the victim's ports, solely-mounted volumes and
    solely-populated networks vanish with it), so a candidate is only
    removable when the extraction diff stays disjoint from everything the
    log references — by ID and by slug.
    """
    refs = referenced_ids(log)
    ref_slugs = {slug_of(i) for i in refs}
    if rng.random() < 0.5 and len(spec.services) > 1:
        base_ids = set(extract_model(spec).elements)
        candidates = list(spec.services)
        rng.shuffle(candidates)
        for victim in candidates:
            services = {n: s for n, s in spec.services.items() if n != victim}
            mutated = _rebuild_spec(spec, services)
            removed = base_ids - set(extract_model(mutated).elements)
            if not (removed & refs) and not ({slug_of(i) for i in removed} & ref_slugs):
                return mutated
    extra = rng.choice([n for n in MUTATION_POOL if n not in spec.services])
    services = dict(spec.services)
    # isolated on purpose: no relations, so no surviving ID is disturbed
    services[extra] = ServiceDef(name=extra, image=f"img-{extra}")
    return _rebuild_spec(spec, services)
