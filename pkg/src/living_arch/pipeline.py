"""The full analyze pipeline: fetch, extract, replay, diff, render.

Pure composition of the other modules. Given the same repository content and
edit log, every run produces byte-identical artifacts.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

from .arch_model import ArchitectureModel, ChangeSet, diff_models, merge_models, model_to_json
from .compose_ingest import HeuristicsConfig, discover_compose_files, extract_model, parse_compose
from .diagram_gen import (
    DiagramDocument,
    RenderOptions,
    generate_plantuml,
    render_url,
    serialize_map,
)
from .edit_log import EditLog, ReplayReport, parse_log, replay, serialize_log, serialize_report
from .repo_io import (
    ArtifactBundle,
    EDITS_PATH,
    README_PATH,
    SVG_PATH,
    RepoRef,
    RepoSnapshot,
    fetch_sources,
    patch_readme,
)

DEFAULT_PLANTUML_SERVER = "https://www.plantuml.com/plantuml"
PLANTUML_SERVER_ENV_VAR = "LIVING_ARCH_PLANTUML_SERVER"


@dataclass(frozen=True)
class PipelineResult:
    snapshot: RepoSnapshot
    pristine: ArchitectureModel
    edited: ArchitectureModel
    report: ReplayReport
    changeset: ChangeSet
    document: DiagramDocument
    log: EditLog


def run_on_snapshot(
    snapshot: RepoSnapshot,
    log_override: EditLog | None = None,
    highlight: bool = False,
    render_options: RenderOptions | None = None,
    heuristics: HeuristicsConfig | None = None,
) -> PipelineResult:
    """Run everything after the fetch step on an already-read snapshot."""
    paths = discover_compose_files(snapshot.listing)
    specs = [parse_compose(snapshot.files[path], path) for path in paths]
    pristine = merge_models([extract_model(spec, heuristics) for spec in specs])

    if log_override is not None:
        log = log_override
    elif EDITS_PATH in snapshot.files:
        log = parse_log(snapshot.files[EDITS_PATH])
    else:
        log = EditLog()

    edited, report = replay(pristine, log)
    changeset = diff_models(pristine, edited)
    opts = render_options or RenderOptions()
    if highlight:
        opts = replace(opts, highlight=changeset)
    document = generate_plantuml(edited, opts)
    return PipelineResult(snapshot, pristine, edited, report, changeset, document, log)


def run_pipeline(
    repo: RepoRef,
    api=None,
    log_override: EditLog | None = None,
    highlight: bool = False,
    render_options: RenderOptions | None = None,
    heuristics: HeuristicsConfig | None = None,
) -> PipelineResult:
    """Fetch the repository and run the full pipeline on it."""
    snapshot = fetch_sources(repo, api=api)
    return run_on_snapshot(snapshot, log_override, highlight, render_options, heuristics)


def build_bundle(
    result: PipelineResult,
    update_readme: bool = False,
    image_ref: str | None = None,
    svg: str | None = None,
) -> ArtifactBundle:
    """Assemble the exact file set written back into the repository.

    The stored model is the edited one (the model the diagram shows); the
    pristine model is always reproducible from the sources alone.
    """
    readme_patch = None
    if update_readme:
        if image_ref is None:
            if svg is not None:
                image_ref = SVG_PATH
            else:
                server = os.environ.get(PLANTUML_SERVER_ENV_VAR, DEFAULT_PLANTUML_SERVER)
                image_ref = render_url(result.document, server, "svg", "deflate")
        readme_patch = patch_readme(result.snapshot.files.get(README_PATH), image_ref)

    return ArtifactBundle(
        model_json=model_to_json(result.edited),
        edits_json=serialize_log(result.log),
        report_json=serialize_report(result.report),
        architecture_puml=result.document.puml_text,
        architecture_map_json=serialize_map(result.document),
        architecture_svg=svg,
        readme_patch=readme_patch,
    )
