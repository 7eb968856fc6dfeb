"""The larch command line.

Exit codes: 0 success, 1 user error (bad input, bad arguments), 2 environment
error (repository unreachable, auth, upstream failures).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import httpx

from .edit_log import EditCommand, EditLog, parse_log, record, revert
from .errors import TransportError, UserError
from .diagram_gen import encode_plantuml, render_url
from .pipeline import (
    DEFAULT_PLANTUML_SERVER,
    PLANTUML_SERVER_ENV_VAR,
    PipelineResult,
    build_bundle,
    run_pipeline,
)
from .repo_io import EDITS_PATH, RepoRef, resolve_repo_ref, write_artifacts
from .service import BIND_ENV_VAR, DEFAULT_BIND, ServiceConfig, create_app, parse_bind


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems are user errors, not exit(2)
        self.print_usage(sys.stderr)
        raise UserError(message)


def _plantuml_server(args) -> str:
    if getattr(args, "server", None):
        return args.server
    return os.environ.get(PLANTUML_SERVER_ENV_VAR, DEFAULT_PLANTUML_SERVER)


def _resolve(args) -> RepoRef:
    return resolve_repo_ref(args.target, args.branch, args.provider)


def _require_local(repo: RepoRef, action: str) -> None:
    if repo.provider != "local":
        raise UserError(
            f"{action} needs a local repository; use the web editor for GitHub projects"
        )


def _fetch_svg(result: PipelineResult, server: str) -> str | None:
    url = render_url(result.document, server, "svg", "deflate")
    try:
        response = httpx.get(url, timeout=10.0)
        response.raise_for_status()
        return response.text
    except httpx.HTTPError as exc:
        print(f"warning: could not render SVG ({exc}); skipping", file=sys.stderr)
        return None


def _print_summary(result: PipelineResult) -> None:
    report = result.report
    print(
        f"model: {len(result.edited.elements)} elements, "
        f"{len(result.edited.connectors)} connectors"
    )
    for warning in result.edited.warnings:
        print(f"warning: {warning}")
    print(f"replay: {report.applied_count} applied, {report.skipped_count} skipped")


def cmd_analyze(args) -> int:
    repo = _resolve(args)
    if args.pr and repo.provider != "github":
        raise UserError("--pr needs a GitHub repository")
    if repo.provider == "github" and not args.pr:
        raise UserError("GitHub repositories are analyzed via pull request; pass --pr")
    result = run_pipeline(repo)
    svg = _fetch_svg(result, _plantuml_server(args)) if args.render_svg else None
    bundle = build_bundle(result, update_readme=args.update_readme, svg=svg)
    mode = "pull_request" if args.pr else "direct"
    outcome = write_artifacts(repo, bundle, mode)
    _print_summary(result)
    print(outcome.reference)
    return 0


def cmd_preview(args) -> int:
    result = run_pipeline(_resolve(args), highlight=args.highlight)
    sys.stdout.write(result.document.puml_text)
    return 0


def _edit_command(args) -> EditCommand:
    kind = args.edit_kind
    if kind == "add-element":
        payload = {"kind": args.element_kind, "name": args.name}
        return EditCommand(kind="add_element", payload=payload)
    if kind == "remove-element":
        return EditCommand(kind="remove_element", payload={"target": args.id})
    if kind == "rename-element":
        return EditCommand(
            kind="rename_element", payload={"target": args.id, "new_name": args.new_name}
        )
    if kind == "add-connector":
        payload = {"source": args.source, "target": args.connector_target}
        if args.label is not None:
            payload["label"] = args.label
        return EditCommand(kind="add_connector", payload=payload)
    if kind == "remove-connector":
        return EditCommand(
            kind="remove_connector",
            payload={"source": args.source, "target": args.connector_target},
        )
    if kind == "note":
        return EditCommand(kind="set_note", payload={"target": args.id, "note": args.text})
    if kind == "stereotype":
        return EditCommand(
            kind="set_stereotype", payload={"target": args.id, "stereotype": args.text}
        )
    raise UserError(f"unknown edit kind {kind!r}")


def _load_local_log(repo: RepoRef) -> EditLog:
    path = Path(repo.location) / EDITS_PATH
    if path.is_file():
        return parse_log(path.read_text(encoding="utf-8"))
    return EditLog()


def _rerun_and_write(repo: RepoRef, log: EditLog, update_readme: bool = False) -> PipelineResult:
    result = run_pipeline(repo, log_override=log)
    bundle = build_bundle(result, update_readme=update_readme)
    write_artifacts(repo, bundle, "direct")
    return result


def cmd_edit(args) -> int:
    repo = _resolve(args)
    _require_local(repo, "editing")
    log = record(_load_local_log(repo), _edit_command(args))
    result = _rerun_and_write(repo, log)
    new_command = log.commands[-1]
    entry = result.report.entries[-1]
    status = entry.status if entry.reason is None else f"{entry.status} ({entry.reason})"
    print(f"recorded {new_command.command_id}: {status}")
    return 0


def cmd_revert(args) -> int:
    repo = _resolve(args)
    _require_local(repo, "reverting")
    log = revert(_load_local_log(repo), args.command_id)
    _rerun_and_write(repo, log)
    print(f"reverted {args.command_id}")
    return 0


def cmd_report(args) -> int:
    result = run_pipeline(_resolve(args))
    if not result.report.entries:
        print("no commands in the log")
        return 0
    for entry in result.report.entries:
        line = f"{entry.status:<7} {entry.command_id}"
        if entry.reason is not None:
            line += f"  ({entry.reason})"
        print(line)
    return 0


def cmd_render_url(args) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise UserError(f"no such file: {args.file}")
    text = path.read_text(encoding="utf-8")
    encoded = encode_plantuml(text, args.mode)
    print(f"{_plantuml_server(args).rstrip('/')}/{args.format}/{encoded}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    host, port = parse_bind(args.bind)
    editor_static = None
    if args.editor:
        if not (Path(args.editor) / "index.html").is_file():
            raise UserError(f"no editor UI at {args.editor} (run the frontend build first)")
        editor_static = args.editor
    config = ServiceConfig(editor_base=f"http://{args.bind}", editor_static=editor_static)
    uvicorn.run(create_app(config), host=host, port=port, log_level="info")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="larch", description="Living architecture diagrams from Docker Compose files.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_target(p):
        p.add_argument("target", help="local directory or GitHub owner/name")
        p.add_argument("--branch", default="main")
        p.add_argument("--provider", choices=["auto", "local", "github"], default="auto")

    p = sub.add_parser("analyze", help="run the pipeline and write artifacts")
    add_target(p)
    p.add_argument("--update-readme", action="store_true")
    p.add_argument("--pr", action="store_true", help="write via pull request (GitHub)")
    p.add_argument("--render-svg", action="store_true", help="fetch an SVG from the PlantUML server")
    p.add_argument("--server", help="PlantUML server base URL")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("preview", help="print the generated PlantUML")
    add_target(p)
    p.add_argument("--highlight", action="store_true", help="highlight edits in the output")
    p.set_defaults(func=cmd_preview)

    p = sub.add_parser("edit", help="record one edit command and regenerate")
    add_target(p)
    edit_sub = p.add_subparsers(dest="edit_kind", required=True)
    e = edit_sub.add_parser("add-element")
    e.add_argument("element_kind", choices=["component", "datastore", "network"])
    e.add_argument("name")
    e = edit_sub.add_parser("remove-element")
    e.add_argument("id")
    e = edit_sub.add_parser("rename-element")
    e.add_argument("id")
    e.add_argument("new_name")
    e = edit_sub.add_parser("add-connector")
    e.add_argument("source")
    e.add_argument("connector_target", metavar="target")
    e.add_argument("--label")
    e = edit_sub.add_parser("remove-connector")
    e.add_argument("source")
    e.add_argument("connector_target", metavar="target")
    e = edit_sub.add_parser("note")
    e.add_argument("id")
    e.add_argument("text")
    e = edit_sub.add_parser("stereotype")
    e.add_argument("id")
    e.add_argument("text")
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("revert", help="drop one command from the log and regenerate")
    add_target(p)
    p.add_argument("command_id")
    p.set_defaults(func=cmd_revert)

    p = sub.add_parser("report", help="print the replay report")
    add_target(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("render-url", help="print a PlantUML server URL for a .puml file")
    p.add_argument("file")
    p.add_argument("--mode", choices=["deflate", "hex"], default="deflate")
    p.add_argument("--format", choices=["svg", "png"], default="svg")
    p.add_argument("--server", help="PlantUML server base URL")
    p.set_defaults(func=cmd_render_url)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--bind", default=os.environ.get(BIND_ENV_VAR, DEFAULT_BIND))
    p.add_argument("--editor", help="directory with the built editor UI, served at /editor")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except TransportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse -h and friends
        return int(exc.code or 0)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
