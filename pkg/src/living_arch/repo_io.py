"""Repository input and output.

Two providers share one contract: a local directory (everything runs offline)
and GitHub (transport only — same bytes in, same bytes out). All generated
artifacts live under .living-arch/ inside the analyzed repository; nothing is
persisted anywhere else, so the repository stays the single source of truth.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .compose_ingest import NoComposeFoundError, discover_compose_files
from .errors import TransportError, UserError
from .github_api import AuthFailedError, HttpGitHubApi, NotFoundError, RateLimitedError

ARTIFACT_DIR = ".living-arch"
MODEL_PATH = ".living-arch/model.json"
EDITS_PATH = ".living-arch/edits.json"
REPORT_PATH = ".living-arch/report.json"
PUML_PATH = ".living-arch/architecture.puml"
MAP_PATH = ".living-arch/architecture.map.json"
SVG_PATH = ".living-arch/architecture.svg"
README_PATH = "README.md"

README_START = "<!-- living-arch:start -->"
README_END = "<!-- living-arch:end -->"

COMMIT_MESSAGE = "docs: update living architecture diagram"
PR_BRANCH_PREFIX = "living-arch/"

_OWNER_REPO_RE = re.compile(r"^[A-Za-z0-9_.-]+/[A-Za-z0-9_.-]+$")


class RepoNotFoundError(TransportError):
    pass


class BranchNotFoundError(TransportError):
    pass


class PushRejectedError(TransportError):
    pass


class UnbalancedMarkersError(UserError):
    def __init__(self) -> None:
        super().__init__(
            f"README has {README_START!r} without a matching {README_END!r}"
        )


@dataclass(frozen=True)
class RepoRef:
    provider: str  # "local" | "github"
    location: str  # directory path, or "owner/name"
    branch: str = "main"

    def __post_init__(self) -> None:
        if self.provider not in ("local", "github"):
            raise UserError(f"unknown provider {self.provider!r}")
        if not self.branch:
            raise UserError("branch must be non-empty")
        if self.provider == "github" and not _OWNER_REPO_RE.match(self.location):
            raise UserError(
                f"github location must look like owner/name, got {self.location!r}"
            )


def resolve_repo_ref(target: str, branch: str = "main", provider: str = "auto") -> RepoRef:
    """Turn a CLI/API target string into a RepoRef.

    With provider "auto", an existing directory wins; otherwise anything
    shaped like owner/name is treated as a GitHub repository.
    """
    if provider == "auto":
        if Path(target).is_dir():
            provider = "local"
        elif _OWNER_REPO_RE.match(target):
            provider = "github"
        else:
            raise UserError(
                f"cannot resolve {target!r}: not a local directory and not owner/name"
            )
    return RepoRef(provider=provider, location=target, branch=branch)


@dataclass(frozen=True)
class RepoSnapshot:
    """Everything fetched in one read: tree listing, relevant file contents, head id."""

    listing: tuple[str, ...]
    files: dict[str, str]  # compose files, plus edits.json and README.md when present
    head: str


@dataclass(frozen=True)
class ArtifactBundle:
    model_json: str
    edits_json: str
    report_json: str
    architecture_puml: str
    architecture_map_json: str
    architecture_svg: str | None = None
    readme_patch: str | None = None

    def files(self) -> dict[str, str]:
        """Exact artifact path -> content mapping written into the repository."""
        out = {
            MODEL_PATH: self.model_json,
            EDITS_PATH: self.edits_json,
            REPORT_PATH: self.report_json,
            PUML_PATH: self.architecture_puml,
            MAP_PATH: self.architecture_map_json,
        }
        if self.architecture_svg is not None:
            out[SVG_PATH] = self.architecture_svg
        if self.readme_patch is not None:
            out[README_PATH] = self.readme_patch
        return out


@dataclass(frozen=True)
class WriteOutcome:
    kind: str  # "commit" | "pull_request"
    reference: str  # commit id, or PR URL


def _interesting_paths(listing: list[str]) -> list[str]:
    try:
        paths = discover_compose_files(listing)
    except NoComposeFoundError:
        paths = []
    for extra in (EDITS_PATH, README_PATH):
        if extra in listing:
            paths.append(extra)
    return paths


def _local_head(files: dict[str, str]) -> str:
    digest = hashlib.sha256()
    for path in sorted(files):
        if path == README_PATH:
            continue  # README edits do not change what gets analyzed
        digest.update(path.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(files[path].encode("utf-8"))
        digest.update(b"\x00")
    return digest.hexdigest()


def fetch_sources(repo: RepoRef, api=None) -> RepoSnapshot:
    """Read the repository tree plus compose files, prior edits and README."""
    if repo.provider == "local":
        root = Path(repo.location)
        if not root.is_dir():
            raise RepoNotFoundError(f"no such directory: {repo.location}")
        listing = sorted(
            str(p.relative_to(root).as_posix())
            for p in root.rglob("*")
            if p.is_file() and ".git" not in p.relative_to(root).parts
        )
        files = {
            path: (root / path).read_text(encoding="utf-8")
            for path in _interesting_paths(listing)
        }
        return RepoSnapshot(tuple(listing), files, _local_head(files))

    api = api or HttpGitHubApi.from_env()
    try:
        api.get_repo(repo.location)
    except NotFoundError as exc:
        raise RepoNotFoundError(f"no such repository: {repo.location}") from exc
    try:
        branch = api.get_branch(repo.location, repo.branch)
    except NotFoundError as exc:
        raise BranchNotFoundError(
            f"no branch {repo.branch!r} in {repo.location}"
        ) from exc
    head = branch["commit"]["sha"]
    tree_sha = branch["commit"]["commit"]["tree"]["sha"]
    entries = {
        e["path"]: e["sha"] for e in api.get_tree(repo.location, tree_sha) if e.get("type") == "blob"
    }
    listing = sorted(entries)
    files = {
        path: api.get_blob(repo.location, entries[path]).decode("utf-8")
        for path in _interesting_paths(listing)
    }
    return RepoSnapshot(tuple(listing), files, head)


def patch_readme(existing: str | None, image_ref: str) -> str:
    """Insert or refresh the marked architecture section; byte-idempotent."""
    block = (
        f"{README_START}\n"
        "## Architecture\n"
        "\n"
        f"![Architecture diagram]({image_ref})\n"
        f"{README_END}"
    )
    if existing is None:
        return block + "\n"
    start = existing.find(README_START)
    end = existing.find(README_END)
    if start != -1 or end != -1:
        if start == -1 or end == -1 or end < start:
            raise UnbalancedMarkersError()
        return existing[:start] + block + existing[end + len(README_END):]
    base = existing if existing.endswith("\n") else existing + "\n"
    return base + "\n" + block + "\n"


def _report_counts(report_json: str) -> tuple[int, int]:
    entries = json.loads(report_json).get("entries", [])
    applied = sum(1 for e in entries if e.get("status") == "applied")
    skipped = sum(1 for e in entries if e.get("status") == "skipped")
    return applied, skipped


def pr_body(bundle: ArtifactBundle, editor_url: str | None) -> str:
    applied, skipped = _report_counts(bundle.report_json)
    lines = [
        "Automated update of the living architecture diagram.",
        "",
        f"Replay report: {applied} applied, {skipped} skipped.",
    ]
    if editor_url:
        lines += ["", f"[Open the architecture editor]({editor_url})"]
    return "\n".join(lines) + "\n"


def _write_local(repo: RepoRef, bundle: ArtifactBundle) -> WriteOutcome:
    root = Path(repo.location)
    if not root.is_dir():
        raise RepoNotFoundError(f"no such directory: {repo.location}")
    (root / ARTIFACT_DIR).mkdir(exist_ok=True)
    files = bundle.files()
    for path, content in files.items():
        (root / path).write_text(content, encoding="utf-8")
    if bundle.architecture_svg is None:
        # A stale rendering from an earlier run must not outlive its model.
        (root / SVG_PATH).unlink(missing_ok=True)
    digest = hashlib.sha256()
    for path in sorted(files):
        digest.update(path.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(files[path].encode("utf-8"))
    return WriteOutcome(kind="commit", reference=digest.hexdigest()[:12])


def _write_github_pr(
    repo: RepoRef, bundle: ArtifactBundle, api, editor_url: str | None
) -> WriteOutcome:
    try:
        branch = api.get_branch(repo.location, repo.branch)
    except NotFoundError as exc:
        raise BranchNotFoundError(f"no branch {repo.branch!r} in {repo.location}") from exc
    head = branch["commit"]["sha"]
    base_tree = branch["commit"]["commit"]["tree"]["sha"]
    pr_branch = f"{PR_BRANCH_PREFIX}{head[:7]}"

    entries = []
    for path, content in sorted(bundle.files().items()):
        blob_sha = api.create_blob(repo.location, content.encode("utf-8"))
        entries.append({"path": path, "mode": "100644", "type": "blob", "sha": blob_sha})
    tree_sha = api.create_tree(repo.location, base_tree, entries)
    commit_sha = api.create_commit(repo.location, COMMIT_MESSAGE, tree_sha, [head])

    try:
        if api.get_ref(repo.location, pr_branch) is None:
            api.create_ref(repo.location, pr_branch, commit_sha)
        else:
            # Same head analyzed again: move the branch, update the PR in place.
            api.update_ref(repo.location, pr_branch, commit_sha)
    except TransportError as exc:
        if isinstance(exc, (AuthFailedError, RateLimitedError)):
            raise
        raise PushRejectedError(f"could not push {pr_branch}: {exc}") from exc

    body = pr_body(bundle, editor_url)
    existing = api.find_open_pr(repo.location, pr_branch)
    if existing is None:
        pr = api.create_pr(
            repo.location, COMMIT_MESSAGE, pr_branch, repo.branch, body
        )
    else:
        pr = api.update_pr(repo.location, existing["number"], COMMIT_MESSAGE, body)
    return WriteOutcome(kind="pull_request", reference=pr["html_url"])


def write_artifacts(
    repo: RepoRef,
    bundle: ArtifactBundle,
    mode: str = "direct",
    api=None,
    editor_url: str | None = None,
) -> WriteOutcome:
    """Write the artifact bundle back to the repository.

    direct mode writes files in place (local provider); pull_request mode
    pushes a ``living-arch/<head>`` branch and opens or updates a PR whose
    body carries the replay summary and an editor link (github provider).
    """
    if mode == "direct":
        if repo.provider != "local":
            raise UserError("direct mode is only available for the local provider")
        return _write_local(repo, bundle)
    if mode == "pull_request":
        if repo.provider != "github":
            raise UserError("pull_request mode is only available for the github provider")
        return _write_github_pr(repo, bundle, api or HttpGitHubApi.from_env(), editor_url)
    raise UserError(f"unknown write mode {mode!r}")
