"""Thin GitHub REST v3 client.

Only the endpoints the tool needs: branch/tree/blob reads and the
blob/tree/commit/ref/pull-request writes behind pull-request creation.
Anything implementing the same method surface (see tests' in-memory fake)
can stand in for transport.
"""

from __future__ import annotations

import base64
import os

import httpx

from .errors import TransportError

TOKEN_ENV_VAR = "LIVING_ARCH_GITHUB_TOKEN"
DEFAULT_API_BASE = "https://api.github.com"


class AuthFailedError(TransportError):
    pass


class RateLimitedError(TransportError):
    def __init__(self, retry_after: str | None):
        self.retry_after = retry_after
        hint = f" (retry after {retry_after})" if retry_after else ""
        super().__init__(f"GitHub rate limit exceeded{hint}")


class NotFoundError(TransportError):
    """A 404 from the API; callers translate to repo- or branch-not-found."""

    def __init__(self, what: str):
        self.what = what
        super().__init__(f"not found: {what}")


class HttpGitHubApi:
    """GitHub over HTTPS. All methods raise TransportError subclasses on failure."""

    def __init__(self, token: str | None = None, base_url: str = DEFAULT_API_BASE, timeout: float = 30.0):
        self._client = httpx.Client(
            base_url=base_url,
            timeout=timeout,
            headers={
                "Accept": "application/vnd.github+json",
                **({"Authorization": f"Bearer {token}"} if token else {}),
            },
        )

    @classmethod
    def from_env(cls) -> "HttpGitHubApi":
        return cls(token=os.environ.get(TOKEN_ENV_VAR))

    def _request(self, method: str, url: str, what: str, **kwargs) -> dict:
        try:
            response = self._client.request(method, url, **kwargs)
        except httpx.HTTPError as exc:
            raise TransportError(f"GitHub request failed: {exc}") from exc
        if response.status_code == 401:
            raise AuthFailedError(f"GitHub authentication failed (set {TOKEN_ENV_VAR})")
        if response.status_code == 403:
            if response.headers.get("x-ratelimit-remaining") == "0" or "rate limit" in response.text.lower():
                raise RateLimitedError(response.headers.get("retry-after"))
            raise AuthFailedError("GitHub refused the request (403)")
        if response.status_code == 404:
            raise NotFoundError(what)
        if response.status_code == 422:
            raise TransportError(f"GitHub rejected the request: {response.text}")
        if response.status_code >= 400:
            raise TransportError(f"GitHub error {response.status_code}: {response.text}")
        return response.json()

    # -- reads ---------------------------------------------------------------

    def get_repo(self, owner_repo: str) -> dict:
        return self._request("GET", f"/repos/{owner_repo}", f"repository {owner_repo}")

    def get_branch(self, owner_repo: str, branch: str) -> dict:
        return self._request(
            "GET", f"/repos/{owner_repo}/branches/{branch}", f"branch {branch}"
        )

    def get_tree(self, owner_repo: str, tree_sha: str) -> list[dict]:
        obj = self._request(
            "GET",
            f"/repos/{owner_repo}/git/trees/{tree_sha}",
            f"tree {tree_sha}",
            params={"recursive": "1"},
        )
        return obj.get("tree", [])

    def get_blob(self, owner_repo: str, sha: str) -> bytes:
        obj = self._request(
            "GET", f"/repos/{owner_repo}/git/blobs/{sha}", f"blob {sha}"
        )
        if obj.get("encoding") == "base64":
            return base64.b64decode(obj["content"])
        return obj.get("content", "").encode("utf-8")

    # -- writes --------------------------------------------------------------

    def create_blob(self, owner_repo: str, content: bytes) -> str:
        obj = self._request(
            "POST",
            f"/repos/{owner_repo}/git/blobs",
            "blob creation",
            json={"content": base64.b64encode(content).decode("ascii"), "encoding": "base64"},
        )
        return obj["sha"]

    def create_tree(self, owner_repo: str, base_tree: str, entries: list[dict]) -> str:
        obj = self._request(
            "POST",
            f"/repos/{owner_repo}/git/trees",
            "tree creation",
            json={"base_tree": base_tree, "tree": entries},
        )
        return obj["sha"]

    def create_commit(self, owner_repo: str, message: str, tree: str, parents: list[str]) -> str:
        obj = self._request(
            "POST",
            f"/repos/{owner_repo}/git/commits",
            "commit creation",
            json={"message": message, "tree": tree, "parents": parents},
        )
        return obj["sha"]

    def get_ref(self, owner_repo: str, branch: str) -> str | None:
        try:
            obj = self._request(
                "GET",
                f"/repos/{owner_repo}/git/ref/heads/{branch}",
                f"ref heads/{branch}",
            )
        except NotFoundError:
            return None
        return obj["object"]["sha"]

    def create_ref(self, owner_repo: str, branch: str, sha: str) -> None:
        self._request(
            "POST",
            f"/repos/{owner_repo}/git/refs",
            "ref creation",
            json={"ref": f"refs/heads/{branch}", "sha": sha},
        )

    def update_ref(self, owner_repo: str, branch: str, sha: str) -> None:
        self._request(
            "PATCH",
            f"/repos/{owner_repo}/git/refs/heads/{branch}",
            f"ref heads/{branch}",
            json={"sha": sha, "force": True},
        )

    def find_open_pr(self, owner_repo: str, head_branch: str) -> dict | None:
        owner = owner_repo.split("/", 1)[0]
        pulls = self._request(
            "GET",
            f"/repos/{owner_repo}/pulls",
            "pull requests",
            params={"head": f"{owner}:{head_branch}", "state": "open"},
        )
        return pulls[0] if pulls else None

    def create_pr(self, owner_repo: str, title: str, head: str, base: str, body: str) -> dict:
        return self._request(
            "POST",
            f"/repos/{owner_repo}/pulls",
            "pull request creation",
            json={"title": title, "head": head, "base": base, "body": body},
        )

    def update_pr(self, owner_repo: str, number: int, title: str, body: str) -> dict:
        return self._request(
            "PATCH",
            f"/repos/{owner_repo}/pulls/{number}",
            f"pull request #{number}",
            json={"title": title, "body": body},
        )
