"""Candidate-repository search, selection filtering, and snapshotting.

The hosting client speaks the REST v3 API (search, contributors) with
pagination, exponential backoff, and rate-limit handling; the token comes from
the ``PATMINE_HOSTING_TOKEN`` environment variable. Selection follows fixed
criteria — star and contributor minimums, non-archived, a recent push — with a
manual exclusion list (books and learning resources are a human judgment) and
a reinstatement list that overrides every other rule. The reference date for
the inactivity window is always an explicit input so filtering is reproducible.
"""

from __future__ import annotations

import csv
import io
import logging
import os
import shutil
import subprocess
import time
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Protocol, Sequence

from .errors import CredentialError, RateLimitError, TransportError

logger = logging.getLogger(__name__)

TOKEN_ENV = "PATMINE_HOSTING_TOKEN"

DEFAULT_QUERIES = (
    "topic:quantum-computing language:Python",
    "topic:quantum-machine-learning language:Python",
    "topic:quantum-algorithms language:Python",
)

# First-failing-rule labels, checked in this order.
REASON_MIN_STARS = "min_stars"
REASON_MIN_CONTRIBUTORS = "min_contributors"
REASON_ARCHIVED = "archived"
REASON_INACTIVE = "inactive"
REASON_EXCLUDED = "excluded"

MANIFEST_HEADER = ["full_name", "stars", "contributors", "archived", "last_push", "verdict", "reason", "commit"]


@dataclass(frozen=True)
class RepoRecord:
    full_name: str
    stars: int
    contributors: int
    archived: bool
    last_push: datetime
    topics: tuple[str, ...] = ()


@dataclass(frozen=True)
class SelectionCriteria:
    reference_date: datetime
    min_stars: int = 30
    min_contributors: int = 10
    max_inactivity_days: int = 365
    exclusion_list: tuple[str, ...] = ()
    reinstatement_list: tuple[str, ...] = ()


class HostingClient(Protocol):
    def search(self, query: str) -> list[RepoRecord]:
        """Records matching one search query, fully populated."""
        ...

    def clone_url(self, full_name: str) -> str:
        """Where to clone a repository's working tree from."""
        ...


def _as_utc(moment: datetime) -> datetime:
    if moment.tzinfo is None:
        return moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def search_repositories(queries: Sequence[str], api: HostingClient) -> list[RepoRecord]:
    """Union of all query results by full name, sorted by stars desc, name asc."""
    if not queries:
        raise ValueError("at least one search query is required")
    by_name: dict[str, RepoRecord] = {}
    for query in queries:
        for record in api.search(query):
            by_name.setdefault(record.full_name, record)
    return sorted(by_name.values(), key=lambda r: (-r.stars, r.full_name))


def filter_repositories(
    records: Sequence[RepoRecord],
    criteria: SelectionCriteria,
) -> tuple[list[RepoRecord], list[tuple[RepoRecord, str]]]:
    """Split records into accepted and (record, first-failing-rule) rejections.

    Reinstated repositories are accepted regardless of any other rule. The
    inactivity rule accepts a last push exactly ``max_inactivity_days`` old.
    """
    accepted: list[RepoRecord] = []
    rejected: list[tuple[RepoRecord, str]] = []
    window = timedelta(days=criteria.max_inactivity_days)
    reference = _as_utc(criteria.reference_date)
    for record in records:
        if record.full_name in criteria.reinstatement_list:
            accepted.append(record)
            continue
        if record.stars < criteria.min_stars:
            rejected.append((record, REASON_MIN_STARS))
        elif record.contributors < criteria.min_contributors:
            rejected.append((record, REASON_MIN_CONTRIBUTORS))
        elif record.archived:
            rejected.append((record, REASON_ARCHIVED))
        elif reference - _as_utc(record.last_push) > window:
            rejected.append((record, REASON_INACTIVE))
        elif record.full_name in criteria.exclusion_list:
            rejected.append((record, REASON_EXCLUDED))
        else:
            accepted.append(record)
    return accepted, rejected


@dataclass(frozen=True)
class SnapshotManifest:
    full_name: str
    commit: str
    timestamp: str  # committer date of the snapshot commit (ISO 8601)
    file_count: int
    group: str | None = None  # monorepo presentation annotation


def _git(args: list[str], cwd: Path | None = None) -> str:
    try:
        result = subprocess.run(
            ["git", *args], cwd=cwd, capture_output=True, text=True, check=True
        )
    except FileNotFoundError as exc:
        raise TransportError("git executable not found") from exc
    except subprocess.CalledProcessError as exc:
        raise TransportError(f"git {args[0]} failed: {exc.stderr.strip()}") from exc
    return result.stdout.strip()


def _tree_file_count(root: Path) -> int:
    return sum(
        1 for p in root.rglob("*") if p.is_file() and ".git" not in p.relative_to(root).parts
    )


def snapshot_repository(
    record: RepoRecord,
    destination: str | Path,
    clone_url: str | None = None,
    group: str | None = None,
) -> SnapshotManifest:
    """Materialize the default-branch working tree under destination/full_name.

    Re-snapshotting at an unchanged head is a no-op returning an identical
    manifest. The manifest timestamp is the snapshot commit's committer date,
    so repeated snapshots stay byte-identical.
    """
    destination = Path(destination)
    url = clone_url or f"https://github.com/{record.full_name}.git"
    target = destination / record.full_name

    if (target / ".git").exists():
        local_head = _git(["rev-parse", "HEAD"], cwd=target)
        remote_head = _git(["ls-remote", url, "HEAD"]).split()
        if remote_head and remote_head[0] == local_head:
            logger.info("%s already snapshotted at %s", record.full_name, local_head[:12])
            return _manifest_from_tree(record, target, group)
        shutil.rmtree(target)
    elif target.exists():
        # Leftover from an interrupted clone; replace it wholesale.
        shutil.rmtree(target)

    target.parent.mkdir(parents=True, exist_ok=True)
    _git(["clone", "--depth", "1", url, str(target)])
    return _manifest_from_tree(record, target, group)


def _manifest_from_tree(record: RepoRecord, target: Path, group: str | None) -> SnapshotManifest:
    return SnapshotManifest(
        full_name=record.full_name,
        commit=_git(["rev-parse", "HEAD"], cwd=target),
        timestamp=_git(["show", "-s", "--format=%cI", "HEAD"], cwd=target),
        file_count=_tree_file_count(target),
        group=group,
    )


def _parse_timestamp(raw: str) -> datetime:
    return datetime.fromisoformat(raw.replace("Z", "+00:00")).astimezone(timezone.utc)


class GitHubClient:
    """REST v3 client with pagination, retries, and rate-limit backoff.

    Requests are issued serially. A session object can be injected for testing;
    it only needs a ``request(method, url, **kwargs)`` method returning
    response objects with ``status_code``, ``headers``, and ``json()``.
    """

    def __init__(
        self,
        token: str | None = None,
        session=None,
        base_url: str = "https://api.github.com",
        max_retries: int = 3,
        backoff_base: float = 1.0,
        sleeper=time.sleep,
    ):
        if session is None:
            import requests

            session = requests.Session()
        self._session = session
        self._base_url = base_url.rstrip("/")
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._sleep = sleeper
        self._token = token if token is not None else os.environ.get(TOKEN_ENV)

    def _headers(self) -> dict[str, str]:
        headers = {"Accept": "application/vnd.github+json"}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        return headers

    def _get(self, path: str, params: dict) -> tuple[dict | list, dict]:
        url = f"{self._base_url}{path}"
        for attempt in range(self._max_retries + 1):
            response = self._session.request("GET", url, params=params, headers=self._headers())
            status = response.status_code
            if status == 401:
                raise CredentialError("hosting API rejected the supplied token")
            if status in (403, 429):
                if attempt == self._max_retries:
                    raise RateLimitError(f"hosting API rate limit persisted after {attempt} retries")
                self._sleep(self._rate_limit_delay(response.headers, attempt))
                continue
            if status >= 500:
                if attempt == self._max_retries:
                    raise TransportError(f"hosting API returned {status} for {path}")
                self._sleep(self._backoff_base * 2**attempt)
                continue
            if status >= 400:
                raise TransportError(f"hosting API returned {status} for {path}")
            return response.json(), dict(response.headers)
        raise TransportError(f"hosting API request to {path} exhausted retries")

    def _rate_limit_delay(self, headers, attempt: int) -> float:
        retry_after = headers.get("Retry-After")
        if retry_after:
            return float(retry_after)
        reset = headers.get("X-RateLimit-Reset")
        if reset:
            return max(0.0, float(reset) - time.time())
        return self._backoff_base * 2**attempt

    def search(self, query: str) -> list[RepoRecord]:
        records: list[RepoRecord] = []
        page = 1
        while True:
            body, _ = self._get(
                "/search/repositories",
                {"q": query, "sort": "stars", "order": "desc", "per_page": 100, "page": page},
            )
            items = body.get("items", [])
            if not items:
                break
            for item in items:
                records.append(
                    RepoRecord(
                        full_name=item["full_name"],
                        stars=int(item.get("stargazers_count", 0)),
                        contributors=self.contributor_count(item["full_name"]),
                        archived=bool(item.get("archived", False)),
                        last_push=_parse_timestamp(item["pushed_at"]),
                        topics=tuple(item.get("topics", [])),
                    )
                )
            # The search API caps results at 1000 entries.
            if page * 100 >= min(int(body.get("total_count", 0)), 1000):
                break
            page += 1
        return records

    def clone_url(self, full_name: str) -> str:
        return f"https://github.com/{full_name}.git"

    def contributor_count(self, full_name: str) -> int:
        count = 0
        page = 1
        while True:
            body, _ = self._get(
                f"/repos/{full_name}/contributors",
                {"per_page": 100, "anon": "false", "page": page},
            )
            if not isinstance(body, list) or not body:
                break
            count += len(body)
            if len(body) < 100:
                break
            page += 1
        return count


def projects_manifest_csv(
    accepted: Sequence[RepoRecord],
    rejected: Sequence[tuple[RepoRecord, str]],
    commits: dict[str, str] | None = None,
) -> bytes:
    """Selection outcome as CSV; accepted rows first, then rejections."""
    commits = commits or {}
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(MANIFEST_HEADER)

    def _row(record: RepoRecord, verdict: str, reason: str) -> list[str]:
        return [
            record.full_name,
            str(record.stars),
            str(record.contributors),
            str(record.archived).lower(),
            _as_utc(record.last_push).isoformat().replace("+00:00", "Z"),
            verdict,
            reason,
            commits.get(record.full_name, ""),
        ]

    for record in accepted:
        writer.writerow(_row(record, "accepted", ""))
    for record, reason in rejected:
        writer.writerow(_row(record, "rejected", reason))
    return buffer.getvalue().encode("utf-8")
