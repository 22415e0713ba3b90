"""Loading of commit streams and smell reports, and per-year file eligibility."""

from __future__ import annotations

import csv
import io
import json
import xml.etree.ElementTree as ET
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from datetime import datetime, timezone
from typing import IO, Iterable, Mapping

CHECKSTYLE_XML = "checkstyle-xml"
GENERIC_CSV = "generic-csv"

# CheckStyle check packages -> the category names CheckStyle documents.
CHECKSTYLE_GROUPS = {
    "annotation": "Annotation",
    "blocks": "Block",
    "coding": "Coding",
    "design": "Class Design",
    "header": "Header",
    "imports": "Import",
    "javadoc": "JavaDoc Comments",
    "metrics": "Metrics",
    "modifier": "Modifiers",
    "naming": "Naming Conventions",
    "regexp": "Regexp",
    "sizes": "Size Violation",
    "whitespace": "Whitespace",
}


class IngestError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True, order=True)
class FileKey:
    repo_id: str
    file_path: str

    def __str__(self) -> str:
        return f"{self.repo_id}:{self.file_path}"


@dataclass(frozen=True)
class CommitRecord:
    repo_id: str
    commit_id: str
    author_id: str
    timestamp: int
    message: str
    files: tuple[str, ...]
    is_corrective: bool = False

    @cached_property
    def year(self) -> int:
        return utc_datetime(self.timestamp).year

    @cached_property
    def date(self):
        return utc_datetime(self.timestamp).date()

    def sort_key(self) -> tuple[str, int, str]:
        return (self.repo_id, self.timestamp, self.commit_id)


@dataclass
class SmellSnapshot:
    """Smell counts and line counts for one repository-wide code version.

    ``repo_id`` is informational; ``entries`` and ``line_counts`` are keyed by
    :class:`FileKey` so a single snapshot may hold several repositories.
    """

    repo_id: str
    snapshot_year: int
    entries: dict[FileKey, dict[str, int]] = field(default_factory=dict)
    line_counts: dict[FileKey, int] = field(default_factory=dict)
    smell_groups: dict[str, str] = field(default_factory=dict)

    def __contains__(self, key: FileKey) -> bool:
        return key in self.line_counts or key in self.entries

    def files(self) -> set[FileKey]:
        return set(self.line_counts) | set(self.entries)

    def count(self, key: FileKey, smell: str) -> int:
        return self.entries.get(key, {}).get(smell, 0)

    def smells(self) -> list[str]:
        names = {s for counts in self.entries.values() for s in counts}
        return sorted(names)

    def validate(self, require_lines: bool = True) -> None:
        for key, counts in self.entries.items():
            if require_lines and key not in self.line_counts:
                raise IngestError(f"{key} has smell entries but no line count")
            for smell, n in counts.items():
                if n < 0:
                    raise IngestError(f"negative count for {smell} in {key}")

    def merge(self, other: SmellSnapshot) -> None:
        if other.snapshot_year != self.snapshot_year:
            raise IngestError(
                f"cannot merge snapshot {other.snapshot_year} into {self.snapshot_year}"
            )
        for key, counts in other.entries.items():
            mine = self.entries.setdefault(key, {})
            for smell, n in counts.items():
                mine[smell] = mine.get(smell, 0) + n
        self.line_counts.update(other.line_counts)
        self.smell_groups.update(other.smell_groups)


def utc_datetime(ts: int) -> datetime:
    return datetime.fromtimestamp(ts, tz=timezone.utc)


def normalize_path(path: str) -> str:
    path = path.replace("\\", "/")
    while path.startswith("./"):
        path = path[2:]
    return path.lstrip("/")


def _parse_commit(obj: object, lineno: int) -> CommitRecord:
    if not isinstance(obj, dict):
        raise IngestError(f"line {lineno}: expected an object")
    try:
        repo, sha, author = obj["repo"], obj["sha"], obj["author"]
        ts, msg, files = obj["ts"], obj["msg"], obj["files"]
    except KeyError as exc:
        raise IngestError(f"line {lineno}: missing field {exc.args[0]!r}") from None
    if not all(isinstance(v, str) for v in (repo, sha, author, msg)):
        raise IngestError(f"line {lineno}: repo/sha/author/msg must be strings")
    if isinstance(ts, bool) or not isinstance(ts, int) or ts <= 0:
        raise IngestError(f"line {lineno}: ts must be a positive integer")
    if not isinstance(files, list) or not files or not all(isinstance(f, str) for f in files):
        raise IngestError(f"line {lineno}: files must be a non-empty list of strings")
    paths = tuple(dict.fromkeys(normalize_path(f) for f in files))
    return CommitRecord(repo, sha, author, ts, msg, paths)


def load_commits(stream: Iterable[str]) -> list[CommitRecord]:
    """Parse a line-delimited JSON commit export.

    Blank lines are skipped. Records come back sorted by
    ``(repo_id, timestamp, commit_id)``.

    Raises:
        IngestError: on a malformed line (the message names the line number)
            or on a repeated ``(repo, sha)`` pair.
    """
    records: list[CommitRecord] = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"line {lineno}: {exc.msg}") from None
        rec = _parse_commit(obj, lineno)
        ident = (rec.repo_id, rec.commit_id)
        if ident in seen:
            raise IngestError(f"duplicate commit id {rec.commit_id} in repo {rec.repo_id}")
        seen.add(ident)
        records.append(rec)
    records.sort(key=CommitRecord.sort_key)
    return records


def dump_commits(commits: Iterable[CommitRecord], out: IO[str]) -> None:
    for c in commits:
        row = {"repo": c.repo_id, "sha": c.commit_id, "author": c.author_id,
               "ts": c.timestamp, "msg": c.message, "files": list(c.files)}
        out.write(json.dumps(row, sort_keys=True) + "\n")


def _split_file_name(name: str, repo_id: str | None) -> FileKey:
    # "repo:path" lets one report cover several repositories.
    name = normalize_path(name)
    if repo_id is None:
        repo, sep, path = name.partition(":")
        if not sep:
            raise IngestError(f"file {name!r} has no repo prefix and no repo_id was given")
        return FileKey(repo, normalize_path(path))
    return FileKey(repo_id, name)


def checkstyle_smell_name(source: str) -> tuple[str, str]:
    """Map a CheckStyle ``source`` attribute to ``(smell, group)``.

    >>> checkstyle_smell_name("com.puppycrawl.tools.checkstyle.checks.coding.InnerAssignmentCheck")
    ('InnerAssignment', 'Coding')
    """
    parts = source.split(".")
    name = parts[-1]
    if name.endswith("Check") and len(name) > len("Check"):
        name = name[: -len("Check")]
    package = parts[-2] if len(parts) >= 2 else ""
    group = CHECKSTYLE_GROUPS.get(package, "Misc")
    return name, group


def _read_checkstyle(text: str, repo_id: str | None, snap: SmellSnapshot) -> None:
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise IngestError(f"unparseable CheckStyle XML at line {line}, column {col}") from None
    for file_node in root.iter("file"):
        key = _split_file_name(file_node.attrib["name"], repo_id)
        counts = snap.entries.setdefault(key, {})
        for err in file_node.iter("error"):
            source = err.attrib.get("source")
            if not source:
                continue
            smell, group = checkstyle_smell_name(source)
            counts[smell] = counts.get(smell, 0) + 1
            snap.smell_groups.setdefault(smell, group)


def _read_csv(text: str, repo_id: str | None, snap: SmellSnapshot) -> None:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        return
    missing = {"file", "smell", "count"} - set(reader.fieldnames)
    if missing:
        raise IngestError(f"smell CSV missing columns {sorted(missing)}")
    for row in reader:
        offset = reader.line_num
        try:
            n = int(row["count"])
        except (TypeError, ValueError):
            raise IngestError(f"row at line {offset}: bad count {row['count']!r}") from None
        if n < 0:
            raise IngestError(f"row at line {offset}: negative count {n}")
        key = _split_file_name(row["file"], repo_id)
        counts = snap.entries.setdefault(key, {})
        smell = row["smell"]
        counts[smell] = counts.get(smell, 0) + n
        if row.get("group"):
            snap.smell_groups.setdefault(smell, row["group"])


def load_line_counts(stream: IO[str] | str, repo_id: str | None = None) -> dict[FileKey, int]:
    text = stream if isinstance(stream, str) else stream.read()
    out: dict[FileKey, int] = {}
    reader = csv.DictReader(io.StringIO(text))
    for row in reader:
        try:
            n = int(row["lines"])
        except (KeyError, TypeError, ValueError):
            raise IngestError(f"line-count CSV line {reader.line_num}: bad row {row!r}") from None
        if n < 0:
            raise IngestError(f"line-count CSV line {reader.line_num}: negative line count")
        out[_split_file_name(row["file"], repo_id)] = n
    return out


def load_smell_report(
    stream: IO[str] | str,
    fmt: str,
    snapshot_year: int,
    repo_id: str | None = None,
    line_counts: Mapping[FileKey, int] | None = None,
) -> SmellSnapshot:
    """Read a smell report into a :class:`SmellSnapshot`.

    ``fmt`` is ``"checkstyle-xml"`` or ``"generic-csv"``. When ``repo_id`` is
    None, file names must carry a ``repo:`` prefix. Files that appear only in
    ``line_counts`` are kept with an empty smell map.
    """
    text = stream if isinstance(stream, str) else stream.read()
    snap = SmellSnapshot(repo_id or "*", snapshot_year)
    if fmt == CHECKSTYLE_XML:
        if text.strip():
            _read_checkstyle(text, repo_id, snap)
    elif fmt == GENERIC_CSV:
        _read_csv(text, repo_id, snap)
    else:
        raise IngestError(f"unknown smell report format {fmt!r}")
    # drop zero-count smells so "has smell" is simply membership
    for key, counts in snap.entries.items():
        snap.entries[key] = {s: n for s, n in counts.items() if n > 0}
    if line_counts is not None:
        snap.line_counts.update(line_counts)
        for key in line_counts:
            snap.entries.setdefault(key, {})
    snap.validate(require_lines=line_counts is not None)
    return snap


def is_test_path(path: str, test_pattern: str = "test") -> bool:
    return test_pattern.lower() in path.lower()


def commit_counts(commits: Iterable[CommitRecord], year: int) -> Counter[FileKey]:
    counts: Counter[FileKey] = Counter()
    for c in commits:
        if c.year != year:
            continue
        for path in c.files:
            counts[FileKey(c.repo_id, path)] += 1
    return counts


def select_eligible_files(
    commits: Iterable[CommitRecord],
    year: int,
    snapshot: SmellSnapshot | None,
    min_commits: int = 10,
    test_pattern: str = "test",
) -> set[FileKey]:
    """Files with at least ``min_commits`` commits in ``year`` that are not
    test files and were analyzable in that year's snapshot."""
    if min_commits < 1:
        raise ValueError("min_commits must be at least 1")
    if snapshot is None:
        return set()
    counts = commit_counts(commits, year)
    return {
        key for key, n in counts.items()
        if n >= min_commits and not is_test_path(key.file_path, test_pattern) and key in snapshot
    }


def group_by_repo(commits: Iterable[CommitRecord]) -> dict[str, list[CommitRecord]]:
    out: dict[str, list[CommitRecord]] = defaultdict(list)
    for c in commits:
        out[c.repo_id].append(c)
    return dict(out)
