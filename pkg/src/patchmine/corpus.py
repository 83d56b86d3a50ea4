"""Patch corpus ingestion and hunk splitting.

A corpus is a directory with one sub-directory per patch::

    <root>/<patch_id>/meta.json      {"project": ..., "message": ...}
    <root>/<patch_id>/a/<path>       file before the fix
    <root>/<patch_id>/b/<path>       file after the fix
"""

from __future__ import annotations

import fnmatch
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

logger = logging.getLogger(__name__)

DEFAULT_INCLUDE = ("*.java",)
DEFAULT_EXCLUDE = ("*/test/*", "test/*", "*Test.java", "*Tests.java")


class CorpusError(Exception):
    pass


class HunkId(NamedTuple):
    patch_id: str
    path: str
    ordinal: int

    def __str__(self):
        return f"{self.patch_id}/{self.path}#{self.ordinal}"

    @classmethod
    def parse(cls, text: str) -> "HunkId":
        head, _, ordinal = text.rpartition("#")
        patch_id, _, path = head.partition("/")
        if not head or not path or not ordinal.isdigit():
            raise ValueError(f"malformed hunk id {text!r}")
        return cls(patch_id, path, int(ordinal))


@dataclass(frozen=True)
class Hunk:
    """A contiguous group of changed lines.

    Ranges are half-open, 0-based line indices. A pure insertion has an
    empty ``before_range`` positioned at the insertion point (and vice versa
    for a pure deletion).
    """

    hunk_id: HunkId
    before_range: tuple[int, int]
    after_range: tuple[int, int]


@dataclass(frozen=True)
class FileChange:
    path: str
    before: str
    after: str
    hunks: tuple[Hunk, ...] = ()


@dataclass(frozen=True)
class PatchRecord:
    patch_id: str
    project: str
    files: tuple[FileChange, ...]
    message: str = ""
    errors: tuple[str, ...] = ()

    @property
    def hunks(self) -> list[Hunk]:
        return [h for fc in self.files for h in fc.hunks]


def myers_diff(a: Sequence[str], b: Sequence[str]) -> list[tuple[str, int, int]]:
    """Minimal line diff as a list of ``(op, i, j)`` with op in ``= - +``.

    ``i``/``j`` index ``a``/``b``. Among minimal scripts, deletions are
    emitted before insertions at the same point.
    """
    n, m = len(a), len(b)
    maxd = n + m
    offset = maxd + 1
    v = [0] * (2 * maxd + 3)
    trace = []
    for d in range(maxd + 1):
        trace.append(v[:])
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[offset + k - 1] < v[offset + k + 1]):
                x = v[offset + k + 1]
            else:
                x = v[offset + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[offset + k] = x
            if x >= n and y >= m:
                return _backtrack(trace, a, b, offset, d)
    return []  # unreachable


def _backtrack(trace, a, b, offset, dmax):
    x, y = len(a), len(b)
    ops = []
    for d in range(dmax, 0, -1):
        v = trace[d]
        k = x - y
        if k == -d or (k != d and v[offset + k - 1] < v[offset + k + 1]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = v[offset + prev_k]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            x -= 1
            y -= 1
            ops.append(("=", x, y))
        if x == prev_x:
            y -= 1
            ops.append(("+", x, y))
        else:
            x -= 1
            ops.append(("-", x, y))
    while x > 0 and y > 0:
        x -= 1
        y -= 1
        ops.append(("=", x, y))
    ops.reverse()
    return ops


def _lines(text: str) -> list[str]:
    return text.splitlines()


def changed_regions(before: str, after: str) -> list[tuple[tuple[int, int], tuple[int, int]]]:
    """Contiguous changed-line groups as (before_range, after_range) pairs."""
    regions = []
    cur = None
    for op, x, y in myers_diff(_lines(before), _lines(after)):
        if op == "=":
            if cur is not None:
                regions.append((cur, (x, y)))
                cur = None
        elif cur is None:
            cur = (x, y)
    if cur is not None:
        regions.append((cur, (len(_lines(before)), len(_lines(after)))))
    regions = [((b0, b1), (a0, a1)) for (b0, a0), (b1, a1) in regions]
    return regions


def split_hunks(fc: FileChange, patch_id: str = "") -> list[Hunk]:
    return [
        Hunk(HunkId(patch_id, fc.path, k), br, ar)
        for k, (br, ar) in enumerate(changed_regions(fc.before, fc.after))
    ]


def make_file_change(patch_id: str, path: str, before: str, after: str) -> FileChange:
    fc = FileChange(path, before, after)
    return FileChange(path, before, after, tuple(split_hunks(fc, patch_id)))


def is_source(path: str, include=DEFAULT_INCLUDE, exclude=DEFAULT_EXCLUDE) -> bool:
    name = os.path.basename(path)
    if not any(fnmatch.fnmatch(name, g) or fnmatch.fnmatch(path, g) for g in include):
        return False
    return not any(fnmatch.fnmatch(path, g) for g in exclude)


def _files_under(base: Path) -> set[str]:
    if not base.is_dir():
        return set()
    return {p.relative_to(base).as_posix() for p in base.rglob("*") if p.is_file()}


def load_patch(patch_dir: Path, include=DEFAULT_INCLUDE, exclude=DEFAULT_EXCLUDE) -> PatchRecord:
    patch_id = patch_dir.name
    meta = {}
    meta_path = patch_dir / "meta.json"
    if meta_path.is_file():
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    before_files = _files_under(patch_dir / "a")
    after_files = _files_under(patch_dir / "b")
    files = []
    errors = []
    for path in sorted(before_files | after_files):
        if not is_source(path, include, exclude):
            continue
        if path not in before_files or path not in after_files:
            side = "before" if path not in before_files else "after"
            errors.append(f"{path}: missing {side} version")
            continue
        try:
            before = (patch_dir / "a" / path).read_text(encoding="utf-8")
            after = (patch_dir / "b" / path).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            errors.append(f"{path}: {exc}")
            continue
        if before == after:
            continue
        files.append(make_file_change(patch_id, path, before, after))
    return PatchRecord(
        patch_id,
        meta.get("project", ""),
        tuple(files),
        meta.get("message", ""),
        tuple(errors),
    )


def load_corpus(root, include=DEFAULT_INCLUDE, exclude=DEFAULT_EXCLUDE) -> list[PatchRecord]:
    """Load every patch under ``root``, sorted by patch id.

    Patches whose files are all invalid or non-source are dropped; per-file
    problems are kept in ``PatchRecord.errors`` and logged.
    """
    root = Path(root)
    try:
        entries = sorted(p for p in root.iterdir() if p.is_dir())
    except OSError as exc:
        raise CorpusError(f"cannot read corpus root {root}: {exc}") from exc
    records = []
    for patch_dir in entries:
        record = load_patch(patch_dir, include, exclude)
        for err in record.errors:
            logger.warning("%s: %s", record.patch_id, err)
        if record.files:
            records.append(record)
    records.sort(key=lambda r: r.patch_id)
    return records


def hunk_counts(records: Sequence[PatchRecord]) -> dict[str, int]:
    return {r.patch_id: len(r.hunks) for r in records}


def write_patch(root, patch_id: str, files: dict[str, tuple[str, str]], project="", message=""):
    """Write one patch directory in corpus layout; ``files`` maps path to (before, after)."""
    base = Path(root) / patch_id
    for path, (before, after) in files.items():
        for side, text in (("a", before), ("b", after)):
            target = base / side / path
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
    (base / "meta.json").write_text(
        json.dumps({"project": project, "message": message}, sort_keys=True), encoding="utf-8"
    )
    return base
