"""Identical-tree detection, connected-component clustering and pattern statistics.

Mining runs three rounds. Shape trees are compared inside the Shape index,
Action trees inside groups derived from the Shape clusters, Token trees
inside groups derived from the Action clusters.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional

from .ast import AstNode, AstTree
from .corpus import HunkId
from .diff import edit_script
from .index import (
    REPORT_HEADER,
    GroupKey,
    ReductionReport,
    SearchIndex,
    build_action_index,
    build_shape_index,
    build_token_index,
    reduction_report,
)
from .res import FOLDS, RichEditScript, SpecializedTree, SpecNode, project, serialize

logger = logging.getLogger(__name__)

PREFIX_SCALE = 0.1
MAX_PREFIX = 4


# -- Jaro-Winkler -----------------------------------------------------------


def jaro_similarity(s1: str, s2: str) -> float:
    if s1 == s2:
        return 1.0
    n1, n2 = len(s1), len(s2)
    if n1 == 0 or n2 == 0:
        return 0.0
    window = max(0, max(n1, n2) // 2 - 1)
    used1 = [False] * n1
    used2 = [False] * n2
    c = 0
    for i, ch in enumerate(s1):
        for j in range(max(0, i - window), min(n2, i + window + 1)):
            if not used2[j] and s2[j] == ch:
                used1[i] = used2[j] = True
                c += 1
                break
    if c == 0:
        return 0.0
    half_transposed = 0
    k = 0
    for i in range(n1):
        if used1[i]:
            while not used2[k]:
                k += 1
            if s1[i] != s2[k]:
                half_transposed += 1
            k += 1
    t = half_transposed / 2
    return (c / n1 + c / n2 + (c - t) / c) / 3


def common_prefix(s1: str, s2: str, cap: int = MAX_PREFIX) -> int:
    n = 0
    for a, b in zip(s1[:cap], s2[:cap]):
        if a != b:
            break
        n += 1
    return n


def jaro_winkler_similarity(s1: str, s2: str, p: float = PREFIX_SCALE) -> float:
    j = jaro_similarity(s1, s2)
    return j + common_prefix(s1, s2) * p * (1 - j)


def jaro_winkler_distance(s1: str, s2: str, p: float = PREFIX_SCALE) -> float:
    return 1.0 - jaro_winkler_similarity(s1, s2, p)


# -- distances --------------------------------------------------------------


def _as_ast(tree: SpecializedTree) -> AstTree:
    """Spec tree as an AST under a virtual root; Action folds keep the action as token."""

    def make(node: SpecNode) -> AstNode:
        token = (node.action or "") if tree.fold == "Action" else ""
        return AstNode(node.label, token, [make(c) for c in node.children])

    return AstTree(AstNode("RES", "", [make(r) for r in tree.roots]))


def tree_distance(a: SpecializedTree, b: SpecializedTree, fold: Optional[str] = None) -> float:
    fold = fold or a.fold
    if a.fold != fold or b.fold != fold:
        raise ValueError(f"cannot compare {a.fold} and {b.fold} trees under the {fold} fold")
    if fold == "Token":
        return jaro_winkler_distance(a.tokens(), b.tokens())
    return float(len(edit_script(_as_ast(a), _as_ast(b))))


def canonical(tree: SpecializedTree) -> str:
    """The string whose equality is distance 0 under the tree's fold."""
    return tree.tokens() if tree.fold == "Token" else tree.serialize()


# -- identical pairs and clusters -------------------------------------------


@dataclass(frozen=True, order=True)
class IdenticalPair:
    left: HunkId
    right: HunkId
    fold: str = field(compare=False, default="")


@dataclass(frozen=True)
class Cluster:
    cluster_id: int
    fold: str
    members: tuple[HunkId, ...]
    group_key: Optional[GroupKey] = None

    @property
    def size(self) -> int:
        return len(self.members)


def _ordered(a: HunkId, b: HunkId, fold: str) -> IdenticalPair:
    return IdenticalPair(a, b, fold) if a < b else IdenticalPair(b, a, fold)


def _within(args) -> list[tuple[HunkId, HunkId]]:
    pairs, views, threshold = args
    return [(x, y) for x, y in pairs if tree_distance(views[x], views[y]) <= threshold]


def find_identical(
    index: SearchIndex,
    scripts: Mapping[HunkId, RichEditScript],
    threshold: float = 0.0,
    workers: int = 1,
) -> list[IdenticalPair]:
    """Pairs inside one index group whose fold distance is at most ``threshold``.

    At threshold 0 members are bucketed by canonical text; otherwise every
    in-group pair is measured, in parallel when ``workers`` > 1.
    """
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    fold = index.fold
    views = {h: project(scripts[h], fold) for members in index.groups.values() for h in members}
    found = []
    if threshold == 0:
        for key in index.keys():
            buckets: dict[str, list[HunkId]] = {}
            for h in index.groups[key]:
                buckets.setdefault(canonical(views[h]), []).append(h)
            for members in buckets.values():
                found.extend(combinations(members, 2))
    else:
        jobs = []
        for key in index.keys():
            members = index.groups[key]
            if len(members) >= 2:
                sub = {h: views[h] for h in members}
                jobs.append((list(combinations(members, 2)), sub, threshold))
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for part in pool.map(_within, jobs):
                    found.extend(part)
        else:
            for job in jobs:
                found.extend(_within(job))
    return sorted(_ordered(a, b, fold) for a, b in found)


def naive_identical(scripts: Iterable[RichEditScript], fold: str) -> list[IdenticalPair]:
    """All-pairs detection with no index; slow, used as a reference.

    Mining refines folds in order, so a pair counts at ``fold`` when its
    distance is 0 under that fold and every earlier one. The Token string
    alone carries no structure.
    """
    folds = FOLDS[: FOLDS.index(fold) + 1]
    views = {r.hunk_id: {f: project(r, f) for f in folds} for r in scripts}
    ids = sorted(views)
    return sorted(
        _ordered(a, b, fold)
        for a, b in combinations(ids, 2)
        if all(tree_distance(views[a][f], views[b][f], f) == 0 for f in folds)
    )


class _DisjointSet:
    def __init__(self):
        self.parent: dict = {}

    def find(self, x):
        self.parent.setdefault(x, x)
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def cluster(
    pairs: Iterable[IdenticalPair],
    fold: str = "",
    group_of: Optional[Mapping[HunkId, GroupKey]] = None,
) -> list[Cluster]:
    """Connected components of the pair graph with at least two members.

    Ids follow (size desc, smallest member asc), starting at 1.
    """
    ds = _DisjointSet()
    for p in pairs:
        fold = fold or p.fold
        ds.union(p.left, p.right)
    comps: dict = {}
    for node in ds.parent:
        comps.setdefault(ds.find(node), []).append(node)
    groups = sorted((sorted(m) for m in comps.values() if len(m) >= 2), key=lambda m: (-len(m), m[0]))
    out = []
    for cid, members in enumerate(groups, start=1):
        key = group_of.get(members[0]) if group_of else None
        out.append(Cluster(cid, fold, tuple(members), key))
    return out


# -- the three rounds -------------------------------------------------------


@dataclass
class MiningResult:
    indices: dict[str, SearchIndex]
    pairs: dict[str, list[IdenticalPair]]
    clusters: dict[str, list[Cluster]]
    reports: dict[str, ReductionReport]


def mine_fold(index, scripts, threshold=0.0, workers=1):
    pairs = find_identical(index, scripts, threshold, workers)
    return pairs, cluster(pairs, index.fold, index.group_of())


def iterate(corpus_res: Iterable[RichEditScript], threshold: float = 0.0, workers: int = 1) -> MiningResult:
    scripts = {r.hunk_id: r for r in corpus_res}
    result = MiningResult({}, {}, {}, {})
    index = build_shape_index(scripts.values())
    for fold in FOLDS:
        if fold == "Action":
            index = build_action_index(result.clusters["Shape"])
        elif fold == "Token":
            index = build_token_index(result.clusters["Action"])
        pairs, clusters = mine_fold(index, scripts, threshold, workers)
        result.indices[fold] = index
        result.pairs[fold] = pairs
        result.clusters[fold] = clusters
        # all-pairs baseline is the population the fold could have compared
        result.reports[fold] = reduction_report(index, len(scripts) if fold == "Shape" else index.size)
        logger.info("%s: %d pairs, %d clusters", fold, len(pairs), len(clusters))
    return result


# -- statistics -------------------------------------------------------------

FULL, PARTIAL, MIXED = "always-full", "always-partial", "mixed"


@dataclass(frozen=True)
class PatternStats:
    cluster_id: int
    fold: str
    coverage: str
    vertical: bool
    horizontal: bool
    patches: int
    hunks: int


def pattern_stats(clusters: Iterable[Cluster], hunk_counts: Mapping[str, int]) -> list[PatternStats]:
    """Coverage and spread of every cluster.

    ``hunk_counts`` maps each patch id to its number of hunks. A hunk alone
    in its patch is a full fix; the cluster is always-full when all members
    are, always-partial when none are.
    """
    out = []
    for c in clusters:
        per_patch: dict[str, int] = {}
        for h in c.members:
            per_patch[h.patch_id] = per_patch.get(h.patch_id, 0) + 1
        alone = [hunk_counts[h.patch_id] == 1 for h in c.members]
        coverage = FULL if all(alone) else PARTIAL if not any(alone) else MIXED
        out.append(
            PatternStats(
                c.cluster_id,
                c.fold,
                coverage,
                any(n >= 2 for n in per_patch.values()),
                len(per_patch) >= 2,
                len(per_patch),
                len(c.members),
            )
        )
    return out


def stats_report(
    reports: Mapping[str, ReductionReport],
    clusters: Mapping[str, list[Cluster]],
    hunk_counts: Mapping[str, int],
) -> str:
    """Comparison space, cluster counts, coverage and spread tables as TSV."""
    lines = ["# comparison space", REPORT_HEADER]
    lines += [reports[f].row() for f in FOLDS]
    lines += ["", "# clusters", "fold\tclusters\thunks\tpatches"]
    stats = {f: pattern_stats(clusters[f], hunk_counts) for f in FOLDS}
    for f in FOLDS:
        members = [h for c in clusters[f] for h in c.members]
        patches = {h.patch_id for h in members}
        lines.append(f"{f}\t{len(clusters[f])}\t{len(members)}\t{len(patches)}")
    lines += ["", "# coverage", f"fold\t{FULL}\t{PARTIAL}\t{MIXED}"]
    for f in FOLDS:
        counts = [sum(1 for s in stats[f] if s.coverage == k) for k in (FULL, PARTIAL, MIXED)]
        lines.append(f + "".join(f"\t{n}" for n in counts))
    lines += ["", "# spread", "fold\tvertical\thorizontal\tboth"]
    for f in FOLDS:
        v = sum(s.vertical for s in stats[f])
        h = sum(s.horizontal for s in stats[f])
        both = sum(s.vertical and s.horizontal for s in stats[f])
        lines.append(f"{f}\t{v}\t{h}\t{both}")
    return "\n".join(lines) + "\n"


# -- output files -----------------------------------------------------------


def clusters_json(clusters: Iterable[Cluster]) -> str:
    data = [
        {
            "id": c.cluster_id,
            "key": c.group_key.render() if c.group_key else "",
            "members": [str(h) for h in c.members],
        }
        for c in clusters
    ]
    return json.dumps(data, indent=1) + "\n"


def read_index(path, fold: str) -> SearchIndex:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    groups = {GroupKey.parse(k): [HunkId.parse(m) for m in v] for k, v in data.items()}
    return SearchIndex(fold, groups)


def read_clusters(path, fold: str) -> list[Cluster]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return [
        Cluster(
            d["id"],
            fold,
            tuple(HunkId.parse(m) for m in d["members"]),
            GroupKey.parse(d["key"]) if d["key"] else None,
        )
        for d in data
    ]


def patterns_text(clusters: Iterable[Cluster], scripts: Mapping[HunkId, RichEditScript]) -> str:
    """One representative per cluster (its smallest member), in Grammar-1 text."""
    blocks = []
    for c in clusters:
        key = c.group_key.render() if c.group_key else "-"
        rep = scripts[c.members[0]]
        blocks.append(f"# cluster {c.cluster_id} {key} members={c.size}\n{serialize(rep)}")
    return "\n".join(blocks)


def write_outputs(out_dir, result: MiningResult, scripts: Mapping[HunkId, RichEditScript], hunk_counts) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name, text):
        path = out / name
        path.write_text(text, encoding="utf-8")
        written.append(path)

    for fold in FOLDS:
        key = fold.lower()
        put(f"index.{key}.json", result.indices[fold].to_json())
        put(f"pairs.{key}.tsv", "".join(f"{p.left}\t{p.right}\n" for p in result.pairs[fold]))
        put(f"clusters.{key}.json", clusters_json(result.clusters[fold]))
        put(f"patterns.{key}.txt", patterns_text(result.clusters[fold], scripts))
    put("stats.tsv", stats_report(result.reports, result.clusters, hunk_counts))
    return written
