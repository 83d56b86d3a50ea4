"""Search indices that confine pairwise comparison to small sub-spaces.

Shape index keys are ``root/depth``; the Action index extends a key with the
Shape cluster id and the Token index with the Action cluster id, e.g.
``IfStatement/2/1/3``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Iterable, Optional

from .corpus import HunkId
from .res import RichEditScript

MIN_DEPTH = 2


@dataclass(frozen=True)
class GroupKey:
    root_label: str
    depth: int
    shape_cluster: Optional[int] = None
    action_cluster: Optional[int] = None

    def render(self) -> str:
        parts = [self.root_label, str(self.depth)]
        if self.shape_cluster is not None:
            parts.append(str(self.shape_cluster))
        if self.action_cluster is not None:
            parts.append(str(self.action_cluster))
        return "/".join(parts)

    __str__ = render

    @classmethod
    def parse(cls, text: str) -> "GroupKey":
        parts = text.split("/")
        ids = [int(p) for p in parts[2:]] + [None, None]
        return cls(parts[0], int(parts[1]), ids[0], ids[1])

    def sort_key(self):
        return (self.root_label, self.depth, self.shape_cluster or 0, self.action_cluster or 0)

    def extend(self, cluster_id: int) -> "GroupKey":
        if self.shape_cluster is None:
            return GroupKey(self.root_label, self.depth, cluster_id)
        if self.action_cluster is None:
            return GroupKey(self.root_label, self.depth, self.shape_cluster, cluster_id)
        raise ValueError(f"key {self} is already fully qualified")


@dataclass
class SearchIndex:
    fold: str
    groups: dict[GroupKey, list[HunkId]]
    excluded: list[HunkId] = field(default_factory=list)

    def keys(self) -> list[GroupKey]:
        return sorted(self.groups, key=GroupKey.sort_key)

    def pairs(self, key: GroupKey):
        return combinations(self.groups[key], 2)

    def pair_count(self, key: GroupKey) -> int:
        return comb(len(self.groups[key]), 2)

    @property
    def total_pairs(self) -> int:
        return sum(comb(len(m), 2) for m in self.groups.values())

    @property
    def size(self) -> int:
        return sum(len(m) for m in self.groups.values())

    def group_of(self) -> dict[HunkId, GroupKey]:
        return {h: k for k, members in self.groups.items() for h in members}

    def to_json(self) -> str:
        data = {k.render(): [str(h) for h in self.groups[k]] for k in self.keys()}
        return json.dumps(data, indent=1) + "\n"


def _finish(fold, buckets, excluded) -> SearchIndex:
    groups = {k: sorted(v) for k, v in sorted(buckets.items(), key=lambda kv: kv[0].sort_key())}
    return SearchIndex(fold, groups, sorted(excluded))


def build_shape_index(all_res: Iterable[RichEditScript], min_depth: int = MIN_DEPTH) -> SearchIndex:
    """Group scripts by (first root label, max depth); shallow ones are excluded."""
    buckets: dict[GroupKey, list[HunkId]] = {}
    excluded = []
    for res in all_res:
        if res.depth < min_depth:
            excluded.append(res.hunk_id)
            continue
        buckets.setdefault(GroupKey(res.root_label, res.depth), []).append(res.hunk_id)
    return _finish("Shape", buckets, excluded)


def _regroup(fold, clusters) -> SearchIndex:
    buckets: dict[GroupKey, list[HunkId]] = {}
    for c in clusters:
        buckets.setdefault(c.group_key.extend(c.cluster_id), []).extend(c.members)
    return _finish(fold, buckets, [])


def build_action_index(shape_clusters) -> SearchIndex:
    return _regroup("Action", shape_clusters)


def build_token_index(action_clusters) -> SearchIndex:
    return _regroup("Token", action_clusters)


@dataclass(frozen=True)
class ReductionReport:
    fold: str
    hunks: int
    subspaces: int
    pairs: int
    universe_pairs: int

    @property
    def reduction(self) -> float:
        """Fraction of the all-pairs space the index avoids, in [0, 1]."""
        if self.universe_pairs == 0:
            return 0.0
        return 1.0 - self.pairs / self.universe_pairs

    def row(self) -> str:
        return f"{self.fold}\t{self.hunks}\t{self.subspaces}\t{self.pairs}\t{self.universe_pairs}\t{100 * self.reduction:.2f}"


REPORT_HEADER = "fold\thunks\tsub-spaces\tpairs\tall-pairs\treduction%"


def reduction_report(index: SearchIndex, universe_size: Optional[int] = None) -> ReductionReport:
    if universe_size is None:
        universe_size = index.size
    return ReductionReport(
        index.fold,
        universe_size,
        sum(1 for m in index.groups.values() if len(m) >= 2),
        index.total_pairs,
        comb(universe_size, 2),
    )
