"""AST differencing: GumTree-style matching and Chawathe edit scripts.

``match_trees`` maps before-nodes to after-nodes in two phases: a greedy
top-down pass that pairs the largest isomorphic subtrees, then a bottom-up
pass that pairs containers sharing enough matched descendants and recovers
mappings among their remaining children. ``edit_script`` turns a mapping into
an ordered UPD/INS/MOV/DEL script that provably rebuilds the after-tree.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .ast import AstNode, AstTree
from .corpus import FileChange, HunkId

logger = logging.getLogger(__name__)

UPD, INS, DEL, MOV = "UPD", "INS", "DEL", "MOV"

MIN_HEIGHT = 2
MIN_DICE = 0.5


class ScriptError(Exception):
    pass


class Mapping:
    """Partial bijection between before-nodes and after-nodes."""

    def __init__(self):
        self.src: dict[AstNode, AstNode] = {}
        self.dst: dict[AstNode, AstNode] = {}

    def add(self, a: AstNode, b: AstNode):
        if a in self.src or b in self.dst:
            raise ValueError(f"{a!r} or {b!r} already mapped")
        if a.label != b.label:
            raise ValueError(f"cannot map {a.label} to {b.label}")
        self.src[a] = b
        self.dst[b] = a

    def __contains__(self, pair):
        a, b = pair
        return self.src.get(a) is b

    def __len__(self):
        return len(self.src)

    def pairs(self) -> list[tuple[AstNode, AstNode]]:
        return sorted(self.src.items(), key=lambda p: (p[0].id, p[1].id))


@dataclass
class EditAction:
    kind: str
    node: AstNode
    parent: Optional[AstNode] = None
    position: Optional[int] = None
    old_token: str = ""
    new_token: str = ""

    @property
    def label(self) -> str:
        return self.node.label

    def dump(self) -> str:
        s, e = self.node.span
        text = f'{self.kind} {self.label}@[{s},{e}] {json.dumps(self.old_token)} -> {json.dumps(self.new_token)}'
        if self.kind in (INS, MOV):
            pid = -1 if self.parent is None else self.parent.id
            text += f" parent={pid} pos={self.position}"
        return text


@dataclass
class EditScript:
    actions: list[EditAction]
    mapping: Mapping
    before: AstTree = field(repr=False, default=None)
    after: AstTree = field(repr=False, default=None)

    def __len__(self):
        return len(self.actions)

    def __iter__(self):
        return iter(self.actions)

    def dump(self) -> str:
        return "".join(a.dump() + "\n" for a in self.actions)


# -- matching ---------------------------------------------------------------


class _TreeInfo:
    """Per-tree caches: isomorphism classes, heights, subtree id ranges."""

    def __init__(self, tree: AstTree, registry: dict):
        self.tree = tree
        self.iso: dict[AstNode, int] = {}
        self.height: dict[AstNode, int] = {}
        self.last: dict[AstNode, int] = {}
        for node in tree.root.postorder():
            key = (node.label, node.token, tuple(self.iso[c] for c in node.children))
            self.iso[node] = registry.setdefault(key, len(registry))
            self.height[node] = 1 + max((self.height[c] for c in node.children), default=0)
            self.last[node] = self.last[node.children[-1]] if node.children else node.id
        self.iso_count = Counter(self.iso.values())

    def is_descendant(self, node: AstNode, ancestor: AstNode) -> bool:
        return ancestor.id < node.id <= self.last[ancestor]

    def descendants(self, node: AstNode):
        nodes = self.tree.nodes
        return nodes[node.id + 1 : self.last[node] + 1]


class _Matcher:
    def __init__(self, before: AstTree, after: AstTree, min_height: int, min_dice: float):
        registry: dict = {}
        self.t1 = _TreeInfo(before, registry)
        self.t2 = _TreeInfo(after, registry)
        self.min_height = min_height
        self.min_dice = min_dice
        self.m = Mapping()

    def run(self) -> Mapping:
        self.top_down()
        self.bottom_up()
        return self.m

    # phase 1
    def top_down(self):
        l1 = [self.t1.tree.root]
        l2 = [self.t2.tree.root]
        ambiguous = []
        h1, h2 = self.t1.height, self.t2.height

        def peek(lst, h):
            return max((h[n] for n in lst), default=0)

        def pop(lst, h, height):
            taken = [n for n in lst if h[n] == height]
            lst[:] = [n for n in lst if h[n] != height]
            return taken

        while min(peek(l1, h1), peek(l2, h2)) >= self.min_height:
            p1, p2 = peek(l1, h1), peek(l2, h2)
            if p1 != p2:
                if p1 > p2:
                    for t in pop(l1, h1, p1):
                        l1.extend(t.children)
                else:
                    for t in pop(l2, h2, p2):
                        l2.extend(t.children)
                continue
            H1 = pop(l1, h1, p1)
            H2 = pop(l2, h2, p2)
            by_key = defaultdict(list)
            for t2 in H2:
                by_key[self.t2.iso[t2]].append(t2)
            used1, used2 = set(), set()
            for t1 in H1:
                key = self.t1.iso[t1]
                for t2 in by_key.get(key, ()):
                    if self.t1.iso_count[key] == 1 and self.t2.iso_count[key] == 1:
                        self.map_subtree(t1, t2)
                    else:
                        ambiguous.append((t1, t2))
                    used1.add(t1)
                    used2.add(t2)
            for t1 in H1:
                if t1 not in used1:
                    l1.extend(t1.children)
            for t2 in H2:
                if t2 not in used2:
                    l2.extend(t2.children)

        def rank(pair):
            t1, t2 = pair
            d = 0.0
            if t1.parent is not None and t2.parent is not None:
                d = self.dice(t1.parent, t2.parent)
            return (-d, t1.id, t2.id)

        ambiguous.sort(key=rank)
        for t1, t2 in ambiguous:
            if t1 not in self.m.src and t2 not in self.m.dst:
                self.map_subtree(t1, t2)

    def map_subtree(self, t1: AstNode, t2: AstNode):
        for a, b in zip(t1.preorder(), t2.preorder()):
            if a not in self.m.src and b not in self.m.dst:
                self.m.add(a, b)

    def dice(self, t1: AstNode, t2: AstNode) -> float:
        d1 = self.t1.descendants(t1)
        d2 = self.t2.descendants(t2)
        if not d1 and not d2:
            return 0.0
        common = 0
        for d in d1:
            p = self.m.src.get(d)
            if p is not None and self.t2.is_descendant(p, t2):
                common += 1
        return 2.0 * common / (len(d1) + len(d2))

    # phase 2
    def bottom_up(self):
        root1, root2 = self.t1.tree.root, self.t2.tree.root
        for t1 in root1.postorder():
            if t1 is root1:
                if t1 not in self.m.src and root2 not in self.m.dst and t1.label == root2.label:
                    self.m.add(t1, root2)
                if self.m.src.get(t1) is root2:
                    self.recover(t1, root2)
                break
            if t1 in self.m.src or not t1.children:
                continue
            candidates = set()
            for d in self.t1.descendants(t1):
                p = self.m.src.get(d)
                if p is None:
                    continue
                for anc in p.ancestors():
                    if anc.label == t1.label and anc not in self.m.dst:
                        candidates.add(anc)
            if not candidates:
                continue
            best = min(candidates, key=lambda c: (-self.dice(t1, c), c.id))
            if self.dice(t1, best) >= self.min_dice:
                self.m.add(t1, best)
                self.recover(t1, best)

    def recover(self, a: AstNode, b: AstNode):
        """Map leftover children of a matched pair, recursing into new pairs."""
        stack = [(a, b)]
        while stack:
            x, y = stack.pop()
            ux = [c for c in x.children if c not in self.m.src]
            uy = [c for c in y.children if c not in self.m.dst]
            if not ux or not uy:
                continue
            iso1, iso2 = self.t1.iso, self.t2.iso

            def weight(p, q):
                if iso1[p] == iso2[q]:
                    return 2
                return 1 if p.label == q.label else 0

            new_pairs = []
            for c1, c2 in weighted_lcs(ux, uy, weight):
                if iso1[c1] == iso2[c2]:
                    self.map_subtree(c1, c2)
                else:
                    self.m.add(c1, c2)
                    new_pairs.append((c1, c2))
            ux = [c for c in ux if c not in self.m.src]
            uy = [c for c in uy if c not in self.m.dst]
            count1 = Counter(c.label for c in ux)
            count2 = Counter(c.label for c in uy)
            for c1 in ux:
                if count1[c1.label] == 1 and count2[c1.label] == 1:
                    c2 = next(c for c in uy if c.label == c1.label)
                    self.m.add(c1, c2)
                    new_pairs.append((c1, c2))
            stack.extend(reversed(new_pairs))


def lcs(xs, ys, eq) -> list[tuple]:
    """Longest common subsequence of two lists under ``eq``; leftmost pairs win."""
    n, m = len(xs), len(ys)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = table[i], table[i + 1]
        for j in range(m - 1, -1, -1):
            if eq(xs[i], ys[j]):
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = max(nxt[j], row[j + 1])
    out = []
    i = j = 0
    while i < n and j < m:
        if eq(xs[i], ys[j]) and table[i][j] == table[i + 1][j + 1] + 1:
            out.append((xs[i], ys[j]))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def weighted_lcs(xs, ys, weight) -> list[tuple]:
    """Order-preserving alignment maximizing the summed pair weight; leftmost pairs win ties."""
    n, m = len(xs), len(ys)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = table[i], table[i + 1]
        for j in range(m - 1, -1, -1):
            w = weight(xs[i], ys[j])
            row[j] = max(nxt[j], row[j + 1], nxt[j + 1] + w if w else 0)
    out = []
    i = j = 0
    while i < n and j < m:
        w = weight(xs[i], ys[j])
        if w and table[i][j] == table[i + 1][j + 1] + w:
            out.append((xs[i], ys[j]))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return out


def match_trees(before: AstTree, after: AstTree, min_height=MIN_HEIGHT, min_dice=MIN_DICE) -> Mapping:
    return _Matcher(before, after, min_height, min_dice).run()


# -- script generation ------------------------------------------------------


class _Work:
    """Mutable working copy of the before-tree used during generation/apply."""

    def __init__(self, before: AstTree):
        self.orig: dict[AstNode, AstNode] = {}  # copy -> before node
        self.copy: dict[AstNode, AstNode] = {}  # before node -> copy
        self.vroot = AstNode("<root>")
        root = self._clone(before.root)
        self._attach(self.vroot, root, 0)

    def _clone(self, node: AstNode) -> AstNode:
        top = AstNode(node.label, node.token, span=node.span)
        self.orig[top] = node
        self.copy[node] = top
        stack = [(node, top)]
        while stack:
            src, dst = stack.pop()
            for c in src.children:
                cc = AstNode(c.label, c.token, span=c.span)
                self.orig[cc] = c
                self.copy[c] = cc
                cc.parent = dst
                dst.children.append(cc)
                stack.append((c, cc))
        return top

    @staticmethod
    def _attach(parent: AstNode, node: AstNode, pos: int):
        if pos < 0 or pos > len(parent.children):
            raise ScriptError(f"position {pos} out of range for {parent!r}")
        parent.children.insert(pos, node)
        node.parent = parent

    @staticmethod
    def _detach(node: AstNode):
        node.parent.children.remove(node)
        node.parent = None

    def result(self) -> AstTree:
        if len(self.vroot.children) != 1:
            raise ScriptError("script does not leave a single root")
        root = self.vroot.children[0]
        return AstTree(root)


def edit_script(before: AstTree, after: AstTree, mapping: Optional[Mapping] = None, **match_opts) -> EditScript:
    """Chawathe-style script (align, INS/UPD/MOV in BFS order, then DEL)."""
    if mapping is None:
        mapping = match_trees(before, after, **match_opts)
    work = _Work(before)
    vafter = object()  # stands for the virtual parent of the after-root

    fwd: dict = {vafter: work.vroot}  # after node -> copy node
    partner: dict = {work.vroot: vafter}  # copy node -> after node
    for a, b in mapping.pairs():
        fwd[b] = work.copy[a]
        partner[work.copy[a]] = b
    in_order: set = set()
    actions: list[EditAction] = []

    def parent_of(x):
        return vafter if x.parent is None else x.parent

    def siblings_of(x):
        return [x] if x.parent is None else x.parent.children

    def find_pos(x) -> int:
        sibs = siblings_of(x)
        for c in sibs:
            if c in in_order:
                if c is x:
                    return 0
                break
        v = None
        for c in sibs:
            if c is x:
                break
            if c in in_order:
                v = c
        if v is None:
            return 0
        return fwd[v].position() + 1

    def align(w, x):
        for c in w.children:
            in_order.discard(c)
        for c in x.children:
            in_order.discard(c)
        xset = set(x.children)
        wset = set(w.children)
        s1 = [c for c in w.children if c in partner and partner[c] in xset]
        s2 = [c for c in x.children if c in fwd and fwd[c] in wset]
        common = lcs(s1, s2, lambda p, q: partner[p] is q)
        for p, q in common:
            in_order.add(p)
            in_order.add(q)
        kept = {id(p) for p, _ in common}
        s1set = set(s1)
        for b in s2:
            a = fwd[b]
            if a in s1set and id(a) not in kept:
                k = find_pos(b)
                old = a.position()
                if old < k:
                    k -= 1
                work._detach(a)
                work._attach(w, a, k)
                actions.append(EditAction(MOV, _orig(work, a), x, k))
                in_order.add(a)
                in_order.add(b)

    queue = [after.root]
    head = 0
    while head < len(queue):
        x = queue[head]
        head += 1
        queue.extend(x.children)
        y = parent_of(x)
        z = fwd[y]
        out_parent = None if y is vafter else y
        if x not in fwd:
            k = find_pos(x)
            w = AstNode(x.label, x.token, span=x.span)
            work._attach(z, w, k)
            fwd[x] = w
            partner[w] = x
            actions.append(EditAction(INS, x, out_parent, k, "", x.token))
        else:
            w = fwd[x]
            if w.token != x.token:
                actions.append(EditAction(UPD, _orig(work, w), None, None, w.token, x.token))
                w.token = x.token
            v = w.parent
            if partner.get(v) is not y:
                work._detach(w)
                k = find_pos(x)
                work._attach(z, w, k)
                actions.append(EditAction(MOV, _orig(work, w), out_parent, k))
        in_order.add(w)
        in_order.add(x)
        align(w, x)

    for w in list(_postorder_all(work.vroot)):
        if w is work.vroot or w in partner:
            continue
        actions.append(EditAction(DEL, _orig(work, w), None, None, w.token, ""))
        work._detach(w)

    return EditScript(actions, mapping, before, after)


def _orig(work: _Work, node: AstNode) -> AstNode:
    try:
        return work.orig[node]
    except KeyError:
        raise ScriptError(f"{node!r} has no before-tree counterpart") from None


def _postorder_all(root: AstNode):
    return list(root.postorder())


def apply(before: AstTree, script: EditScript) -> AstTree:
    """Replay ``script`` on a copy of ``before`` and return the result."""
    work = _Work(before)
    placed: dict = {}  # after node -> copy node
    for a, b in script.mapping.pairs():
        if a not in work.copy:
            raise ScriptError(f"mapping references {a!r} outside the tree")
        placed[b] = work.copy[a]

    def resolve_parent(p):
        if p is None:
            return work.vroot
        try:
            return placed[p]
        except KeyError:
            raise ScriptError(f"dangling parent reference {p!r}") from None

    def resolve(node):
        try:
            return work.copy[node]
        except KeyError:
            raise ScriptError(f"dangling node reference {node!r}") from None

    for act in script.actions:
        if act.kind == INS:
            w = AstNode(act.node.label, act.new_token, span=act.node.span)
            work._attach(resolve_parent(act.parent), w, act.position)
            placed[act.node] = w
        elif act.kind == UPD:
            w = resolve(act.node)
            if w.token != act.old_token:
                raise ScriptError(f"UPD expected {act.old_token!r} on {w!r}")
            w.token = act.new_token
        elif act.kind == MOV:
            w = resolve(act.node)
            work._detach(w)
            work._attach(resolve_parent(act.parent), w, act.position)
        elif act.kind == DEL:
            w = resolve(act.node)
            if w.children:
                raise ScriptError(f"DEL of non-leaf {w!r}")
            work._detach(w)
        else:
            raise ScriptError(f"unknown action kind {act.kind!r}")
    return work.result()


# -- hunk assignment --------------------------------------------------------


def _lines_overlap(span: tuple[int, int], rng: tuple[int, int]) -> int:
    lo = max(span[0], rng[0])
    hi = min(span[1], rng[1])
    return hi - lo


def _distance(span: tuple[int, int], rng: tuple[int, int]) -> int:
    if rng[0] == rng[1]:
        # empty range: distance to the insertion point
        if span[0] <= rng[0] < span[1] or span[0] == rng[0]:
            return 0
        return min(abs(span[0] - rng[0]), abs(span[1] - rng[0]))
    if span[1] <= rng[0]:
        return rng[0] - span[1] + 1
    if span[0] >= rng[1]:
        return span[0] - rng[1] + 1
    return 0


@dataclass
class HunkAssignment:
    groups: dict[HunkId, list[EditAction]]
    fallback: int = 0


def actions_per_hunk(script: EditScript, fc: FileChange) -> HunkAssignment:
    """Assign every action to exactly one hunk of ``fc``.

    DEL/UPD/MOV use the before-node line span against ``before_range``; INS
    uses the after-node span against ``after_range``. Actions overlapping no
    hunk go to the nearest one by line distance and are counted in
    ``fallback``.
    """
    groups: dict[HunkId, list[EditAction]] = {h.hunk_id: [] for h in fc.hunks}
    fallback = 0
    if not fc.hunks:
        return HunkAssignment(groups, 0)
    for act in script.actions:
        if act.kind == INS:
            tree, side = script.after, "after_range"
        else:
            tree, side = script.before, "before_range"
        lines = tree.line_span(act.node)
        best = None
        for h in fc.hunks:
            if _lines_overlap(lines, getattr(h, side)) > 0:
                best = h
                break
        if best is None:
            fallback += 1
            best = min(fc.hunks, key=lambda h: (_distance(lines, getattr(h, side)), h.hunk_id.ordinal))
        groups[best.hunk_id].append(act)
    if fallback:
        logger.info("%s: %d action(s) assigned to nearest hunk", fc.path, fallback)
    return HunkAssignment(groups, fallback)
