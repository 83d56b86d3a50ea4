"""Rich Edit Scripts: statement-rooted change trees built from edit actions.

For every hunk, each edit action is lifted to the nearest enclosing
statement-level node (see :class:`~patchmine.ast.NodeKindTable`) and the
paths from those roots down to the action nodes are kept. Every node carries
its AST type (shape), its action (``CTX`` for pure context) and the code
before/after the change.

Text form, one node per line, children indented by ``---``::

    UPD VariableDeclarationStatement@@int i=s.indexOf('.');@TO@int i=s.lastIndexOf('.');@AT@
    ---UPD VariableDeclarationFragment@@...@TO@...@AT@
    ------UPD MethodInvocation@@s.indexOf('.')@TO@s.lastIndexOf('.')@AT@
    ---------UPD SimpleName@@indexOf@TO@lastIndexOf@AT@

Context nodes print as ``UPD``; since real updates only ever touch leaves,
an ``UPD`` line with children is read back as context.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from . import ast as _ast
from .ast import DEFAULT_KINDS, AstNode, AstTree, NodeKindTable
from .corpus import Hunk, HunkId
from .diff import DEL, INS, MOV, UPD, EditAction, EditScript, ScriptError, actions_per_hunk, edit_script

logger = logging.getLogger(__name__)

CTX = "CTX"
ACTIONS = (UPD, INS, DEL, MOV, CTX)
FOLDS = ("Shape", "Action", "Token")
CACHE_VERSION = 1


class NoRootError(Exception):
    """No action of a hunk sits below a predefined root node."""


class GrammarError(ValueError):
    pass


@dataclass
class RichNode:
    shape: str
    action: str
    token_before: str = ""
    token_after: str = ""
    children: list["RichNode"] = field(default_factory=list)
    # (label, tokens) of the destination parent for INS/MOV
    target: Optional[tuple[str, str]] = None

    def preorder(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def height(self) -> int:
        return 1 + max((c.height() for c in self.children), default=0)

    def size(self) -> int:
        return sum(1 for _ in self.preorder())

    @property
    def shown_action(self) -> str:
        return UPD if self.action == CTX else self.action


@dataclass
class RichEditScript:
    hunk_id: Optional[HunkId]
    subtrees: list[RichNode]

    @property
    def root_label(self) -> str:
        return self.subtrees[0].shape if self.subtrees else ""

    @property
    def depth(self) -> int:
        return max((s.height() for s in self.subtrees), default=0)

    def nodes(self):
        for s in self.subtrees:
            yield from s.preorder()


def collapse(text: str) -> str:
    return " ".join(text.split())


# -- construction -----------------------------------------------------------


class _Refs:
    """Unified node references: before-tree nodes, plus after-only nodes."""

    def __init__(self, before: AstTree, after: AstTree, script: EditScript):
        self.before = before
        self.after = after
        self.dst = script.mapping.dst
        self.src = script.mapping.src

    def norm_after(self, node: AstNode):
        b = self.dst.get(node)
        return ("b", b) if b is not None else ("a", node)

    def parent(self, ref):
        side, node = ref
        if node.parent is None:
            return None
        if side == "b":
            return ("b", node.parent)
        return self.norm_after(node.parent)

    def text(self, ref) -> str:
        side, node = ref
        tree = self.before if side == "b" else self.after
        return collapse(tree.text(node)) if node.children else collapse(node.token)

    def after_text(self, node: AstNode) -> str:
        return collapse(self.after.text(node)) if node.children else collapse(node.token)

    def position(self, ref) -> float:
        """Location in before-file coordinates, used to order siblings."""
        side, node = ref
        if side == "b":
            return float(node.span[0])
        parent = node.parent
        if parent is None:
            return 0.0
        prev = None
        for c in parent.children:
            if c is node:
                break
            if c in self.dst:
                prev = self.dst[c]
        if prev is not None:
            return prev.span[1] - 0.5
        return self.position(self.norm_after(parent)) + 0.25


def build_res(
    tree_before: AstTree,
    tree_after: AstTree,
    script: EditScript,
    hunk: Optional[Hunk] = None,
    actions: Optional[Iterable[EditAction]] = None,
    kinds: NodeKindTable = DEFAULT_KINDS,
) -> RichEditScript:
    """Lift the hunk's actions into minimal statement-rooted subtrees.

    ``actions`` defaults to the whole script. Raises :class:`NoRootError`
    when no action reaches a predefined root.
    """
    refs = _Refs(tree_before, tree_after, script)
    roots_kinds = kinds.predefined_roots
    acts = list(script.actions if actions is None else actions)

    action_of: dict = {}
    for act in acts:
        ref = ("a", act.node) if act.kind == INS else ("b", act.node)
        prev = action_of.get(ref)
        # a moved leaf whose token also changed is reported as the update
        if prev is None or (prev.kind == MOV and act.kind == UPD):
            action_of[ref] = act

    parent_link: dict = {}
    members: set = set()
    for ref in action_of:
        top = ref
        while True:
            up = refs.parent(top)
            if up is None or up not in action_of:
                break
            top = up
        root = top
        while root is not None and root[1].label not in roots_kinds:
            root = refs.parent(root)
        if root is None:
            continue
        node = ref
        members.add(node)
        while node != root:
            up = refs.parent(node)
            parent_link[node] = up
            members.add(up)
            node = up

    if not members:
        raise NoRootError(f"no predefined root above the actions of {hunk.hunk_id if hunk else 'hunk'}")

    children: dict = {m: [] for m in members}
    for child, parent in parent_link.items():
        children[parent].append(child)
    order = lambda r: (refs.position(r), 0 if r[0] == "b" else 1, r[1].id)  # noqa: E731

    def make(ref) -> RichNode:
        act = action_of.get(ref)
        side, node = ref
        if act is None:
            if side == "b":
                partner = refs.src.get(node)
                after = refs.after_text(partner) if partner is not None else refs.text(ref)
                rn = RichNode(node.label, CTX, refs.text(ref), after)
            else:
                rn = RichNode(node.label, CTX, "", refs.text(ref))
        elif act.kind == UPD:
            rn = RichNode(node.label, UPD, collapse(act.old_token), collapse(act.new_token))
        elif act.kind == DEL:
            rn = RichNode(node.label, DEL, refs.text(ref), "")
        elif act.kind == INS:
            rn = RichNode(node.label, INS, "", refs.text(ref), target=_target(refs, act.parent))
        else:
            text = refs.text(ref)
            rn = RichNode(node.label, MOV, text, text, target=_target(refs, act.parent))
        rn.children = [make(c) for c in sorted(children[ref], key=order)]
        return rn

    tops = sorted((m for m in members if m not in parent_link), key=order)
    return RichEditScript(hunk.hunk_id if hunk else None, [make(t) for t in tops])


def _target(refs: _Refs, parent: Optional[AstNode]) -> tuple[str, str]:
    if parent is None:
        return ("", "")
    return (parent.label, refs.after_text(parent))


# -- Grammar-1 text ---------------------------------------------------------


def format_node(node: RichNode) -> str:
    act = node.shown_action
    if act == UPD:
        return f"UPD {node.shape}@@{node.token_before}@TO@{node.token_after}@AT@"
    if act == DEL:
        return f"DEL {node.shape}@@{node.token_before}@AT@"
    tshape, ttokens = node.target or ("", "")
    tokens = node.token_after if act == INS else node.token_before
    return f"{act} {node.shape}@@{tokens}@TO@{tshape}@@{ttokens}@AT@"


def _emit(nodes: Iterable[RichNode], fmt) -> str:
    lines = []

    def walk(node, level):
        lines.append("---" * level + fmt(node))
        for c in node.children:
            walk(c, level + 1)

    for n in nodes:
        walk(n, 0)
    return "".join(line + "\n" for line in lines)


def serialize(res: RichEditScript) -> str:
    return _emit(res.subtrees, format_node)


_LINE = re.compile(r"^((?:---)*)\s*(UPD|INS|DEL|MOV) (.*)$")


def _parse_body(action: str, body: str, lenient: bool) -> RichNode:
    if "@@" not in body:
        if not lenient:
            raise GrammarError(f"missing '@@' in {body!r}")
        return RichNode(body.strip(), action)
    shape, rest = body.split("@@", 1)
    if not rest.endswith("@AT@"):
        if not lenient:
            raise GrammarError(f"missing '@AT@' in {body!r}")
    else:
        rest = rest[: -len("@AT@")]
    if action == DEL:
        return RichNode(shape, DEL, rest, "")
    if "@TO@" not in rest:
        raise GrammarError(f"missing '@TO@' in {body!r}")
    left, right = rest.split("@TO@", 1)
    if action == UPD:
        return RichNode(shape, UPD, left, right)
    if "@@" not in right:
        raise GrammarError(f"missing target '@@' in {body!r}")
    tshape, ttokens = right.split("@@", 1)
    if action == INS:
        return RichNode(shape, INS, "", left, target=(tshape, ttokens))
    return RichNode(shape, MOV, left, left, target=(tshape, ttokens))


def parse_nodes(text: str, lenient: bool = False) -> list[RichNode]:
    """Parse Grammar-1 lines into a forest of :class:`RichNode`.

    ``lenient`` also accepts bare ``ACTION Type`` lines (hand-written pattern
    catalogs) and leading whitespace after the dashes.
    """
    roots: list[RichNode] = []
    stack: list[RichNode] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        line = line.strip() if lenient else line
        m = _LINE.match(line)
        if not m or (not lenient and line != line.strip()):
            raise GrammarError(f"line {lineno}: not a Rich Edit Script node: {line!r}")
        dashes, action, body = m.groups()
        level = len(dashes) // 3
        node = _parse_body(action, body, lenient)
        if level == 0:
            roots.append(node)
            stack = [node]
        else:
            if level > len(stack):
                raise GrammarError(f"line {lineno}: indentation jumps a level")
            del stack[level:]
            stack[-1].children.append(node)
            stack.append(node)
    for root in roots:
        for node in root.preorder():
            if node.action == UPD and node.children:
                node.action = CTX
    return roots


def parse(text: str, hunk_id: Optional[HunkId] = None) -> RichEditScript:
    return RichEditScript(hunk_id, parse_nodes(text))


# -- specialized views ------------------------------------------------------


@dataclass(frozen=True)
class SpecNode:
    label: str
    action: Optional[str] = None
    token_before: Optional[str] = None
    token_after: Optional[str] = None
    target: Optional[tuple[str, str]] = None
    children: tuple["SpecNode", ...] = ()

    def preorder(self):
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass(frozen=True)
class SpecializedTree:
    fold: str
    roots: tuple[SpecNode, ...]

    @property
    def root(self) -> SpecNode:
        return self.roots[0]

    def serialize(self) -> str:
        return _emit(self.roots, _SPEC_FORMAT[self.fold])

    def tokens(self) -> str:
        """Token string compared by the Token fold, in preorder."""
        if self.fold != "Token":
            raise TypeError(f"{self.fold} trees carry no tokens")
        return " ".join(
            f"{n.token_before} @TO@ {n.token_after}" for r in self.roots for n in r.preorder()
        )


def _format_token(node: SpecNode) -> str:
    return format_node(
        RichNode(node.label, node.action, node.token_before, node.token_after, [], node.target)
    )


_SPEC_FORMAT = {
    "Shape": lambda n: n.label,
    "Action": lambda n: f"{n.action} {n.label}",
    "Token": _format_token,
}


def project(res: RichEditScript, fold: str) -> SpecializedTree:
    if not isinstance(res, RichEditScript):
        raise TypeError("only Rich Edit Scripts can be projected; views are one-way")
    if fold not in FOLDS:
        raise ValueError(f"fold must be one of {FOLDS}")

    def view(node: RichNode) -> SpecNode:
        kids = tuple(view(c) for c in node.children)
        if fold == "Shape":
            return SpecNode(node.shape, children=kids)
        if fold == "Action":
            return SpecNode(node.shape, node.shown_action, children=kids)
        return SpecNode(
            node.shape, node.shown_action, node.token_before, node.token_after, node.target, kids
        )

    return SpecializedTree(fold, tuple(view(s) for s in res.subtrees))


# -- cache ------------------------------------------------------------------


def save_cache(path, scripts: Iterable[RichEditScript], meta: Optional[dict] = None) -> None:
    payload = {
        "version": CACHE_VERSION,
        "meta": meta or {},
        "res": {str(r.hunk_id): serialize(r) for r in scripts},
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_cache(path) -> tuple[list[RichEditScript], dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("version") != CACHE_VERSION:
        raise ValueError(f"unsupported cache version {payload.get('version')!r}")
    scripts = [parse(text, HunkId.parse(hid)) for hid, text in payload["res"].items()]
    scripts.sort(key=lambda r: r.hunk_id)
    return scripts, payload.get("meta", {})


# -- corpus pipeline --------------------------------------------------------


@dataclass
class CorpusScripts:
    scripts: list[RichEditScript]
    skipped: dict[str, int] = field(default_factory=dict)
    fallback: int = 0


def corpus_res(records, grammar: str = "java", kinds: NodeKindTable = DEFAULT_KINDS, **match_opts) -> CorpusScripts:
    """Parse, diff and lift every hunk of every patch; failures are counted, not raised."""
    out = CorpusScripts([])

    def skip(reason, what):
        out.skipped[reason] = out.skipped.get(reason, 0) + 1
        logger.warning("skipping %s: %s", what, reason)

    for record in records:
        for fc in record.files:
            try:
                before = _ast.parse(fc.before, grammar)
                after = _ast.parse(fc.after, grammar)
            except _ast.ParseError as exc:
                for h in fc.hunks:
                    skip("parse-error", f"{h.hunk_id} ({exc})")
                continue
            try:
                script = edit_script(before, after, **match_opts)
            except ScriptError as exc:
                for h in fc.hunks:
                    skip("diff-error", f"{h.hunk_id} ({exc})")
                continue
            assignment = actions_per_hunk(script, fc)
            out.fallback += assignment.fallback
            for h in fc.hunks:
                acts = assignment.groups[h.hunk_id]
                if not acts:
                    skip("no-actions", str(h.hunk_id))
                    continue
                try:
                    out.scripts.append(build_res(before, after, script, h, acts, kinds))
                except NoRootError:
                    skip("no-root", str(h.hunk_id))
    out.scripts.sort(key=lambda r: r.hunk_id)
    return out
