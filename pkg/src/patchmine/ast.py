"""Labeled, ordered, token-valued syntax trees and the parser registry.

Every tree handed to the rest of the pipeline is an :class:`AstTree` whose
nodes carry a node-type ``label``, a raw source ``token`` (empty for purely
structural nodes), ordered ``children`` and a character ``span`` into the
source text. Concrete grammars register a parse function with
:func:`register_grammar`; the Java grammar is registered on import.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

STATEMENT_KINDS = frozenset(
    {
        "AssertStatement",
        "Block",
        "BreakStatement",
        "ConstructorInvocation",
        "ContinueStatement",
        "DoStatement",
        "EmptyStatement",
        "EnhancedForStatement",
        "ExpressionStatement",
        "ForStatement",
        "IfStatement",
        "LabeledStatement",
        "ReturnStatement",
        "SuperConstructorInvocation",
        "SwitchCase",
        "SwitchStatement",
        "SynchronizedStatement",
        "ThrowStatement",
        "TryStatement",
        "TypeDeclarationStatement",
        "VariableDeclarationStatement",
        "WhileStatement",
        "YieldStatement",
    }
)


@dataclass(frozen=True)
class NodeKindTable:
    """Label sets that drive subtree extraction."""

    statement_kinds: frozenset = STATEMENT_KINDS
    extra_roots: frozenset = frozenset(
        {
            "TypeDeclaration",
            "FieldDeclaration",
            "MethodDeclaration",
            "SwitchCase",
            "CatchClause",
            "ConstructorInvocation",
            "SuperConstructorInvocation",
        }
    )

    @property
    def predefined_roots(self) -> frozenset:
        return self.statement_kinds | self.extra_roots


DEFAULT_KINDS = NodeKindTable()


class AstNode:
    __slots__ = ("label", "token", "children", "span", "id", "parent", "role")

    def __init__(self, label, token="", children=None, span=(0, 0), role=None):
        self.label: str = label
        self.token: str = token
        self.children: list[AstNode] = children if children is not None else []
        self.span: tuple[int, int] = span
        self.id: int = -1
        self.parent: Optional[AstNode] = None
        # field name in the concrete grammar (e.g. "name" for a method name)
        self.role: Optional[str] = role

    def __repr__(self):
        tok = f" {self.token!r}" if self.token else ""
        return f"<{self.label}#{self.id}{tok}>"

    def is_leaf(self) -> bool:
        return not self.children

    def preorder(self) -> Iterator["AstNode"]:
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def postorder(self) -> Iterator["AstNode"]:
        stack = [(self, False)]
        while stack:
            node, seen = stack.pop()
            if seen:
                yield node
            else:
                stack.append((node, True))
                stack.extend((c, False) for c in reversed(node.children))

    def bfs(self) -> Iterator["AstNode"]:
        queue = [self]
        i = 0
        while i < len(queue):
            node = queue[i]
            i += 1
            yield node
            queue.extend(node.children)

    def ancestors(self) -> Iterator["AstNode"]:
        node = self.parent
        while node is not None:
            yield node
            node = node.parent

    def position(self) -> int:
        """Index of this node among its parent's children."""
        if self.parent is None:
            return 0
        for i, c in enumerate(self.parent.children):
            if c is self:
                return i
        raise ValueError("node is detached from its parent")

    def size(self) -> int:
        return sum(1 for _ in self.preorder())

    def height(self) -> int:
        if not self.children:
            return 1
        return 1 + max(c.height() for c in self.children)

    def shape(self) -> tuple:
        """Nested (label, token, children) tuple; equal shapes mean equal trees."""
        return (self.label, self.token, tuple(c.shape() for c in self.children))


class AstTree:
    """A parsed source file. Node ids are a preorder numbering from 0."""

    def __init__(self, root: AstNode, source: str = "", grammar: str = ""):
        self.root = root
        self.source = source
        self.grammar = grammar
        root.parent = None
        self.nodes: list[AstNode] = []
        for node in root.preorder():
            node.id = len(self.nodes)
            self.nodes.append(node)
            for c in node.children:
                c.parent = node
        self._line_starts = [0] + [i + 1 for i, ch in enumerate(source) if ch == "\n"]

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)

    @property
    def line_count(self) -> int:
        return len(self._line_starts)

    def line_of(self, offset: int) -> int:
        """0-based line index containing a character offset."""
        return bisect.bisect_right(self._line_starts, offset) - 1

    def line_span(self, node: AstNode) -> tuple[int, int]:
        """Half-open 0-based line range [first, last + 1) covered by ``node``."""
        start, end = node.span
        last = self.line_of(max(start, end - 1))
        return self.line_of(start), last + 1

    def text(self, node: AstNode) -> str:
        return self.source[node.span[0] : node.span[1]]

    def line_column(self, offset: int) -> tuple[int, int]:
        line = self.line_of(offset)
        return line + 1, offset - self._line_starts[line] + 1

    def equals(self, other: "AstTree") -> bool:
        """Equality under (label, token, child order)."""
        return self.root.shape() == other.root.shape()


def build_tree(spec, source: str = "", grammar: str = "") -> AstTree:
    """Build a tree from nested ``(label, token, [children])`` tuples.

    Handy for synthetic trees in tests; spans are left at (0, 0).
    """

    def make(item):
        label, token, *rest = item
        kids = [make(c) for c in (rest[0] if rest else [])]
        return AstNode(label, token, kids)

    return AstTree(make(spec), source, grammar)


class ParseError(Exception):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


_GRAMMARS: dict[str, Callable[[str], AstTree]] = {}


def register_grammar(name: str, parse_fn: Callable[[str], AstTree]) -> None:
    _GRAMMARS[name] = parse_fn


def grammars() -> list[str]:
    return sorted(_GRAMMARS)


def parse(source: str, grammar: str = "java") -> AstTree:
    try:
        fn = _GRAMMARS[grammar]
    except KeyError:
        raise ValueError(f"unknown grammar {grammar!r}; known: {grammars()}") from None
    return fn(source)


def node_at_hunk(tree: AstTree, line_range: tuple[int, int]) -> list[AstNode]:
    """Topmost nodes whose line extent lies inside ``line_range``.

    ``line_range`` is a half-open 0-based range, e.g. a hunk's
    ``before_range``. Nodes are returned in preorder.
    """
    start, stop = line_range
    if start < 0 or stop > tree.line_count or start > stop:
        raise ValueError(f"line range {line_range} outside file of {tree.line_count} lines")
    found = []
    stack = [tree.root]
    while stack:
        node = stack.pop()
        first, last = tree.line_span(node)
        if last <= start or first >= stop:
            continue
        if node.span[0] == node.span[1] and node is not tree.root:
            continue
        if start <= first and last <= stop and node.span[1] > node.span[0]:
            if _has_content(tree, node):
                found.append(node)
            continue
        stack.extend(reversed(node.children))
    return found


def _has_content(tree: AstTree, node: AstNode) -> bool:
    return bool(tree.text(node).strip())


def dump(tree: AstTree) -> str:
    """Line-oriented ``label@[start,end]@token`` dump, two spaces per depth."""
    lines = []

    def walk(node, depth):
        lines.append(f"{'  ' * depth}{node.label}@[{node.span[0]},{node.span[1]}]@{node.token}")
        for c in node.children:
            walk(c, depth + 1)

    walk(tree.root, 0)
    return "\n".join(lines) + "\n"


def reconstruct(tree: AstTree) -> str:
    """Rebuild the source from token-bearing leaves plus the gaps between them.

    Raises ``ValueError`` when a leaf token disagrees with its span or leaves
    overlap, so a clean round trip certifies the spans are lossless.
    """
    out = []
    pos = 0
    for node in tree.root.preorder():
        if node.children or not node.token:
            continue
        start, end = node.span
        if start < pos:
            raise ValueError(f"overlapping leaf {node!r}")
        if tree.source[start:end] != node.token:
            raise ValueError(f"leaf {node!r} does not match its span")
        out.append(tree.source[pos:start])
        out.append(node.token)
        pos = end
    out.append(tree.source[pos:])
    return "".join(out)


# registers the default grammar
from . import java as _java  # noqa: E402,F401
