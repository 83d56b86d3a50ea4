"""Template-based patch generation from Action patterns.

For each suspicious statement, patterns whose shape embeds into the
statement's subtree are instantiated: updated leaves become holes filled
with donor tokens harvested from the same file, deleted statements are
removed, and patterns rooted at an inserted statement are printed from the
pattern's own structure and placed before the statement. Candidates are
tried in order with an external test command until one passes.
"""

from __future__ import annotations

import difflib
import itertools
import logging
import shlex
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import ast as _ast
from .ast import DEFAULT_KINDS, AstNode, AstTree, NodeKindTable
from .diff import DEL, INS, MOV, UPD
from .index import GroupKey
from .res import RichNode, SpecializedTree, SpecNode, parse_nodes, project

logger = logging.getLogger(__name__)

RELATIONAL = ("<", "<=", ">", ">=", "==", "!=")
OPERATOR_CLASSES = (
    RELATIONAL,
    ("+", "-", "*", "/", "%"),
    ("&&", "||"),
    ("&", "|", "^"),
    ("<<", ">>", ">>>"),
    ("=", "+=", "-=", "*=", "/=", "%="),
    ("++", "--"),
    ("!", "-", "~"),
)
LITERALS = ("StringLiteral", "NumberLiteral", "CharacterLiteral")
TYPES = ("SimpleType", "PrimitiveType", "QualifiedName")
FIXED_LEAVES = {"NullLiteral": "null", "ThisExpression": "this", "SuperExpression": "super"}


class RepairError(Exception):
    pass


class Unsupported(Exception):
    """A pattern element this generator cannot instantiate."""


# -- inputs -----------------------------------------------------------------


@dataclass(frozen=True)
class SuspiciousLocation:
    """A statement to mutate; lines are 1-based and inclusive."""

    path: str
    start_line: int
    end_line: int
    rank: int = 0

    @property
    def line_range(self) -> tuple[int, int]:
        return (self.start_line - 1, self.end_line)


def read_locations(path) -> list[SuspiciousLocation]:
    """Read ``path<TAB>start<TAB>end<TAB>rank`` rows, sorted by rank."""
    locs = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        try:
            if len(parts) != 4:
                raise ValueError("expected 4 tab-separated fields")
            start, end, rank = int(parts[1]), int(parts[2]), int(parts[3])
            if start < 1 or end < start:
                raise ValueError("bad line range")
        except ValueError as exc:
            raise RepairError(f"{path}:{lineno}: {exc}") from exc
        locs.append(SuspiciousLocation(parts[0], start, end, rank))
    return sorted(locs, key=lambda l: (l.rank, l.path, l.start_line))


@dataclass(frozen=True)
class FixPattern:
    cluster_id: int
    action_tree: SpecializedTree
    shape_key: Optional[GroupKey] = None

    @property
    def root(self) -> SpecNode:
        return self.action_tree.root

    @property
    def hole_spec(self) -> tuple[str, ...]:
        """Labels of the leaves that take donor tokens, in preorder."""
        out = []

        def walk(node: SpecNode, parent_action: Optional[str]):
            if node.action == INS and parent_action not in (None, INS):
                return  # absorbed by the updated leaf above
            kids = [c for c in node.children if c.action != INS]
            if node.action == UPD and not kids:
                out.append(node.label)
            elif node.action == INS and not node.children and node.label not in FIXED_LEAVES:
                out.append(node.label)
            for c in node.children:
                walk(c, node.action)

        walk(self.root, None)
        return tuple(out)

    def text(self) -> str:
        return self.action_tree.serialize()


def _spec(node: RichNode) -> SpecNode:
    return SpecNode(node.shape, node.shown_action, children=tuple(_spec(c) for c in node.children))


def load_catalog(path) -> list[FixPattern]:
    """Read patterns separated by blank lines or ``# cluster <id> ...`` headers.

    Both bare ``ACTION Type`` lines and full Rich Edit Script lines are
    accepted, so hand-written and mined catalogs interoperate.
    """
    text = Path(path).read_text(encoding="utf-8")
    blocks: list[tuple[Optional[int], list[str]]] = []
    cur: list[str] = []
    cid: Optional[int] = None

    def flush():
        nonlocal cur
        if any(l.strip() for l in cur):
            blocks.append((cid, cur))
        cur = []

    for line in text.splitlines():
        if line.startswith("# cluster"):
            flush()
            fields = line.split()
            cid = int(fields[2]) if len(fields) > 2 and fields[2].isdigit() else None
        elif not line.strip():
            flush()
        elif not line.startswith("#"):
            cur.append(line)
    flush()
    patterns = []
    for n, (cid, lines) in enumerate(blocks, start=1):
        roots = parse_nodes("\n".join(lines), lenient=True)
        tree = SpecializedTree("Action", tuple(_spec(r) for r in roots))
        patterns.append(FixPattern(cid if cid is not None else n, tree))
    return patterns


def patterns_from_clusters(action_clusters, scripts) -> list[FixPattern]:
    """One pattern per Action cluster, taken from its smallest member."""
    return [
        FixPattern(c.cluster_id, project(scripts[c.members[0]], "Action"), c.group_key)
        for c in action_clusters
    ]


# -- matching ---------------------------------------------------------------


def statements_at(tree: AstTree, loc: SuspiciousLocation, kinds: NodeKindTable = DEFAULT_KINDS) -> list[AstNode]:
    """Statement-level nodes starting on the location's first line, innermost first."""
    lo, hi = loc.line_range
    if hi > tree.line_count:
        raise RepairError(f"{loc.path}: lines {loc.start_line}-{loc.end_line} out of range")
    roots = kinds.predefined_roots - {"Block", "TypeDeclaration"}
    found = []
    for node in tree.nodes:
        if node.label not in roots:
            continue
        s, e = tree.line_span(node)
        if s == lo and e >= hi:
            found.append(node)
    return found[::-1]


def _embed(p: SpecNode, a: AstNode) -> list[list[tuple[SpecNode, AstNode]]]:
    """All order-preserving embeddings of the pattern's non-inserted part at ``a``."""
    if p.label != a.label:
        return []
    kids = [c for c in p.children if c.action != INS]
    if len(kids) < len(p.children) and a.children:
        # insertions below an interior context node are not instantiated
        return []
    results = []

    def place(i, start, acc):
        if i == len(kids):
            results.append(acc)
            return
        for j in range(start, len(a.children)):
            for sub in _embed(kids[i], a.children[j]):
                place(i + 1, j + 1, acc + sub)

    place(0, 0, [(p, a)])
    return results


def match_patterns(
    loc: SuspiciousLocation, patterns: Sequence[FixPattern], tree: AstTree, kinds: NodeKindTable = DEFAULT_KINDS
) -> list[FixPattern]:
    """Patterns applicable at the location, in catalog order."""
    stmts = statements_at(tree, loc, kinds)
    out = []
    for pat in patterns:
        if pat.root.action == INS and len(pat.action_tree.roots) == 1:
            if stmts and _printable(pat.root):
                out.append(pat)
        elif len(pat.action_tree.roots) == 1 and any(_embed(pat.root, s) for s in stmts):
            out.append(pat)
    return out


# -- donors -----------------------------------------------------------------


@dataclass(frozen=True)
class Hole:
    kind: str  # method, variable, operator, boolean, literal, type, token
    label: str
    original: str = ""
    node: Optional[AstNode] = None
    arity: int = -1
    null_sibling: bool = False


@dataclass
class Instantiation:
    """One way to apply a pattern at a statement."""

    statement: AstNode
    mode: str  # replace, delete, insert
    holes: list[Hole] = field(default_factory=list)
    template: Optional[SpecNode] = None
    deleted: list[AstNode] = field(default_factory=list)


@dataclass(frozen=True)
class DonorSet:
    instantiation: int
    tokens: tuple[str, ...]


def _bfs(tree: AstTree) -> list[AstNode]:
    return list(tree.root.bfs())


def _enclosing(node: AstNode, label: str) -> Optional[AstNode]:
    for anc in node.ancestors():
        if anc.label == label:
            return anc
    return None


def _method_info(decl: AstNode, tree: AstTree) -> tuple[str, int, str]:
    name = next((c.token for c in decl.children if c.role == "name"), "")
    arity = sum(1 for c in decl.children if c.label == "SingleVariableDeclaration")
    rtype = next((tree.text(c) for c in decl.children if c.role == "type"), "")
    return name, arity, rtype


def _call_arity(call: AstNode) -> int:
    names = [i for i, c in enumerate(call.children) if c.role == "name"]
    return len(call.children) - names[0] - 1 if names else 0


def _leaf_hole(node: AstNode) -> Hole:
    parent = node.parent
    if node.label == "SimpleName":
        if parent is not None and parent.label == "MethodInvocation" and node.role == "name":
            return Hole("method", node.label, node.token, node, _call_arity(parent))
        return Hole("variable", node.label, node.token, node)
    if node.label == "Operator":
        null = parent is not None and any(c.label == "NullLiteral" for c in parent.children)
        return Hole("operator", node.label, node.token, node, null_sibling=null)
    if node.label == "BooleanLiteral":
        return Hole("boolean", node.label, node.token, node)
    if node.label in LITERALS:
        return Hole("literal", node.label, node.token, node)
    if node.label in TYPES:
        return Hole("type", node.label, node.token, node)
    if node.is_leaf:
        return Hole("token", node.label, node.token, node)
    raise Unsupported(f"cannot update non-leaf {node.label}")


def _printable(p: SpecNode) -> bool:
    try:
        _template_holes(p)
        _render(p, iter(itertools.repeat("x")))
    except Unsupported:
        return False
    return True


def _template_holes(p: SpecNode, parent: Optional[SpecNode] = None, index: int = 0) -> list[Hole]:
    if p.children:
        if p.label not in _PRINTERS:
            raise Unsupported(f"no printer for {p.label}")
        out = []
        for i, c in enumerate(p.children):
            out.extend(_template_holes(c, p, i))
        return out
    if p.label in FIXED_LEAVES:
        return []
    if p.label == "SimpleName":
        if parent is not None and parent.label == "MethodInvocation" and (len(parent.children) == 1 or index == 1):
            return [Hole("method", p.label, arity=max(0, len(parent.children) - 2))]
        return [Hole("variable", p.label)]
    if p.label == "Operator":
        nulls = parent is not None and any(c.label == "NullLiteral" for c in parent.children)
        return [Hole("operator", p.label, null_sibling=nulls)]
    if p.label == "BooleanLiteral":
        return [Hole("boolean", p.label)]
    if p.label in LITERALS:
        return [Hole("literal", p.label)]
    if p.label in TYPES:
        return [Hole("type", p.label)]
    raise Unsupported(f"no donor kind for inserted {p.label}")


def _join(xs, sep=", "):
    return sep.join(xs)


_PRINTERS = {
    "IfStatement": lambda r: f"if ({r[0]}) {r[1]}" + (f" else {r[2]}" if len(r) > 2 else ""),
    "InfixExpression": lambda r: " ".join(r),
    "PrefixExpression": lambda r: "".join(r),
    "PostfixExpression": lambda r: "".join(r),
    "ParenthesizedExpression": lambda r: f"({r[0]})",
    "ReturnStatement": lambda r: f"return {r[0]};" if r else "return;",
    "ThrowStatement": lambda r: f"throw {r[0]};",
    "ExpressionStatement": lambda r: f"{r[0]};",
    "Block": lambda r: "{ " + " ".join(r) + " }",
    "MethodInvocation": lambda r: f"{r[0]}()" if len(r) == 1 else f"{r[0]}.{r[1]}({_join(r[2:])})",
    "ClassInstanceCreation": lambda r: f"new {r[0]}({_join(r[1:])})",
    "Assignment": lambda r: " ".join(r),
    "VariableDeclarationStatement": lambda r: f"{r[0]} {_join(r[1:])};",
    "VariableDeclarationFragment": lambda r: f"{r[0]} = {r[1]}" if len(r) > 1 else r[0],
    "FieldAccess": lambda r: f"{r[0]}.{r[1]}",
    "ArrayAccess": lambda r: f"{r[0]}[{r[1]}]",
    "CastExpression": lambda r: f"({r[0]}) {r[1]}",
    "InstanceofExpression": lambda r: f"{r[0]} instanceof {r[1]}",
    "ConditionalExpression": lambda r: f"{r[0]} ? {r[1]} : {r[2]}",
}
_LEAF_ONLY = {"BreakStatement": "break;", "ContinueStatement": "continue;", "ReturnStatement": "return;"}


def _render(p: SpecNode, tokens) -> str:
    if not p.children:
        if p.label in FIXED_LEAVES:
            return FIXED_LEAVES[p.label]
        if p.label in _LEAF_ONLY:
            return _LEAF_ONLY[p.label]
        return next(tokens)
    try:
        return _PRINTERS[p.label]([_render(c, tokens) for c in p.children])
    except (KeyError, IndexError) as exc:
        raise Unsupported(f"cannot print {p.label} with {len(p.children)} children") from exc


def instantiations(stmts: Sequence[AstNode], pattern: FixPattern) -> list[Instantiation]:
    root = pattern.root
    if root.action == INS:
        if not stmts or len(pattern.action_tree.roots) != 1 or not _printable(root):
            return []
        return [Instantiation(stmts[0], "insert", _template_holes(root), root)]
    out = []
    for stmt in stmts:
        for binding in _embed(root, stmt):
            try:
                inst = Instantiation(stmt, "replace")
                for p, a in binding:
                    if p.action == MOV:
                        raise Unsupported("moves are not instantiated")
                    if p.action == DEL:
                        if a is not stmt and a.label not in DEFAULT_KINDS.statement_kinds:
                            raise Unsupported(f"cannot delete {a.label}")
                        inst.deleted.append(a)
                    elif p.action == UPD and not any(c.action != INS for c in p.children):
                        inst.holes.append(_leaf_hole(a))
                if inst.deleted:
                    if inst.holes:
                        raise Unsupported("mixed delete and update")
                    inst.mode = "delete"
                elif not inst.holes:
                    continue
                out.append(inst)
            except Unsupported as exc:
                logger.debug("pattern %s at %s: %s", pattern.cluster_id, stmt.label, exc)
    return out


def _scope_names(tree: AstTree, stmt: AstNode) -> list[str]:
    method = _enclosing(stmt, "MethodDeclaration")
    owner = _enclosing(stmt, "TypeDeclaration")
    names = []
    for node in _bfs(tree):
        if node.label not in ("SingleVariableDeclaration", "VariableDeclarationFragment"):
            continue
        decl = node.parent if node.label == "VariableDeclarationFragment" else node
        in_method = method is not None and any(a is method for a in node.ancestors())
        is_field = decl is not None and decl.label == "FieldDeclaration" and decl.parent is owner
        if in_method or is_field:
            name = next((c.token for c in node.children if c.role == "name"), None)
            if name and name not in names:
                names.append(name)
    return names


def donors_for(hole: Hole, tree: AstTree, stmt: AstNode) -> list[str]:
    """Tokens for one hole, in breadth-first order over the file."""
    if hole.kind == "method":
        decls = [_method_info(n, tree) for n in _bfs(tree) if n.label == "MethodDeclaration"]
        callee = [d for d in decls if d[0] == hole.original and d[1] == hole.arity]
        rtype = callee[0][2] if callee else None
        out = []
        for name, arity, rt in decls:
            if name == hole.original or name in out or not name[:1].islower():
                continue
            if (hole.arity < 0 or arity == hole.arity) and (rtype is None or rt == rtype):
                out.append(name)
        return out
    if hole.kind == "variable":
        return [n for n in _scope_names(tree, stmt) if n != hole.original]
    if hole.kind == "operator":
        if hole.null_sibling:
            alphabet = ("==", "!=")
        elif hole.original:
            alphabet = next((c for c in OPERATOR_CLASSES if hole.original in c), ())
        else:
            alphabet = RELATIONAL
        return [op for op in alphabet if op != hole.original]
    if hole.kind == "boolean":
        return [b for b in ("true", "false") if b != hole.original]
    out = []
    for node in _bfs(tree):
        if node.label == hole.label and node.is_leaf and node.token != hole.original and node.token not in out:
            out.append(node.token)
    return out


def find_donors(loc: SuspiciousLocation, pattern: FixPattern, file_ast: AstTree) -> list[DonorSet]:
    """Donor token tuples for every instantiation of the pattern, in try order."""
    stmts = statements_at(file_ast, loc)
    out = []
    for k, inst in enumerate(instantiations(stmts, pattern)):
        if inst.mode == "delete":
            out.append(DonorSet(k, ()))
            continue
        per_hole = [donors_for(h, file_ast, inst.statement) for h in inst.holes]
        for combo in itertools.product(*per_hole):
            out.append(DonorSet(k, tuple(combo)))
    return out


# -- candidates -------------------------------------------------------------


@dataclass(frozen=True)
class CandidatePatch:
    location: SuspiciousLocation
    pattern_id: int
    donors: tuple[str, ...]
    source: str
    order: int = 0


def _line_start(text: str, offset: int) -> int:
    return text.rfind("\n", 0, offset) + 1


def _delete_span(source: str, node: AstNode) -> tuple[int, int]:
    s, e = node.span
    ls = _line_start(source, s)
    le = source.find("\n", e)
    le = len(source) if le < 0 else le + 1
    # remove whole lines when the statement is alone on them
    if not source[ls:s].strip() and not source[e:le].strip():
        return ls, le
    return s, e


def generate_candidates(
    loc: SuspiciousLocation,
    pattern: FixPattern,
    donors: Iterable[DonorSet],
    source: str,
    tree: AstTree,
    grammar: str = "java",
) -> list[CandidatePatch]:
    """Patched sources in donor order; no-ops and unparseable results are dropped."""
    insts = instantiations(statements_at(tree, loc), pattern)
    out = []
    seen = set()
    for d in donors:
        inst = insts[d.instantiation]
        if inst.mode == "insert":
            s = inst.statement.span[0]
            ls = _line_start(source, s)
            indent = source[ls:s] if not source[ls:s].strip() else ""
            text = _render(inst.template, iter(d.tokens))
            patched = source[:ls] + indent + text + "\n" + source[ls:]
        else:
            if inst.mode == "delete":
                edits = [(*_delete_span(source, n), "") for n in inst.deleted]
            else:
                edits = [(h.node.span[0], h.node.span[1], tok) for h, tok in zip(inst.holes, d.tokens)]
            patched = source
            for s, e, tok in sorted(edits, reverse=True):
                patched = patched[:s] + tok + patched[e:]
        if patched == source or patched in seen:
            continue
        try:
            _ast.parse(patched, grammar)
        except _ast.ParseError:
            logger.debug("candidate %s does not parse", d.tokens)
            continue
        seen.add(patched)
        out.append(CandidatePatch(loc, pattern.cluster_id, d.tokens, patched, len(out)))
    return out


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Attempt:
    order: int
    candidate: CandidatePatch
    passed: bool
    detail: str = ""

    def line(self) -> str:
        loc = self.candidate.location
        verdict = "PASS" if self.passed else "FAIL"
        donors = ",".join(self.candidate.donors) or "-"
        return f"{self.order}\t{loc.path}:{loc.start_line}\tpattern={self.candidate.pattern_id}\tdonors={donors}\t{verdict}\t{self.detail}"


@dataclass
class RepairResult:
    plausible: Optional[CandidatePatch]
    attempts: list[Attempt]
    original: dict[str, str] = field(default_factory=dict)

    def diff(self) -> str:
        if self.plausible is None:
            return ""
        path = self.plausible.location.path
        return unified_diff(path, self.original[path], self.plausible.source)


def unified_diff(path: str, before: str, after: str) -> str:
    return "".join(
        difflib.unified_diff(
            before.splitlines(keepends=True),
            after.splitlines(keepends=True),
            fromfile=f"a/{path}",
            tofile=f"b/{path}",
        )
    )


def run_tests(test_cmd: str, workdir, timeout: float) -> tuple[bool, str]:
    try:
        proc = subprocess.run(
            shlex.split(test_cmd), cwd=workdir, capture_output=True, text=True, timeout=timeout
        )
    except subprocess.TimeoutExpired:
        return False, "timeout"
    except OSError as exc:
        return False, f"cannot run: {exc}"
    return proc.returncode == 0, f"exit={proc.returncode}"


def validate(
    candidates: Sequence[CandidatePatch],
    test_cmd: str,
    workdir,
    timeout: float = 60.0,
) -> RepairResult:
    """Try candidates in order in a scratch copy of ``workdir``; stop at the first pass."""
    attempts: list[Attempt] = []
    with tempfile.TemporaryDirectory(prefix="patchmine-") as tmp:
        scratch = Path(tmp) / "work"
        shutil.copytree(workdir, scratch)
        originals = {}
        for n, cand in enumerate(candidates):
            target = scratch / cand.location.path
            originals.setdefault(cand.location.path, target.read_text(encoding="utf-8"))
            target.write_text(cand.source, encoding="utf-8")
            passed, detail = run_tests(test_cmd, scratch, timeout)
            target.write_text(originals[cand.location.path], encoding="utf-8")
            attempts.append(Attempt(n, cand, passed, detail))
            logger.info("candidate %d %s", n, "passed" if passed else f"failed ({detail})")
            if passed:
                return RepairResult(cand, attempts)
    return RepairResult(None, attempts)


def repair(
    project_dir,
    locations: Sequence[SuspiciousLocation],
    patterns: Sequence[FixPattern],
    test_cmd: str,
    timeout: float = 60.0,
    grammar: str = "java",
) -> RepairResult:
    """Generate candidates across ranked locations and validate them in order."""
    project_dir = Path(project_dir)
    candidates: list[CandidatePatch] = []
    originals: dict[str, str] = {}
    for loc in locations:
        source = originals.setdefault(loc.path, (project_dir / loc.path).read_text(encoding="utf-8"))
        tree = _ast.parse(source, grammar)
        for pat in match_patterns(loc, patterns, tree):
            donors = find_donors(loc, pat, tree)
            for cand in generate_candidates(loc, pat, donors, source, tree, grammar):
                candidates.append(
                    CandidatePatch(cand.location, cand.pattern_id, cand.donors, cand.source, len(candidates))
                )
    logger.info("%d candidate patches", len(candidates))
    result = validate(candidates, test_cmd, project_dir, timeout) if candidates else RepairResult(None, [])
    result.original = originals
    return result
