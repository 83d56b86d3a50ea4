"""Shared fixtures: random trees, hand-written Java edits, planted corpora."""

from __future__ import annotations

import copy
import random

from patchmine.ast import build_tree
from patchmine.corpus import HunkId
from patchmine.res import CTX, RichEditScript, RichNode

# -- Closure-93 --------------------------------------------------------------

CLOSURE_BEFORE = """class ProcessClosurePrimitives {
  private void replaceGoogDefines(Node n) {
    String namespace = n.getString();
    int indexOfDot = namespace.indexOf('.');
    if (indexOfDot == -1) {
      return;
    }
  }
}
"""
CLOSURE_AFTER = CLOSURE_BEFORE.replace("namespace.indexOf('.')", "namespace.lastIndexOf('.')")

CLOSURE_RES = (
    "UPD VariableDeclarationStatement@@int indexOfDot = namespace.indexOf('.');"
    "@TO@int indexOfDot = namespace.lastIndexOf('.');@AT@\n"
    "---UPD VariableDeclarationFragment@@indexOfDot = namespace.indexOf('.')"
    "@TO@indexOfDot = namespace.lastIndexOf('.')@AT@\n"
    "------UPD MethodInvocation@@namespace.indexOf('.')@TO@namespace.lastIndexOf('.')@AT@\n"
    "---------UPD SimpleName@@indexOf@TO@lastIndexOf@AT@\n"
)
CLOSURE_SHAPE = (
    "VariableDeclarationStatement\n"
    "---VariableDeclarationFragment\n"
    "------MethodInvocation\n"
    "---------SimpleName\n"
)


def wrap(body: str, fields: str = "") -> str:
    return "class A {\n" + fields + "  int f(String s, int x) {\n" + body + "  }\n}\n"


# twenty before/after pairs covering every action kind
JAVA_FIXTURES = [
    (wrap("    return x;\n"), wrap("    return x + 1;\n")),
    (wrap("    return x;\n"), wrap("    return -x;\n")),
    (wrap("    if (x < 0) return 0;\n    return x;\n"), wrap("    if (x <= 0) return 0;\n    return x;\n")),
    (wrap("    return s.length();\n"), wrap("    if (s == null) return 0;\n    return s.length();\n")),
    (wrap("    int y = x;\n    return y;\n"), wrap("    return x;\n")),
    (wrap("    int a = 1;\n    int b = 2;\n    return a + b;\n"), wrap("    int b = 2;\n    int a = 1;\n    return a + b;\n")),
    (wrap("    foo(x);\n    bar(x);\n"), wrap("    bar(x);\n    foo(x);\n")),
    (wrap("    foo(x, s);\n"), wrap("    foo(s, x);\n")),
    (wrap("    return x;\n"), wrap("    try {\n      return x;\n    } finally {\n      done();\n    }\n")),
    (wrap("    while (x > 0) {\n      x--;\n    }\n    return x;\n"), wrap("    while (x > 0) {\n      x -= 2;\n    }\n    return x;\n")),
    (wrap("    return x;\n", "  int k = 1;\n"), wrap("    return x;\n", "  long k = 1;\n")),
    (wrap("    String t = \"a\";\n    return x;\n"), wrap("    String t = \"b\";\n    return x;\n")),
    (wrap("    for (int i = 0; i < x; i++) {\n      g(i);\n    }\n    return 0;\n"),
     wrap("    for (int i = 1; i <= x; i++) {\n      g(i);\n    }\n    return 0;\n")),
    (wrap("    if (x > 0) {\n      a();\n    } else {\n      b();\n    }\n    return 0;\n"),
     wrap("    if (x > 0) {\n      b();\n    } else {\n      a();\n    }\n    return 0;\n")),
    (wrap("    return x > 0 ? 1 : 2;\n"), wrap("    return x >= 0 ? 2 : 1;\n")),
    (wrap("    Object o = new Object();\n    return 0;\n"), wrap("    Object o = new StringBuilder(s);\n    return 0;\n")),
    (wrap("    a();\n    b();\n    c();\n    return 0;\n"), wrap("    c();\n    return 0;\n")),
    (wrap("    return 0;\n"), wrap("    a();\n    b();\n    c();\n    return 0;\n")),
    (wrap("    synchronized (s) {\n      x++;\n    }\n    return x;\n"), wrap("    x++;\n    return x;\n")),
    (wrap("    throw new IllegalStateException(s);\n"), wrap("    throw new IllegalArgumentException(\"bad: \" + s);\n")),
]

# -- random labelled trees ----------------------------------------------------

LABELS = "ABCDE"
TOKENS = ["", "x", "y", "z"]


def rand_spec(rng: random.Random, depth: int = 0):
    n = 0 if depth > 4 else rng.randint(0, 3 if depth < 3 else 1)
    return (rng.choice(LABELS), rng.choice(TOKENS), [rand_spec(rng, depth + 1) for _ in range(n)])


def mutate(spec, rng: random.Random, steps: int):
    """Apply random relabel/retoken/insert/delete/move steps to a tree spec."""

    def tolist(s):
        return [s[0], s[1], [tolist(c) for c in s[2]]]

    def totup(s):
        return (s[0], s[1], [totup(c) for c in s[2]])

    def contains(a, b):
        return a is b or any(contains(c, b) for c in a[2])

    t = tolist(copy.deepcopy(spec))
    for _ in range(steps):
        nodes = []

        def walk(x, p):
            nodes.append((x, p))
            for c in x[2]:
                walk(c, x)

        walk(t, None)
        x, p = rng.choice(nodes)
        op = rng.randint(0, 4)
        if op == 0:
            x[1] = rng.choice(TOKENS)
        elif op == 1 and p is not None:
            p[2].remove(x)
        elif op == 2:
            x[2].insert(rng.randint(0, len(x[2])), tolist(rand_spec(rng, 4)))
        elif op == 3 and p is not None:
            p[2].remove(x)
            y, _ = rng.choice(nodes)
            if contains(x, y):
                p[2].append(x)
            else:
                y[2].insert(rng.randint(0, len(y[2])), x)
        elif op == 4:
            x[0] = rng.choice(LABELS)
    return totup(t)


def random_tree_pair(rng: random.Random):
    a = rand_spec(rng)
    b = mutate(a, rng, rng.randint(0, 5))
    return build_tree(("Root", "", [a])), build_tree(("Root", "", [b]))


# -- random Rich Edit Scripts -------------------------------------------------

TOKEN_CHARS = "abcXYZ019 ().;=+<>\"'{}[],-_!"
SHAPES = ["IfStatement", "ReturnStatement", "MethodInvocation", "SimpleName", "Operator", "Block"]


def rand_token(rng: random.Random) -> str:
    return "".join(rng.choice(TOKEN_CHARS) for _ in range(rng.randint(0, 8))).strip()


def rand_rich(rng: random.Random, depth: int = 0) -> RichNode:
    if depth < 3 and rng.random() < 0.6:
        kids = [rand_rich(rng, depth + 1) for _ in range(rng.randint(1, 3))]
        return RichNode(rng.choice(SHAPES), CTX, rand_token(rng), rand_token(rng), kids)
    kind = rng.choice(["UPD", "INS", "DEL", "MOV"])
    shape = rng.choice(SHAPES)
    tok = rand_token(rng)
    if kind == "UPD":
        return RichNode(shape, kind, tok, rand_token(rng))
    if kind == "DEL":
        return RichNode(shape, kind, tok, "")
    target = (rng.choice(SHAPES), rand_token(rng))
    if kind == "INS":
        return RichNode(shape, kind, "", tok, target=target)
    return RichNode(shape, kind, tok, tok, target=target)


def random_res(rng: random.Random, n: int = 0) -> RichEditScript:
    subtrees = [rand_rich(rng) for _ in range(rng.randint(1, 3))]
    return RichEditScript(HunkId(f"p{n}", "A.java", 0), subtrees)


# -- planted mining corpus ------------------------------------------------------

ROOTS = [
    "IfStatement", "ReturnStatement", "ExpressionStatement", "VariableDeclarationStatement",
    "ForStatement", "WhileStatement", "ThrowStatement", "TryStatement", "FieldDeclaration",
    "SwitchStatement",
]


def _planted_res(hid: HunkId, root: str, depth: int, shape: int, action: str, token: str) -> RichEditScript:
    leaf_label = "SimpleName" if shape == 0 else "NumberLiteral"
    before = token if action != "INS" else ""
    after = "" if action in ("UPD", "DEL") else token
    target = ("Block", "{}") if action == "INS" else None
    node = RichNode(leaf_label, action, before, after, target=target)
    for level in range(depth - 1, 0, -1):
        label = root if level == 1 else f"Level{level}"
        node = RichNode(label, CTX, f"ctx{level}", f"ctx{level}'", [node])
    return RichEditScript(hid, [node])


def planted_corpus(groups: int = 20, per_group: int = 10):
    """``groups`` x ``per_group`` scripts with known Shape/Action/Token identities.

    Each group has a distinct (root, depth) key. Odd groups hold two shape
    variants (7 + 3); within a shape variant the first members share action
    UPD and the rest DEL; tokens repeat in pairs, and UPD/DEL members reuse
    the same token strings so the Token fold alone cannot tell them apart.
    Returns (scripts, truth) where truth maps fold -> list of member sets.
    """
    scripts = []
    labels = {}
    n = 0
    for g in range(groups):
        root = ROOTS[g % len(ROOTS)]
        depth = 2 + g // len(ROOTS)
        for k in range(per_group):
            shape = 0 if (g % 2 == 0 or k < 7) else 1
            action = "UPD" if k % 4 < 2 else "DEL"
            token = f"t{k // 4}" if k < 8 else f"u{g}_{k}"
            hid = HunkId(f"patch{n:04d}", "src/A.java", 0)
            n += 1
            scripts.append(_planted_res(hid, root, depth, shape, action, token))
            labels[hid] = (g, shape, action, token)
    truth = {}
    for fold, width in (("Shape", 2), ("Action", 3), ("Token", 4)):
        classes = {}
        for hid, lab in labels.items():
            classes.setdefault(lab[:width], set()).add(hid)
        truth[fold] = sorted((c for c in classes.values() if len(c) >= 2), key=lambda c: min(c))
    return scripts, truth
