import sys

import pytest

from helpers import CLOSURE_BEFORE
from toys import BOUNDS, HAND_CATALOG, TOYS, Toy
from patchmine import ast
from patchmine.repair import (
    CandidatePatch,
    RepairError,
    SuspiciousLocation,
    find_donors,
    generate_candidates,
    load_catalog,
    match_patterns,
    read_locations,
    repair,
    validate,
)


def catalog(tmp_path, text):
    path = tmp_path / "catalog.txt"
    path.write_text(text, encoding="utf-8")
    return load_catalog(path)


@pytest.fixture
def hand(tmp_path):
    return {p.cluster_id: p for p in catalog(tmp_path, HAND_CATALOG)}


def test_catalog_holes(hand):
    assert sorted(hand) == [1, 2, 3, 4, 5]
    assert hand[5].hole_spec == ("SimpleName",)
    assert hand[3].hole_spec == ("SimpleName",)  # the inserted name is absorbed
    assert hand[4].hole_spec == ("Operator",)
    assert hand[1].hole_spec == ("SimpleName", "Operator")


def test_match_return_statement(hand):
    tree = ast.parse(BOUNDS)
    ret = SuspiciousLocation("Bounds.java", 11, 11)
    assert [p.cluster_id for p in match_patterns(ret, [hand[5], hand[4]], tree)] == [5]
    assert match_patterns(ret, [], tree) == []


def test_no_match_on_assignment(hand):
    tree = ast.parse(TOYS[0].buggy)
    assignment = SuspiciousLocation("Account.java", 5, 5)
    assert match_patterns(assignment, [hand[5]], tree) == []


def test_method_donors_same_arity(tmp_path):
    src = """class M {
    static int a(int x) { return x; }
    static int b(int x) { return x; }
    static int c(int x) { return x; }
    static int d(int x, int y) { return x; }
    static int run(int v, int w) {
        return a(v);
    }
}
"""
    (fp,) = catalog(tmp_path, "UPD ReturnStatement\n--- UPD MethodInvocation\n------ UPD SimpleName\n")
    donors = find_donors(SuspiciousLocation("M.java", 7, 7), fp, ast.parse(src))
    by_inst = {}
    for d in donors:
        by_inst.setdefault(d.instantiation, []).append(d.tokens)
    # one embedding renames the callee, the other the argument
    assert sorted(by_inst.values()) == [[("b",), ("c",)], [("w",)]]


def test_operator_alphabet(hand):
    src = "class P {\n    static boolean f(int a, String s) {\n        if (a < 18) { return true; }\n        if (s == null) { return true; }\n        return false;\n    }\n}\n"
    tree = ast.parse(src)
    rel = find_donors(SuspiciousLocation("P.java", 3, 3), hand[4], tree)
    assert {d.tokens[0] for d in rel} == {"<=", ">", ">=", "==", "!="}
    null = find_donors(SuspiciousLocation("P.java", 4, 4), hand[4], tree)
    assert [d.tokens for d in null] == [("!=",)]


def test_closure_candidate(tmp_path):
    src = CLOSURE_BEFORE.replace("    int indexOfDot", "    int lastIndexOf(char c) { return 0; }\n    int indexOfDot", 0)
    src = src.replace("class ProcessClosurePrimitives {\n", "class ProcessClosurePrimitives {\n  int lastIndexOf(char c) { return 0; }\n")
    (fp,) = catalog(tmp_path, "UPD VariableDeclarationStatement\n--- UPD VariableDeclarationFragment\n"
                              "------ UPD MethodInvocation\n--------- UPD SimpleName\n")
    tree = ast.parse(src)
    loc = SuspiciousLocation("P.java", 5, 5)
    cands = generate_candidates(loc, fp, find_donors(loc, fp, tree), src, tree)
    assert any("namespace.lastIndexOf('.')" in c.source for c in cands)
    assert all(c.source != src for c in cands)


def test_read_locations(tmp_path):
    good = tmp_path / "ok.tsv"
    good.write_text("B.java\t3\t3\t2\n# comment\nA.java\t1\t2\t1\n", encoding="utf-8")
    assert [l.path for l in read_locations(good)] == ["A.java", "B.java"]
    for row in ("A.java\t0\t1\t1", "A.java\t5\t2\t1", "A.java\tx\t1\t1", "A.java\t1\t1"):
        bad = tmp_path / "bad.tsv"
        bad.write_text(row + "\n", encoding="utf-8")
        with pytest.raises(RepairError):
            read_locations(bad)


def _cands(source_list):
    loc = SuspiciousLocation("F.txt", 1, 1)
    return [CandidatePatch(loc, 1, (str(k),), s, k) for k, s in enumerate(source_list)]


CHECK = f"{sys.executable} -c \"import sys; sys.exit(0 if open('F.txt').read() == 'good' else 1)\""


def test_validate_edge_cases(tmp_path):
    (tmp_path / "F.txt").write_text("bad", encoding="utf-8")
    empty = validate([], CHECK, tmp_path)
    assert empty.plausible is None and empty.attempts == []
    none = validate(_cands(["x", "y"]), CHECK, tmp_path)
    assert none.plausible is None and len(none.attempts) == 2
    first = validate(_cands(["x", "good", "good"]), CHECK, tmp_path)
    assert first.plausible.order == 1 and len(first.attempts) == 2
    assert (tmp_path / "F.txt").read_text() == "bad"


def test_validate_timeout_is_failure(tmp_path):
    (tmp_path / "F.txt").write_text("bad", encoding="utf-8")
    slow = f"{sys.executable} -c \"import time; time.sleep(5)\""
    result = validate(_cands(["good"]), slow, tmp_path, timeout=0.5)
    assert result.plausible is None and result.attempts[0].detail == "timeout"


@pytest.mark.parametrize("toy", TOYS, ids=lambda t: t.name)
def test_toy_repair(tmp_path, toy: Toy, hand):
    project = toy.write(tmp_path / toy.name)
    result = repair(project, read_locations(project / "locations.tsv"), list(hand.values()), toy.test_cmd)
    assert result.plausible is not None and result.plausible.source == toy.fixed
    changed = [l for l in result.diff().splitlines() if l[:1] in "+-" and l[:3] not in ("+++", "---")]
    assert 1 <= len(changed) <= 2
    assert (project / toy.path).read_text() == toy.buggy
    again = repair(project, read_locations(project / "locations.tsv"), list(hand.values()), toy.test_cmd)
    assert [a.line() for a in again.attempts] == [a.line() for a in result.attempts]
