import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import CLOSURE_AFTER, CLOSURE_BEFORE
from patchmine.corpus import (
    CorpusError,
    HunkId,
    changed_regions,
    hunk_counts,
    load_corpus,
    make_file_change,
    myers_diff,
    write_patch,
)


def lcs_length(a, b):
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) - 1, -1, -1):
        for j in range(len(b) - 1, -1, -1):
            table[i][j] = table[i + 1][j + 1] + 1 if a[i] == b[j] else max(table[i + 1][j], table[i][j + 1])
    return table[0][0]


@settings(max_examples=300, deadline=None)
@given(st.lists(st.sampled_from("abc"), max_size=12), st.lists(st.sampled_from("abc"), max_size=12))
def test_myers_is_minimal_and_consistent(a, b):
    ops = myers_diff(a, b)
    kept = [a[i] for op, i, _ in ops if op == "="]
    assert kept == [b[j] for op, _, j in ops if op == "="]
    assert len(kept) == lcs_length(a, b)
    # every line of a is either kept or deleted, every line of b kept or inserted, in order
    assert [i for op, i, _ in ops if op in "=-"] == list(range(len(a)))
    assert [j for op, _, j in ops if op in "=+"] == list(range(len(b)))


def test_single_changed_line_is_one_hunk():
    assert changed_regions("a\nb\nc\n", "a\nX\nc\n") == [((1, 2), (1, 2))]


def test_two_separated_regions_are_two_hunks():
    regions = changed_regions("a\nb\nc\nd\ne\n", "A\nb\nc\nd\nE\n")
    assert regions == [((0, 1), (0, 1)), ((4, 5), (4, 5))]


def test_pure_insertion_has_empty_before_range():
    assert changed_regions("a\nc\n", "a\nb\nc\n") == [((1, 1), (1, 2))]


def test_identical_texts_have_no_hunks():
    assert changed_regions("a\nb\n", "a\nb\n") == []


def test_closure_fix_is_one_hunk():
    fc = make_file_change("Closure-93", "src/P.java", CLOSURE_BEFORE, CLOSURE_AFTER)
    assert len(fc.hunks) == 1
    assert fc.hunks[0].before_range == (3, 4)
    assert str(fc.hunks[0].hunk_id) == "Closure-93/src/P.java#0"


def test_hunk_id_round_trip():
    hid = HunkId("p1", "src/a/B.java", 3)
    assert HunkId.parse(str(hid)) == hid
    with pytest.raises(ValueError):
        HunkId.parse("no-ordinal")


def test_empty_corpus(tmp_path):
    assert load_corpus(tmp_path) == []


def test_missing_root_is_fatal(tmp_path):
    with pytest.raises(CorpusError):
        load_corpus(tmp_path / "absent")


def test_minimal_patch(tmp_path):
    write_patch(tmp_path, "p1", {"Foo.src": ("x\n", "y\n")})
    records = load_corpus(tmp_path, include=("*.src",))
    assert len(records) == 1 and len(records[0].files) == 1


def test_doc_files_skipped_and_order_deterministic(tmp_path):
    write_patch(tmp_path, "p3", {"A.java": ("a\n", "b\n")})
    write_patch(tmp_path, "p1", {"A.java": ("a\n", "b\n"), "README.md": ("x\n", "y\n")})
    write_patch(tmp_path, "p2", {"src/B.java": ("a\nb\nc\n", "z\nb\ny\n")})
    records = load_corpus(tmp_path)
    assert [r.patch_id for r in records] == ["p1", "p2", "p3"]
    assert [f.path for f in records[0].files] == ["A.java"]
    assert hunk_counts(records) == {"p1": 1, "p2": 2, "p3": 1}


def test_test_files_excluded(tmp_path):
    write_patch(tmp_path, "p1", {"src/test/FooTest.java": ("a\n", "b\n"), "src/Foo.java": ("a\n", "b\n")})
    (record,) = load_corpus(tmp_path)
    assert [f.path for f in record.files] == ["src/Foo.java"]


def test_missing_counterpart_recorded(tmp_path):
    write_patch(tmp_path, "p1", {"A.java": ("a\n", "b\n")})
    (tmp_path / "p1" / "a" / "Only.java").write_text("x\n")
    (record,) = load_corpus(tmp_path)
    assert len(record.files) == 1
    assert record.errors == ("Only.java: missing after version",)


def test_random_hunks_cover_all_changes():
    rng = random.Random(5)
    for _ in range(200):
        a = [rng.choice("abcd") for _ in range(rng.randint(0, 15))]
        b = [rng.choice("abcd") for _ in range(rng.randint(0, 15))]
        regions = changed_regions("\n".join(a), "\n".join(b))
        # replacing each before range by its after range rebuilds b
        rebuilt, pos = [], 0
        for (b0, b1), (a0, a1) in regions:
            rebuilt += a[pos:b0] + b[a0:a1]
            pos = b1
        rebuilt += a[pos:]
        assert rebuilt == b
        # hunks are separated by at least one unchanged line
        assert all(r2[0][0] > r1[0][1] for r1, r2 in zip(regions, regions[1:]))
