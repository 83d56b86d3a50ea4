"""
Repairing seeded bugs with a fix-pattern catalog
================================================

Five tiny Java programs each carry one wrong statement. A catalog of
hand-written patterns drives candidate generation; each candidate is
checked with a small Java-subset interpreter that runs the program's test.

Run: python demos/repair_demo.py
"""

import sys
import tempfile
from pathlib import Path

# toy programs and the interpreter live with the tests
sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from toys import HAND_CATALOG, TOYS  # noqa: E402

from patchmine.repair import load_catalog, read_locations, repair  # noqa: E402

work = Path(tempfile.mkdtemp(prefix="patchmine-repair-"))
(work / "catalog.txt").write_text(HAND_CATALOG, encoding="utf-8")
patterns = load_catalog(work / "catalog.txt")
print(f"{len(patterns)} patterns in the catalog")

for toy in TOYS:
    project = toy.write(work / toy.name)
    result = repair(project, read_locations(project / "locations.tsv"), patterns, toy.test_cmd)
    print(f"\n== {toy.name}: {len(result.attempts)} candidate(s) tried")
    for attempt in result.attempts:
        print("  ", attempt.line())
    if result.plausible is None:
        print("   no plausible patch")
        continue
    print(result.diff())
    print("   equals the known fix:", result.plausible.source == toy.fixed)
