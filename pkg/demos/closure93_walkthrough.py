"""
From a one-line patch to its fix pattern
=========================================

Walks the Closure-93 fix (``indexOf`` -> ``lastIndexOf``) through every
stage: AST diff, Rich Edit Script, and the three fold views.

Run: python demos/closure93_walkthrough.py
"""

from patchmine import ast
from patchmine.corpus import make_file_change
from patchmine.diff import actions_per_hunk, edit_script
from patchmine.mine import jaro_winkler_distance, tree_distance
from patchmine.res import build_res, project, serialize

BEFORE = """class ProcessClosurePrimitives {
  private void replaceGoogDefines(Node n) {
    String namespace = n.getString();
    int indexOfDot = namespace.indexOf('.');
    if (indexOfDot == -1) {
      return;
    }
  }
}
"""
AFTER = BEFORE.replace("namespace.indexOf('.')", "namespace.lastIndexOf('.')")

# the line diff finds one hunk
fc = make_file_change("closure-93", "ProcessClosurePrimitives.java", BEFORE, AFTER)
print(f"{len(fc.hunks)} hunk(s)")

# the AST diff reduces it to a single update of a method name
before, after = ast.parse(BEFORE), ast.parse(AFTER)
script = edit_script(before, after)
for action in script:
    print(action)

# the Rich Edit Script keeps the statement around the change
(hunk,) = fc.hunks
res = build_res(before, after, script, hunk, actions_per_hunk(script, fc).groups[hunk.hunk_id])
print("\nRich Edit Script:")
print(serialize(res))

# each fold forgets a little more: tokens, then actions
for fold in ("Shape", "Action", "Token"):
    print(f"{fold} view:")
    print(project(res, fold).serialize())

# Token-fold comparison uses Jaro-Winkler on the flattened token string
tokens = project(res, "Token").tokens()
print("tokens:", tokens)
print("d(MARTHA, MARHTA) =", round(jaro_winkler_distance("MARTHA", "MARHTA"), 4))
print("distance to itself:", tree_distance(project(res, "Token"), project(res, "Token")))
