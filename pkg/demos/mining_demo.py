"""
Mining fix patterns from a small synthetic corpus
=================================================

Writes a corpus of 12 patches to a temp dir, then runs the Shape ->
Action -> Token iteration and prints what each round found.

Run: python demos/mining_demo.py
"""

import tempfile
from pathlib import Path

from patchmine.corpus import hunk_counts, load_corpus, write_patch
from patchmine.mine import iterate, pattern_stats, stats_report
from patchmine.res import FOLDS, corpus_res

root = Path(tempfile.mkdtemp(prefix="patchmine-demo-"))

# three kinds of fix, four patches each; some patches reuse the same names,
# which is what the Token round keys on
CALL = "class C{k} {{\n  void run() {{\n    {v}.{m}();\n  }}\n}}\n"
GUARD = "class G{k} {{\n  int size(String {v}) {{\n{guard}    return {v}.length();\n  }}\n}}\n"
CMP = "class P{k} {{\n  boolean ok(int {v}) {{\n    if ({v} {op} 0) {{\n      return true;\n    }}\n    return false;\n  }}\n}}\n"

for k, v in enumerate(["out", "out", "sock", "sock"]):
    method = "close" if k < 2 else "flush"
    write_patch(root, f"call-{k}", {f"src/C{k}.java": (CALL.format(k=k, v=v, m="open"), CALL.format(k=k, v=v, m=method))})
for k, v in enumerate(["key", "key", "key", "path"]):
    guard = f"    if ({v} == null) return 0;\n"
    write_patch(root, f"guard-{k}", {f"src/G{k}.java": (GUARD.format(k=k, v=v, guard=""), GUARD.format(k=k, v=v, guard=guard))})
for k, v in enumerate(["n", "n", "count", "x"]):
    write_patch(root, f"cmp-{k}", {f"src/P{k}.java": (CMP.format(k=k, v=v, op=">"), CMP.format(k=k, v=v, op=">="))})

records = load_corpus(root)
built = corpus_res(records)
print(f"{len(records)} patches -> {len(built.scripts)} Rich Edit Scripts, skipped: {built.skipped}")

result = iterate(built.scripts)
for fold in FOLDS:
    print(f"\n{fold}: {len(result.pairs[fold])} identical pairs, {len(result.clusters[fold])} clusters")
    for c in result.clusters[fold]:
        print(f"  #{c.cluster_id} {c.group_key}: {', '.join(m.patch_id for m in c.members)}")

# the comparison-space and spread summary that `patchmine stats` prints
counts = hunk_counts(records)
print()
print(stats_report(result.reports, result.clusters, counts))
for s in pattern_stats(result.clusters["Token"], counts):
    print(f"Token #{s.cluster_id}: {s.coverage}, vertical={s.vertical}, horizontal={s.horizontal}")
