"""Seeded single-statement bugs with known fixes, plus catalogs for them."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

JAVARUN = Path(__file__).resolve().parent / "javarun.py"


@dataclass(frozen=True)
class Toy:
    name: str
    path: str
    buggy: str
    fixed: str
    test_path: str
    test: str
    line: int  # 1-based line of the faulty statement

    def write(self, root: Path) -> Path:
        root.mkdir(parents=True, exist_ok=True)
        (root / self.path).write_text(self.buggy, encoding="utf-8")
        (root / self.test_path).write_text(self.test, encoding="utf-8")
        (root / "locations.tsv").write_text(f"{self.path}\t{self.line}\t{self.line}\t1\n", encoding="utf-8")
        return root

    @property
    def test_cmd(self) -> str:
        return f"{sys.executable} {JAVARUN} {self.test_path} {self.path}"


ACCOUNT = """class Account {
    static int balance = 0;

    static void reset(int amount) {
        balance = amount;
    }

    static int getBalance() {
        return balance;
    }

    static void deposit(int amount) {
        balance = balance + amount;
    }

    static void withdraw(int amount) {
        balance = balance - amount;
    }

    static void refund(int amount) {
        withdraw(amount);
    }
}
"""

PERSON = """class Person {
    static boolean isAdult(int age) {
        if (age < 18) {
            return true;
        }
        return false;
    }
}
"""

CSV = """class Csv {
    static String SEPARATOR = ";";

    static String join(String a, String b) {
        return a + SEPARATOR + b;
    }

    static String pair(int x, int y) {
        return x + "," + y;
    }
}
"""

TEXT = """class Text {
    static String upper(String s) {
        return s.toUpperCase();
    }
}
"""

BOUNDS = """class Bounds {
    static int max(int a, int b) {
        return a > b ? a : b;
    }

    static int min(int a, int b) {
        return a < b ? a : b;
    }

    static int clampHigh(int x, int limit) {
        return max(x, limit);
    }
}
"""

TOYS = [
    Toy(
        "wrong-method-name",
        "Account.java",
        ACCOUNT,
        ACCOUNT.replace("        withdraw(amount);", "        deposit(amount);"),
        "AccountTest.java",
        """class AccountTest {
    static boolean test() {
        Account.reset(10);
        Account.refund(5);
        return Account.getBalance() == 15;
    }
}
""",
        21,
    ),
    Toy(
        "wrong-operator",
        "Person.java",
        PERSON,
        PERSON.replace("age < 18", "age >= 18"),
        "PersonTest.java",
        """class PersonTest {
    static boolean test() {
        return Person.isAdult(18) && Person.isAdult(30) && !Person.isAdult(17) && !Person.isAdult(0);
    }
}
""",
        3,
    ),
    Toy(
        "wrong-literal",
        "Csv.java",
        CSV,
        CSV.replace('SEPARATOR = ";"', 'SEPARATOR = ","'),
        "CsvTest.java",
        """class CsvTest {
    static boolean test() {
        return Csv.join("a", "b").equals("a,b") && Csv.pair(1, 2).equals("1,2");
    }
}
""",
        2,
    ),
    Toy(
        "missing-null-check",
        "Text.java",
        TEXT,
        TEXT.replace("        return s.toUpperCase();", "        if (s == null) return null;\n        return s.toUpperCase();"),
        "TextTest.java",
        """class TextTest {
    static boolean test() {
        return Text.upper(null) == null && Text.upper("ab").equals("AB");
    }
}
""",
        3,
    ),
    Toy(
        "wrong-return-expression",
        "Bounds.java",
        BOUNDS,
        BOUNDS.replace("return max(x, limit);", "return min(x, limit);"),
        "BoundsTest.java",
        """class BoundsTest {
    static boolean test() {
        return Bounds.clampHigh(5, 3) == 3 && Bounds.clampHigh(2, 3) == 2;
    }
}
""",
        11,
    ),
]

# Table-style catalog, one pattern per block
HAND_CATALOG = """# cluster 1 FP2 insert null pointer checker
INS IfStatement
--- INS InfixExpression
------ INS SimpleName
------ INS Operator
------ INS NullLiteral
--- INS ReturnStatement
------ INS NullLiteral

# cluster 2 FP9 mutate literal expression
UPD FieldDeclaration
--- UPD VariableDeclarationFragment
------ UPD StringLiteral

# cluster 3 FP10 mutate method invocation expression
UPD ExpressionStatement
--- UPD MethodInvocation
------ UPD SimpleName
--------- INS SimpleName

# cluster 4 FP11 mutate operators
UPD IfStatement
--- UPD InfixExpression
------ UPD Operator

# cluster 5 FP12 mutate return statement
UPD ReturnStatement
--- UPD MethodInvocation
------ UPD SimpleName
"""

# training patches whose mined Action patterns cover the five toys; each
# fix kind appears in two unrelated projects
_TRAIN = {
    "null-check": (
        "class Store {{\n    static int size(String {v}) {{\n        return {v}.length();\n    }}\n}}\n",
        "class Store {{\n    static int size(String {v}) {{\n        if ({v} == null) return null;\n        return {v}.length();\n    }}\n}}\n",
        ("key", "name"),
    ),
    "literal": (
        'class Conf {{\n    static String {v} = "old";\n}}\n',
        'class Conf {{\n    static String {v} = "new";\n}}\n',
        ("MODE", "LEVEL"),
    ),
    "call-name": (
        "class Log {{\n    static void run() {{\n        {v}.open();\n    }}\n}}\n",
        "class Log {{\n    static void run() {{\n        {v}.close();\n    }}\n}}\n",
        ("out", "file"),
    ),
    "operator": (
        "class Gate {{\n    static void check(int {v}) {{\n        if ({v} > 0) {{\n            go();\n        }}\n    }}\n}}\n",
        "class Gate {{\n    static void check(int {v}) {{\n        if ({v} >= 0) {{\n            go();\n        }}\n    }}\n}}\n",
        ("n", "count"),
    ),
    "return-call": (
        "class Calc {{\n    static int f(int {v}) {{\n        return floor({v});\n    }}\n}}\n",
        "class Calc {{\n    static int f(int {v}) {{\n        return ceil({v});\n    }}\n}}\n",
        ("x", "y"),
    ),
}


def write_training_corpus(root: Path) -> Path:
    from patchmine.corpus import write_patch

    for kind, (before, after, names) in _TRAIN.items():
        for k, v in enumerate(names):
            path = f"src/{kind.title().replace('-', '')}{k}.java"
            write_patch(root, f"{kind}-{k}", {path: (before.format(v=v), after.format(v=v))}, project=f"p{k}")
    return root
