"""Java grammar adapter backed by tree-sitter.

The tree-sitter concrete syntax tree is normalized to the Eclipse JDT node
vocabulary (``VariableDeclarationStatement``, ``MethodInvocation``,
``SimpleName`` ...). Punctuation and keywords are dropped; operators become
``Operator`` leaves; wrapper nodes such as argument lists are spliced into
their parent.
"""

from __future__ import annotations

from functools import lru_cache

import tree_sitter
import tree_sitter_java

from .ast import AstNode, AstTree, ParseError, register_grammar

LEAF_LABELS = {
    "identifier": "SimpleName",
    "type_identifier": "SimpleType",
    "scoped_type_identifier": "SimpleType",
    "integral_type": "PrimitiveType",
    "floating_point_type": "PrimitiveType",
    "boolean_type": "PrimitiveType",
    "void_type": "PrimitiveType",
    "scoped_identifier": "QualifiedName",
    "string_literal": "StringLiteral",
    "text_block": "StringLiteral",
    "character_literal": "CharacterLiteral",
    "decimal_integer_literal": "NumberLiteral",
    "hex_integer_literal": "NumberLiteral",
    "octal_integer_literal": "NumberLiteral",
    "binary_integer_literal": "NumberLiteral",
    "decimal_floating_point_literal": "NumberLiteral",
    "hex_floating_point_literal": "NumberLiteral",
    "true": "BooleanLiteral",
    "false": "BooleanLiteral",
    "null_literal": "NullLiteral",
    "this": "ThisExpression",
    "super": "SuperExpression",
    "dimensions": "Dimension",
    "wildcard": "WildcardType",
}

LABELS = {
    "program": "CompilationUnit",
    "package_declaration": "PackageDeclaration",
    "import_declaration": "ImportDeclaration",
    "class_declaration": "TypeDeclaration",
    "interface_declaration": "TypeDeclaration",
    "enum_declaration": "EnumDeclaration",
    "record_declaration": "RecordDeclaration",
    "annotation_type_declaration": "AnnotationTypeDeclaration",
    "enum_constant": "EnumConstantDeclaration",
    "field_declaration": "FieldDeclaration",
    "constant_declaration": "FieldDeclaration",
    "method_declaration": "MethodDeclaration",
    "constructor_declaration": "MethodDeclaration",
    "compact_constructor_declaration": "MethodDeclaration",
    "static_initializer": "Initializer",
    "formal_parameter": "SingleVariableDeclaration",
    "spread_parameter": "SingleVariableDeclaration",
    "catch_formal_parameter": "SingleVariableDeclaration",
    "variable_declarator": "VariableDeclarationFragment",
    "local_variable_declaration": "VariableDeclarationStatement",
    "block": "Block",
    "constructor_body": "Block",
    "expression_statement": "ExpressionStatement",
    "if_statement": "IfStatement",
    "while_statement": "WhileStatement",
    "do_statement": "DoStatement",
    "for_statement": "ForStatement",
    "enhanced_for_statement": "EnhancedForStatement",
    "return_statement": "ReturnStatement",
    "throw_statement": "ThrowStatement",
    "break_statement": "BreakStatement",
    "continue_statement": "ContinueStatement",
    "yield_statement": "YieldStatement",
    "try_statement": "TryStatement",
    "try_with_resources_statement": "TryStatement",
    "catch_clause": "CatchClause",
    "switch_label": "SwitchCase",
    "synchronized_statement": "SynchronizedStatement",
    "labeled_statement": "LabeledStatement",
    "assert_statement": "AssertStatement",
    "local_class_declaration": "TypeDeclarationStatement",
    "method_invocation": "MethodInvocation",
    "object_creation_expression": "ClassInstanceCreation",
    "array_creation_expression": "ArrayCreation",
    "array_initializer": "ArrayInitializer",
    "array_access": "ArrayAccess",
    "field_access": "FieldAccess",
    "binary_expression": "InfixExpression",
    "unary_expression": "PrefixExpression",
    "assignment_expression": "Assignment",
    "ternary_expression": "ConditionalExpression",
    "cast_expression": "CastExpression",
    "instanceof_expression": "InstanceofExpression",
    "lambda_expression": "LambdaExpression",
    "method_reference": "ExpressionMethodReference",
    "parenthesized_expression": "ParenthesizedExpression",
    "class_literal": "TypeLiteral",
    "generic_type": "ParameterizedType",
    "array_type": "ArrayType",
    "type_parameter": "TypeParameter",
    "marker_annotation": "MarkerAnnotation",
    "annotation": "NormalAnnotation",
    "element_value_pair": "MemberValuePair",
    "resource": "VariableDeclarationExpression",
}

# wrappers whose children are spliced into the parent
TRANSPARENT = {
    "argument_list",
    "formal_parameters",
    "class_body",
    "interface_body",
    "enum_body",
    "enum_body_declarations",
    "annotation_type_body",
    "switch_block",
    "switch_block_statement_group",
    "switch_rule",
    "finally_clause",
    "superclass",
    "super_interfaces",
    "extends_interfaces",
    "type_list",
    "type_arguments",
    "type_parameters",
    "catch_type",
    "resource_specification",
    "inferred_parameters",
    "annotation_argument_list",
    "throws",
    "modifiers",
    "record_header",
}

OPERATOR_PARENTS = {
    "binary_expression",
    "unary_expression",
    "update_expression",
    "assignment_expression",
}

MODIFIER_KEYWORDS = {
    "public", "protected", "private", "static", "final", "abstract",
    "synchronized", "native", "transient", "volatile", "strictfp", "default",
    "sealed", "non-sealed",
}

# parenthesized conditions of these constructs are syntax, not an expression
CONDITION_OWNERS = {
    "if_statement",
    "while_statement",
    "do_statement",
    "switch_expression",
    "synchronized_statement",
}

STATEMENT_CONTAINERS = {
    "block",
    "constructor_body",
    "switch_block_statement_group",
    "switch_rule",
    "labeled_statement",
    "if_statement",
    "while_statement",
    "for_statement",
    "enhanced_for_statement",
    "do_statement",
    "program",
}


@lru_cache(maxsize=1)
def _parser() -> tree_sitter.Parser:
    return tree_sitter.Parser(tree_sitter.Language(tree_sitter_java.language()))


class _Converter:
    def __init__(self, data: bytes, text: str):
        self.data = data
        if len(data) == len(text):
            self.offsets = None
        else:
            self.offsets = [0] * (len(data) + 1)
            pos = 0
            for i, ch in enumerate(text):
                n = len(ch.encode("utf-8"))
                for k in range(n):
                    self.offsets[pos + k] = i
                pos += n
            self.offsets[len(data)] = len(text)
        self.text = text

    def span(self, ts_node) -> tuple[int, int]:
        s, e = ts_node.start_byte, ts_node.end_byte
        if self.offsets is not None:
            return self.offsets[s], self.offsets[e]
        return s, e

    def leaf(self, label, ts_node, role=None) -> AstNode:
        span = self.span(ts_node)
        return AstNode(label, self.text[span[0] : span[1]], [], span, role)

    def convert(self, ts_node, parent_type=None, role=None) -> list[AstNode]:
        kind = ts_node.type
        if kind in ("line_comment", "block_comment"):
            return []
        if kind in LEAF_LABELS:
            return [self.leaf(LEAF_LABELS[kind], ts_node, role)]
        if kind in TRANSPARENT or (
            kind == "parenthesized_expression" and parent_type in CONDITION_OWNERS
        ):
            return self.children(ts_node)
        label = self.label(ts_node, parent_type)
        kids = self.children(ts_node)
        return [AstNode(label, "", kids, self.span(ts_node), role)]

    def label(self, ts_node, parent_type) -> str:
        kind = ts_node.type
        if kind == "local_variable_declaration" and parent_type == "for_statement":
            return "VariableDeclarationExpression"
        if kind == "switch_expression":
            return "SwitchStatement" if parent_type in STATEMENT_CONTAINERS else "SwitchExpression"
        if kind == "update_expression":
            first = ts_node.children[0]
            return "PostfixExpression" if first.is_named else "PrefixExpression"
        if kind == "explicit_constructor_invocation":
            ctor = ts_node.child_by_field_name("constructor")
            if ctor is not None and ctor.type == "super":
                return "SuperConstructorInvocation"
            return "ConstructorInvocation"
        if kind in LABELS:
            return LABELS[kind]
        return "".join(part.capitalize() for part in kind.split("_"))

    def children(self, ts_node) -> list[AstNode]:
        kind = ts_node.type
        out: list[AstNode] = []
        for i, child in enumerate(ts_node.children):
            role = ts_node.field_name_for_child(i)
            if child.is_named:
                if kind == "explicit_constructor_invocation" and role == "constructor":
                    continue
                if kind == "object_creation_expression" and child.type == "class_body":
                    node = AstNode(
                        "AnonymousClassDeclaration", "", self.children(child), self.span(child), role
                    )
                    out.append(node)
                    continue
                out.extend(self.convert(child, kind, role))
            elif kind in OPERATOR_PARENTS and child.type not in ("(", ")"):
                out.append(self.leaf("Operator", child, "operator"))
            elif kind == "modifiers" and child.type in MODIFIER_KEYWORDS:
                out.append(self.leaf("Modifier", child, "modifier"))
            elif kind == "instanceof_expression" and child.type == "final":
                out.append(self.leaf("Modifier", child, "modifier"))
        return out


def _first_error(node):
    if node.type == "ERROR" or node.is_missing:
        return node
    if not node.has_error:
        return None
    for child in node.children:
        found = _first_error(child)
        if found is not None:
            return found
    return node


def parse_java(source: str) -> AstTree:
    data = source.encode("utf-8")
    ts_tree = _parser().parse(data)
    root = ts_tree.root_node
    if root.has_error:
        bad = _first_error(root)
        row, col = bad.start_point
        what = f"missing {bad.type}" if bad.is_missing else "syntax error"
        raise ParseError(what, row + 1, col + 1)
    conv = _Converter(data, source)
    (node,) = conv.convert(root)
    # the root spans the whole text so every line maps into it
    node.span = (0, len(source))
    return AstTree(node, source, "java")


register_grammar("java", parse_java)
