"""Tree-sitter classifier for single-function Java snippets."""

from __future__ import annotations

from collections.abc import Iterator
from dataclasses import dataclass

import structlog
import tree_sitter_java
from tree_sitter import Language, Node, Parser

from ..core.entities import AstToken, BoundingBox, TokenMap
from ..core.taxonomy import (
    ARGUMENT,
    CONDITIONAL_KEYWORDS,
    CONDITIONAL_STATEMENT,
    DEFAULT_TAXONOMY,
    FUNCTION_CALL,
    FUNCTION_DECLARATION,
    LOOP,
    LOOP_KEYWORDS,
    OTHER,
    PARAMETER,
    PRIMITIVE_TYPES,
    VARIABLE_DECLARATION,
)
from ..exceptions import SourceParseException
from ..ports.source_classifier import SourceClassifierPort

logger = structlog.get_logger()

JAVA_LANGUAGE = Language(tree_sitter_java.language())

# Parsed as one leaf even though the grammar gives them children.
_ATOMIC_NODES = frozenset({"string_literal", "character_literal", "text_block"})
_SKIPPED_NODES = frozenset({"line_comment", "block_comment"})

# Ancestors that end the search at statement level.
_SCOPE_NODES = frozenset({"program", "block", "class_body", "constructor_body", "switch_block"})

_CONSTRUCTS = {
    "if_statement": CONDITIONAL_STATEMENT,
    "switch_expression": CONDITIONAL_STATEMENT,
    "switch_statement": CONDITIONAL_STATEMENT,
    "switch_label": CONDITIONAL_STATEMENT,
    "for_statement": LOOP,
    "enhanced_for_statement": LOOP,
    "while_statement": LOOP,
    "do_statement": LOOP,
}
_CONSTRUCT_BODIES = ("body", "consequence", "alternative")

_DECLARATIONS = frozenset({"local_variable_declaration", "field_declaration"})
_PARAMETER_NODES = frozenset({"formal_parameter", "spread_parameter", "receiver_parameter", "catch_formal_parameter"})
_METHOD_NODES = frozenset({"method_declaration", "constructor_declaration"})

# Wrapper that turns a bare method into a class member; the source starts on the next row.
_CLASS_PREFIX = b"class Snippet {\n"
_CLASS_SUFFIX = b"\n}\n"


@dataclass(frozen=True)
class LeafToken:
    """One lexical leaf with its 1-based line and 0-based character column."""

    node: Node
    text: str
    line: int
    column: int


@dataclass(frozen=True)
class _Parse:
    root: Node
    row_offset: int
    source_start: int
    source_end: int


def _is_field(parent: Node, child: Node, *names: str) -> bool:
    return any(parent.child_by_field_name(name) == child for name in names)


def _is_operand(leaf: Node) -> bool:
    return leaf.is_named or leaf.type in PRIMITIVE_TYPES


def _walk(node: Node) -> Iterator[Node]:
    yield node
    for child in node.children:
        yield from _walk(child)


def classify_leaf(leaf: Node) -> str:
    """Class of one leaf from its nearest deciding ancestor.

    Declaration headers own every leaf they contain, punctuation included:
    method headers, formal parameters, the type and name of a variable and
    the type after ``new``. Inside argument lists and control headers only
    identifiers and literals take the construct's class.
    """
    if leaf.type in LOOP_KEYWORDS:
        return LOOP
    if leaf.type in CONDITIONAL_KEYWORDS:
        return CONDITIONAL_STATEMENT
    if leaf.type == "new":
        return FUNCTION_CALL
    operand = _is_operand(leaf)

    node = leaf
    while node.parent is not None:
        parent = node.parent
        kind = parent.type
        if kind in _SCOPE_NODES:
            return OTHER
        if kind in _METHOD_NODES:
            return OTHER if _is_field(parent, node, "body") else FUNCTION_DECLARATION
        if kind in _PARAMETER_NODES:
            return PARAMETER
        if kind == "formal_parameters":
            return OTHER
        if kind in _DECLARATIONS and (_is_field(parent, node, "type") or node.type == "modifiers"):
            return VARIABLE_DECLARATION
        if kind == "variable_declarator" and (_is_field(parent, node, "name") or node.type == "dimensions"):
            return VARIABLE_DECLARATION
        if kind == "enhanced_for_statement" and _is_field(parent, node, "type", "name"):
            return VARIABLE_DECLARATION
        if kind == "object_creation_expression" and _is_field(parent, node, "type"):
            return FUNCTION_CALL
        if kind == "method_invocation" and _is_field(parent, node, "name"):
            return FUNCTION_CALL
        if kind == "explicit_constructor_invocation" and _is_field(parent, node, "constructor"):
            return FUNCTION_CALL
        if kind == "lambda_expression" and _is_field(parent, node, "parameters"):
            return PARAMETER if operand else OTHER
        if kind == "argument_list":
            return ARGUMENT if operand else OTHER
        if kind in _CONSTRUCTS:
            if _is_field(parent, node, *_CONSTRUCT_BODIES):
                return OTHER
            return _CONSTRUCTS[kind] if operand else OTHER
        node = parent
    return OTHER


class JavaSubsetClassifier(SourceClassifierPort):
    """Classifies leaf tokens of Java snippets parsed with tree-sitter.

    A snippet may be a sequence of statements or a bare method; a bare
    method that the grammar rejects at top level is parsed again inside a
    synthetic class body.
    """

    def __init__(self) -> None:
        self._parser = Parser(JAVA_LANGUAGE)

    @property
    def language(self) -> str:
        return "java-subset"

    def classify(
        self,
        source: str,
        cell_width: float = 8.0,
        cell_height: float = 16.0,
        taxonomy: tuple[str, ...] | None = None,
    ) -> TokenMap:
        tokens = tuple(
            AstToken(
                id=index,
                text=leaf.text,
                semantic_class=classify_leaf(leaf.node),
                line=leaf.line,
                bbox=BoundingBox(
                    leaf.column * cell_width,
                    (leaf.line - 1) * cell_height,
                    (leaf.column + len(leaf.text.split("\n", 1)[0])) * cell_width,
                    leaf.line * cell_height,
                ),
            )
            for index, leaf in enumerate(self.leaf_tokens(source))
        )
        logger.debug("Classified source", tokens=len(tokens), lines=source.count("\n") + 1)
        return TokenMap(tokens=tokens, taxonomy=tuple(taxonomy or DEFAULT_TAXONOMY))

    def leaf_tokens(self, source: str) -> list[LeafToken]:
        """Leaves of the syntax tree in source order; comments and whitespace are dropped."""
        data = source.encode("utf-8")
        parsed = self._parse(data)
        rows = data.split(b"\n")
        leaves = []
        for node in self._leaves(parsed.root):
            if node.start_byte < parsed.source_start or node.end_byte > parsed.source_end:
                continue
            row, byte_column = node.start_point
            row -= parsed.row_offset
            column = len(rows[row][:byte_column].decode("utf-8", errors="ignore"))
            text = data[node.start_byte - parsed.source_start : node.end_byte - parsed.source_start]
            leaves.append(LeafToken(node, text.decode("utf-8"), row + 1, column))
        return leaves

    def _parse(self, data: bytes) -> _Parse:
        bare = _Parse(self._parser.parse(data).root_node, 0, 0, len(data))
        if not bare.root.has_error:
            return bare
        wrapped_tree = self._parser.parse(_CLASS_PREFIX + data + _CLASS_SUFFIX)
        wrapped = _Parse(wrapped_tree.root_node, 1, len(_CLASS_PREFIX), len(_CLASS_PREFIX) + len(data))
        if not wrapped.root.has_error:
            return wrapped

        # Report the parse that got further into the snippet before failing.
        errors = [self._first_error(bare), self._first_error(wrapped)]
        inside = [error for error in errors if 0 <= error[0] <= len(data)]
        _, line, column, message = max(inside) if inside else errors[0]
        raise SourceParseException(message, line, column)

    @staticmethod
    def _first_error(parsed: _Parse) -> tuple[int, int, int, str]:
        """(offset into the snippet, line, column, message) of the first ERROR or MISSING node."""
        for node in _walk(parsed.root):
            if node.is_missing or node.type == "ERROR":
                offset = node.start_byte - parsed.source_start
                row, column = node.start_point
                line = max(1, row - parsed.row_offset + 1)
                if node.is_missing:
                    return offset, line, column + 1, f"Missing '{node.type}'"
                snippet = (node.text or b"").decode("utf-8", errors="replace").split("\n", 1)[0][:20]
                return offset, line, column + 1, f"Syntax error near {snippet!r}"
        return 0, 1, 1, "Syntax error"

    @staticmethod
    def _leaves(node: Node) -> Iterator[Node]:
        if node.type in _SKIPPED_NODES:
            return
        if node.type in _ATOMIC_NODES or node.child_count == 0:
            if node.end_byte > node.start_byte:
                yield node
            return
        for child in node.children:
            yield from JavaSubsetClassifier._leaves(child)
