"""Independent DOT grammar checker used as the rendering oracle.

A pyparsing grammar for the digraph subset of the DOT language: node
statements, chained edge statements, attribute lists, and top-level
attribute assignments, with quoted/unquoted/numeric identifiers. Completely
independent of the renderer: it parses arbitrary conforming DOT text and
reports node and edge statement counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import pyparsing as pp


def _build_parser() -> pp.ParserElement:
    identifier = pp.Word(pp.alphas + "_", pp.alphanums + "_")
    numeral = pp.Regex(r"-?(\.[0-9]+|[0-9]+(\.[0-9]*)?)")
    quoted = pp.QuotedString('"', esc_char="\\")
    dot_id = quoted | identifier | numeral

    attr = pp.Group(dot_id + pp.Suppress("=") + dot_id)
    attr_list = (pp.Suppress("[")
                 + pp.Optional(pp.DelimitedList(attr, delim=pp.one_of(", ;")))
                 + pp.Suppress("]"))

    edge_stmt = pp.Group(
        dot_id + pp.OneOrMore(pp.Suppress("->") + dot_id)
        + pp.Optional(pp.Group(attr_list))
    )("edge_stmts*")
    node_with_attrs = pp.Group(dot_id + pp.Group(attr_list))("node_stmts*")
    graph_attr = pp.Group(dot_id + pp.Suppress("=") + dot_id)("graph_attrs*")
    bare_node = pp.Group(dot_id)("node_stmts*")
    statement = edge_stmt | graph_attr | node_with_attrs | bare_node

    body = pp.ZeroOrMore(statement + pp.Suppress(pp.Optional(";")))
    graph = (pp.Keyword("digraph") + pp.Optional(dot_id)
             + pp.Suppress("{") + body + pp.Suppress("}"))
    return graph


_PARSER = _build_parser()


@dataclass
class DotCounts:
    nodes: int
    edges: int


def check_dot(text: str) -> DotCounts:
    """Parse DOT text fully; raises pyparsing.ParseException on bad grammar."""
    result = _PARSER.parse_string(text, parse_all=True)
    node_count = len(result.get("node_stmts", []))
    edge_count = 0
    for stmt in result.get("edge_stmts", []):
        ids = [tok for tok in stmt if not isinstance(tok, pp.ParseResults)]
        edge_count += len(ids) - 1
    return DotCounts(nodes=node_count, edges=edge_count)
