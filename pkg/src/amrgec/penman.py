"""PENMAN reading and writing, plus the blank-line separated corpus format.

Dialect notes:

* inverse roles (``:ARG0-of``) become forward edges at parse time;
* a bare symbol is a variable reference when it names a variable defined
  anywhere in the same graph; otherwise it is a constant, unless it has the
  shape of a variable (one lowercase letter plus optional digits), which is
  reported as an unknown reference;
* quoted strings are always constants and keep their quotes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

from .amr import AmrGraph, InvalidGraph

NON_INVERTED_ROLES = frozenset({"consist-of", "prep-out-of", "prep-on-behalf-of"})
VARIABLE_SHAPE = re.compile(r"^[a-z]\d*$")
NEEDS_QUOTES = re.compile(r'[\s()"/:]')

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<lparen>\()
  | (?P<rparen>\))
  | (?P<slash>/)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<role>:[^\s()"/:]*)
  | (?P<symbol>[^\s()"/:]+)
  | (?P<bad>.)
    """,
    re.VERBOSE | re.DOTALL,
)


class PenmanError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.message = message
        self.line = line
        self.col = col


class PenmanSyntaxError(PenmanError):
    pass


class UnbalancedParens(PenmanError):
    pass


class DuplicateVariableDefinition(PenmanError):
    pass


class UnknownVariableReference(PenmanError):
    pass


class EmptyRole(PenmanError):
    pass


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    col: int


def is_inverted(role: str) -> bool:
    return role.endswith("-of") and role not in NON_INVERTED_ROLES


def _tokenize(text: str, line_offset: int) -> list[_Token]:
    tokens = []
    line, line_start = 1 + line_offset, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        value = m.group()
        col = m.start() - line_start + 1
        if kind == "bad":
            if value == '"':
                raise PenmanSyntaxError("unterminated string", line, col)
            raise PenmanSyntaxError(f"unexpected character {value!r}", line, col)
        if kind != "ws":
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            line_start = m.start() + value.rindex("\n") + 1
    return tokens


def _check_balance(tokens: list[_Token]) -> None:
    opened = []
    for tok in tokens:
        if tok.kind == "lparen":
            opened.append(tok)
        elif tok.kind == "rparen":
            if not opened:
                raise UnbalancedParens("unmatched ')'", tok.line, tok.col)
            opened.pop()
    if opened:
        tok = opened[-1]
        raise UnbalancedParens("unclosed '('", tok.line, tok.col)


def _split_metadata(text: str) -> tuple[dict[str, str], str, int]:
    """Peel leading comment lines. Returns (metadata, graph text, lines consumed)."""
    metadata = {}
    lines = text.split("\n")
    i = 0
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith("#")):
        content = lines[i].strip().lstrip("#").strip()
        i += 1
        if not content.startswith("::"):
            continue
        key, _, rest = content[2:].partition(" ")
        if key in ("snt", "tok"):
            metadata[key] = rest.strip()
            continue
        for part in re.split(r"\s::(?=\S)", content[2:]):
            key, _, value = part.partition(" ")
            metadata[key] = value.strip()
    return metadata, "\n".join(lines[i:]), i


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0
        self.nodes = []
        self.defined = {}  # variable -> token of its definition
        self.links = []  # (source, role, target token, role token)

    def peek(self) -> _Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def expect(self, kind: str, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1]
            raise PenmanSyntaxError(f"unexpected end of input, expected {what}", last.line, last.col)
        if tok.kind != kind:
            raise PenmanSyntaxError(f"expected {what}, found {tok.value!r}", tok.line, tok.col)
        self.pos += 1
        return tok

    def parse_node(self) -> str:
        self.expect("lparen", "'('")
        var_tok = self.expect("symbol", "a variable")
        var = var_tok.value
        if var in self.defined:
            first = self.defined[var]
            raise DuplicateVariableDefinition(
                f"variable {var!r} already defined at line {first.line}, column {first.col}",
                var_tok.line,
                var_tok.col,
            )
        self.defined[var] = var_tok
        self.expect("slash", "'/'")
        tok = self.peek()
        if tok is None or tok.kind not in ("symbol", "string"):
            where = tok or var_tok
            raise PenmanSyntaxError("expected a concept after '/'", where.line, where.col)
        self.pos += 1
        self.nodes.append((var, tok.value))
        while True:
            tok = self.peek()
            if tok is None:
                raise PenmanSyntaxError("unexpected end of input", var_tok.line, var_tok.col)
            if tok.kind == "rparen":
                self.pos += 1
                return var
            if tok.kind != "role":
                raise PenmanSyntaxError(f"expected a role or ')', found {tok.value!r}", tok.line, tok.col)
            self.pos += 1
            role = tok.value[1:]
            if not role:
                raise EmptyRole("role label is empty", tok.line, tok.col)
            target = self.peek()
            if target is None or target.kind not in ("lparen", "symbol", "string"):
                where = target or tok
                raise PenmanSyntaxError(f"role :{role} has no target", where.line, where.col)
            if target.kind == "lparen":
                child = self.parse_node()
                self.links.append((var, role, _Token("var", child, target.line, target.col), tok))
            else:
                self.pos += 1
                self.links.append((var, role, target, tok))


def parse_penman(text: str, line_offset: int = 0) -> AmrGraph:
    """Parse one PENMAN graph, optionally preceded by ``# ::key value`` lines.

    ``line_offset`` shifts reported line numbers, for graphs read out of a
    larger file.
    """
    metadata, body, consumed = _split_metadata(text)
    tokens = _tokenize(body, line_offset + consumed)
    if not tokens:
        raise PenmanSyntaxError("no graph found", line_offset + consumed + 1, 1)
    _check_balance(tokens)
    parser = _Parser(tokens)
    root = parser.parse_node()
    extra = parser.peek()
    if extra is not None:
        raise PenmanSyntaxError(f"trailing input {extra.value!r} after graph", extra.line, extra.col)

    edges, attributes = [], []
    for source, role, target, _role_tok in parser.links:
        if target.kind == "var" or (target.kind == "symbol" and target.value in parser.defined):
            if is_inverted(role):
                edges.append((target.value, role[:-3], source))
            else:
                edges.append((source, role, target.value))
        elif target.kind == "symbol" and VARIABLE_SHAPE.match(target.value):
            raise UnknownVariableReference(
                f"reference to undefined variable {target.value!r}", target.line, target.col
            )
        else:
            attributes.append((source, role, target.value))
    try:
        return AmrGraph(parser.nodes, edges, attributes, root, metadata)
    except InvalidGraph as exc:
        first = tokens[0]
        raise PenmanSyntaxError(str(exc), first.line, first.col) from exc


def _format_constant(const: str) -> str:
    if const.startswith('"') or not NEEDS_QUOTES.search(const):
        return const
    return json.dumps(const)


def serialize_penman(g: AmrGraph, indent: int | None = None) -> str:
    """Depth-first PENMAN from the root.

    Each variable is defined at its first visit; later mentions are bare.
    Children follow the graph's edge order. Nodes that cannot be reached from
    the root along edge direction are written through inverse roles.
    """
    g.validate()
    for s, role, t in g.edges:
        if is_inverted(role):
            raise InvalidGraph(f"edge role {role!r} would read back as an inverse role")
    concepts = g.concepts
    incident = {v: [] for v in concepts}
    for i, (s, _, t) in enumerate(g.edges):
        incident[s].append(i)
        if t != s:
            incident[t].append(i)
    attrs = {v: [] for v in concepts}
    for s, role, const in g.attributes:
        attrs[s].append((role, const))

    # nodes reachable along edge direction are never introduced by an inverse role
    forward = {g.root}
    frontier = [g.root]
    while frontier:
        v = frontier.pop()
        for i in incident[v]:
            s, _, t = g.edges[i]
            if s == v and t not in forward:
                forward.add(t)
                frontier.append(t)

    defined = set()
    emitted = set()

    def write(v: str, depth: int) -> str:
        defined.add(v)
        parts = [f"({v} / {concepts[v]}"]
        outgoing = [i for i in incident[v] if g.edges[i][0] == v]
        incoming = [i for i in incident[v] if g.edges[i][0] != v]
        branches = []
        for i in outgoing:
            if i in emitted:
                continue
            emitted.add(i)
            _, role, t = g.edges[i]
            target = t if t in defined else write(t, depth + 1)
            branches.append(f":{role} {target}")
        for i in incoming:
            s, role, _ = g.edges[i]
            if i in emitted or s in defined or s in forward:
                continue
            emitted.add(i)
            branches.append(f":{role}-of {write(s, depth + 1)}")
        for role, const in attrs[v]:
            branches.append(f":{role} {_format_constant(const)}")
        if indent is None:
            sep = " "
        else:
            sep = "\n" + " " * (indent * (depth + 1))
        return sep.join(parts + branches) + ")"

    return write(g.root, 0)


# ---------------------------------------------------------------------------
# corpus files


@dataclass
class CorpusBlock:
    index: int
    line: int  # 1-based line where the block starts
    text: str

    def parse(self) -> AmrGraph:
        return parse_penman(self.text, line_offset=self.line - 1)


def iter_blocks(lines: Iterable[str]) -> Iterator[CorpusBlock]:
    """Split a corpus stream into graph blocks at blank lines.

    Blocks holding only comments (file headers) are skipped.
    """
    buf, start, index = [], None, 0
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n").rstrip("\r")
        if line.strip():
            if start is None:
                start = lineno
            buf.append(line)
            continue
        if buf:
            if any(not b.lstrip().startswith("#") for b in buf):
                yield CorpusBlock(index, start, "\n".join(buf))
                index += 1
            buf, start = [], None
    if buf and any(not b.lstrip().startswith("#") for b in buf):
        yield CorpusBlock(index, start, "\n".join(buf))


def read_corpus(path) -> Iterator[AmrGraph]:
    with open(path, encoding="utf-8") as fh:
        for block in iter_blocks(fh):
            yield block.parse()


def format_record(g: AmrGraph, indent: int | None = 4) -> str:
    header = "".join(f"# ::{k} {v}\n" for k, v in g.metadata.items())
    return header + serialize_penman(g, indent=indent) + "\n"


def write_corpus(graphs: Iterable[AmrGraph], fh: TextIO, indent: int | None = 4) -> int:
    n = 0
    for g in graphs:
        if n:
            fh.write("\n")
        fh.write(format_record(g, indent))
        n += 1
    return n


def record_id(g: AmrGraph, index: int) -> str:
    return g.metadata.get("id") or str(index)
