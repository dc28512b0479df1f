"""Parser for a verifiable subset of RDF Turtle.

Supported: ``@prefix`` and ``@base`` directives, prefixed names, ``<IRI>``
references, the ``a`` keyword, ``;`` and ``,`` lists, single-line string
literals (with language tag or datatype), numeric and boolean literals, and
``#`` comments. Blank nodes, property lists, collections and triple-quoted
literals are rejected with a located :class:`TurtleSyntaxError`.
"""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from typing import Iterable, Union
from urllib.parse import urljoin

from .errors import TurtleSyntaxError, UndeclaredPrefixError

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = RDF + "type"
RDFS_LABEL = RDFS + "label"


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str
    datatype: str | None = None
    language: str | None = None


Node = Union[str, Literal]


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: Node


@dataclass(frozen=True)
class _Tok:
    kind: str
    value: object
    line: int
    col: int


_PNAME = re.compile(r"([A-Za-z][A-Za-z0-9_\-.]*)?:([A-Za-z0-9_%\-.:]*)")
_NUMBER = re.compile(r"[+-]?(\d+\.\d*([eE][+-]?\d+)?|\.\d+([eE][+-]?\d+)?|\d+[eE][+-]?\d+|\d+)")
_LANG = re.compile(r"@([A-Za-z]+(-[A-Za-z0-9]+)*)")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_\-]*")
_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line_starts = [0] + [m.end() for m in re.finditer("\n", text)]

    def error(self, msg: str, pos: int | None = None) -> TurtleSyntaxError:
        line, col = self._loc(self.pos if pos is None else pos)
        return TurtleSyntaxError(msg, line, col)

    def _loc(self, pos: int) -> tuple[int, int]:
        line = bisect.bisect_right(self.line_starts, pos)
        return line, pos - self.line_starts[line - 1] + 1

    def tokens(self) -> list[_Tok]:
        out = []
        text = self.text
        n = len(text)
        while True:
            # skip whitespace and comments
            while self.pos < n:
                ch = text[self.pos]
                if ch in " \t\r\n":
                    self.pos += 1
                elif ch == "#":
                    nl = text.find("\n", self.pos)
                    self.pos = n if nl < 0 else nl
                else:
                    break
            if self.pos >= n:
                line, col = self._loc(self.pos)
                out.append(_Tok("EOF", None, line, col))
                return out
            out.append(self._next())

    def _tok(self, kind: str, value: object, start: int) -> _Tok:
        line, col = self._loc(start)
        return _Tok(kind, value, line, col)

    def _next(self) -> _Tok:
        text, start = self.text, self.pos
        ch = text[start]
        if ch == "<":
            end = start + 1
            while end < len(text) and text[end] != ">":
                if text[end] in " \t\r\n\"{}|^`":
                    raise self.error("unterminated or invalid IRI reference", start)
                end += 1
            if end >= len(text):
                raise self.error("unterminated IRI reference", start)
            self.pos = end + 1
            return self._tok("IRI", text[start + 1 : end], start)
        if ch in "\"'":
            return self._string(ch)
        if ch in ".;,":
            self.pos += 1
            return self._tok(ch, ch, start)
        if text.startswith("^^", start):
            self.pos += 2
            return self._tok("^^", "^^", start)
        if ch == "@":
            if text.startswith("@prefix", start) and not _is_name_char(text, start + 7):
                self.pos += 7
                return self._tok("PREFIX", None, start)
            if text.startswith("@base", start) and not _is_name_char(text, start + 5):
                self.pos += 5
                return self._tok("BASE", None, start)
            m = _LANG.match(text, start)
            if m:
                self.pos = m.end()
                return self._tok("LANG", m.group(1).lower(), start)
            raise self.error("invalid '@' directive or language tag", start)
        if ch in "[]":
            raise self.error("blank-node property lists are not supported", start)
        if ch in "()":
            raise self.error("collections are not supported", start)
        if text.startswith("_:", start):
            raise self.error("blank nodes are not supported", start)
        if ch in "+-0123456789" or (ch == "." and start + 1 < len(text) and text[start + 1].isdigit()):
            m = _NUMBER.match(text, start)
            if m:
                lex = m.group(0)
                # a trailing '.' belongs to the statement terminator
                if lex.endswith(".") and "e" not in lex.lower():
                    lex = lex[:-1]
                self.pos = start + len(lex)
                if re.fullmatch(r"[+-]?\d+", lex):
                    dt = XSD + "integer"
                elif "e" in lex.lower():
                    dt = XSD + "double"
                else:
                    dt = XSD + "decimal"
                return self._tok("LITERAL", Literal(lex, dt), start)
        m = _PNAME.match(text, start)
        if m:
            prefix, local = m.group(1) or "", m.group(2)
            while local.endswith("."):
                local = local[:-1]
            if prefix.endswith("."):
                raise self.error("prefix may not end with '.'", start)
            self.pos = start + len(prefix) + 1 + len(local)
            return self._tok("PNAME", (prefix, local), start)
        m = _WORD.match(text, start)
        if m:
            word = m.group(0)
            self.pos = m.end()
            if word == "a":
                return self._tok("A", RDF_TYPE, start)
            if word in ("true", "false"):
                return self._tok("LITERAL", Literal(word, XSD + "boolean"), start)
            raise self.error(f"unexpected bare word {word!r}", start)
        raise self.error(f"unexpected character {ch!r}", start)

    def _string(self, quote: str) -> _Tok:
        text, start = self.text, self.pos
        if text.startswith(quote * 3, start):
            raise self.error("multiline (triple-quoted) literals are not supported", start)
        i = start + 1
        buf = []
        while True:
            if i >= len(text) or text[i] in "\r\n":
                raise self.error("unterminated string literal", start)
            ch = text[i]
            if ch == quote:
                break
            if ch == "\\":
                if i + 1 >= len(text):
                    raise self.error("unterminated string literal", start)
                esc = text[i + 1]
                if esc in _ESCAPES:
                    buf.append(_ESCAPES[esc])
                    i += 2
                    continue
                if esc in "uU":
                    width = 4 if esc == "u" else 8
                    hexdigits = text[i + 2 : i + 2 + width]
                    if len(hexdigits) != width or not re.fullmatch(r"[0-9A-Fa-f]+", hexdigits):
                        raise self.error("invalid unicode escape", i)
                    buf.append(chr(int(hexdigits, 16)))
                    i += 2 + width
                    continue
                raise self.error(f"invalid escape '\\{esc}'", i)
            buf.append(ch)
            i += 1
        self.pos = i + 1
        return self._tok("STRING", "".join(buf), start)


def _is_name_char(text: str, i: int) -> bool:
    return i < len(text) and (text[i].isalnum() or text[i] in "_-")


class _Parser:
    def __init__(self, tokens: list[_Tok]):
        self.toks = tokens
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.base: str | None = None
        self.triples: set[Triple] = set()

    @property
    def cur(self) -> _Tok:
        return self.toks[self.i]

    def advance(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg: str, tok: _Tok | None = None) -> TurtleSyntaxError:
        tok = tok or self.cur
        return TurtleSyntaxError(msg, tok.line, tok.col)

    def expect(self, kind: str, what: str) -> _Tok:
        if self.cur.kind != kind:
            found = "end of input" if self.cur.kind == "EOF" else repr(self.cur.value)
            raise self.fail(f"expected {what}, found {found}")
        return self.advance()

    def parse(self) -> set[Triple]:
        while self.cur.kind != "EOF":
            if self.cur.kind == "PREFIX":
                self.advance()
                tok = self.expect("PNAME", "prefix name")
                prefix, local = tok.value
                if local:
                    raise self.fail("prefix declaration must end with ':'", tok)
                iri = self._resolve(self.expect("IRI", "IRI reference").value)
                self.expect(".", "'.' after @prefix")
                self.prefixes[prefix] = iri
            elif self.cur.kind == "BASE":
                self.advance()
                self.base = self._resolve(self.expect("IRI", "IRI reference").value)
                self.expect(".", "'.' after @base")
            else:
                self._statement()
        return self.triples

    def _resolve(self, ref: str) -> str:
        if self.base and not re.match(r"[A-Za-z][A-Za-z0-9+.\-]*:", ref):
            return urljoin(self.base, ref)
        return ref

    def _iri(self, what: str) -> str:
        tok = self.cur
        if tok.kind == "IRI":
            self.advance()
            return self._resolve(tok.value)
        if tok.kind == "PNAME":
            self.advance()
            prefix, local = tok.value
            if prefix not in self.prefixes:
                raise UndeclaredPrefixError(prefix, tok.line, tok.col)
            return self.prefixes[prefix] + local
        if tok.kind == "LITERAL" or tok.kind == "STRING":
            raise self.fail(f"literal not allowed as {what}")
        found = "end of input" if tok.kind == "EOF" else repr(tok.value)
        raise self.fail(f"expected {what}, found {found}")

    def _statement(self) -> None:
        subject = self._iri("subject")
        while True:
            if self.cur.kind == "A":
                predicate = self.advance().value
            else:
                predicate = self._iri("predicate")
            while True:
                obj = self._object()
                self.triples.add(Triple(subject, predicate, obj))
                if self.cur.kind == ",":
                    self.advance()
                    continue
                break
            if self.cur.kind == ";":
                while self.cur.kind == ";":
                    self.advance()
                if self.cur.kind == ".":
                    break
                continue
            break
        self.expect(".", "'.' at end of statement")

    def _object(self) -> Node:
        tok = self.cur
        if tok.kind == "STRING":
            self.advance()
            if self.cur.kind == "LANG":
                return Literal(tok.value, None, self.advance().value)
            if self.cur.kind == "^^":
                self.advance()
                return Literal(tok.value, self._iri("datatype IRI"))
            return Literal(tok.value)
        if tok.kind == "LITERAL":
            self.advance()
            return tok.value
        return self._iri("object")


def parse_turtle(text: str) -> set[Triple]:
    """Parse a Turtle-subset document into a set of triples."""
    return _Parser(_Lexer(text).tokens()).parse()


def _nt_term(node: Node) -> str:
    if isinstance(node, Literal):
        s = node.lexical.replace("\\", "\\\\").replace('"', '\\"')
        s = s.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
        out = f'"{s}"'
        if node.language:
            out += "@" + node.language
        elif node.datatype:
            out += f"^^<{node.datatype}>"
        return out
    return f"<{node}>"


def _sort_key(t: Triple):
    o = t.object
    okey = (1, o.lexical, o.datatype or "", o.language or "") if isinstance(o, Literal) else (0, o, "", "")
    return (t.subject, t.predicate, okey)


def to_ntriples(triples: Iterable[Triple]) -> str:
    """Canonical, sorted N-Triples-style serialization (parseable by :func:`parse_turtle`)."""
    lines = [
        f"{_nt_term(t.subject)} {_nt_term(t.predicate)} {_nt_term(t.object)} ."
        for t in sorted(triples, key=_sort_key)
    ]
    return "\n".join(lines) + ("\n" if lines else "")
