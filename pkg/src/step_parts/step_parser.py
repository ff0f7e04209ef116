"""ISO 10303-21 (Part 21) reader producing a resolved entity graph.

Only the exchange-structure syntax is interpreted here; entity semantics live in
:mod:`step_parts.brep`. Every instance in the DATA section is kept, including
keywords the B-Rep builder never looks at.
"""
from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple

__all__ = [
    "Binary",
    "DERIVED",
    "DanglingReferenceError",
    "EntityRecord",
    "Enum",
    "MissingDataSectionError",
    "Ref",
    "StepEntityGraph",
    "StepParseError",
    "StepSyntaxError",
    "Typed",
    "UNSET",
    "entity_stats",
    "parse_step",
    "serialize_step",
]


class StepParseError(ValueError):
    """Base class for all reader failures."""


class StepSyntaxError(StepParseError):
    def __init__(self, message: str, pos: int, text: str = ""):
        line = text.count("\n", 0, pos) + 1 if text else 0
        col = pos - text.rfind("\n", 0, pos) if text else 0
        super().__init__(f"{message} (offset {pos}, line {line}, col {col})")
        self.pos = pos
        self.line = line
        self.col = col


class DanglingReferenceError(StepParseError):
    def __init__(self, source_id: int, target_id: int):
        super().__init__(f"#{source_id} references undefined instance #{target_id}")
        self.source_id = source_id
        self.target_id = target_id


class MissingDataSectionError(StepParseError):
    pass


class Ref(NamedTuple):
    id: int

    def __repr__(self) -> str:
        return f"#{self.id}"


class Enum(NamedTuple):
    name: str

    def __repr__(self) -> str:
        return f".{self.name}."


class Binary(NamedTuple):
    bits: str


class Typed(NamedTuple):
    """Typed parameter such as ``LENGTH_MEASURE(2.5)``."""

    keyword: str
    args: tuple


class _Sentinel:
    __slots__ = ("token",)

    def __init__(self, token: str):
        self.token = token

    def __repr__(self) -> str:
        return self.token

    def __reduce__(self):
        return (_sentinel, (self.token,))


def _sentinel(token: str) -> "_Sentinel":
    return DERIVED if token == "*" else UNSET


DERIVED = _Sentinel("*")
UNSET = _Sentinel("$")


@dataclass(frozen=True)
class EntityRecord:
    """One instance. Complex (multi-keyword) instances keep every constituent in ``parts``."""

    keyword: str
    args: tuple
    parts: Tuple[Tuple[str, tuple], ...] = ()

    @property
    def is_complex(self) -> bool:
        return bool(self.parts)

    @property
    def keywords(self) -> Tuple[str, ...]:
        if self.parts:
            return tuple(kw for kw, _ in self.parts)
        return (self.keyword,)

    def part(self, keyword: str) -> Optional[tuple]:
        """Arguments of constituent ``keyword`` (or of the simple record itself)."""
        if not self.parts:
            return self.args if self.keyword == keyword else None
        for kw, args in self.parts:
            if kw == keyword:
                return args
        return None

    def has(self, keyword: str) -> bool:
        return keyword in self.keywords


@dataclass
class StepEntityGraph:
    entities: Dict[int, EntityRecord] = field(default_factory=dict)
    header: Dict[str, tuple] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entities)

    def __getitem__(self, key: int | Ref) -> EntityRecord:
        if isinstance(key, Ref):
            key = key.id
        return self.entities[key]

    def by_keyword(self, keyword: str) -> List[int]:
        return [i for i, rec in self.entities.items() if rec.has(keyword)]

    @property
    def schema(self) -> Tuple[str, ...]:
        args = self.header.get("FILE_SCHEMA")
        if not args or not isinstance(args[0], tuple):
            return ()
        return tuple(s for s in args[0] if isinstance(s, str))


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+|/\*.*?\*/)
  | (?P<string>'(?:[^']|'')*')
  | (?P<ref>\#\d+)
  | (?P<enum>\.[A-Za-z_][A-Za-z0-9_]*\.)
  | (?P<number>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<keyword>!?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<binary>"[0-9A-Fa-f]*")
  | (?P<punct>[(),;=$*])
    """,
    re.VERBOSE | re.DOTALL,
)

_END_OF_INPUT = ("eof", None, -1)


def _tokenize(text: str, start: int, end: int) -> List[Tuple[str, Any, int]]:
    tokens: List[Tuple[str, Any, int]] = []
    append = tokens.append
    pos = start
    match = _TOKEN_RE.match
    while pos < end:
        m = match(text, pos, end)
        if m is None:
            raise StepSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            append((kind, value, pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str, tokens: List[Tuple[str, Any, int]]):
        self.text = text
        self.tokens = tokens
        self.i = 0

    def peek(self) -> Tuple[str, Any, int]:
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return _END_OF_INPUT

    def next(self) -> Tuple[str, Any, int]:
        tok = self.peek()
        self.i += 1
        return tok

    def fail(self, message: str, tok: Optional[Tuple[str, Any, int]] = None):
        tok = tok or self.peek()
        pos = tok[2] if tok[2] >= 0 else len(self.text)
        raise StepSyntaxError(message, pos, self.text)

    def expect(self, value: str) -> None:
        tok = self.next()
        if tok[1] != value:
            self.fail(f"expected {value!r}, found {tok[1]!r}", tok)

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def value(self) -> Any:
        kind, val, _ = tok = self.next()
        if kind == "number":
            if "." in val or "e" in val or "E" in val:
                return float(val)
            return int(val)
        if kind == "ref":
            return Ref(int(val[1:]))
        if kind == "string":
            return val[1:-1].replace("''", "'")
        if kind == "enum":
            return Enum(val[1:-1])
        if kind == "punct":
            if val == "(":
                return self.list_tail()
            if val == "$":
                return UNSET
            if val == "*":
                return DERIVED
        if kind == "keyword":
            self.expect("(")
            return Typed(val, self.list_tail())
        if kind == "binary":
            return Binary(val[1:-1])
        self.fail(f"unexpected token {val!r}", tok)

    def list_tail(self) -> tuple:
        # the opening parenthesis has been consumed
        items = []
        if self.peek()[1] == ")":
            self.next()
            return ()
        while True:
            items.append(self.value())
            kind, val, _ = tok = self.next()
            if val == ")":
                return tuple(items)
            if val != ",":
                self.fail(f"expected ',' or ')', found {val!r}", tok)

    def simple_record(self) -> Tuple[str, tuple]:
        kind, kw, _ = tok = self.next()
        if kind != "keyword":
            self.fail(f"expected entity keyword, found {kw!r}", tok)
        self.expect("(")
        return kw.upper(), self.list_tail()

    def instance(self) -> Tuple[int, EntityRecord]:
        kind, val, _ = tok = self.next()
        if kind != "ref":
            self.fail(f"expected instance name, found {val!r}", tok)
        inst_id = int(val[1:])
        self.expect("=")
        if self.peek()[1] == "(":
            self.next()
            parts = []
            while self.peek()[1] != ")":
                if self.at_end():
                    self.fail("unterminated complex instance")
                parts.append(self.simple_record())
            self.next()
            if not parts:
                self.fail("empty complex instance", tok)
            record = EntityRecord(" ".join(kw for kw, _ in parts), (), tuple(parts))
        else:
            kw, args = self.simple_record()
            record = EntityRecord(kw, args)
        self.expect(";")
        return inst_id, record


_SECTION_RE = re.compile(
    r"'(?:[^']|'')*'|/\*.*?\*/|(?<![\w#.])(HEADER|DATA|ENDSEC|END-ISO-10303-21)\s*(?:\([^;]*\))?\s*;",
    re.DOTALL,
)


def _iter_sections(text: str, start: int) -> Iterator[Tuple[str, int, int]]:
    """Yield (section, body_start, body_end); string literals and comments are skipped."""
    current: Optional[Tuple[str, int]] = None
    for m in _SECTION_RE.finditer(text, start):
        name = m.group(1)
        if name is None:
            continue
        pos = m.start()
        if name in ("HEADER", "DATA"):
            if current is not None:
                raise StepSyntaxError(f"{name} section opened inside {current[0]}", pos, text)
            current = (name, m.end())
        elif name == "ENDSEC":
            if current is None:
                raise StepSyntaxError("ENDSEC without open section", pos, text)
            yield current[0], current[1], pos
            current = None
        else:
            if current is not None:
                raise StepSyntaxError(f"unterminated {current[0]} section", pos, text)
            return
    if current is not None:
        raise StepSyntaxError(f"unterminated {current[0]} section", len(text), text)


_MAGIC = "ISO-10303-21;"


def parse_step(data: bytes | str) -> StepEntityGraph:
    """Parse a Part-21 exchange structure into a fully resolved entity graph.

    Raises :class:`StepSyntaxError` (with byte offset, line and column),
    :class:`DanglingReferenceError` or :class:`MissingDataSectionError`.
    """
    text = data.decode("latin-1") if isinstance(data, (bytes, bytearray)) else data
    start = len(text) - len(text.lstrip())
    if not text.startswith(_MAGIC, start):
        raise StepSyntaxError("missing ISO-10303-21 magic", start, text)

    graph = StepEntityGraph()
    saw_data = False
    for section, body_start, body_end in _iter_sections(text, start + len(_MAGIC)):
        parser = _Parser(text, _tokenize(text, body_start, body_end))
        if section == "HEADER":
            while not parser.at_end():
                kw, args = parser.simple_record()
                parser.expect(";")
                graph.header[kw] = args
            continue
        saw_data = True
        entities = graph.entities
        while not parser.at_end():
            tok = parser.peek()
            inst_id, record = parser.instance()
            if inst_id in entities:
                parser.fail(f"duplicate instance #{inst_id}", tok)
            entities[inst_id] = record
    if not saw_data:
        raise MissingDataSectionError("no DATA section")

    _check_references(graph)
    return graph


def _refs_in(value: Any) -> Iterator[int]:
    if isinstance(value, Ref):
        yield value.id
    elif isinstance(value, Typed):
        for item in value.args:
            yield from _refs_in(item)
    elif isinstance(value, tuple) and not isinstance(value, (Enum, Binary)):
        for item in value:
            yield from _refs_in(item)


def _check_references(graph: StepEntityGraph) -> None:
    entities = graph.entities
    for inst_id, record in entities.items():
        arg_sets = [args for _, args in record.parts] if record.parts else [record.args]
        for args in arg_sets:
            for target in _refs_in(args):
                if target not in entities:
                    raise DanglingReferenceError(inst_id, target)


def entity_stats(graph: StepEntityGraph) -> Dict[str, int]:
    """Keyword histogram; each constituent of a complex instance is counted once."""
    counts: Counter = Counter()
    for record in graph.entities.values():
        counts.update(record.keywords)
    return dict(counts)


def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError(f"non-finite real {x!r} cannot be written to Part 21")
    text = repr(x)
    mantissa, _, exponent = text.partition("e")
    if "." not in mantissa:
        mantissa += "."
    return f"{mantissa}E{exponent}" if exponent else mantissa


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return ".T." if value else ".F."
    if isinstance(value, Ref):
        return f"#{value.id}"
    if isinstance(value, Enum):
        return f".{value.name}."
    if isinstance(value, Binary):
        return f'"{value.bits}"'
    if isinstance(value, Typed):
        return f"{value.keyword}({_format_args(value.args)})"
    if isinstance(value, _Sentinel):
        return value.token
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _format_float(value)
    if isinstance(value, tuple):
        return f"({_format_args(value)})"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def _format_args(args: Iterable[Any]) -> str:
    return ",".join(_format_value(a) for a in args)


def format_record(inst_id: int, record: EntityRecord) -> str:
    if record.parts:
        body = "(" + " ".join(f"{kw}({_format_args(args)})" for kw, args in record.parts) + ")"
    else:
        body = f"{record.keyword}({_format_args(record.args)})"
    return f"#{inst_id}={body};"


def serialize_step(graph: StepEntityGraph) -> str:
    lines = [_MAGIC, "HEADER;"]
    header = dict(graph.header)
    header.setdefault("FILE_DESCRIPTION", ((), "2;1"))
    header.setdefault("FILE_NAME", ("", "", (), (), "", "", ""))
    header.setdefault("FILE_SCHEMA", (("AUTOMOTIVE_DESIGN",),))
    for kw, args in header.items():
        lines.append(f"{kw}({_format_args(args)});")
    lines.append("ENDSEC;")
    lines.append("DATA;")
    for inst_id in sorted(graph.entities):
        lines.append(format_record(inst_id, graph.entities[inst_id]))
    lines.append("ENDSEC;")
    lines.append("END-ISO-10303-21;")
    return "\n".join(lines) + "\n"
