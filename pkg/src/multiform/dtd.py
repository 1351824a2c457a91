"""Element-declaration DTD parsing and content-model queries.

Two atomic-element spellings are accepted:

* ``<!ELEMENT NAME PCDATA #REQUIRED>`` / ``<!ELEMENT NAME PCDATA #IMPLIED>``
  (the dialect used by the multiform DTD), and
* ``<!ELEMENT NAME (#PCDATA)>`` (standard syntax, read as implied).

``#REQUIRED`` text must be supplied by whoever emits the element; an
``#IMPLIED`` element with no value is written out empty.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from importlib import resources
from types import MappingProxyType
from typing import Iterator, Mapping, Union

TEXT_TOKEN = "#PCDATA"
CANONICAL_DTD_NAME = "mlfd.dtd"


class Cardinality(enum.Enum):
    EXACTLY_ONE = ""
    OPTIONAL = "?"
    ZERO_OR_MORE = "*"
    ONE_OR_MORE = "+"

    @property
    def nullable(self) -> bool:
        return self in (Cardinality.OPTIONAL, Cardinality.ZERO_OR_MORE)

    @property
    def repeats(self) -> bool:
        return self in (Cardinality.ZERO_OR_MORE, Cardinality.ONE_OR_MORE)

    def merge(self, outer: Cardinality) -> Cardinality:
        """Cardinality of ``(x<self>)<outer>`` collapsed onto ``x``."""
        if self is Cardinality.EXACTLY_ONE:
            return outer
        if outer is Cardinality.EXACTLY_ONE or outer is self:
            return self
        return Cardinality.ZERO_OR_MORE


class Presence(enum.Enum):
    REQUIRED = "#REQUIRED"
    IMPLIED = "#IMPLIED"


@dataclass(frozen=True)
class Text:
    presence: Presence = Presence.IMPLIED


@dataclass(frozen=True)
class Ref:
    name: str
    card: Cardinality = Cardinality.EXACTLY_ONE


@dataclass(frozen=True)
class Sequence:
    children: tuple[ContentModel, ...]
    card: Cardinality = Cardinality.EXACTLY_ONE


@dataclass(frozen=True)
class Choice:
    alternatives: tuple[ContentModel, ...]
    card: Cardinality = Cardinality.EXACTLY_ONE


ContentModel = Union[Text, Ref, Sequence, Choice]


@dataclass(frozen=True)
class DtdTable:
    root: str
    declarations: Mapping[str, ContentModel]
    declaration_order: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        object.__setattr__(self, "declarations", MappingProxyType(dict(self.declarations)))
        if not self.declaration_order:
            object.__setattr__(self, "declaration_order", tuple(self.declarations))

    def __getitem__(self, name: str) -> ContentModel:
        return self.declarations[name]

    def __contains__(self, name: object) -> bool:
        return name in self.declarations

    def __len__(self) -> int:
        return len(self.declarations)

    def is_atomic(self, name: str) -> bool:
        return isinstance(self.declarations[name], Text)

    def structurally_equal(self, other: DtdTable) -> bool:
        return (
            self.root == other.root
            and self.declaration_order == other.declaration_order
            and dict(self.declarations) == dict(other.declarations)
        )


class DtdError(Exception):
    pass


class DuplicateDeclaration(DtdError):
    def __init__(self, name: str):
        super().__init__(f"element {name} declared twice")
        self.name = name


class DtdSyntaxError(DtdError):
    def __init__(self, line: int, column: int, expected: str):
        super().__init__(f"line {line}, column {column}: expected {expected}")
        self.line = line
        self.column = column
        self.expected = expected


class EmptyDtd(DtdError):
    def __init__(self) -> None:
        super().__init__("no element declarations found")


class NondeterministicDtd(DtdError):
    pass


# --------------------------------------------------------------------------
# Parsing

_NAME = re.compile(r"[A-Za-z_:][A-Za-z0-9._:\-]*")
_SPACE = re.compile(r"\s*")


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def where(self, pos: int | None = None) -> tuple[int, int]:
        pos = self.pos if pos is None else pos
        line = self.text.count("\n", 0, pos) + 1
        column = pos - (self.text.rfind("\n", 0, pos) + 1) + 1
        return line, column

    def fail(self, expected: str) -> DtdSyntaxError:
        return DtdSyntaxError(*self.where(), expected)

    def skip_space(self) -> None:
        self.pos = _SPACE.match(self.text, self.pos).end()

    def at_end(self) -> bool:
        return self.pos >= len(self.text)

    def startswith(self, literal: str) -> bool:
        return self.text.startswith(literal, self.pos)

    def expect(self, literal: str) -> None:
        if not self.startswith(literal):
            raise self.fail(repr(literal))
        self.pos += len(literal)

    def name(self) -> str:
        m = _NAME.match(self.text, self.pos)
        if not m:
            raise self.fail("element name")
        self.pos = m.end()
        return m.group()

    def skip_through(self, terminator: str, what: str) -> None:
        end = self.text.find(terminator, self.pos)
        if end < 0:
            raise self.fail(f"{terminator!r} closing {what}")
        self.pos = end + len(terminator)

    def cardinality(self) -> Cardinality:
        for card in (Cardinality.OPTIONAL, Cardinality.ZERO_OR_MORE, Cardinality.ONE_OR_MORE):
            if self.startswith(card.value):
                self.pos += 1
                return card
        return Cardinality.EXACTLY_ONE


def _with_card(model: ContentModel, card: Cardinality) -> ContentModel:
    if isinstance(model, Ref):
        return Ref(model.name, model.card.merge(card))
    if isinstance(model, Sequence):
        return Sequence(model.children, model.card.merge(card))
    if isinstance(model, Choice):
        return Choice(model.alternatives, model.card.merge(card))
    return model


def _parse_group(sc: _Scanner) -> ContentModel:
    sc.expect("(")
    items: list[ContentModel] = []
    separator: str | None = None
    while True:
        sc.skip_space()
        if sc.startswith("#PCDATA"):
            raise sc.fail("element name or '(' (mixed content is not supported)")
        if sc.startswith("("):
            item = _parse_group(sc)
        else:
            item = Ref(sc.name())
        items.append(_with_card(item, sc.cardinality()))
        sc.skip_space()
        if sc.startswith(")"):
            sc.pos += 1
            break
        sep = sc.text[sc.pos : sc.pos + 1]
        if sep not in (",", "|") or (separator is not None and sep != separator):
            raise sc.fail(f"{separator!r} or ')'" if separator else "',', '|' or ')'")
        separator = sep
        sc.pos += 1
    if len(items) == 1:
        return items[0]
    if separator == "|":
        return Choice(tuple(items))
    return Sequence(tuple(items))


def _parse_contentspec(sc: _Scanner) -> ContentModel:
    if sc.startswith("PCDATA"):
        sc.pos += len("PCDATA")
        sc.skip_space()
        for presence in Presence:
            if sc.startswith(presence.value):
                sc.pos += len(presence.value)
                return Text(presence)
        raise sc.fail("'#REQUIRED' or '#IMPLIED'")
    if not sc.startswith("("):
        raise sc.fail("'PCDATA' or '('")
    mark = sc.pos
    sc.pos += 1
    sc.skip_space()
    if sc.startswith("#PCDATA"):
        sc.pos += len("#PCDATA")
        sc.skip_space()
        sc.expect(")")
        if sc.startswith("*"):
            sc.pos += 1
        return Text(Presence.IMPLIED)
    sc.pos = mark
    group = _parse_group(sc)
    return _with_card(group, sc.cardinality())


def _declarations(sc: _Scanner) -> Iterator[tuple[str, ContentModel, int]]:
    while True:
        sc.skip_space()
        if sc.at_end():
            return
        if sc.startswith("<!--"):
            sc.skip_through("-->", "comment")
        elif sc.startswith("<?"):
            sc.skip_through("?>", "processing instruction")
        elif sc.startswith("<!DOCTYPE"):
            m = re.compile(r"[^\[>]*").match(sc.text, sc.pos)
            sc.pos = m.end() + 1
        elif sc.startswith("]"):
            sc.pos += 1
            sc.skip_space()
            sc.expect(">")
        elif sc.startswith("<!ELEMENT"):
            start = sc.pos
            sc.pos += len("<!ELEMENT")
            if not sc.text[sc.pos : sc.pos + 1].isspace():
                raise sc.fail("whitespace after <!ELEMENT")
            sc.skip_space()
            name = sc.name()
            sc.skip_space()
            model = _parse_contentspec(sc)
            sc.skip_space()
            sc.expect(">")
            yield name, model, start
        else:
            raise sc.fail("'<!ELEMENT'")


def parse_dtd(text: str) -> DtdTable:
    sc = _Scanner(text)
    declarations: dict[str, ContentModel] = {}
    for name, model, _ in _declarations(sc):
        if name in declarations:
            raise DuplicateDeclaration(name)
        declarations[name] = model
    if not declarations:
        raise EmptyDtd()
    order = tuple(declarations)
    return DtdTable(root=order[0], declarations=declarations, declaration_order=order)


def load_canonical() -> DtdTable:
    """Parse the bundled multiform DTD and check it is deterministic."""
    text = resources.files("multiform").joinpath("assets", CANONICAL_DTD_NAME).read_text("utf-8")
    table = parse_dtd(text)
    assert_deterministic(table)
    return table


def canonical_dtd_path():
    return resources.files("multiform").joinpath("assets", CANONICAL_DTD_NAME)


# --------------------------------------------------------------------------
# Rendering

def render_model(model: ContentModel) -> str:
    if isinstance(model, Text):
        return f"PCDATA {model.presence.value}"
    return _render_particle(model)


def _render_particle(model: ContentModel) -> str:
    if isinstance(model, Ref):
        return model.name + model.card.value
    if isinstance(model, Sequence):
        inner = ", ".join(_render_particle(c) for c in model.children)
    elif isinstance(model, Choice):
        inner = " | ".join(_render_particle(c) for c in model.alternatives)
    else:
        raise TypeError(f"text cannot appear inside a group: {model!r}")
    return f"({inner}){model.card.value}"


def render_dtd(table: DtdTable) -> str:
    lines = []
    for name in table.declaration_order:
        model = table[name]
        body = render_model(model)
        if isinstance(model, Ref):
            body = f"({body})"
        lines.append(f"<!ELEMENT {name} {body}>")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Structural queries

def iter_refs(model: ContentModel) -> Iterator[Ref]:
    if isinstance(model, Ref):
        yield model
    elif isinstance(model, Sequence):
        for child in model.children:
            yield from iter_refs(child)
    elif isinstance(model, Choice):
        for alt in model.alternatives:
            yield from iter_refs(alt)


def iter_choices(model: ContentModel) -> Iterator[Choice]:
    if isinstance(model, Choice):
        yield model
        for alt in model.alternatives:
            yield from iter_choices(alt)
    elif isinstance(model, Sequence):
        for child in model.children:
            yield from iter_choices(child)


def link_check(table: DtdTable) -> list[str]:
    missing: list[str] = []
    for name in table.declaration_order:
        for ref in iter_refs(table[name]):
            if ref.name not in table and ref.name not in missing:
                missing.append(ref.name)
    return missing


def nullable(model: ContentModel) -> bool:
    if isinstance(model, Text):
        return True
    if model.card.nullable:
        return True
    if isinstance(model, Ref):
        return False
    if isinstance(model, Sequence):
        return all(nullable(c) for c in model.children)
    return any(nullable(a) for a in model.alternatives)


def first_set(model: ContentModel, table: DtdTable | None = None) -> frozenset[str]:
    """Names (or ``TEXT_TOKEN``) that can start a match of ``model``."""
    if isinstance(model, Text):
        return frozenset({TEXT_TOKEN})
    if isinstance(model, Ref):
        return frozenset({model.name})
    if isinstance(model, Choice):
        return frozenset().union(*(first_set(a, table) for a in model.alternatives))
    names: set[str] = set()
    for child in model.children:
        names |= first_set(child, table)
        if not nullable(child):
            break
    return frozenset(names)


def model_names(model: ContentModel) -> frozenset[str]:
    return frozenset(ref.name for ref in iter_refs(model))


# --------------------------------------------------------------------------
# Position automaton (Glushkov) for deterministic matching

@dataclass(frozen=True)
class PositionAutomaton:
    """Positions are numbered Ref occurrences; state 0 is the start state."""

    names: tuple[str, ...]
    start: tuple[int, ...]
    follow: tuple[tuple[int, ...], ...]
    final: frozenset[int]

    def candidates(self, state: int) -> tuple[int, ...]:
        return self.start if state == 0 else self.follow[state]

    def step(self, state: int, name: str) -> int | None:
        for pos in self.candidates(state):
            if self.names[pos] == name:
                return pos
        return None

    def expected(self, state: int) -> list[str]:
        seen: list[str] = []
        for pos in self.candidates(state):
            if self.names[pos] not in seen:
                seen.append(self.names[pos])
        return seen

    def ambiguities(self) -> list[str]:
        found = []
        for state in range(len(self.names)):
            if state and not self.follow[state]:
                continue
            names = [self.names[p] for p in self.candidates(state)]
            dups = sorted({n for n in names if names.count(n) > 1})
            if dups:
                where = "start" if state == 0 else f"after {self.names[state]}"
                found.append(f"{'/'.join(dups)} ambiguous at {where}")
        return found


def position_automaton(model: ContentModel) -> PositionAutomaton:
    names: list[str] = [""]
    follow: list[set[int]] = [set()]

    def walk(node: ContentModel) -> tuple[bool, set[int], set[int]]:
        if isinstance(node, Text):
            return True, set(), set()
        if isinstance(node, Ref):
            names.append(node.name)
            follow.append(set())
            pos = len(names) - 1
            null, first, last = False, {pos}, {pos}
        elif isinstance(node, Sequence):
            null, first, last = True, set(), set()
            for child in node.children:
                c_null, c_first, c_last = walk(child)
                for p in last:
                    follow[p] |= c_first
                if null:
                    first |= c_first
                last = last | c_last if c_null else c_last
                null = null and c_null
        else:
            null, first, last = False, set(), set()
            for alt in node.alternatives:
                a_null, a_first, a_last = walk(alt)
                null = null or a_null
                first |= a_first
                last |= a_last
        if node.card.repeats:
            for p in last:
                follow[p] |= first
        if node.card.nullable:
            null = True
        return null, first, last

    null, first, last = walk(model)
    final = set(last)
    if null:
        final.add(0)
    return PositionAutomaton(
        names=tuple(names),
        start=tuple(sorted(first)),
        follow=tuple(tuple(sorted(f)) for f in follow),
        final=frozenset(final),
    )


def nondeterminism(table: DtdTable) -> list[str]:
    """Describe every place where one-token lookahead cannot decide."""
    problems = []
    for name in table.declaration_order:
        model = table[name]
        for choice in iter_choices(model):
            firsts = [first_set(alt, table) for alt in choice.alternatives]
            for i in range(len(firsts)):
                for j in range(i + 1, len(firsts)):
                    shared = firsts[i] & firsts[j]
                    if shared:
                        problems.append(
                            f"{name}: choice alternatives {i} and {j} share {sorted(shared)}"
                        )
        problems.extend(f"{name}: {p}" for p in position_automaton(model).ambiguities())
    return problems


def assert_deterministic(table: DtdTable) -> None:
    problems = nondeterminism(table)
    if problems:
        raise NondeterministicDtd("; ".join(problems))
