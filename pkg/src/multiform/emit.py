"""DTD-driven XML emission with an explicit frame stack.

The emitter never recurses: it keeps a stack of ``Open``/``Close`` frames.
Popping an ``Open`` frame for an atomic element writes the whole element on
one line; for a composite element it writes the start tag, pushes the
matching ``Close`` and then the child frames in reverse so they pop in
document order.  Repetition counts and choice selection come from the
binding, checked against the content model as the children are expanded.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .dtd import (
    CANONICAL_DTD_NAME,
    Cardinality,
    Choice,
    ContentModel,
    DtdTable,
    Presence,
    Ref,
    Sequence,
    Text,
    first_set,
)

PROLOG = '<?xml version="1.0" encoding="UTF-8"?>'
INDENT = "  "
CDATA_ELEMENTS = frozenset({"CONTENT"})


@dataclass(frozen=True)
class ValueBinding:
    """A concrete value tree keyed by element name.

    Atomic elements carry ``value`` (``None`` meaning missing); composite
    elements carry ``children``.
    """

    element: str
    value: str | None = None
    children: tuple[ValueBinding, ...] | None = None

    @classmethod
    def leaf(cls, element: str, value: str | None) -> ValueBinding:
        return cls(element, value=value)

    @classmethod
    def node(cls, element: str, *children: ValueBinding) -> ValueBinding:
        return cls(element, children=tuple(children))

    @property
    def is_composite(self) -> bool:
        return self.children is not None

    def find_all(self, element: str) -> list[ValueBinding]:
        return [c for c in self.children or () if c.element == element]

    def find(self, element: str) -> ValueBinding | None:
        found = self.find_all(element)
        return found[0] if found else None

    def preorder(self):
        yield self
        for child in self.children or ():
            yield from child.preorder()


class EmitError(Exception):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class MissingRequired(EmitError):
    def __init__(self, path: str):
        super().__init__(path, "required value is missing")


class CardinalityViolation(EmitError):
    def __init__(self, path: str, expected: str, got: object):
        super().__init__(path, f"expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class ChoiceViolation(EmitError):
    def __init__(self, path: str, detail: str):
        super().__init__(path, detail)


class UnknownElement(EmitError):
    def __init__(self, name: str, path: str = ""):
        super().__init__(path or name, f"element {name} is not declared")
        self.name = name


class ShapeMismatch(EmitError):
    pass


def escape_text(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def wrap_cdata(s: str) -> str:
    return "<![CDATA[" + s.replace("]]>", "]]]]><![CDATA[>") + "]]>"


def render_value(element: str, value: str | None) -> str:
    if value is None:
        return ""
    if element in CDATA_ELEMENTS:
        return wrap_cdata(value)
    return escape_text(value)


def doctype_line(table: DtdTable, dtd_name: str = CANONICAL_DTD_NAME) -> str:
    return f'<!DOCTYPE {table.root} SYSTEM "{dtd_name}">'


_CARD_TEXT = {
    Cardinality.EXACTLY_ONE: "exactly 1",
    Cardinality.OPTIONAL: "at most 1",
    Cardinality.ONE_OR_MORE: "at least 1",
}


class _Expander:
    """Match one composite binding's children against its content model."""

    def __init__(self, table: DtdTable, binding: ValueBinding, path: str):
        self.table = table
        self.items = binding.children or ()
        self.path = path
        self.pos = 0
        self.out: list[ValueBinding] = []
        for child in self.items:
            if child.element not in table:
                raise UnknownElement(child.element, f"{path}/{child.element}")

    def peek(self) -> str | None:
        return self.items[self.pos].element if self.pos < len(self.items) else None

    def run(self, model: ContentModel) -> list[ValueBinding]:
        self.expand(model)
        if self.pos < len(self.items):
            raise CardinalityViolation(self.path, "end of content", self.peek())
        return self.out

    def expand(self, model: ContentModel) -> None:
        if isinstance(model, Ref):
            self.expand_ref(model)
            return
        card = model.card
        once = self.expand_sequence if isinstance(model, Sequence) else self.expand_choice
        first = first_set(model, self.table)
        if card is Cardinality.EXACTLY_ONE:
            once(model)
            return
        if card is Cardinality.OPTIONAL:
            if self.peek() in first:
                once(model)
            return
        if card is Cardinality.ONE_OR_MORE:
            once(model)
        while self.peek() in first:
            before = self.pos
            once(model)
            if self.pos == before:
                break

    def expand_sequence(self, model: Sequence) -> None:
        for child in model.children:
            self.expand(child)

    def expand_choice(self, model: Choice) -> None:
        firsts = [first_set(alt, self.table) for alt in model.alternatives]
        nxt = self.peek()
        chosen = next((i for i, f in enumerate(firsts) if nxt in f), None)
        if chosen is None:
            expected = " | ".join(sorted(set().union(*firsts)))
            raise ChoiceViolation(self.path, f"no alternative bound (expected one of {expected})")
        self.expand(model.alternatives[chosen])
        if model.card.repeats:
            return
        after = self.peek()
        if after is not None and any(after in f for f in firsts):
            raise ChoiceViolation(self.path, f"more than one alternative bound ({after})")

    def expand_ref(self, ref: Ref) -> None:
        start = self.pos
        while self.peek() == ref.name:
            self.pos += 1
        run = self.items[start : self.pos]
        count = len(run)
        card = ref.card
        if count == 0 and card is Cardinality.EXACTLY_ONE:
            target = self.table[ref.name]
            if isinstance(target, Text):
                if target.presence is Presence.REQUIRED:
                    raise MissingRequired(f"{self.path}/{ref.name}")
                # missing implied values become empty elements
                self.out.append(ValueBinding.leaf(ref.name, None))
                return
        ok = {
            Cardinality.EXACTLY_ONE: count == 1,
            Cardinality.OPTIONAL: count <= 1,
            Cardinality.ONE_OR_MORE: count >= 1,
            Cardinality.ZERO_OR_MORE: True,
        }[card]
        if not ok:
            raise CardinalityViolation(f"{self.path}/{ref.name}", _CARD_TEXT[card], count)
        self.out.extend(run)


def expand_children(table: DtdTable, binding: ValueBinding, path: str) -> list[ValueBinding]:
    """Bound children of a composite element, in the order they are written."""
    model = table[binding.element]
    if not binding.is_composite:
        raise ShapeMismatch(path, f"composite element {binding.element} bound to a value")
    return _Expander(table, binding, path).run(model)


@dataclass
class _Open:
    binding: ValueBinding
    depth: int
    path: str


@dataclass
class _Close:
    element: str
    depth: int


@dataclass
class _Counter:
    seen: dict[str, int] = field(default_factory=dict)

    def child_path(self, parent: str, element: str) -> str:
        index = self.seen.get(element, 0)
        self.seen[element] = index + 1
        return f"{parent}/{element}[{index}]"


def _atomic_line(table: DtdTable, binding: ValueBinding, path: str) -> str:
    model = table[binding.element]
    if binding.is_composite:
        raise ShapeMismatch(path, f"atomic element {binding.element} bound to children")
    if binding.value is None and model.presence is Presence.REQUIRED:
        raise MissingRequired(path)
    e = binding.element
    return f"<{e}>{render_value(e, binding.value)}</{e}>"


def emit_lines(table: DtdTable, binding: ValueBinding) -> list[str]:
    if binding.element not in table:
        raise UnknownElement(binding.element)
    if binding.element != table.root:
        raise ShapeMismatch(binding.element, f"root must be {table.root}")
    lines: list[str] = []
    stack: list[Union[_Open, _Close]] = [_Open(binding, 0, binding.element)]
    while stack:
        frame = stack.pop()
        if isinstance(frame, _Close):
            lines.append(f"{INDENT * frame.depth}</{frame.element}>")
            continue
        b, depth, path = frame.binding, frame.depth, frame.path
        if b.element not in table:
            raise UnknownElement(b.element, path)
        if isinstance(table[b.element], Text):
            lines.append(INDENT * depth + _atomic_line(table, b, path))
            continue
        children = expand_children(table, b, path)
        lines.append(f"{INDENT * depth}<{b.element}>")
        stack.append(_Close(b.element, depth))
        counter = _Counter()
        frames = [_Open(c, depth + 1, counter.child_path(path, c.element)) for c in children]
        stack.extend(reversed(frames))
    return lines


def emit(table: DtdTable, binding: ValueBinding, dtd_name: str = CANONICAL_DTD_NAME) -> str:
    body = emit_lines(table, binding)
    return "\n".join([PROLOG, doctype_line(table, dtd_name), *body]) + "\n"


def emit_reference(table: DtdTable, binding: ValueBinding,
                   dtd_name: str = CANONICAL_DTD_NAME) -> str:
    """Plain recursive serializer of a binding, used to cross-check ``emit``.

    It trusts the binding's shape and only consults the table to tell atomic
    elements from composite ones.
    """
    out = [PROLOG, doctype_line(table, dtd_name)]

    def write(b: ValueBinding, depth: int) -> None:
        pad = INDENT * depth
        if isinstance(table[b.element], Text):
            out.append(f"{pad}<{b.element}>{render_value(b.element, b.value)}</{b.element}>")
            return
        out.append(f"{pad}<{b.element}>")
        for child in b.children or ():
            write(child, depth + 1)
        out.append(f"{pad}</{b.element}>")

    write(binding, 0)
    return "\n".join(out) + "\n"
