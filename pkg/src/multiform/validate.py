"""Conformance checking of XML documents against a ``DtdTable``."""
from __future__ import annotations

import re
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterator

from .dtd import (
    ContentModel,
    DtdTable,
    PositionAutomaton,
    Text,
    model_names,
    position_automaton,
)

UNKNOWN_ELEMENT = "UnknownElement"
UNEXPECTED_CHILD = "UnexpectedChild"
MISSING_CHILD = "MissingChild"
TEXT_IN_COMPOSITE = "TextInComposite"
CHILD_IN_ATOMIC = "ChildInAtomic"
TRAILING_CHILDREN = "TrailingChildren"


@dataclass
class Node:
    name: str
    children: list[Node] = field(default_factory=list)
    text: str = ""
    line: int = 0

    def find_all(self, name: str) -> list[Node]:
        return [c for c in self.children if c.name == name]

    def find(self, name: str) -> Node | None:
        for c in self.children:
            if c.name == name:
                return c
        return None

    def iter(self) -> Iterator[Node]:
        yield self
        for child in self.children:
            yield from child.iter()


class NotWellFormed(ValueError):
    def __init__(self, line: int, detail: str):
        super().__init__(f"line {line}: {detail}")
        self.line = line
        self.detail = detail


_TAG = re.compile(r"<(/?)([A-Za-z_:][A-Za-z0-9._:\-]*)\s*(/?)>")
_ENTITY = re.compile(r"&(amp|lt|gt|quot|apos|#[0-9]+|#x[0-9A-Fa-f]+);")
_NAMED = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}


def _decode_entities(s: str, line: int) -> str:
    def sub(m: re.Match) -> str:
        ref = m.group(1)
        if ref in _NAMED:
            return _NAMED[ref]
        return chr(int(ref[2:], 16) if ref[1] == "x" else int(ref[1:]))

    out = _ENTITY.sub(sub, s)
    if "&" in _ENTITY.sub("", s):
        raise NotWellFormed(line, "unknown or malformed entity reference")
    return out


def parse_document(text: str) -> Node:
    """Read the element tree of a document without attributes or namespaces.

    The prolog, doctype, comments and processing instructions are skipped;
    CDATA sections become plain text.
    """
    pos = 0
    line = 1
    stack: list[Node] = []
    root: Node | None = None

    def advance(to: int) -> None:
        nonlocal pos, line
        line += text.count("\n", pos, to)
        pos = to

    while pos < len(text):
        lt = text.find("<", pos)
        if lt < 0:
            lt = len(text)
        if lt > pos:
            chunk = text[pos:lt]
            if stack:
                stack[-1].text += _decode_entities(chunk, line)
            elif chunk.strip():
                raise NotWellFormed(line, "text outside the root element")
            advance(lt)
            continue
        for opener, closer, what in (("<?", "?>", "processing instruction"),
                                     ("<!--", "-->", "comment")):
            if text.startswith(opener, pos):
                end = text.find(closer, pos)
                if end < 0:
                    raise NotWellFormed(line, f"unterminated {what}")
                advance(end + len(closer))
                break
        else:
            if text.startswith("<![CDATA[", pos):
                end = text.find("]]>", pos)
                if end < 0 or not stack:
                    raise NotWellFormed(line, "misplaced or unterminated CDATA section")
                stack[-1].text += text[pos + 9 : end]
                advance(end + 3)
            elif text.startswith("<!DOCTYPE", pos):
                if root is not None or stack:
                    raise NotWellFormed(line, "doctype after the root element")
                end = text.find(">", pos)
                if end < 0:
                    raise NotWellFormed(line, "unterminated doctype")
                advance(end + 1)
            else:
                m = _TAG.match(text, pos)
                if not m:
                    raise NotWellFormed(line, "malformed tag")
                closing, name, empty = m.group(1), m.group(2), m.group(3)
                if closing and empty:
                    raise NotWellFormed(line, "malformed tag")
                if closing:
                    if not stack or stack[-1].name != name:
                        open_name = stack[-1].name if stack else "nothing"
                        raise NotWellFormed(line, f"</{name}> closes {open_name}")
                    stack.pop()
                else:
                    if root is not None and not stack:
                        raise NotWellFormed(line, "more than one root element")
                    node = Node(name, line=line)
                    if stack:
                        stack[-1].children.append(node)
                    else:
                        root = node
                    if not empty:
                        stack.append(node)
                advance(m.end())
    if stack:
        raise NotWellFormed(line, f"unclosed element {stack[-1].name}")
    if root is None:
        raise NotWellFormed(line, "no root element")
    return root


@dataclass(frozen=True)
class Violation:
    path: str
    code: str
    detail: str

    def render(self) -> str:
        return f"{self.path}\t{self.code}\t{self.detail}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def extend(self, other: ValidationReport) -> None:
        self.violations.extend(other.violations)

    def render(self) -> str:
        return "".join(v.render() + "\n" for v in self.violations)


def child_paths(node: Node, path: str) -> list[str]:
    seen: dict[str, int] = {}
    paths = []
    for child in node.children:
        index = seen.get(child.name, 0)
        seen[child.name] = index + 1
        paths.append(f"{path}/{child.name}[{index}]")
    return paths


def match_children(table: DtdTable, element: str, names: list[str]) -> tuple[str, str] | None:
    """First (code, detail) mismatch of a child-name sequence, or None."""
    model = table[element]
    if isinstance(model, Text):
        if names:
            return CHILD_IN_ATOMIC, f"unexpected element {names[0]} in text-only {element}"
        return None
    automaton = _automaton(model)
    allowed = model_names(model)
    state = 0
    for name in names:
        nxt = automaton.step(state, name)
        if nxt is not None:
            state = nxt
            continue
        if name not in allowed:
            return UNEXPECTED_CHILD, f"{name} not allowed in {element}"
        if state in automaton.final:
            return TRAILING_CHILDREN, f"unexpected {name} after complete content"
        return MISSING_CHILD, "expected " + " or ".join(automaton.expected(state))
    if state not in automaton.final:
        return MISSING_CHILD, "expected " + " or ".join(automaton.expected(state))
    return None


@lru_cache(maxsize=None)
def _automaton(model: ContentModel) -> PositionAutomaton:
    return position_automaton(model)


def validate(tree: Node, table: DtdTable) -> ValidationReport:
    report = ValidationReport()
    if tree.name != table.root:
        code = UNEXPECTED_CHILD if tree.name in table else UNKNOWN_ELEMENT
        report.violations.append(Violation(tree.name, code, f"root must be {table.root}"))
        if tree.name not in table:
            return report
    stack = [(tree, tree.name)]
    while stack:
        node, path = stack.pop()
        if node.name not in table:
            report.violations.append(
                Violation(path, UNKNOWN_ELEMENT, f"element {node.name} is not declared"))
            continue
        atomic = isinstance(table[node.name], Text)
        if not atomic and node.text.strip():
            report.violations.append(
                Violation(path, TEXT_IN_COMPOSITE, f"text inside composite {node.name}"))
        else:
            found = match_children(table, node.name, [c.name for c in node.children])
            if found:
                report.violations.append(Violation(path, *found))
        stack.extend(reversed(list(zip(node.children, child_paths(node, path)))))
    return report


def validate_semantics(tree: Node) -> ValidationReport:
    """Every ATT_NAME_REF must name an ATTRIBUTE of the same view."""
    report = ValidationReport()

    def visit(node: Node, path: str) -> None:
        if node.name == "RELATIONAL_VIEW":
            declared = set()
            for attr in node.find_all("ATTRIBUTE"):
                for att_name in attr.find_all("ATT_NAME"):
                    declared.add(att_name.text)
            for tup, tup_path in zip(node.children, child_paths(node, path)):
                if tup.name != "TUPLE":
                    continue
                for cell, cell_path in zip(tup.children, child_paths(tup, tup_path)):
                    if cell.name == "ATT_NAME_REF" and cell.text not in declared:
                        report.violations.append(Violation(
                            cell_path, UNKNOWN_ELEMENT, f"dangling reference {cell.text!r}"))
        for child, child_path in zip(node.children, child_paths(node, path)):
            visit(child, child_path)

    visit(tree, tree.name)
    return report


def check_document(text: str, table: DtdTable) -> ValidationReport:
    """Structural validation, followed by the view reference check when it passes."""
    tree = parse_document(text)
    report = validate(tree, table)
    if report.ok:
        report.extend(validate_semantics(tree))
    return report
