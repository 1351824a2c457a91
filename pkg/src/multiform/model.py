"""Complex objects and the subdocument variants they are made of."""
from __future__ import annotations

import base64
from dataclasses import dataclass
from typing import Literal, Union

from .emit import ValueBinding

Domain = Literal["integer", "real", "date", "text", "blob"]
DOMAINS: tuple[str, ...] = ("integer", "real", "date", "text", "blob")


class InvariantViolation(ValueError):
    def __init__(self, path: str, description: str):
        super().__init__(f"{path}: {description}")
        self.path = path
        self.description = description


def _freeze(obj, *names: str) -> None:
    for name in names:
        object.__setattr__(obj, name, tuple(getattr(obj, name)))


@dataclass(frozen=True)
class PlainText:
    content: str


@dataclass(frozen=True)
class TaggedText:
    content: str
    links: tuple[str, ...] = ()

    def __post_init__(self):
        _freeze(self, "links")


@dataclass(frozen=True)
class TextPayload:
    nb_char: int
    nb_lines: int
    body: Union[PlainText, TaggedText]


@dataclass(frozen=True)
class Attribute:
    name: str
    domain: str = "text"


@dataclass(frozen=True)
class Cell:
    att_name_ref: str
    value: str | bytes | None = None


@dataclass(frozen=True)
class RelationalView:
    attributes: tuple[Attribute, ...]
    tuples: tuple[tuple[Cell, ...], ...] = ()
    query: str | None = None

    def __post_init__(self):
        _freeze(self, "attributes")
        object.__setattr__(self, "tuples", tuple(tuple(t) for t in self.tuples))

    @property
    def attribute_names(self) -> list[str]:
        return [a.name for a in self.attributes]


@dataclass(frozen=True)
class ImagePayload:
    compression: str | None = None
    format: str | None = None
    resolution: int | None = None
    length: int | None = None
    width: int | None = None


@dataclass(frozen=True)
class Sound:
    descriptor: str | None = None


@dataclass(frozen=True)
class Video:
    descriptor: str | None = None


@dataclass(frozen=True)
class TemporalPayload:
    duration: float | None
    speed: float | None
    kind: Union[Sound, Video]


Payload = Union[TextPayload, RelationalView, ImagePayload, TemporalPayload]


@dataclass(frozen=True)
class Subdocument:
    doc_name: str
    doc_type: str
    size: int
    location: str
    payload: Payload
    language: str | None = None
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        _freeze(self, "keywords")


@dataclass(frozen=True)
class ComplexObject:
    name: str
    date: str
    source: str
    subdocuments: tuple[Subdocument, ...]

    def __post_init__(self):
        _freeze(self, "subdocuments")


# --------------------------------------------------------------------------
# Invariants

def check_referential_integrity(view: RelationalView) -> list[tuple[int, str]]:
    """(tuple index, reference) for every cell naming an undeclared attribute."""
    declared = set(view.attribute_names)
    return [
        (i, cell.att_name_ref)
        for i, row in enumerate(view.tuples)
        for cell in row
        if cell.att_name_ref not in declared
    ]


def _view_violations(view: RelationalView, path: str) -> list[InvariantViolation]:
    found = []
    names = view.attribute_names
    if not names:
        found.append(InvariantViolation(path, "a view needs at least one attribute"))
    if len(set(names)) != len(names):
        found.append(InvariantViolation(path, "attribute names are not unique"))
    for attr in view.attributes:
        if attr.domain not in DOMAINS:
            found.append(InvariantViolation(path, f"unknown domain {attr.domain!r}"))
    for i, ref in check_referential_integrity(view):
        found.append(InvariantViolation(f"{path}/TUPLE[{i}]", f"dangling reference {ref!r}"))
    for i, row in enumerate(view.tuples):
        refs = [c.att_name_ref for c in row]
        if not refs:
            found.append(InvariantViolation(f"{path}/TUPLE[{i}]", "empty tuple"))
        known = [names.index(r) for r in refs if r in names]
        if len(set(refs)) != len(refs) or known != sorted(known):
            found.append(InvariantViolation(
                f"{path}/TUPLE[{i}]", "references must be unique and in attribute order"))
    return found


def _payload_violations(payload: Payload, path: str) -> list[InvariantViolation]:
    if isinstance(payload, TextPayload):
        found = []
        if payload.nb_char < 0 or payload.nb_lines < 0:
            found.append(InvariantViolation(path, "negative count"))
        if payload.nb_lines > payload.nb_char + 1:
            found.append(InvariantViolation(path, "more lines than characters allow"))
        if isinstance(payload.body, TaggedText) and any(not link for link in payload.body.links):
            found.append(InvariantViolation(path, "empty link"))
        return found
    if isinstance(payload, RelationalView):
        return _view_violations(payload, path)
    if isinstance(payload, ImagePayload):
        found = []
        for name in ("length", "width"):
            value = getattr(payload, name)
            if value is not None and value < 1:
                found.append(InvariantViolation(path, f"{name} must be at least 1"))
        if payload.resolution is not None and payload.resolution <= 0:
            found.append(InvariantViolation(path, "resolution must be positive"))
        return found
    if isinstance(payload, TemporalPayload):
        found = []
        if payload.duration is not None and payload.duration < 0:
            found.append(InvariantViolation(path, "negative duration"))
        if payload.speed is not None and payload.speed <= 0:
            found.append(InvariantViolation(path, "speed must be positive"))
        if not isinstance(payload.kind, (Sound, Video)):
            found.append(InvariantViolation(path, "kind must be Sound or Video"))
        return found
    return [InvariantViolation(path, f"unsupported payload {type(payload).__name__}")]


def object_violations(obj: ComplexObject) -> list[InvariantViolation]:
    found = []
    for field_name in ("name", "date", "source"):
        if not getattr(obj, field_name):
            found.append(InvariantViolation(field_name, "must not be empty"))
    if not obj.subdocuments:
        found.append(InvariantViolation("subdocuments", "at least one subdocument is required"))
    for i, sub in enumerate(obj.subdocuments):
        path = f"SUBDOCUMENT[{i}]"
        for field_name in ("doc_name", "doc_type", "location"):
            if not getattr(sub, field_name):
                found.append(InvariantViolation(f"{path}/{field_name}", "must not be empty"))
        if sub.size < 0:
            found.append(InvariantViolation(f"{path}/size", "must not be negative"))
        if any(not k for k in sub.keywords):
            found.append(InvariantViolation(f"{path}/keywords", "empty keyword"))
        if len(set(sub.keywords)) != len(sub.keywords):
            found.append(InvariantViolation(f"{path}/keywords", "duplicate keyword"))
        found.extend(_payload_violations(sub.payload, path))
    return found


# --------------------------------------------------------------------------
# Class -> element mapping

def format_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_size(n: int) -> str:
    return f"{n} Bytes"


def _leaf(element: str, value) -> ValueBinding:
    return ValueBinding.leaf(element, None if value is None else str(value))


def _cell_value(value: str | bytes | None) -> str | None:
    if isinstance(value, bytes):
        return base64.b64encode(value).decode("ascii")
    return value


def payload_binding(payload: Payload) -> ValueBinding:
    if isinstance(payload, TextPayload):
        body = payload.body
        if isinstance(body, TaggedText):
            chosen = ValueBinding.node(
                "TAGGED_TEXT",
                _leaf("CONTENT", body.content),
                *(_leaf("LINK", link) for link in body.links),
            )
        else:
            chosen = _leaf("PLAIN_TEXT", body.content)
        return ValueBinding.node(
            "TEXT", _leaf("NB_CHAR", payload.nb_char), _leaf("NB_LINES", payload.nb_lines), chosen)
    if isinstance(payload, RelationalView):
        children = []
        if payload.query is not None:
            children.append(_leaf("QUERY", payload.query))
        for attr in payload.attributes:
            children.append(ValueBinding.node(
                "ATTRIBUTE", _leaf("ATT_NAME", attr.name), _leaf("DOMAIN", attr.domain)))
        for row in payload.tuples:
            cells = []
            for cell in row:
                cells.append(_leaf("ATT_NAME_REF", cell.att_name_ref))
                cells.append(_leaf("VALUE", _cell_value(cell.value)))
            children.append(ValueBinding.node("TUPLE", *cells))
        return ValueBinding.node("RELATIONAL_VIEW", *children)
    if isinstance(payload, ImagePayload):
        return ValueBinding.node(
            "IMAGE",
            _leaf("COMPRESSION", payload.compression),
            _leaf("FORMAT", payload.format),
            _leaf("RESOLUTION", None if payload.resolution is None else f"{payload.resolution} dpi"),
            _leaf("LENGTH", payload.length),
            _leaf("WIDTH", payload.width),
        )
    is_video = isinstance(payload.kind, Video)
    unit = "fps" if is_video else "Hz"
    return ValueBinding.node(
        "TEMPORAL",
        _leaf("DURATION", None if payload.duration is None else f"{payload.duration:.3f} s"),
        _leaf("SPEED", None if payload.speed is None else f"{format_number(payload.speed)} {unit}"),
        _leaf("VIDEO" if is_video else "SOUND", payload.kind.descriptor),
    )


def subdocument_binding(sub: Subdocument) -> ValueBinding:
    children = [
        _leaf("DOC_NAME", sub.doc_name),
        _leaf("TYPE", sub.doc_type),
        _leaf("SIZE", format_size(sub.size)),
        _leaf("LOCATION", sub.location),
    ]
    if sub.language is not None:
        children.append(_leaf("LANGUAGE", sub.language))
    children.extend(_leaf("KEYWORD", k) for k in sub.keywords)
    children.append(payload_binding(sub.payload))
    return ValueBinding.node("SUBDOCUMENT", *children)


def to_binding(obj: ComplexObject) -> ValueBinding:
    violations = object_violations(obj)
    if violations:
        raise violations[0]
    return ValueBinding.node(
        "COMPLEX_OBJECT",
        _leaf("OBJ_NAME", obj.name),
        _leaf("DATE", obj.date),
        _leaf("SOURCE", obj.source),
        *(subdocument_binding(s) for s in obj.subdocuments),
    )
