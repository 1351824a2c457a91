"""Turn raw source bytes into subdocuments.

Every extractor is a pure function of its input bytes.  Binary headers are
read at fixed little-endian offsets with ``struct``; CSV goes through the
standard ``csv`` module.
"""
from __future__ import annotations

import csv
import io
import posixpath
import re
import struct
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Literal
from urllib.parse import urlparse

from .model import (
    Attribute,
    Cell,
    ImagePayload,
    PlainText,
    RelationalView,
    Sound,
    Subdocument,
    TaggedText,
    TemporalPayload,
    TextPayload,
    Video,
)

SourceType = Literal["auto", "text", "tagged", "view", "image", "temporal"]
SOURCE_TYPES = ("auto", "text", "tagged", "view", "image", "temporal")
VIEW_MODES = ("full", "intension")

BMP_MAGIC = b"BM"
PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
INCHES_PER_METER = Decimal("0.0254")


class ExtractError(Exception):
    pass


class UnrecognizedSource(ExtractError):
    def __init__(self, location: str):
        super().__init__(f"cannot determine the type of {location}")
        self.location = location


class DecodeError(ExtractError):
    def __init__(self, offset: int):
        super().__init__(f"invalid UTF-8 at byte {offset}")
        self.offset = offset


class NotTagged(ExtractError):
    pass


class NoHeader(ExtractError):
    pass


class RaggedRow(ExtractError):
    def __init__(self, row: int, got: int, expected: int):
        super().__init__(f"row {row} has {got} cells, header has {expected}")
        self.row = row


class DuplicateAttribute(ExtractError):
    def __init__(self, name: str):
        super().__init__(f"attribute {name!r} appears twice in the header")
        self.name = name


class TruncatedHeader(ExtractError):
    pass


class UnsupportedImageFormat(ExtractError):
    pass


class MissingChunk(ExtractError):
    def __init__(self, name: str):
        super().__init__(f"RIFF chunk {name!r} not found")
        self.name = name


class UnsupportedCodec(ExtractError):
    def __init__(self, format_tag: int):
        super().__init__(f"WAVE format tag {format_tag} is not PCM")
        self.format_tag = format_tag


@dataclass(frozen=True)
class SourceSpec:
    location: str
    declared_type: SourceType = "auto"
    language: str | None = None
    keywords: tuple[str, ...] = ()
    view_mode: str = "full"
    query: str | None = None
    # temporal fields supplied by hand (video containers are not parsed)
    duration: float | None = None
    speed: float | None = None
    kind: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "keywords", tuple(self.keywords))


def basename(location: str) -> str:
    if re.match(r"^[a-zA-Z][a-zA-Z0-9+.-]*://", location):
        location = urlparse(location).path
    return posixpath.basename(location.replace("\\", "/").rstrip("/")) or location


def extension(location: str) -> str:
    return posixpath.splitext(basename(location))[1].lower()


# --------------------------------------------------------------------------
# Type sniffing

_TAGGED_EXTENSIONS = {".html": "HTML", ".htm": "HTML", ".xml": "XML", ".sgml": "SGML"}


def is_wave(data: bytes) -> bool:
    return len(data) >= 12 and data[:4] == b"RIFF" and data[8:12] == b"WAVE"


def sniff_type(data: bytes, location: str) -> str:
    if data.startswith(BMP_MAGIC) or data.startswith(PNG_MAGIC):
        return "image"
    if is_wave(data):
        return "temporal"
    ext = extension(location)
    if ext in _TAGGED_EXTENSIONS:
        return "tagged"
    if ext == ".csv":
        return "view"
    if ext == ".txt":
        return "text"
    try:
        data.decode("utf-8")
    except UnicodeDecodeError:
        raise UnrecognizedSource(location) from None
    return "text"


# --------------------------------------------------------------------------
# Text

def decode_utf8(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(exc.start) from None


def count_text(content: str) -> tuple[int, int]:
    """(characters, lines) after CRLF is folded to LF."""
    content = content.replace("\r\n", "\n")
    lines = content.count("\n")
    if content and not content.endswith("\n"):
        lines += 1
    return len(content), lines


def extract_plain_text(data: bytes) -> TextPayload:
    content = decode_utf8(data).replace("\r\n", "\n")
    nb_char, nb_lines = count_text(content)
    return TextPayload(nb_char, nb_lines, PlainText(content))


_TAG = re.compile(
    r"<([A-Za-z][A-Za-z0-9:._-]*)"
    r"((?:\s+[^\s=/>]+(?:\s*=\s*(?:\"[^\"]*\"|'[^']*'|[^\s>]+))?)*)"
    r"\s*/?>"
)
_ANY_TAG = re.compile(r"<[A-Za-z/!?][^<>]*>")
_ATTR = re.compile(r"([^\s=/>]+)(?:\s*=\s*(?:\"([^\"]*)\"|'([^']*)'|([^\s>]+)))?")
_COMMENT = re.compile(r"<!--.*?-->", re.S)
_XML_ENTITIES = {"&lt;": "<", "&gt;": ">", "&quot;": '"', "&apos;": "'", "&amp;": "&"}
_XML_ENTITY = re.compile("|".join(map(re.escape, _XML_ENTITIES)))


def extract_links(content: str) -> list[str]:
    """``href``/``src`` attribute values in document order."""
    links = []
    for tag in _TAG.finditer(_COMMENT.sub("", content)):
        for attr in _ATTR.finditer(tag.group(2)):
            if attr.group(1).lower() not in ("href", "src"):
                continue
            raw = next((g for g in attr.group(2, 3, 4) if g is not None), None)
            if raw is None:
                continue
            value = _XML_ENTITY.sub(lambda m: _XML_ENTITIES[m.group()], raw)
            if value:
                links.append(value)
    return links


def extract_tagged_text(data: bytes) -> TextPayload:
    content = decode_utf8(data)
    if not _ANY_TAG.search(content):
        raise NotTagged("no markup tags found")
    nb_char, nb_lines = count_text(content)
    return TextPayload(nb_char, nb_lines, TaggedText(content, tuple(extract_links(content))))


def tagged_label(content: str, location: str) -> str:
    label = _TAGGED_EXTENSIONS.get(extension(location))
    if label:
        return label
    head = content.lstrip()[:200].lower()
    if head.startswith("<?xml"):
        return "XML"
    if head.startswith("<!doctype html") or head.startswith("<html"):
        return "HTML"
    return "SGML"


# --------------------------------------------------------------------------
# Relational views

_INTEGER = re.compile(r"[+-]?[0-9]+")
_REAL = re.compile(r"[+-]?(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?")
_DATE = re.compile(r"[0-9]{4}-[0-9]{2}-[0-9]{2}")


def infer_domain(values: list[str]) -> str:
    if not values:
        return "text"
    for domain, pattern in (("integer", _INTEGER), ("real", _REAL), ("date", _DATE)):
        if all(pattern.fullmatch(v) for v in values):
            return domain
    return "text"


def extract_view(data: bytes, mode: str = "full", query: str | None = None) -> RelationalView:
    if mode not in VIEW_MODES:
        raise ValueError(f"unknown view mode {mode!r}")
    rows = [r for r in csv.reader(io.StringIO(decode_utf8(data), newline="")) if r]
    if not rows:
        raise NoHeader("empty view source")
    header, body = rows[0], rows[1:]
    seen = set()
    for name in header:
        if name in seen:
            raise DuplicateAttribute(name)
        seen.add(name)
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise RaggedRow(i, len(row), len(header))
    attributes = tuple(
        Attribute(name, infer_domain([row[j] for row in body if row[j] != ""]))
        for j, name in enumerate(header)
    )
    tuples = ()
    if mode == "full":
        tuples = tuple(
            tuple(Cell(name, value if value != "" else None) for name, value in zip(header, row))
            for row in body
        )
    return RelationalView(attributes, tuples, query)


def render_view_csv(view: RelationalView) -> str:
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\r\n")
    names = view.attribute_names
    writer.writerow(names)
    for row in view.tuples:
        cells = {c.att_name_ref: c.value for c in row}
        writer.writerow(["" if cells.get(n) is None else cells[n] for n in names])
    return out.getvalue()


# --------------------------------------------------------------------------
# Images

def ppm_to_dpi(ppm: int) -> int | None:
    if ppm <= 0:
        return None
    dpi = (Decimal(ppm) * INCHES_PER_METER).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return int(dpi) or None


def _bmp(data: bytes) -> ImagePayload:
    if len(data) < 54:
        raise TruncatedHeader(f"BMP header needs 54 bytes, got {len(data)}")
    (dib_size,) = struct.unpack_from("<I", data, 14)
    if dib_size < 40:
        raise UnsupportedImageFormat(f"BMP DIB header of {dib_size} bytes is not BITMAPINFOHEADER")
    width, height = struct.unpack_from("<ii", data, 18)
    (compression,) = struct.unpack_from("<I", data, 30)
    (x_ppm,) = struct.unpack_from("<i", data, 38)
    return ImagePayload(
        compression="None" if compression == 0 else str(compression),
        format="Bitmap",
        resolution=ppm_to_dpi(x_ppm),
        length=abs(height) or None,
        width=abs(width) or None,
    )


def _png_chunks(data: bytes):
    pos = len(PNG_MAGIC)
    while pos + 8 <= len(data):
        length, kind = struct.unpack_from(">I4s", data, pos)
        start = pos + 8
        if start + length > len(data):
            return
        yield kind, data[start : start + length]
        if kind == b"IEND":
            return
        pos = start + length + 4


def _png(data: bytes) -> ImagePayload:
    chunks = _png_chunks(data)
    first = next(chunks, None)
    if first is None or first[0] != b"IHDR" or len(first[1]) < 13:
        raise TruncatedHeader("PNG IHDR chunk missing or short")
    width, height = struct.unpack_from(">II", first[1])
    resolution = None
    for kind, body in chunks:
        if kind == b"pHYs" and len(body) >= 9:
            x_ppu, _, unit = struct.unpack_from(">IIB", body)
            if unit == 1:
                resolution = ppm_to_dpi(x_ppu)
        elif kind == b"IDAT":
            break
    return ImagePayload(
        compression="Deflate", format="PNG", resolution=resolution,
        length=height or None, width=width or None,
    )


def extract_image(data: bytes) -> ImagePayload:
    if data.startswith(BMP_MAGIC):
        return _bmp(data)
    if data.startswith(PNG_MAGIC):
        return _png(data)
    raise UnsupportedImageFormat("neither a BMP nor a PNG signature")


# --------------------------------------------------------------------------
# Sound

def riff_chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        kind, size = struct.unpack_from("<4sI", data, pos)
        start = pos + 8
        yield kind.decode("latin-1"), start, min(size, len(data) - start)
        pos = start + size + (size & 1)


def extract_temporal(data: bytes, location: str = "") -> TemporalPayload:
    if len(data) < 12:
        raise TruncatedHeader(f"RIFF header needs 12 bytes, got {len(data)}")
    if not is_wave(data):
        raise ExtractError("not a RIFF/WAVE file")
    fmt = None
    data_len = None
    for kind, start, size in riff_chunks(data):
        if kind == "fmt " and fmt is None:
            if size < 16:
                raise TruncatedHeader("fmt chunk shorter than 16 bytes")
            fmt = struct.unpack_from("<HHII", data, start)
        elif kind == "data" and data_len is None:
            data_len = size
    if fmt is None:
        raise MissingChunk("fmt ")
    if data_len is None:
        raise MissingChunk("data")
    format_tag, _channels, sample_rate, byte_rate = fmt
    if format_tag != 1:
        raise UnsupportedCodec(format_tag)
    if byte_rate == 0:
        raise TruncatedHeader("byte rate is zero")
    duration = (Decimal(data_len) / Decimal(byte_rate)).quantize(
        Decimal("0.001"), rounding=ROUND_HALF_UP)
    return TemporalPayload(
        duration=float(duration),
        speed=sample_rate,
        kind=Sound(basename(location) or None),
    )


# --------------------------------------------------------------------------
# Dispatch

def resolve_type(spec: SourceSpec, data: bytes) -> str:
    if spec.declared_type != "auto":
        return spec.declared_type
    if spec.kind == "video":
        return "temporal"
    return sniff_type(data, spec.location)


def build_subdocument(spec: SourceSpec, data: bytes) -> Subdocument:
    kind = resolve_type(spec, data)
    if kind == "text":
        label, payload = "Text", extract_plain_text(data)
    elif kind == "tagged":
        try:
            payload = extract_tagged_text(data)
            label = tagged_label(payload.body.content, spec.location)
        except NotTagged:
            label, payload = "Text", extract_plain_text(data)
    elif kind == "view":
        label, payload = "View", extract_view(data, spec.view_mode, spec.query)
    elif kind == "image":
        label, payload = "Image", extract_image(data)
    elif kind == "temporal":
        if spec.kind == "video":
            label = "Video"
            payload = TemporalPayload(spec.duration, spec.speed, Video(basename(spec.location)))
        else:
            label, payload = "Sound", extract_temporal(data, spec.location)
    else:
        raise UnrecognizedSource(spec.location)
    return Subdocument(
        doc_name=basename(spec.location),
        doc_type=label,
        size=len(data),
        location=spec.location,
        payload=payload,
        language=spec.language,
        keywords=spec.keywords,
    )
