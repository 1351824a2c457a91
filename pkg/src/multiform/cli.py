"""``mlfd`` command line: integrate, validate, inspect.

Exit statuses for ``integrate``: 1 manifest/input problem, 2 source fetch or
extraction failure, 3 emission failure, 4 the written document did not
validate (the file is removed).  ``validate`` exits 0 when the report is
empty, 4 when it is not and 1 when the input cannot be read or parsed.
"""
from __future__ import annotations

import argparse
import datetime
import os
import re
import sys
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import dtd as dtd_mod
from .emit import EmitError, emit
from .extract import SOURCE_TYPES, VIEW_MODES, ExtractError, SourceSpec, build_subdocument
from .model import ComplexObject, InvariantViolation, to_binding
from .validate import NotWellFormed, ValidationReport, check_document, parse_document, validate

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOURCE = 2
EXIT_EMIT = 3
EXIT_INVALID = 4

DEFAULT_TIMEOUT = 30.0
MAX_REDIRECTS = 5

OBJECT_KEYS = ("name", "date", "source")
SUBDOCUMENT_KEYS = (
    "location", "type", "language", "keywords", "view_mode", "query", "duration", "speed", "kind",
)
_DATE = re.compile(r"[0-9]{4}-[0-9]{2}-[0-9]{2}")
_URL = re.compile(r"^https?://", re.I)


class ManifestError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class SourceError(Exception):
    pass


@dataclass
class Manifest:
    name: str
    date: str
    source: str
    subdocuments: list[SourceSpec] = field(default_factory=list)


def _number(key: str, value: str, line: int) -> float:
    try:
        x = float(value)
    except ValueError:
        raise ManifestError(line, f"{key} must be a number, got {value!r}") from None
    if x != x or x in (float("inf"), float("-inf")):
        raise ManifestError(line, f"{key} must be finite")
    return x


def _subdocument_spec(entries: dict[str, tuple[str, int]], line: int) -> SourceSpec:
    def get(key: str, default=None):
        return entries[key][0] if key in entries else default

    if "location" not in entries or not get("location"):
        raise ManifestError(line, "[subdocument] needs a location")
    declared = get("type", "auto")
    if declared not in SOURCE_TYPES:
        raise ManifestError(entries["type"][1], f"unknown type {declared!r}")
    view_mode = get("view_mode", "full")
    if view_mode not in VIEW_MODES:
        raise ManifestError(entries["view_mode"][1], f"unknown view_mode {view_mode!r}")
    kind = get("kind")
    if kind is not None and kind not in ("sound", "video"):
        raise ManifestError(entries["kind"][1], f"kind must be sound or video, got {kind!r}")
    keywords: list[str] = []
    if "keywords" in entries:
        raw, kw_line = entries["keywords"]
        keywords = [k.strip() for k in raw.split(",")] if raw else []
        if any(not k for k in keywords):
            raise ManifestError(kw_line, "empty keyword")
        if len(set(keywords)) != len(keywords):
            raise ManifestError(kw_line, "duplicate keyword")
    duration = speed = None
    if "duration" in entries:
        duration = _number("duration", *entries["duration"])
        if duration < 0:
            raise ManifestError(entries["duration"][1], "duration must not be negative")
    if "speed" in entries:
        speed = _number("speed", *entries["speed"])
        if speed <= 0:
            raise ManifestError(entries["speed"][1], "speed must be positive")
    return SourceSpec(
        location=get("location"),
        declared_type=declared,
        language=get("language") or None,
        keywords=tuple(keywords),
        view_mode=view_mode,
        query=get("query"),
        duration=duration,
        speed=speed,
        kind=kind,
    )


def parse_manifest(text: str) -> Manifest:
    sections: list[tuple[str, int, dict[str, tuple[str, int]]]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            kind = line[1:-1].strip()
            if kind not in ("object", "subdocument"):
                raise ManifestError(lineno, f"unknown section [{kind}]")
            sections.append((kind, lineno, {}))
            continue
        if "=" not in line:
            raise ManifestError(lineno, "expected 'key = value'")
        if not sections:
            raise ManifestError(lineno, "entry outside a section")
        key, value = (part.strip() for part in line.split("=", 1))
        kind, _, entries = sections[-1]
        allowed = OBJECT_KEYS if kind == "object" else SUBDOCUMENT_KEYS
        if key not in allowed:
            raise ManifestError(lineno, f"unknown key {key!r} in [{kind}]")
        if key in entries:
            raise ManifestError(lineno, f"duplicate key {key!r}")
        entries[key] = (value, lineno)

    objects = [s for s in sections if s[0] == "object"]
    if len(objects) != 1:
        raise ManifestError(0, f"expected exactly one [object] section, found {len(objects)}")
    _, obj_line, header = objects[0]
    for key in OBJECT_KEYS:
        if not header.get(key, ("",))[0]:
            raise ManifestError(obj_line, f"[object] needs a non-empty {key}")
    date, date_line = header["date"]
    try:
        if not _DATE.fullmatch(date):
            raise ValueError
        datetime.date.fromisoformat(date)
    except ValueError:
        raise ManifestError(date_line, f"date must be YYYY-MM-DD, got {date!r}") from None
    specs = [_subdocument_spec(entries, line) for kind, line, entries in sections
             if kind == "subdocument"]
    if not specs:
        raise ManifestError(0, "at least one [subdocument] section is required")
    return Manifest(header["name"][0], date, header["source"][0], specs)


def fetch_timeout() -> float:
    raw = os.environ.get("MLFD_TIMEOUT_SECS")
    if not raw:
        return DEFAULT_TIMEOUT
    try:
        value = float(raw)
    except ValueError:
        return DEFAULT_TIMEOUT
    return value if value > 0 else DEFAULT_TIMEOUT


class _LimitedRedirects(urllib.request.HTTPRedirectHandler):
    max_redirections = MAX_REDIRECTS


def read_source(location: str, base: Path) -> bytes:
    try:
        if _URL.match(location):
            opener = urllib.request.build_opener(_LimitedRedirects())
            with opener.open(location, timeout=fetch_timeout()) as response:
                return response.read()
        path = Path(location)
        if not path.is_absolute():
            path = base / path
        return path.read_bytes()
    except (OSError, ValueError) as exc:
        raise SourceError(f"{location}: {exc}") from exc


def build_object(manifest: Manifest, base: Path, workers: int = 4) -> ComplexObject:
    def one(spec: SourceSpec):
        data = read_source(spec.location, base)
        try:
            return build_subdocument(spec, data)
        except ExtractError as exc:
            raise SourceError(f"{spec.location}: {exc}") from exc

    with ThreadPoolExecutor(max_workers=workers) as pool:
        subdocuments = list(pool.map(one, manifest.subdocuments))
    return ComplexObject(manifest.name, manifest.date, manifest.source, tuple(subdocuments))


def _error(message: str) -> None:
    for line in str(message).splitlines() or [""]:
        print(f"mlfd: {line}", file=sys.stderr)


def _load_dtd(path: str) -> dtd_mod.DtdTable:
    table = dtd_mod.parse_dtd(Path(path).read_text("utf-8"))
    dtd_mod.assert_deterministic(table)
    return table


def run_integrate(manifest_path: str, dtd_path: str, out_path: str) -> int:
    try:
        manifest = parse_manifest(Path(manifest_path).read_text("utf-8"))
        table = _load_dtd(dtd_path)
    except (OSError, UnicodeDecodeError, ManifestError, dtd_mod.DtdError) as exc:
        _error(exc)
        return EXIT_INPUT
    try:
        obj = build_object(manifest, Path(manifest_path).resolve().parent)
    except SourceError as exc:
        _error(exc)
        return EXIT_SOURCE
    try:
        document = emit(table, to_binding(obj), Path(dtd_path).name)
    except (EmitError, InvariantViolation) as exc:
        _error(exc)
        return EXIT_EMIT
    out = Path(out_path)
    try:
        out.write_text(document, encoding="utf-8")
        report = check_document(out.read_text("utf-8"), table)
    except OSError as exc:
        _error(exc)
        return EXIT_EMIT
    except NotWellFormed as exc:
        report = None
        _error(f"written document is not well-formed: {exc}")
    if report is None or not report.ok:
        if report is not None:
            _error(report.render().rstrip("\n"))
        out.unlink(missing_ok=True)
        return EXIT_INVALID
    return EXIT_OK


def run_validate(document_path: str, dtd_path: str) -> int:
    try:
        table = _load_dtd(dtd_path)
        report = check_document(Path(document_path).read_text("utf-8"), table)
    except (OSError, UnicodeDecodeError, NotWellFormed, dtd_mod.DtdError) as exc:
        _error(exc)
        return EXIT_INPUT
    sys.stdout.write(report.render())
    return EXIT_OK if report.ok else EXIT_INVALID


PAYLOAD_KINDS = {
    "PLAIN_TEXT": "plain-text",
    "TAGGED_TEXT": "tagged-text",
    "RELATIONAL_VIEW": "relational-view",
    "IMAGE": "image",
    "SOUND": "sound",
    "VIDEO": "video",
}


def summarize(tree) -> list[str]:
    lines = []
    for sub in tree.find_all("SUBDOCUMENT"):
        kind = "?"
        for node in sub.iter():
            if node.name in PAYLOAD_KINDS:
                kind = PAYLOAD_KINDS[node.name]
                break
        n = len(sub.find_all("KEYWORD"))
        fields = [sub.find(name).text for name in ("DOC_NAME", "TYPE", "SIZE")]
        fields.append(f"{n} keyword" if n == 1 else f"{n} keywords")
        fields.append(kind)
        lines.append("  ".join(fields))
    return lines


def run_inspect(document_path: str) -> int:
    try:
        tree = parse_document(Path(document_path).read_text("utf-8"))
    except (OSError, UnicodeDecodeError, NotWellFormed) as exc:
        _error(exc)
        return EXIT_INPUT
    report: ValidationReport = validate(tree, dtd_mod.load_canonical())
    if not report.ok:
        _error("document does not conform:")
        _error(report.render().rstrip("\n"))
        return EXIT_INPUT
    for line in summarize(tree):
        print(line)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="mlfd", description="Integrate multiform data sources into XML complex objects.")
    commands = parser.add_subparsers(dest="command", required=True)

    integrate = commands.add_parser("integrate", help="build a document from a manifest")
    integrate.add_argument("--manifest", required=True)
    integrate.add_argument("--dtd", default=str(dtd_mod.canonical_dtd_path()))
    integrate.add_argument("--out", required=True)

    check = commands.add_parser("validate", help="check a document against a DTD")
    check.add_argument("--dtd", default=str(dtd_mod.canonical_dtd_path()))
    check.add_argument("document")

    inspect = commands.add_parser("inspect", help="summarize the subdocuments of a document")
    inspect.add_argument("document")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "integrate":
        return run_integrate(args.manifest, args.dtd, args.out)
    if args.command == "validate":
        return run_validate(args.document, args.dtd)
    return run_inspect(args.document)


if __name__ == "__main__":
    sys.exit(main())
