import re
import xml.parsers.expat

import pytest
from hypothesis import given, settings

from multiform.emit import (
    CardinalityViolation,
    ChoiceViolation,
    MissingRequired,
    ShapeMismatch,
    UnknownElement,
    ValueBinding,
    emit,
    emit_reference,
    escape_text,
    wrap_cdata,
)
from multiform.model import ComplexObject, ImagePayload, Subdocument, to_binding
from multiform.validate import check_document
from strategies import complex_objects

L = ValueBinding.leaf
N = ValueBinding.node


@pytest.mark.parametrize("raw, escaped", [
    ("a<b&c", "a&lt;b&amp;c"),
    ("", ""),
    ("A&amp;B", "A&amp;amp;B"),
    ("x>y", "x&gt;y"),
])
def test_escape_text(raw, escaped):
    assert escape_text(raw) == escaped


@pytest.mark.parametrize("raw, wrapped", [
    ("<TITLE>x</TITLE>", "<![CDATA[<TITLE>x</TITLE>]]>"),
    ("a]]>b", "<![CDATA[a]]]]><![CDATA[>b]]>"),
    ("", "<![CDATA[]]>"),
])
def test_wrap_cdata(raw, wrapped):
    assert wrap_cdata(raw) == wrapped


def image_object(**image):
    fields = dict(compression="None", format="Bitmap", resolution=100, length=192, width=256)
    fields.update(image)
    sub = Subdocument("Scissors", "Image", 24694, "scissors.bmp", ImagePayload(**fields),
                      keywords=("scissors", "black", "white"))
    return ComplexObject("Sample image", "2001-06-15", "Local", (sub,))


IMAGE_DOCUMENT = """<?xml version="1.0" encoding="UTF-8"?>
<!DOCTYPE COMPLEX_OBJECT SYSTEM "mlfd.dtd">
<COMPLEX_OBJECT>
  <OBJ_NAME>Sample image</OBJ_NAME>
  <DATE>2001-06-15</DATE>
  <SOURCE>Local</SOURCE>
  <SUBDOCUMENT>
    <DOC_NAME>Scissors</DOC_NAME>
    <TYPE>Image</TYPE>
    <SIZE>24694 Bytes</SIZE>
    <LOCATION>scissors.bmp</LOCATION>
    <KEYWORD>scissors</KEYWORD>
    <KEYWORD>black</KEYWORD>
    <KEYWORD>white</KEYWORD>
    <IMAGE>
      <COMPRESSION>None</COMPRESSION>
      <FORMAT>Bitmap</FORMAT>
      <RESOLUTION>100 dpi</RESOLUTION>
      <LENGTH>192</LENGTH>
      <WIDTH>256</WIDTH>
    </IMAGE>
  </SUBDOCUMENT>
</COMPLEX_OBJECT>
"""


def test_image_document_bytes(table):
    assert emit(table, to_binding(image_object())) == IMAGE_DOCUMENT


def test_no_language_element(table):
    assert "<LANGUAGE>" not in emit(table, to_binding(image_object()))


def test_absent_implied_value_is_empty_element(table):
    doc = emit(table, to_binding(image_object(compression=None)))
    assert "      <COMPRESSION></COMPRESSION>\n" in doc


def test_missing_implied_child_is_inserted(table):
    b = to_binding(image_object())
    sub = b.children[3]
    image = sub.find("IMAGE")
    trimmed = N("IMAGE", *[c for c in image.children if c.element != "WIDTH"])
    sub2 = N("SUBDOCUMENT", *[trimmed if c.element == "IMAGE" else c for c in sub.children])
    doc = emit(table, N("COMPLEX_OBJECT", *b.children[:3], sub2))
    assert "<WIDTH></WIDTH>" in doc
    assert check_document(doc, table).ok


def test_zero_subdocuments(table):
    b = N("COMPLEX_OBJECT", L("OBJ_NAME", "o"), L("DATE", "d"), L("SOURCE", "s"))
    with pytest.raises(CardinalityViolation) as err:
        emit(table, b)
    assert err.value.got == 0


def test_missing_required_value(table):
    b = to_binding(image_object())
    bad = N("COMPLEX_OBJECT", L("OBJ_NAME", None), *b.children[1:])
    with pytest.raises(MissingRequired) as err:
        emit(table, bad)
    assert err.value.path == "COMPLEX_OBJECT/OBJ_NAME[0]"


def test_missing_required_child(table):
    b = to_binding(image_object())
    with pytest.raises(MissingRequired):
        emit(table, N("COMPLEX_OBJECT", *b.children[1:]))


def _with_payloads(table, *payloads):
    b = to_binding(image_object())
    sub = b.children[3]
    head = [c for c in sub.children if c.element != "IMAGE"]
    return N("COMPLEX_OBJECT", *b.children[:3], N("SUBDOCUMENT", *head, *payloads))


def test_two_alternatives(table):
    image = to_binding(image_object()).children[3].find("IMAGE")
    temporal = N("TEMPORAL", L("DURATION", None), L("SPEED", None), L("SOUND", None))
    with pytest.raises(ChoiceViolation):
        emit(table, _with_payloads(table, image, temporal))


def test_no_alternative(table):
    with pytest.raises(ChoiceViolation):
        emit(table, _with_payloads(table))


def test_unknown_element(table):
    with pytest.raises(UnknownElement) as err:
        emit(table, _with_payloads(table, N("SPREADSHEET")))
    assert err.value.name == "SPREADSHEET"


def test_shape_mismatch(table):
    with pytest.raises(ShapeMismatch):
        emit(table, _with_payloads(table, L("IMAGE", "oops")))


def _expat_names(doc: str) -> list[str]:
    """Start-tag names as seen by expat, a parser unrelated to the emitter."""
    names = []
    parser = xml.parsers.expat.ParserCreate()
    parser.StartElementHandler = lambda name, attrs: names.append(name)
    parser.Parse(doc.encode("utf-8"), True)
    return names


@settings(max_examples=150, deadline=None)
@given(complex_objects)
def test_well_formed_and_deterministic(obj):
    from multiform.dtd import load_canonical

    table = load_canonical()
    b = to_binding(obj)
    doc = emit(table, b)
    assert doc == emit(table, b)
    names = _expat_names(doc)
    assert names == [n.element for n in b.preorder()]
    assert all(name in table for name in names)


@settings(max_examples=150, deadline=None)
@given(complex_objects)
def test_stack_matches_recursive_reference(obj):
    from multiform.dtd import load_canonical

    table = load_canonical()
    b = to_binding(obj)
    assert emit(table, b) == emit_reference(table, b)


def test_indentation(table):
    doc = emit(table, to_binding(image_object()))
    for line in doc.splitlines()[2:]:
        depth = (len(line) - len(line.lstrip(" "))) // 2
        assert re.match(r"^( {2})*<", line)
        assert depth <= 3
