import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multiform.dtd import (
    TEXT_TOKEN,
    Cardinality,
    Choice,
    DtdSyntaxError,
    DtdTable,
    DuplicateDeclaration,
    EmptyDtd,
    NondeterministicDtd,
    Presence,
    Ref,
    Sequence,
    Text,
    assert_deterministic,
    first_set,
    iter_choices,
    link_check,
    nondeterminism,
    parse_dtd,
    position_automaton,
    render_dtd,
)

# Element names of the multiform DTD, enumerated by hand in declaration order.
DECLARED_NAMES = [
    "COMPLEX_OBJECT", "OBJ_NAME", "DATE", "SOURCE", "SUBDOCUMENT", "DOC_NAME", "TYPE", "SIZE",
    "LOCATION", "LANGUAGE", "KEYWORD", "TEXT", "NB_CHAR", "NB_LINES", "PLAIN_TEXT", "TAGGED_TEXT",
    "CONTENT", "LINK", "RELATIONAL_VIEW", "QUERY", "ATTRIBUTE", "ATT_NAME", "DOMAIN", "TUPLE",
    "ATT_NAME_REF", "VALUE", "IMAGE", "COMPRESSION", "FORMAT", "RESOLUTION", "LENGTH", "WIDTH",
    "TEMPORAL", "DURATION", "SPEED", "SOUND", "VIDEO",
]


def test_keyword_dialect_required():
    t = parse_dtd("<!ELEMENT OBJ_NAME PCDATA #REQUIRED>")
    assert t["OBJ_NAME"] == Text(Presence.REQUIRED)


def test_keyword_dialect_implied_with_trailing_space():
    t = parse_dtd("<!ELEMENT  DURATION          PCDATA #IMPLIED >")
    assert t["DURATION"] == Text(Presence.IMPLIED)


def test_group_suffix_applies_to_group():
    t = parse_dtd("<!ELEMENT TUPLE (ATT_NAME_REF, VALUE)+>")
    assert t["TUPLE"] == Sequence((Ref("ATT_NAME_REF"), Ref("VALUE")), Cardinality.ONE_OR_MORE)


def test_standard_pcdata():
    assert parse_dtd("<!ELEMENT X (#PCDATA)>")["X"] == Text(Presence.IMPLIED)
    assert parse_dtd("<!ELEMENT X ( #PCDATA )*>")["X"] == Text(Presence.IMPLIED)


@pytest.mark.parametrize("text", ["", "   \n", "<!-- nothing here -->"])
def test_empty(text):
    with pytest.raises(EmptyDtd):
        parse_dtd(text)


def test_duplicate():
    with pytest.raises(DuplicateDeclaration) as err:
        parse_dtd("<!ELEMENT A (#PCDATA)>\n<!ELEMENT A (#PCDATA)>")
    assert err.value.name == "A"


@pytest.mark.parametrize("text, line, column", [
    ("<!ELEMENT A (B, C | D)>", 1, 19),
    ("<!ELEMENT A (B, C>", 1, 18),
    ("\n<!ATTLIST A x CDATA #IMPLIED>", 2, 1),
    ("<!ELEMENT A (#PCDATA | B)*>", 1, 22),
    ("<!ELEMENT A EMPTY>", 1, 13),
    ("<!ELEMENT A PCDATA #FIXED>", 1, 20),
    ("<!ENTITY x 'y'>", 1, 1),
])
def test_syntax_errors(text, line, column):
    with pytest.raises(DtdSyntaxError) as err:
        parse_dtd(text)
    assert (err.value.line, err.value.column) == (line, column)


def test_comments_and_doctype_are_skipped():
    text = """<?xml version="1.0"?>
<!DOCTYPE X SYSTEM "x.dtd" [
  <!-- the root -->
  <!ELEMENT X (Y*)>
  <!ELEMENT Y (#PCDATA)>
]>"""
    t = parse_dtd(text)
    assert t.root == "X"
    assert t["X"] == Ref("Y", Cardinality.ZERO_OR_MORE)


def test_single_child_groups_collapse():
    t = parse_dtd("<!ELEMENT A ((B?)+, (C))>")
    assert t["A"] == Sequence((Ref("B", Cardinality.ZERO_OR_MORE), Ref("C")))


def test_canonical_declarations(table):
    assert list(table.declaration_order) == DECLARED_NAMES
    assert table.root == "COMPLEX_OBJECT"
    assert link_check(table) == []
    assert nondeterminism(table) == []


def test_canonical_models(table):
    assert table["SUBDOCUMENT"] == Sequence((
        Ref("DOC_NAME"), Ref("TYPE"), Ref("SIZE"), Ref("LOCATION"),
        Ref("LANGUAGE", Cardinality.OPTIONAL), Ref("KEYWORD", Cardinality.ZERO_OR_MORE),
        Choice((Ref("TEXT"), Ref("RELATIONAL_VIEW"), Ref("IMAGE"), Ref("TEMPORAL"))),
    ))
    assert table["RELATIONAL_VIEW"] == Sequence((
        Ref("QUERY", Cardinality.OPTIONAL), Ref("ATTRIBUTE", Cardinality.ONE_OR_MORE),
        Ref("TUPLE", Cardinality.ZERO_OR_MORE),
    ))
    required = {n for n in DECLARED_NAMES if table[n] == Text(Presence.REQUIRED)}
    assert required == {
        "OBJ_NAME", "DATE", "SOURCE", "DOC_NAME", "TYPE", "SIZE", "LOCATION", "LANGUAGE",
        "KEYWORD", "PLAIN_TEXT", "CONTENT", "LINK", "QUERY", "ATT_NAME", "DOMAIN", "ATT_NAME_REF",
    }


def test_link_check_reports_missing():
    t = DtdTable("A", {"A": Sequence((Ref("B"), Ref("C"))), "C": Text()})
    assert link_check(t) == ["B"]
    assert link_check(parse_dtd("<!ELEMENT A (#PCDATA)><!ELEMENT B PCDATA #REQUIRED>")) == []


def test_first_sets(table):
    assert first_set(table["SUBDOCUMENT"], table) == {"DOC_NAME"}
    trailing = table["TEXT"].children[-1]
    assert first_set(trailing, table) == {"PLAIN_TEXT", "TAGGED_TEXT"}
    assert first_set(Text(), table) == {TEXT_TOKEN}
    assert first_set(table["RELATIONAL_VIEW"], table) == {"QUERY", "ATTRIBUTE"}


def test_canonical_choices_disjoint(table):
    for name in table.declaration_order:
        for choice in iter_choices(table[name]):
            firsts = [first_set(a, table) for a in choice.alternatives]
            for i, a in enumerate(firsts):
                for b in firsts[i + 1:]:
                    assert not a & b


def test_nondeterministic_rejected():
    with pytest.raises(NondeterministicDtd):
        assert_deterministic(parse_dtd("<!ELEMENT A ((B, C) | (B, D))>"))
    with pytest.raises(NondeterministicDtd):
        assert_deterministic(parse_dtd("<!ELEMENT A (B?, B)>"))
    with pytest.raises(NondeterministicDtd):
        assert_deterministic(parse_dtd("<!ELEMENT A ((B, C?)+, C)>"))


def test_position_automaton_tuple(table):
    a = position_automaton(table["TUPLE"])
    assert a.names[1:] == ("ATT_NAME_REF", "VALUE")
    assert a.step(0, "ATT_NAME_REF") == 1
    assert a.step(1, "VALUE") == 2
    assert a.step(2, "ATT_NAME_REF") == 1
    assert a.final == {2}


# --- round trip and dialect equivalence -----------------------------------

element_names = st.sampled_from(list("ABCDEFGH"))
cards = st.sampled_from(list(Cardinality))


def particles(depth=2):
    leaf = st.builds(Ref, element_names, cards)
    if depth == 0:
        return leaf
    group = st.lists(particles(depth - 1), min_size=2, max_size=3).map(tuple)
    return leaf | st.builds(Sequence, group, cards) | st.builds(Choice, group, cards)


@st.composite
def tables(draw):
    n = draw(st.integers(1, 5))
    names = draw(st.lists(st.sampled_from(["R", "S", "T", "U", "V"]), min_size=n, max_size=n,
                          unique=True))
    decls = {}
    for name in names:
        decls[name] = draw(st.one_of(
            st.builds(Text, st.sampled_from(list(Presence))),
            particles(),
        ))
    return DtdTable(names[0], decls)


@given(tables())
def test_render_parse_round_trip(t):
    once = parse_dtd(render_dtd(t))
    twice = parse_dtd(render_dtd(once))
    assert once.structurally_equal(twice)
    assert once.declaration_order == t.declaration_order


@given(st.sampled_from(["REQUIRED", "IMPLIED"]), st.sampled_from(["X", "NB_CHAR", "a.b-c"]),
       st.text(" \t\n", min_size=1, max_size=3))
def test_dialect_equivalence(presence, name, ws):
    keyword = parse_dtd(f"<!ELEMENT{ws}{name}{ws}PCDATA{ws}#{presence}{ws}>")[name]
    standard = parse_dtd(f"<!ELEMENT {name} (#PCDATA)>")[name]
    assert isinstance(keyword, Text) and isinstance(standard, Text)
    assert standard.presence is Presence.IMPLIED
    assert keyword.presence.value == f"#{presence}"


@settings(max_examples=200)
@given(particles(3))
def test_first_set_matches_automaton(model):
    a = position_automaton(model)
    assert {a.names[p] for p in a.start} == first_set(model)
