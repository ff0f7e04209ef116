from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from step_parts.step_parser import (
    DERIVED,
    UNSET,
    DanglingReferenceError,
    Enum,
    MissingDataSectionError,
    Ref,
    StepSyntaxError,
    entity_stats,
    parse_step,
    serialize_step,
)

from conftest import FIXTURE_NAMES, MANIFEST, fixture_text, load_graph

HEAD = "ISO-10303-21;\nHEADER;\nFILE_DESCRIPTION(('x'),'2;1');\nFILE_SCHEMA(('AUTOMOTIVE_DESIGN'));\nENDSEC;\n"


def _file(data: str) -> str:
    return HEAD + "DATA;\n" + data + "\nENDSEC;\nEND-ISO-10303-21;\n"


def test_empty_data_section():
    g = parse_step(_file(""))
    assert len(g) == 0
    assert entity_stats(g) == {}
    assert g.schema == ("AUTOMOTIVE_DESIGN",)


def test_single_point():
    g = parse_step(_file("#1=CARTESIAN_POINT('',(0.,0.,0.));"))
    rec = g[1]
    assert rec.keyword == "CARTESIAN_POINT"
    assert len(rec.args) == 2
    assert rec.args[1] == (0.0, 0.0, 0.0)


def test_value_kinds():
    g = parse_step(_file("#1=FOO(#2,.T.,$,*,'it''s',(1,2.5E-3),-4);\n#2=BAR();"))
    args = g[1].args
    assert args[0] == Ref(2)
    assert args[1] == Enum("T")
    assert args[2] is UNSET and args[3] is DERIVED
    assert args[4] == "it's"
    assert args[5] == (1, 0.0025)
    assert isinstance(args[5][0], int) and args[6] == -4


def test_unsupported_keyword_retained():
    g = parse_step(_file("#7=SOME_VENDOR_THING(1,2);"))
    assert entity_stats(g) == {"SOME_VENDOR_THING": 1}


def test_complex_record_keeps_every_part():
    g = parse_step(_file("#1=(NAMED_UNIT(*) LENGTH_UNIT() SI_UNIT(.MILLI.,.METRE.));"))
    rec = g[1]
    assert rec.is_complex
    assert rec.keywords == ("NAMED_UNIT", "LENGTH_UNIT", "SI_UNIT")
    assert rec.part("SI_UNIT") == (Enum("MILLI"), Enum("METRE"))


def test_syntax_error_has_position():
    with pytest.raises(StepSyntaxError) as exc:
        parse_step(_file("#1=CARTESIAN_POINT('',(0.,0.,0.);"))
    assert exc.value.line >= 7 and exc.value.pos > 0


def test_bad_magic():
    with pytest.raises(StepSyntaxError):
        parse_step("garbage")


def test_dangling_reference():
    with pytest.raises(DanglingReferenceError) as exc:
        parse_step(_file("#1=FOO(#99);"))
    assert exc.value.target_id == 99


def test_duplicate_id_rejected():
    with pytest.raises(StepSyntaxError):
        parse_step(_file("#1=FOO();\n#1=BAR();"))


def test_missing_data_section():
    with pytest.raises(MissingDataSectionError):
        parse_step(HEAD + "END-ISO-10303-21;\n")


def test_bytes_input_and_comments():
    g = parse_step(_file("/* note */ #3 = LINE ( '' , #3 ) ;").encode("latin-1"))
    assert g[3].args == ("", Ref(3))


def test_cube_entity_counts():
    stats = entity_stats(load_graph("cube"))
    for kw, n in MANIFEST["cube"]["entities"].items():
        assert stats[kw] == n, kw


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_round_trip(name):
    g1 = load_graph(name)
    g2 = parse_step(serialize_step(g1))
    assert g1.entities == g2.entities
    assert serialize_step(g2) == serialize_step(g1)


@pytest.mark.parametrize("name", ["cube", "bspline_patch"])
def test_parse_deterministic(name):
    assert parse_step(fixture_text(name)).entities == parse_step(fixture_text(name)).entities


_floats = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.one_of(_floats, st.integers(-2**62, 2**62),
                          st.text(alphabet="abc' XYZ_\\", max_size=8)), max_size=6))
def test_value_round_trip(values):
    g = parse_step(_file(f"#1=THING({','.join(_lit(v) for v in values)});"))
    assert parse_step(serialize_step(g)).entities == g.entities
    assert list(g[1].args) == values


def _lit(v) -> str:
    if isinstance(v, str):
        return "'" + v.replace("'", "''") + "'"
    if isinstance(v, float):
        return repr(v).upper() if "." in repr(v) or "e" in repr(v) else repr(v) + "."
    return str(v)
