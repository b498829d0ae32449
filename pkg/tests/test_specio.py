from fractions import Fraction

import pytest

from rmdf.graph import Graph, Kind, timed
from rmdf.specio import ParseError, parse_spec, read_spec, serialize_spec, model_path


def test_minimal_document():
    g = parse_spec("actor A timed 1Hz phase 0\n")
    assert len(g.actors) == 1 and g.actors[0].timed
    assert g.actors[0].frequency == 1 and g.channels == ()


def test_bundled_ingenuity_shape(ingenuity):
    # The bundled model follows the channel table one actor per drawn box:
    # 11 vision, 9 navigation and 9 control actors.
    assert len(ingenuity.actors) == 29
    assert len(ingenuity.channels) == 41
    c6 = ingenuity.channel("c6")
    assert (c6.producer, c6.consumer) == ("Feature Match", "Navigation Filter")
    assert (c6.prod, c6.cons, c6.init) == (1, Fraction(3, 50), Fraction(1, 50))


def test_ingenuity_frequencies(ingenuity):
    freqs = {a.id: a.frequency for a in ingenuity.timed_actors}
    assert freqs == {"Camera": 30, "IMU": 500, "Altimeter": 50, "Waypoints": 500, "Motors": 500}
    assert ingenuity.actor("Motors").phase == 1


def test_undeclared_actor_is_named():
    text = "[actors]\nA timed 10Hz\n[channels]\nc A -> XX\n"
    with pytest.raises(ParseError) as err:
        parse_spec(text)
    assert "XX" in str(err.value) and err.value.line == 4


def test_malformed_rational_has_location():
    with pytest.raises(ParseError) as err:
        parse_spec("[actors]\nA timed 10Hz bcet 1/x\n")
    assert err.value.line == 2 and err.value.column is not None


@pytest.mark.parametrize("text", [
    "rmdf 2\n",
    "[nowhere]\n",
    "A timed 10Hz\n",
    '[actors]\n"A timed 10Hz\n',
    "[actors]\nA flying\n",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse_spec(text)


def test_non_utf8_input():
    with pytest.raises(ParseError):
        parse_spec(b"\xff\xfe[actors]\n")


@pytest.mark.parametrize("name", ["ingenuity", "fig1-example"])
def test_round_trip_bundled(name):
    g = read_spec(model_path(f"{name}.rmdf"))
    again = parse_spec(serialize_spec(g))
    assert again == g
    assert serialize_spec(again) == serialize_spec(g)


def test_no_modes_section_when_empty():
    text = serialize_spec(Graph((timed("A", 10),), ()))
    assert "[modes]" not in text


def test_quoted_names_and_comments():
    g = parse_spec('[actors]\n"Big Box" timed freq 10Hz  # a comment\n'
                   '"other one" usual\n[channels]\n"my chan" "Big Box" -> "other one" init 2\n')
    assert g.channel("my chan").init == 2
    assert g.actor("other one").kind is Kind.USUAL
