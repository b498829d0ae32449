from fractions import Fraction

import pytest

from rmdf.graph import (ALL_BRANCHES, Actor, Channel, Graph, Kind, ModeTable, control_area,
                        dispatch_pattern, routing, timed, validate_graph, valuation)


def test_bundled_models_validate(ingenuity, fig1):
    assert validate_graph(ingenuity).ok, str(validate_graph(ingenuity))
    assert validate_graph(fig1).ok, str(validate_graph(fig1))


def test_controlled_splitter_without_control_input(fig1):
    g = Graph(fig1.actors, tuple(c for c in fig1.channels if c.id != "dup2_cs"),
              fig1.mode_table)
    report = validate_graph(g)
    assert not report.ok
    assert any("uncontrolled routing actor" in v.message for v in report.violations)


def test_control_area_of_fig1(fig1):
    assert control_area(fig1, "B") == {"C1", "C2", "D1", "D2", "E1", "E2"}


def test_control_area_of_label_decider(ingenuity):
    assert control_area(ingenuity, "Label Decider") == {
        "Feature Tracking", "Filtering Procedure", "Pseudo Landmarks"}


def test_control_area_rejects_non_decider(ingenuity):
    with pytest.raises(ValueError):
        control_area(ingenuity, "Camera")


def test_empty_control_area():
    g = Graph(
        (timed("S", 100), Actor("D", Kind.MODE_DECIDER), routing("CS", "controlled_splitter"),
         routing("CJ", "controlled_joiner"), timed("T", 100)),
        (Channel("s_d", "S", "D"), Channel("d_cs", "D", "CS", control=True),
         Channel("x", "D", "CJ", control=True),
         Channel("s_cs", "S", "CS"), Channel("cs_cj", "CS", "CJ", "m", "m"),
         Channel("cj_t", "CJ", "T")),
        ModeTable.from_dict({"on": {"m": 1}}))
    assert control_area(g, "D") == set()


def test_validation_codes():
    a = Actor("A", Kind.TIMED, Fraction(1, 2), Fraction(1, 4), None)
    g = Graph((a, a), (Channel("c", "A", "Z", Fraction(0), Fraction(1)),))
    codes = validate_graph(g).codes()
    assert {"duplicate-actor", "execution-time", "frequency", "unknown-actor", "rate"} <= set(codes)


def test_negative_initial_tokens():
    g = Graph((timed("A", 10), Actor("B")), (Channel("c", "A", "B", init=Fraction(-1)),))
    assert "initial-tokens" in validate_graph(g).codes()


def test_routing_actor_with_cost():
    g = Graph((timed("A", 10), Actor("D", Kind.DUPLICATER), Actor("B"), Actor("C")),
              (Channel("a", "A", "D"), Channel("b", "D", "B"), Channel("c", "D", "C")))
    assert "routing-cost" in validate_graph(g).codes()


def test_modes_must_be_one_hot(fig1):
    bad = ModeTable.from_dict({"M1": {"m1": 1, "m2": 1, "m3": 0}})
    g = Graph(fig1.actors, fig1.channels, bad)
    assert "not-one-hot" in validate_graph(g).codes()


def test_valuation_forms(ingenuity):
    assert valuation(ingenuity, "search") == {"m1": 1, "m2": 0}
    assert valuation(ingenuity, ALL_BRANCHES) == {"m1": 1, "m2": 1}
    with pytest.raises(ValueError):
        valuation(ingenuity, None)
    with pytest.raises(ValueError):
        valuation(ingenuity, "cruise")


def test_dispatch_pattern_quarter_rates(ingenuity):
    assert dispatch_pattern(ingenuity, "Splitter 1") == ["c10", "c11", "c12", "c13"]
    assert dispatch_pattern(ingenuity, "Joiner") == ["c18", "c19", "c20", "c21"]


def test_actor_timing_helpers():
    cam = timed("Camera", 30)
    assert cam.period == Fraction(100, 3)
    assert cam.activation(3) == Fraction(200, 3)
    assert Actor("x").period is None
