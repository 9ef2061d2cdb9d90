import json
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from exchangelab.core import Cylinder, PartialCylinder, Window
from exchangelab.dpp import SineKernel, ToeplitzKernel
from exchangelab.measures import (
    BernoulliMeasure,
    DeterminantalMeasure,
    MarkovMeasure,
    MeasureError,
    MixtureMeasure,
    SpecError,
    cylinder_prob,
    cylinder_table,
    load_measure,
    lump_to_binary,
    measure_from_dict,
    stationary_vector,
    validate_measure,
)

from conftest import zero_transition_chain

F = Fraction


def markov_oracle(Pi, p, word):
    out = p[word[0]]
    for a, b in zip(word, word[1:]):
        out *= Pi[a][b]
    return out


# --------------------------------------------------------------------------- fixture values


def test_zero_transition_values(markov):
    assert markov.p == (F(2, 3), F(1, 3))
    zero = markov.cylinder_prob(Cylinder.parse("0:011"))
    assert zero.value == 0 and zero.structural_zero
    pos = markov.cylinder_prob(Cylinder.parse("0:101"))
    assert pos.value == F(1, 6) and isinstance(pos.value, Fraction) and not pos.structural_zero


def test_zero_transition_family_stationary():
    for t in (F(1, 3), F(1, 2), F(3, 4)):
        m = zero_transition_chain(t)
        assert stationary_vector(m.Pi) == m.p
        assert m.cylinder_prob(Cylinder.parse("0:11")).structural_zero


def test_bernoulli_and_mixture_values(fair, two_atom):
    assert fair.cylinder_prob(Cylinder.parse("3:0110")).value == F(1, 16)
    assert two_atom.cylinder_prob(Cylinder.parse("0:1")).value == F(1, 2)
    assert two_atom.cylinder_prob(Cylinder.parse("0:11")).value == F(17, 50)
    assert two_atom.cylinder_prob(Cylinder.parse("0:10")).value == F(4, 25)


def test_float_mode_switch():
    m = BernoulliMeasure((0.5, 0.5))
    assert isinstance(m.cylinder_prob(Cylinder.parse("0:01")).value, float)


def test_structural_zero_vs_tiny():
    b = BernoulliMeasure((F(1), F(0)))
    assert b.cylinder_prob(Cylinder.parse("0:01")).structural_zero
    tiny = BernoulliMeasure((1 - 1e-300, 1e-300))
    cp = tiny.cylinder_prob(Cylinder.parse("0:111"))
    assert cp.value == 0.0 and not cp.structural_zero


def test_mixture_structural_flag():
    m = MixtureMeasure(((F(1, 2), (F(1), F(0))), (F(1, 2), (F(0), F(1)))))
    assert m.cylinder_prob(Cylinder.parse("0:01")).structural_zero
    assert not m.cylinder_prob(Cylinder.parse("0:11")).structural_zero


def test_dpp_never_structural():
    m = DeterminantalMeasure(SineKernel(2.0))
    cp = m.cylinder_prob(Cylinder.parse("0:1"))
    assert cp.value == pytest.approx(0.0, abs=1e-15) and not cp.structural_zero


# --------------------------------------------------------------------------- oracles and invariants


stochastic_rows = st.lists(st.integers(0, 4), min_size=2, max_size=3).filter(lambda r: sum(r) > 0)


@st.composite
def positive_chains(draw):
    n = draw(st.integers(2, 3))
    rows = [draw(st.lists(st.integers(1, 4), min_size=n, max_size=n)) for _ in range(n)]
    Pi = tuple(tuple(F(x, sum(r)) for x in r) for r in rows)
    return MarkovMeasure(Pi)


@settings(max_examples=40, deadline=None)
@given(positive_chains(), st.integers(-5, 5), st.data())
def test_markov_matches_product_oracle(chain, lo, data):
    n = len(chain.Pi)
    word = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=5))
    got = chain.cylinder_prob(Cylinder.at(lo, word)).value
    assert got == markov_oracle(chain.Pi, chain.p, word)


@settings(max_examples=25, deadline=None)
@given(positive_chains(), st.data())
def test_markov_gap_matches_marginal_sum(chain, data):
    n = len(chain.Pi)
    a = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2))
    b = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=2))
    gap = data.draw(st.integers(1, 3))
    mapping = {i: s for i, s in enumerate(a)}
    off = len(a) + gap
    mapping.update({off + i: s for i, s in enumerate(b)})
    got = chain.assignment_prob(mapping).value
    expected = sum(markov_oracle(chain.Pi, chain.p, (*a, *fill, *b)) for fill in product(range(n), repeat=gap))
    assert got == expected


@settings(max_examples=25, deadline=None)
@given(positive_chains(), st.integers(-4, 4), st.lists(st.integers(0, 1), min_size=1, max_size=4))
def test_shift_invariance(chain, shift, word):
    a = chain.cylinder_prob(Cylinder.at(0, word)).value
    b = chain.cylinder_prob(Cylinder.at(shift, word)).value
    assert a == b


@pytest.mark.parametrize(
    "measure",
    [
        BernoulliMeasure((F(1, 3), F(2, 3))),
        zero_transition_chain(),
        MixtureMeasure(((F(1, 4), (F(1, 5), F(4, 5))), (F(3, 4), (F(2, 3), F(1, 3))))),
        DeterminantalMeasure(SineKernel(0.0)),
        DeterminantalMeasure(SineKernel(-1.0)),
        DeterminantalMeasure(ToeplitzKernel((0.5, 0.2, 0.05))),
    ],
)
def test_validation_passes_for_valid_measures(measure):
    rep = validate_measure(measure, 6)
    assert rep.passed, rep.to_dict()


def test_validation_rejects_bad_toeplitz():
    for c in [(1.5,), (0.9, 0.6, 0.6)]:
        rep = validate_measure(DeterminantalMeasure(ToeplitzKernel(c)), 4)
        assert not rep.passed
        assert any(ch.name == "spectrum" and not ch.passed for ch in rep.checks)


def test_validation_report_roundtrip(markov):
    rep = validate_measure(markov, 4)
    again = type(rep).from_dict(json.loads(json.dumps(rep.to_dict())))
    assert again.passed == rep.passed
    assert [c.name for c in again.checks] == [c.name for c in rep.checks]


def test_single_component_mixture_is_bernoulli():
    pi = (F(1, 3), F(2, 3))
    b = BernoulliMeasure(pi)
    m = MixtureMeasure(((F(1), pi),))
    for word in product((0, 1), repeat=4):
        c = Cylinder.at(0, word)
        assert m.cylinder_prob(c).value == b.cylinder_prob(c).value


def test_partial_cylinder_marginalises(markov):
    part = PartialCylinder.from_mapping({0: 1, 2: 1})
    direct = sum(markov.cylinder_prob(Cylinder.at(0, (1, s, 1))).value for s in (0, 1))
    assert cylinder_prob(markov, part).value == direct == F(1, 6)


def test_cylinder_table_sums_to_one(markov):
    table = cylinder_table(markov, Window(-1, 2))
    assert len(table) == 16
    assert sum(cp.value for cp in table.values()) == 1


def test_lumping_three_state_chain():
    Pi = ((F(0), F(1, 2), F(1, 2)), (F(1, 2), F(0), F(1, 2)), (F(1, 3), F(1, 3), F(1, 3)))
    chain = MarkovMeasure(Pi)
    lumped = lump_to_binary(chain, {2})
    assert lumped.alphabet.size == 2
    direct = sum(chain.cylinder_prob(Cylinder.at(0, (a, 2))).value for a in (0, 1))
    assert lumped.cylinder_prob(Cylinder.parse("0:01")).value == direct
    assert validate_measure(lumped, 4).passed


def test_markov_rejects_non_stationary_p():
    with pytest.raises(MeasureError):
        MarkovMeasure(((F(1, 2), F(1, 2)), (F(1), F(0))), (F(1, 2), F(1, 2)))
    with pytest.raises(MeasureError):
        MarkovMeasure(((F(1, 2), F(1, 3)), (F(1), F(0))))


# --------------------------------------------------------------------------- spec files


def test_spec_roundtrip():
    specs = [
        {"type": "bernoulli", "pi": ["1/2", "1/2"]},
        {"type": "markov", "Pi": [["1/2", "1/2"], [1, 0]], "p": ["2/3", "1/3"]},
        {"type": "mixture", "components": [{"w": "1/2", "pi": ["4/5", "1/5"]}, {"w": "1/2", "pi": ["1/5", "4/5"]}]},
        {"type": "dpp-sine", "a": 0.0},
        {"type": "dpp-toeplitz", "c": [0.5, 0.1]},
    ]
    for spec in specs:
        m = measure_from_dict(spec)
        again = measure_from_dict(json.loads(json.dumps(m.to_dict())))
        c = Cylinder.parse("0:101")
        assert again.cylinder_prob(c).value == m.cylinder_prob(c).value


def test_markov_p_optional_is_exact():
    m = measure_from_dict({"type": "markov", "Pi": [["1/2", "1/2"], ["1", "0"]]})
    assert m.p == (F(2, 3), F(1, 3))


@pytest.mark.parametrize(
    "spec,field",
    [
        ({"type": "bernoulli", "pi": ["1/2", "x"]}, "pi[1]"),
        ({"type": "bernoulli"}, "pi"),
        ({"type": "markov", "Pi": [["1/2", "1/2"], [1, "nope"]]}, "Pi[1][1]"),
        ({"type": "mixture", "components": [{"w": 1}]}, "components[0]"),
        ({"type": "teapot"}, "type"),
    ],
)
def test_spec_errors_name_the_field(spec, field):
    with pytest.raises(SpecError) as info:
        measure_from_dict(spec)
    assert field in str(info.value)


def test_load_measure_reports_json_position(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"type": "bernoulli",\n  "pi": [0.5 0.5]}\n')
    with pytest.raises(SpecError) as info:
        load_measure(path)
    assert "line 2" in str(info.value)
