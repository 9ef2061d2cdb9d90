import json
import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from exchangelab.core import Cylinder
from exchangelab.definetti import (
    AtomicMixingMeasure,
    HankelReport,
    MomentSequence,
    NotRepresentableError,
    finite_differences,
    hankel_psd_check,
    mixture_moments,
    moments,
    recover_atoms,
)
from exchangelab.measures import BernoulliMeasure, MixtureMeasure

F = Fraction


def test_two_atom_moments(two_atom):
    m = moments(two_atom, 6)
    assert m.m == (F(1, 2), F(17, 50), F(13, 50), F(257, 1250), F(41, 250), F(4097, 31250))
    assert m == mixture_moments([(F(1, 5), F(1, 2)), (F(4, 5), F(1, 2))], 6)


def test_zero_transition_moments_and_rejection(markov):
    m = moments(markov, 3)
    assert m.m == (F(1, 3), 0, 0)
    rep = hankel_psd_check(m)
    assert not rep.consistent
    h0 = next(b for b in rep.blocks if b.name == "H0")
    assert h0.det == F(-1, 9)
    assert h0.min_eigenvalue < 0
    assert rep.verdict.startswith("NOT")


def test_hankel_accepts_true_moment_sequences(two_atom):
    for r in range(2, 9):
        rep = hankel_psd_check(moments(two_atom, r))
        assert rep.consistent, r
    uniform = MomentSequence(tuple(F(1, k + 1) for k in range(1, 9)))
    assert hankel_psd_check(uniform).consistent


def test_hankel_rejects_non_monotone_sequence():
    # m_2 > m_1 is impossible on [0, 1]; caught by the localising block
    rep = hankel_psd_check(MomentSequence((F(1, 2), F(3, 5))))
    assert not rep.consistent and not rep.monotone


def test_hankel_report_roundtrip(markov):
    rep = hankel_psd_check(moments(markov, 4))
    again = HankelReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert again.consistent == rep.consistent
    assert [b.det for b in again.blocks] == [b.det for b in rep.blocks]


@settings(max_examples=40, deadline=None)
@given(
    st.lists(
        st.tuples(st.fractions(0, 1, max_denominator=20), st.integers(1, 9)), min_size=1, max_size=4
    ),
    st.integers(1, 6),
)
def test_complete_monotonicity(atoms, j):
    total = sum(w for _, w in atoms)
    m = mixture_moments([(p, F(w, total)) for p, w in atoms], 8)
    for k in range(j + 1):
        assert all(v >= 0 for v in finite_differences(m, k))
    assert hankel_psd_check(m).consistent


def test_cylinder_moment_bridge():
    # exchangeability: mu(word) depends only on the count of ones, and equals
    # sum_j (-1)^j C(z, j) m_{o + j} for o ones and z zeros
    atoms = [(F(1, 10), F(1, 4)), (F(1, 2), F(1, 2)), (F(9, 10), F(1, 4))]
    mix = MixtureMeasure(tuple((w, (1 - p, p)) for p, w in atoms))
    full = [F(1)] + list(moments(mix, 6).m)
    from math import comb

    for word in [(1, 0, 1), (0, 0, 1, 1), (0, 0, 0), (1, 0, 0, 1, 0, 1)]:
        o, z = sum(word), len(word) - sum(word)
        expected = sum((-1) ** j * comb(z, j) * full[o + j] for j in range(z + 1))
        assert mix.cylinder_prob(Cylinder.at(0, word)).value == expected


def test_moments_need_binary_alphabet():
    with pytest.raises(ValueError):
        moments(BernoulliMeasure((F(1, 3), F(1, 3), F(1, 3))), 3)


# --------------------------------------------------------------------------- recovery


def test_recover_two_atoms_exact(two_atom):
    beta = recover_atoms(moments(two_atom, 6))
    assert len(beta.atoms) == 2
    (p0, w0), (p1, w1) = beta.atoms
    assert p0 == pytest.approx(0.2, abs=1e-6) and p1 == pytest.approx(0.8, abs=1e-6)
    assert w0 == pytest.approx(0.5, abs=1e-6) and w1 == pytest.approx(0.5, abs=1e-6)


def test_recover_from_floats(two_atom):
    m = MomentSequence(tuple(float(v) for v in moments(two_atom, 6).m))
    beta = recover_atoms(m)
    assert [p for p, _ in beta.atoms] == pytest.approx([0.2, 0.8], abs=1e-6)


def test_recover_single_atom():
    beta = recover_atoms(MomentSequence(tuple(F(3, 10) ** k for k in range(1, 5))))
    assert beta.atoms == [pytest.approx((0.3, 1.0))]


def random_atoms(rng, n):
    while True:
        ps = sorted(rng.uniform(0.02, 0.98) for _ in range(n))
        if all(b - a > 0.05 for a, b in zip(ps, ps[1:])):
            break
    ws = [rng.uniform(0.2, 1.0) for _ in range(n)]
    s = sum(ws)
    return [(F(p).limit_denominator(10**6), F(w / s).limit_denominator(10**6)) for p, w in zip(ps, ws)]


def test_roundtrip_random_mixtures():
    rng = random.Random(2024)
    for _ in range(50):
        n = rng.randint(1, 4)
        atoms = random_atoms(rng, n)
        total = sum(w for _, w in atoms)
        atoms = [(p, w / total) for p, w in atoms]
        beta = recover_atoms(mixture_moments(atoms, 2 * n), r_max=4)
        assert len(beta.atoms) == n
        for (p, w), (q, v) in zip(sorted(atoms), beta.atoms):
            assert q == pytest.approx(float(p), abs=1e-6)
            assert v == pytest.approx(float(w), abs=1e-6)


def test_not_representable_with_too_few_atoms(two_atom):
    with pytest.raises(NotRepresentableError) as info:
        recover_atoms(moments(two_atom, 6), r_max=1)
    assert info.value.residual > 1e-8


def test_atomic_measure_roundtrip_and_checks():
    beta = AtomicMixingMeasure([(0.8, 0.5), (0.2, 0.5)])
    assert beta.atoms[0][0] == 0.2
    again = AtomicMixingMeasure.from_dict(json.loads(json.dumps(beta.to_dict())))
    assert again.atoms == beta.atoms
    mix = beta.to_measure()
    assert float(mix.cylinder_prob(Cylinder.parse("0:11")).value) == pytest.approx(0.34)
    with pytest.raises(ValueError):
        AtomicMixingMeasure([(1.2, 1.0)])
    with pytest.raises(ValueError):
        AtomicMixingMeasure([(0.2, 0.7)])
    with pytest.raises(ValueError):
        AtomicMixingMeasure([(0.2, 0.5), (0.2, 0.5)])


def test_moment_sequence_parse():
    m = MomentSequence.parse("1/2, 17/50,0.26")
    assert m.m[0] == F(1, 2) and m.m[2] == 0.26
    assert not m.exact
    assert MomentSequence.parse("1/2,1/4").exact
    assert MomentSequence.from_dict(json.loads(json.dumps(m.to_dict()))) == m
