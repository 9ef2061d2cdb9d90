from fractions import Fraction

import pytest

from exchangelab.measures import BernoulliMeasure, MarkovMeasure, MixtureMeasure

HALF = Fraction(1, 2)

_ACCEPTANCE: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> None:
    _ACCEPTANCE.append((name, ok, detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f"  ({detail})" if detail else ""))


def zero_transition_chain(t=HALF) -> MarkovMeasure:
    t = Fraction(t)
    return MarkovMeasure(((t, 1 - t), (Fraction(1), Fraction(0))), (1 / (2 - t), (1 - t) / (2 - t)))


@pytest.fixture
def markov():
    return zero_transition_chain()


@pytest.fixture
def fair():
    return BernoulliMeasure((HALF, HALF))


@pytest.fixture
def two_atom():
    """Half/half mixture of Bernoulli(0.2) and Bernoulli(0.8) in exact arithmetic."""
    return MixtureMeasure(
        ((HALF, (Fraction(4, 5), Fraction(1, 5))), (HALF, (Fraction(1, 5), Fraction(4, 5))))
    )
