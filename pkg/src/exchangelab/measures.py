"""Stationary laws on K^Z with exact cylinder probabilities.

Four families are supported: i.i.d. products, finite mixtures of products,
stationary Markov chains and determinantal processes on {0,1}^Z. Parameters
given as ints or :class:`~fractions.Fraction` keep every cylinder probability
exact; floats anywhere switch that measure to double precision.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Any, Mapping, Sequence, Union

import numpy as np

from . import dpp
from .core import Alphabet, Cylinder, CylinderError, PartialCylinder, Window, all_cylinders
from .exact import Num, NumberParseError, as_exact_or_float, encode_number, is_exact, matmul, parse_number, solve

SUM_TOL = 1e-12
INVARIANCE_TOL = 1e-10


class MeasureError(ValueError):
    """Invalid measure parameters or a cylinder that does not fit the measure."""


class SpecError(MeasureError):
    """A measure spec file failed to parse; the message names the field."""


@dataclass(frozen=True)
class CylinderProb:
    """Probability value with an exact structural-zero flag."""

    value: Num
    structural_zero: bool = False

    def __float__(self) -> float:
        return float(self.value)

    @property
    def exact(self) -> bool:
        return isinstance(self.value, Fraction)


def _prob_vector(values: Sequence, what: str) -> tuple[Num, ...]:
    vec = tuple(as_exact_or_float(v) for v in values)
    if not vec:
        raise MeasureError(f"{what} is empty")
    if any(v < 0 for v in vec):
        raise MeasureError(f"{what} has a negative entry")
    total = sum(vec)
    if abs(total - 1) > SUM_TOL:
        raise MeasureError(f"{what} sums to {float(total)!r}, not 1")
    return vec


def _prod(values, one):
    out = one
    for v in values:
        out = out * v
    return out


class ProcessMeasure:
    """Common interface of the four families."""

    alphabet: Alphabet

    @property
    def exact(self) -> bool:
        raise NotImplementedError

    def cylinder_prob(self, cyl: Cylinder) -> CylinderProb:
        cyl.check_alphabet(self.alphabet)
        return self.assignment_prob(cyl.as_mapping())

    def partial_prob(self, part: PartialCylinder) -> CylinderProb:
        """Probability of a cylinder with free coordinates (marginalized)."""
        for s in part.assignment.values():
            if s not in self.alphabet:
                raise CylinderError(f"symbol {s} outside alphabet of size {self.alphabet.size}")
        return self.assignment_prob(part.assignment)

    def assignment_prob(self, assignment: Mapping[int, int]) -> CylinderProb:
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    @property
    def one(self) -> Num:
        return Fraction(1) if self.exact else 1.0


@dataclass(frozen=True, eq=False)
class BernoulliMeasure(ProcessMeasure):
    pi: tuple[Num, ...]

    def __post_init__(self):
        object.__setattr__(self, "pi", _prob_vector(self.pi, "pi"))

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(len(self.pi))

    @property
    def exact(self) -> bool:
        return is_exact(self.pi)

    def assignment_prob(self, assignment):
        factors = [self.pi[s] for _, s in sorted(assignment.items())]
        return CylinderProb(_prod(factors, self.one), any(f == 0 for f in factors))

    def to_dict(self):
        return {"type": "bernoulli", "pi": [encode_number(v) for v in self.pi]}


@dataclass(frozen=True, eq=False)
class MixtureMeasure(ProcessMeasure):
    """Finite mixture ``sum_i w_i pi_i^{⊗Z}``; ``components`` is ``[(w, pi), ...]``."""

    components: tuple[tuple[Num, tuple[Num, ...]], ...]

    def __post_init__(self):
        comps = []
        for i, (w, pi) in enumerate(self.components):
            comps.append((as_exact_or_float(w), _prob_vector(pi, f"components[{i}].pi")))
        if not comps:
            raise MeasureError("mixture needs at least one component")
        if len({len(pi) for _, pi in comps}) != 1:
            raise MeasureError("mixture components have different alphabet sizes")
        _prob_vector([w for w, _ in comps], "mixture weights")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(len(self.components[0][1]))

    @property
    def exact(self) -> bool:
        return all(is_exact(pi) and isinstance(w, Fraction) for w, pi in self.components)

    def assignment_prob(self, assignment):
        syms = [s for _, s in sorted(assignment.items())]
        total = 0 * self.one
        structural = True
        for w, pi in self.components:
            factors = [pi[s] for s in syms]
            total = total + w * _prod(factors, self.one)
            if w != 0 and not any(f == 0 for f in factors):
                structural = False
        return CylinderProb(total, structural)

    def to_dict(self):
        return {
            "type": "mixture",
            "components": [
                {"w": encode_number(w), "pi": [encode_number(v) for v in pi]} for w, pi in self.components
            ],
        }


def stationary_vector(Pi: Sequence[Sequence[Num]]) -> tuple[Num, ...]:
    """Invariant row vector of an irreducible stochastic matrix (exact when Pi is)."""
    n = len(Pi)
    flat = [v for row in Pi for v in row]
    if is_exact(flat):
        # p (Pi - I) = 0 with the last equation replaced by sum(p) = 1
        a = [[Pi[j][i] - (1 if i == j else 0) for j in range(n)] for i in range(n)]
        a[-1] = [Fraction(1)] * n
        b = [Fraction(0)] * (n - 1) + [Fraction(1)]
        try:
            return tuple(solve(a, b))
        except ZeroDivisionError:
            raise MeasureError("transition matrix has no unique invariant vector") from None
    P = np.array([[float(v) for v in row] for row in Pi])
    a = np.vstack([(P.T - np.eye(n)), np.ones((1, n))])
    b = np.zeros(n + 1)
    b[-1] = 1.0
    p, *_ = np.linalg.lstsq(a, b, rcond=None)
    p = np.clip(p, 0.0, None)
    return tuple(float(v) for v in p / p.sum())


@dataclass(frozen=True, eq=False)
class MarkovMeasure(ProcessMeasure):
    """Stationary chain: ``mu[[x_0..x_n]] = p(x_0) Pi[x_0,x_1] ... Pi[x_{n-1},x_n]``."""

    Pi: tuple[tuple[Num, ...], ...]
    p: tuple[Num, ...] | None = None

    def __post_init__(self):
        n = len(self.Pi)
        if n == 0 or any(len(row) != n for row in self.Pi):
            raise MeasureError("transition matrix must be square and nonempty")
        rows = tuple(_prob_vector(row, f"Pi[{i}]") for i, row in enumerate(self.Pi))
        object.__setattr__(self, "Pi", rows)
        p = stationary_vector(rows) if self.p is None else _prob_vector(self.p, "p")
        if len(p) != n:
            raise MeasureError(f"p has length {len(p)}, expected {n}")
        pP = [sum(p[i] * rows[i][j] for i in range(n)) for j in range(n)]
        if max(abs(x - y) for x, y in zip(pP, p)) > INVARIANCE_TOL:
            raise MeasureError("p is not invariant: p·Pi != p")
        object.__setattr__(self, "p", p)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(len(self.Pi))

    @property
    def exact(self) -> bool:
        return is_exact(self.p) and all(is_exact(r) for r in self.Pi)

    @cached_property
    def _powers(self) -> dict[int, tuple[list[list[Num]], list[list[bool]]]]:
        pattern = [[v != 0 for v in row] for row in self.Pi]
        return {1: ([list(r) for r in self.Pi], pattern)}

    def power(self, d: int) -> tuple[list[list[Num]], list[list[bool]]]:
        """``Pi^d`` and its positivity pattern (structural zeros tracked by boolean product)."""
        cache = self._powers
        if d not in cache:
            prev, pat = self.power(d - 1)
            n = len(self.Pi)
            val = matmul(prev, [list(r) for r in self.Pi])
            newpat = [[any(pat[i][t] and self.Pi[t][j] != 0 for t in range(n)) for j in range(n)] for i in range(n)]
            cache[d] = (val, newpat)
        return cache[d]

    def assignment_prob(self, assignment):
        items = sorted(assignment.items())
        c0, s0 = items[0]
        value = self.p[s0]
        structural = self.p[s0] == 0
        prev_c, prev_s = c0, s0
        for c, s in items[1:]:
            d = c - prev_c
            if d == 1:
                f = self.Pi[prev_s][s]
                zero = f == 0
            else:
                mat, pat = self.power(d)
                f = mat[prev_s][s]
                zero = not pat[prev_s][s]
            value = value * f
            structural = structural or zero
            prev_c, prev_s = c, s
        return CylinderProb(value, structural)

    def positive_pattern(self) -> list[list[bool]]:
        return [[v != 0 for v in row] for row in self.Pi]

    def is_irreducible_aperiodic(self) -> bool:
        """Some power ``Pi^m`` with ``m <= size^2`` is entrywise positive."""
        n = len(self.Pi)
        for m in range(1, n * n + 1):
            if all(all(r) for r in self.power(m)[1]):
                return True
        return False

    def second_eigenvalue_modulus(self) -> float:
        ev = np.linalg.eigvals(np.array([[float(v) for v in r] for r in self.Pi]))
        mods = sorted(abs(ev), reverse=True)
        return float(mods[1]) if len(mods) > 1 else 0.0

    def to_dict(self):
        return {
            "type": "markov",
            "Pi": [[encode_number(v) for v in row] for row in self.Pi],
            "p": [encode_number(v) for v in self.p],
        }


@dataclass(frozen=True, eq=False)
class DeterminantalMeasure(ProcessMeasure):
    """Determinantal process on {0,1}^Z; symbol 1 marks an occupied site."""

    kernel: dpp.KernelSpec
    cap: int = dpp.DEFAULT_CAP

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(2)

    @property
    def exact(self) -> bool:
        return False

    def assignment_prob(self, assignment):
        occupied = [c for c, s in assignment.items() if s == 1]
        value = dpp.dpp_window_config_prob(self.kernel, assignment.keys(), occupied, cap=self.cap)
        return CylinderProb(value, False)

    def to_dict(self):
        return self.kernel.to_dict()


@dataclass(frozen=True, eq=False)
class LumpedMeasure(ProcessMeasure):
    """Binary image of ``base`` under ``s -> 1 if s in ones else 0``."""

    base: ProcessMeasure
    ones: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        ones = frozenset(int(s) for s in self.ones)
        if not ones or any(s not in self.base.alphabet for s in ones):
            raise MeasureError("lumping set must be a nonempty subset of the base alphabet")
        object.__setattr__(self, "ones", ones)

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(2)

    @property
    def exact(self) -> bool:
        return self.base.exact

    def assignment_prob(self, assignment):
        zeros = [s for s in self.base.alphabet.symbols if s not in self.ones]
        ones = sorted(self.ones)
        coords = sorted(assignment)
        choices = [ones if assignment[c] == 1 else zeros for c in coords]
        total = 0 * self.one
        structural = True
        for word in product(*choices):
            cp = self.base.assignment_prob(dict(zip(coords, word)))
            total = total + cp.value
            structural = structural and cp.structural_zero
        return CylinderProb(total, structural)

    def to_dict(self):
        return {"type": "lumped", "ones": sorted(self.ones), "base": self.base.to_dict()}


def lump_to_binary(measure: ProcessMeasure, ones) -> LumpedMeasure:
    return LumpedMeasure(measure, frozenset(ones))


def cylinder_prob(measure: ProcessMeasure, cyl: Union[Cylinder, PartialCylinder]) -> CylinderProb:
    """Exact probability of a (point or partial) cylinder."""
    if isinstance(cyl, PartialCylinder):
        return measure.partial_prob(cyl)
    return measure.cylinder_prob(cyl)


def cylinder_table(measure: ProcessMeasure, window: Window) -> dict[tuple[int, ...], CylinderProb]:
    """All point-cylinder probabilities on ``window`` keyed by symbol word."""
    return {c.symbols: measure.cylinder_prob(c) for c in all_cylinders(window, measure.alphabet)}


# --------------------------------------------------------------------------- validation


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    value: Any = None


@dataclass
class ValidationReport:
    window_len: int
    checks: list[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "window_len": self.window_len,
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail, "value": _enc(c.value)} for c in self.checks
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> ValidationReport:
        from .exact import decode_number

        checks = [
            CheckResult(c["name"], c["passed"], c["detail"], None if c["value"] is None else decode_number(c["value"]))
            for c in d["checks"]
        ]
        return cls(d["window_len"], checks)


def _enc(v):
    return None if v is None else encode_number(v)


def validate_measure(measure: ProcessMeasure, window_len: int, max_cells: int = 1 << 20) -> ValidationReport:
    """Normalization, Kolmogorov consistency and (for DPPs) kernel spectrum on ``[0, window_len-1]``.

    Failures are recorded in the report; nothing is raised for a bad measure.
    """
    if window_len < 1:
        raise MeasureError("window_len must be >= 1")
    if measure.alphabet.size ** window_len > max_cells:
        raise MeasureError(f"{measure.alphabet.size}^{window_len} cylinders exceeds the cap of {max_cells}")
    checks: list[CheckResult] = []
    win = Window(0, window_len - 1)

    if isinstance(measure, DeterminantalMeasure):
        try:
            ev = dpp.kernel_spectrum(measure.kernel, win)
            lo, hi = float(ev.min()), float(ev.max())
            ok = lo >= -1e-8 and hi <= 1 + 1e-8
            checks.append(CheckResult("spectrum", ok, f"eigenvalues of K_W in [{lo:.6g}, {hi:.6g}]", hi if not ok else lo))
        except dpp.WindowCapError as exc:
            checks.append(CheckResult("spectrum", False, str(exc)))

    try:
        table = cylinder_table(measure, win)
    except (dpp.KernelValidityError, dpp.WindowCapError) as exc:
        checks.append(CheckResult("normalization", False, f"cylinder evaluation failed: {exc}"))
        return ValidationReport(window_len, checks)

    total = sum((cp.value for cp in table.values()), start=0 * measure.one)
    err = abs(total - 1)
    checks.append(CheckResult("normalization", err <= 1e-10, f"sum over {len(table)} cylinders = {float(total)!r}", total))

    if window_len >= 2:
        short = cylinder_table(measure, Window(0, window_len - 2))
        worst = 0 * measure.one
        for word, cp in short.items():
            marg = sum((table[word + (s,)].value for s in measure.alphabet.symbols), start=0 * measure.one)
            worst = max(worst, abs(marg - cp.value))
        checks.append(
            CheckResult("consistency", worst <= 1e-12, f"max |marginal - shorter window| = {float(worst):.3g}", worst)
        )
    neg = [w for w, cp in table.items() if cp.value < 0]
    checks.append(CheckResult("nonnegative", not neg, f"{len(neg)} negative cylinder values"))
    return ValidationReport(window_len, checks)


# --------------------------------------------------------------------------- spec files


def _vec(obj, where: str) -> list[Num]:
    if not isinstance(obj, list):
        raise SpecError(f"{where}: expected a list")
    try:
        return [parse_number(v, f"{where}[{i}]") for i, v in enumerate(obj)]
    except NumberParseError as exc:
        raise SpecError(str(exc)) from None


def measure_from_dict(spec: Mapping, cap: int = dpp.DEFAULT_CAP) -> ProcessMeasure:
    """Build a measure from the JSON-compatible spec schema."""
    if not isinstance(spec, Mapping):
        raise SpecError("spec: expected an object")
    kind = spec.get("type")
    try:
        if kind == "bernoulli":
            return BernoulliMeasure(tuple(_vec(spec.get("pi"), "pi")))
        if kind == "mixture":
            comps = spec.get("components")
            if not isinstance(comps, list):
                raise SpecError("components: expected a list")
            out = []
            for i, c in enumerate(comps):
                if not isinstance(c, Mapping) or "w" not in c or "pi" not in c:
                    raise SpecError(f"components[{i}]: expected an object with 'w' and 'pi'")
                try:
                    w = parse_number(c["w"], f"components[{i}].w")
                except NumberParseError as exc:
                    raise SpecError(str(exc)) from None
                out.append((w, tuple(_vec(c["pi"], f"components[{i}].pi"))))
            return MixtureMeasure(tuple(out))
        if kind == "markov":
            rows = spec.get("Pi")
            if not isinstance(rows, list):
                raise SpecError("Pi: expected a list of rows")
            Pi = tuple(tuple(_vec(r, f"Pi[{i}]")) for i, r in enumerate(rows))
            p = spec.get("p")
            return MarkovMeasure(Pi, None if p is None else tuple(_vec(p, "p")))
        if kind == "dpp-sine":
            a = spec.get("a")
            try:
                a = float(parse_number(a, "a"))
            except NumberParseError as exc:
                raise SpecError(str(exc)) from None
            return DeterminantalMeasure(dpp.SineKernel(a), cap=cap)
        if kind == "dpp-toeplitz":
            return DeterminantalMeasure(dpp.ToeplitzKernel(tuple(float(v) for v in _vec(spec.get("c"), "c"))), cap=cap)
        if kind == "lumped":
            return LumpedMeasure(measure_from_dict(spec.get("base"), cap), frozenset(spec.get("ones", ())))
    except SpecError:
        raise
    except (MeasureError, ValueError) as exc:
        raise SpecError(f"{kind}: {exc}") from None
    raise SpecError(f"type: unknown measure type {kind!r}")


def load_measure(path, cap: int = dpp.DEFAULT_CAP) -> ProcessMeasure:
    """Read a spec file; JSON syntax errors report line and column."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return measure_from_dict(spec, cap)
