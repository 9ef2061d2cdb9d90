"""Exchangeability and quasi-exchangeability on finite windows."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Optional, Union

import numpy as np

from .core import (
    Alphabet,
    Cylinder,
    CylinderError,
    FinitePermutation,
    Window,
    perm_apply_to_cylinder,
    perm_transposition,
    permute_word,
)
from .exact import Num, decode_number, encode_number
from .measures import CylinderProb, DeterminantalMeasure, MarkovMeasure, ProcessMeasure, cylinder_table

ENUM_CAP = 10**7
MAX_EXHAUSTIVE_N = 8
MAX_EXACT_SYMMETRIZE_N = 4


class EnumerationCapError(ValueError):
    pass


class WitnessHypothesisError(ValueError):
    """The chain is not irreducible and aperiodic."""


@dataclass(frozen=True)
class CylinderTable:
    """Point-cylinder probabilities on one window, keyed by symbol word."""

    window: Window
    alphabet: Alphabet
    probs: dict

    @classmethod
    def from_measure(cls, measure: ProcessMeasure, window: Window) -> CylinderTable:
        return cls(window, measure.alphabet, cylinder_table(measure, window))

    def value(self, word) -> Num:
        return self.probs[tuple(word)].value

    def total(self) -> Num:
        vals = [cp.value for cp in self.probs.values()]
        return sum(vals[1:], start=vals[0])

    @property
    def exact(self) -> bool:
        return all(isinstance(cp.value, Fraction) for cp in self.probs.values())

    def to_dict(self) -> dict:
        return {
            "window": str(self.window),
            "alphabet_size": self.alphabet.size,
            "rows": [
                {"cylinder": str(Cylinder(self.window, w)), "prob": encode_number(cp.value), "structural_zero": cp.structural_zero}
                for w, cp in self.probs.items()
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> CylinderTable:
        window = Window.parse(d["window"])
        probs = {
            Cylinder.parse(r["cylinder"]).symbols: CylinderProb(decode_number(r["prob"]), r["structural_zero"])
            for r in d["rows"]
        }
        return cls(window, Alphabet(d["alphabet_size"]), probs)


# --------------------------------------------------------------------------- exchangeability


@dataclass
class ExchangeReport:
    window: Window
    max_deviation: Num
    worst_cylinder: Cylinder
    worst_perm: FinitePermutation
    tol: float
    permutations_checked: int
    exhaustive: bool
    coverage: float

    @property
    def window_len(self) -> int:
        return self.window.length

    @property
    def worst_pair(self) -> tuple[Cylinder, FinitePermutation]:
        return self.worst_cylinder, self.worst_perm

    @property
    def exchangeable(self) -> bool:
        return self.max_deviation <= self.tol

    @property
    def verdict(self) -> str:
        return "exchangeable within tol" if self.exchangeable else "violated"

    def to_dict(self) -> dict:
        return {
            "window": str(self.window),
            "window_len": self.window_len,
            "max_deviation": encode_number(self.max_deviation),
            "worst_cylinder": str(self.worst_cylinder),
            "worst_perm": str(self.worst_perm),
            "tol": self.tol,
            "verdict": self.verdict,
            "permutations_checked": self.permutations_checked,
            "exhaustive": self.exhaustive,
            "coverage": self.coverage,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ExchangeReport:
        return cls(
            Window.parse(d["window"]),
            decode_number(d["max_deviation"]),
            Cylinder.parse(d["worst_cylinder"]),
            FinitePermutation.parse(d["worst_perm"]),
            d["tol"],
            d["permutations_checked"],
            d["exhaustive"],
            d["coverage"],
        )


def default_tol(measure) -> float:
    if isinstance(measure, DeterminantalMeasure):
        return 1e-9
    return 1e-12


def _window_perms(window: Window, exhaustive: bool, n_samples: int, seed: int):
    coords = list(window)
    if exhaustive:
        for images in permutations(coords):
            yield FinitePermutation.from_one_line(coords, images)
        return
    rng = np.random.default_rng(seed)
    for _ in range(n_samples):
        yield FinitePermutation.from_one_line(coords, [coords[i] for i in rng.permutation(len(coords))])


def check_exchangeable(
    source: Union[ProcessMeasure, CylinderTable],
    n: Optional[int] = None,
    tol: Optional[float] = None,
    *,
    window: Optional[Window] = None,
    enum_cap: int = ENUM_CAP,
    mode: str = "auto",
    n_samples: int = 2000,
    seed: int = 0,
) -> ExchangeReport:
    """Max over cylinders ``C`` and window permutations ``sigma`` of ``|mu(C) - mu(T_sigma^{-1} C)|``.

    The window defaults to ``[0, n-1]`` (or the table's own window). ``mode``
    is ``"exhaustive"``, ``"sampled"`` or ``"auto"``; sampling gives a lower
    bound on the true deviation. Among equal deviations, pairs where exactly
    one side is a structural zero are preferred, since those also break
    mutual absolute continuity.
    """
    if isinstance(source, CylinderTable):
        table = source
        if window is not None and window != table.window:
            raise ValueError("a cylinder table can only be checked on its own window")
        window = table.window
    else:
        if window is None:
            if n is None or n < 1:
                raise ValueError("need n >= 1 or an explicit window")
            window = Window(0, n - 1)
        table = None
    tol = default_tol(source) if tol is None else tol
    L = window.length
    size = (table.alphabet if table else source.alphabet).size
    fits = L <= MAX_EXHAUSTIVE_N and size**L * math.factorial(L) <= enum_cap
    if mode == "exhaustive" and not fits:
        raise EnumerationCapError(
            f"{size}^{L} cylinders x {L}! permutations exceeds the exhaustive cap ({enum_cap}, n <= {MAX_EXHAUSTIVE_N})"
        )
    exhaustive = mode == "exhaustive" or (mode == "auto" and fits)
    if table is None:
        table = CylinderTable.from_measure(source, window)

    probs = table.probs
    best = None  # (deviation, structural_bonus) ordering key
    worst_c = worst_p = None
    perms = [s for s in _window_perms(window, exhaustive, n_samples, seed)]
    checked = len(perms)
    perms = [s for s in perms if not s.is_identity()]
    # cylinders outer, permutations inner: the first strict maximum wins ties
    for word, cp in probs.items():
        for sigma in perms:
            other = probs[permute_word(word, window.lo, sigma)]
            dev = abs(cp.value - other.value)
            key = (dev, cp.structural_zero != other.structural_zero)
            if best is None or key > best:
                best, worst_c, worst_p = key, word, sigma
    if best is None:
        zero = probs[next(iter(probs))].value * 0
        best, worst_c, worst_p = (zero, False), next(iter(probs)), FinitePermutation.identity()
    coverage = 1.0 if exhaustive else min(1.0, checked / math.factorial(L))
    return ExchangeReport(window, best[0], Cylinder(window, worst_c), worst_p, tol, checked, exhaustive, coverage)


# --------------------------------------------------------------------------- Radon-Nikodym ratios


@dataclass(frozen=True)
class RnRow:
    cylinder: Cylinder
    permuted_prob: Num
    prob: Num
    ratio: Optional[Num]
    flag: str  # "finite" | "zero/zero" | "violation"


@dataclass
class RnRatioTable:
    sigma: FinitePermutation
    window: Window
    rows: list[RnRow]

    @property
    def violations(self) -> list[RnRow]:
        return [r for r in self.rows if r.flag == "violation"]

    @property
    def quasi_exchangeable(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "sigma": str(self.sigma),
            "window": str(self.window),
            "quasi_exchangeable_on_window": self.quasi_exchangeable,
            "rows": [
                {
                    "cylinder": str(r.cylinder),
                    "permuted_prob": encode_number(r.permuted_prob),
                    "prob": encode_number(r.prob),
                    "ratio": None if r.ratio is None else encode_number(r.ratio),
                    "flag": r.flag,
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> RnRatioTable:
        rows = [
            RnRow(
                Cylinder.parse(r["cylinder"]),
                decode_number(r["permuted_prob"]),
                decode_number(r["prob"]),
                None if r["ratio"] is None else decode_number(r["ratio"]),
                r["flag"],
            )
            for r in d["rows"]
        ]
        return cls(FinitePermutation.parse(d["sigma"]), Window.parse(d["window"]), rows)


def _is_zero(cp: CylinderProb) -> bool:
    return cp.structural_zero or cp.value == 0


def rn_ratio_table(measure: ProcessMeasure, sigma: FinitePermutation, window: Window) -> RnRatioTable:
    """Cylinder-level Radon-Nikodym ratios ``mu(T_sigma^{-1} C) / mu(C)`` on ``window``."""
    if not sigma.support <= set(window):
        raise CylinderError(f"support of {sigma} escapes window {window}")
    table = cylinder_table(measure, window)
    rows = []
    for word, cp in table.items():
        image = table[permute_word(word, window.lo, sigma)]
        z_num, z_den = _is_zero(image), _is_zero(cp)
        if z_num and z_den:
            ratio, flag = None, "zero/zero"
        elif z_num or z_den:
            ratio, flag = None, "violation"
        else:
            ratio, flag = image.value / cp.value, "finite"
        rows.append(RnRow(Cylinder(window, word), image.value, cp.value, ratio, flag))
    return RnRatioTable(sigma, window, rows)


# --------------------------------------------------------------------------- Markov witness


@dataclass(frozen=True)
class QuasiWitness:
    C: Cylinder
    D: Cylinder
    sigma: FinitePermutation
    mu_C: CylinderProb
    mu_D: CylinderProb
    zero_entry: tuple[int, int]

    def describe(self) -> str:
        return (
            f"C = {self.C.bracket()}  mu(C) = {self.mu_C.value} (structural zero: {self.mu_C.structural_zero})\n"
            f"D = {self.D.bracket()}  mu(D) = {self.mu_D.value}\n"
            f"sigma = {self.sigma}  T_sigma^-1 C = D, T_sigma^-1 D = C\n"
            f"zero transition Pi[{self.zero_entry[0]},{self.zero_entry[1]}] = 0"
        )

    def to_dict(self) -> dict:
        return {
            "C": str(self.C),
            "D": str(self.D),
            "sigma": str(self.sigma),
            "mu_C": encode_number(self.mu_C.value),
            "mu_C_structural_zero": self.mu_C.structural_zero,
            "mu_D": encode_number(self.mu_D.value),
            "zero_entry": list(self.zero_entry),
        }

    @classmethod
    def from_dict(cls, d: dict) -> QuasiWitness:
        return cls(
            Cylinder.parse(d["C"]),
            Cylinder.parse(d["D"]),
            FinitePermutation.parse(d["sigma"]),
            CylinderProb(decode_number(d["mu_C"]), d["mu_C_structural_zero"]),
            CylinderProb(decode_number(d["mu_D"]), False),
            tuple(d["zero_entry"]),
        )


def _shortest_positive_path(pattern: list[list[bool]], src: int, dst: int) -> Optional[list[int]]:
    """Shortest walk of length >= 1 from ``src`` to ``dst`` in the positive-entry digraph."""
    n = len(pattern)
    parent: dict[int, int] = {}
    queue = deque()
    for v in range(n):
        if pattern[src][v] and v not in parent:
            parent[v] = src
            queue.append(v)
    while queue:
        u = queue.popleft()
        if u == dst:
            path = [u]
            while True:
                u = parent[u]
                path.append(u)
                if u == src:
                    return path[::-1]
        for v in range(n):
            if pattern[u][v] and v not in parent:
                parent[v] = u
                queue.append(v)
    return None


def quasi_witness_markov(chain: MarkovMeasure) -> Optional[QuasiWitness]:
    """Pair of cylinders proving a chain with a zero transition is not quasi-exchangeable.

    For ``Pi[i0, j0] = 0`` pick ``a`` with ``Pi[j0, a] > 0``, ``j`` with
    ``Pi[i0, j] > 0`` and a shortest positive walk ``a -> x_1 .. -> i0`` of
    length ``n``. Then ``C = [[j, a, x_1.., i0, j0]]`` has probability zero
    while its image ``D = [[j0, a, x_1.., i0, j]]`` under the transposition
    ``(0 n+2)`` does not. Returns ``None`` when ``Pi`` has no zero entry.
    """
    if not chain.is_irreducible_aperiodic():
        raise WitnessHypothesisError("transition matrix is not irreducible and aperiodic")
    pattern = chain.positive_pattern()
    size = len(pattern)
    zero = next(((i, j) for i in range(size) for j in range(size) if not pattern[i][j]), None)
    if zero is None:
        return None
    i0, j0 = zero
    a = min(v for v in range(size) if pattern[j0][v])
    j = min(v for v in range(size) if pattern[i0][v])
    walk = _shortest_positive_path(pattern, a, i0)
    if walk is None:  # unreachable for an irreducible chain
        raise WitnessHypothesisError(f"no positive walk from {a} to {i0}")
    n = len(walk) - 1
    middle = walk[1:-1]
    C = Cylinder.at(0, [j, a, *middle, i0, j0])
    D = Cylinder.at(0, [j0, a, *middle, i0, j])
    sigma = perm_transposition(0, n + 2)
    mu_C = chain.cylinder_prob(C)
    mu_D = chain.cylinder_prob(D)
    if perm_apply_to_cylinder(sigma, C) != D or perm_apply_to_cylinder(sigma, D) != C:
        raise AssertionError("witness construction broke T_sigma^-1 C = D")
    if not mu_C.structural_zero or _is_zero(mu_D):
        raise AssertionError("witness construction broke mu(C) = 0 < mu(D)")
    return QuasiWitness(C, D, sigma, mu_C, mu_D, (i0, j0))


# --------------------------------------------------------------------------- symmetrization


def _orbit_average(table: dict, window: Window, N: int, one) -> dict:
    """Exact ``nu_N``: average of ``mu`` over every rearrangement of the ``[-N, N]`` slots.

    Each of the ``(2N+1)!`` permutations hits every distinct rearrangement of
    a word equally often, so averaging over distinct rearrangements (the
    orbit) gives the same value with ``|K|^|W|`` work instead of
    ``|K|^|W| (2N+1)!``.
    """
    inner = [c - window.lo for c in range(-N, N + 1)]
    outer_idx = [i for i in range(window.length) if i not in set(inner)]
    groups: dict[tuple, list] = {}
    for word in table:
        inner_syms = tuple(sorted(word[i] for i in inner))
        outer = tuple(word[i] for i in outer_idx)
        groups.setdefault((outer, inner_syms), []).append(word)
    out = {}
    for words in groups.values():
        vals = [table[w].value for w in words]
        avg = sum(vals[1:], start=vals[0]) / (len(words) * one)
        structural = all(table[w].structural_zero for w in words)
        for w in words:
            out[w] = CylinderProb(avg, structural)
    return out


def symmetrize(
    measure: ProcessMeasure,
    N: int,
    window: Optional[Window] = None,
    *,
    mode: str = "auto",
    n_samples: int = 20000,
    seed: int = 0,
    max_exact_N: int = MAX_EXACT_SYMMETRIZE_N,
) -> CylinderTable:
    """Table of ``nu_N(C) = (2N+1)!^{-1} sum_{sigma in H_N} mu(T_sigma^{-1} C)`` on ``window``.

    ``mode="exact"`` requires ``N <= max_exact_N``; ``"mc"`` averages over
    ``n_samples`` uniform random permutations of ``[-N, N]``.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    window = Window(-N, N) if window is None else window
    if not window.contains_window(Window(-N, N)):
        raise CylinderError(f"window {window} must contain [-{N}, {N}]")
    if mode == "exact" and N > max_exact_N:
        raise EnumerationCapError(f"exact symmetrization limited to N <= {max_exact_N}")
    table = cylinder_table(measure, window)
    if mode == "exact" or (mode == "auto" and N <= max_exact_N):
        return CylinderTable(window, measure.alphabet, _orbit_average(table, window, N, measure.one))

    coords = list(range(-N, N + 1))
    rng = np.random.default_rng(seed)
    acc = {w: 0.0 for w in table}
    for _ in range(n_samples):
        sigma = FinitePermutation.from_one_line(coords, [coords[i] for i in rng.permutation(len(coords))])
        for w in table:
            acc[w] += float(table[permute_word(w, window.lo, sigma)].value)
    out = {w: CylinderProb(v / n_samples) for w, v in acc.items()}
    return CylinderTable(window, measure.alphabet, out)


def symmetrize_bruteforce(measure: ProcessMeasure, N: int, window: Window) -> CylinderTable:
    """Literal average over all ``(2N+1)!`` permutations in lexicographic one-line order."""
    table = cylinder_table(measure, window)
    coords = list(range(-N, N + 1))
    count = math.factorial(len(coords))
    acc = {w: 0 * measure.one for w in table}
    for images in permutations(coords):
        sigma = FinitePermutation.from_one_line(coords, images)
        for w in table:
            acc[w] = acc[w] + table[permute_word(w, window.lo, sigma)].value
    return CylinderTable(window, measure.alphabet, {w: CylinderProb(v / count) for w, v in acc.items()})
