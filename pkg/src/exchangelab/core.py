"""Alphabets, windows, cylinders, the shift, and finite-support permutations.

Conventions
-----------
A permutation ``sigma`` acts on configurations by ``(T_sigma w)_n = w[sigma(n)]``.
For a point cylinder ``C`` the preimage ``T_sigma^{-1} C`` carries, at
coordinate ``k``, the symbol that ``C`` had at ``sigma^{-1}(k)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence


class CylinderError(ValueError):
    """Malformed window, cylinder or permutation."""


@dataclass(frozen=True)
class Alphabet:
    size: int

    def __post_init__(self):
        if not isinstance(self.size, int) or self.size < 1:
            raise CylinderError(f"alphabet size must be a positive integer, got {self.size!r}")

    @property
    def symbols(self) -> range:
        return range(self.size)

    def __contains__(self, s) -> bool:
        return isinstance(s, int) and 0 <= s < self.size


@dataclass(frozen=True, order=True)
class Window:
    """Inclusive interval ``[lo, hi]`` of integer coordinates."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise CylinderError(f"empty window [{self.lo}, {self.hi}]")

    @property
    def length(self) -> int:
        return self.hi - self.lo + 1

    def __len__(self) -> int:
        return self.length

    def __iter__(self) -> Iterator[int]:
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, i) -> bool:
        return self.lo <= i <= self.hi

    def shifted(self, m: int) -> Window:
        return Window(self.lo + m, self.hi + m)

    def contains_window(self, other: Window) -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    @classmethod
    def parse(cls, text: str) -> Window:
        """Parse ``"lo..hi"`` (e.g. ``-1..1``)."""
        m = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
        if not m:
            raise CylinderError(f"cannot parse window {text!r}; expected 'lo..hi'")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.lo}..{self.hi}"


@dataclass(frozen=True)
class Cylinder:
    """Point cylinder: one symbol per coordinate of ``window``."""

    window: Window
    symbols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(int(s) for s in self.symbols))
        if len(self.symbols) != self.window.length:
            raise CylinderError(
                f"cylinder has {len(self.symbols)} symbols for a window of length {self.window.length}"
            )
        if any(s < 0 for s in self.symbols):
            raise CylinderError("symbols must be non-negative")

    @classmethod
    def at(cls, offset: int, symbols: Sequence[int]) -> Cylinder:
        return cls(Window(offset, offset + len(symbols) - 1), tuple(symbols))

    @property
    def length(self) -> int:
        return self.window.length

    def __len__(self) -> int:
        return self.window.length

    def __getitem__(self, coord: int) -> int:
        """Symbol at absolute coordinate ``coord``."""
        if coord not in self.window:
            raise KeyError(coord)
        return self.symbols[coord - self.window.lo]

    def items(self) -> Iterator[tuple[int, int]]:
        return zip(self.window, self.symbols)

    def as_mapping(self) -> dict[int, int]:
        return dict(self.items())

    def check_alphabet(self, alphabet: Alphabet) -> None:
        bad = [s for s in self.symbols if s not in alphabet]
        if bad:
            raise CylinderError(f"symbol {bad[0]} outside alphabet of size {alphabet.size}")

    @classmethod
    def parse(cls, text: str) -> Cylinder:
        """Parse ``offset:symbols``.

        ``0:011`` is ``[[0,1,1]]`` on ``[0, 2]``. Symbols may be comma separated
        (``-1:1,0,12``) when the alphabet has more than ten letters.
        """
        m = re.fullmatch(r"\s*(-?\d+)\s*:\s*([0-9,\s]+?)\s*", text)
        if not m:
            raise CylinderError(f"cannot parse cylinder {text!r}; expected 'offset:symbols'")
        body = m.group(2)
        if "," in body:
            parts = [p.strip() for p in body.split(",")]
            if any(not p for p in parts):
                raise CylinderError(f"empty symbol in cylinder {text!r}")
            syms = [int(p) for p in parts]
        else:
            syms = [int(ch) for ch in body.replace(" ", "")]
        if not syms:
            raise CylinderError(f"cylinder {text!r} has no symbols")
        return cls.at(int(m.group(1)), syms)

    def __str__(self) -> str:
        if all(s < 10 for s in self.symbols):
            body = "".join(map(str, self.symbols))
        else:
            body = ",".join(map(str, self.symbols))
        return f"{self.window.lo}:{body}"

    def bracket(self) -> str:
        """Bracket notation ``[[x_0,...,x_n]]@lo``."""
        inner = ",".join(map(str, self.symbols))
        return f"[[{inner}]]" if self.window.lo == 0 else f"[[{inner}]]@{self.window.lo}"


@dataclass(frozen=True)
class PartialCylinder:
    """Constraint on a scattered coordinate set.

    Coordinates of ``window`` not in ``assignment`` are free; probabilities
    marginalize over them.
    """

    window: Window
    assignment: Mapping[int, int]

    def __post_init__(self):
        object.__setattr__(self, "assignment", dict(sorted(self.assignment.items())))
        if not self.assignment:
            raise CylinderError("partial cylinder constrains no coordinate")
        if any(c not in self.window for c in self.assignment):
            raise CylinderError("constrained coordinate outside the enclosing window")

    @classmethod
    def from_mapping(cls, assignment: Mapping[int, int]) -> PartialCylinder:
        if not assignment:
            raise CylinderError("partial cylinder constrains no coordinate")
        return cls(Window(min(assignment), max(assignment)), assignment)

    @property
    def free(self) -> tuple[int, ...]:
        return tuple(c for c in self.window if c not in self.assignment)

    def is_point(self) -> bool:
        return not self.free

    def to_cylinder(self) -> Cylinder:
        if not self.is_point():
            raise CylinderError("partial cylinder has free coordinates")
        return Cylinder(self.window, tuple(self.assignment[c] for c in self.window))

    def __str__(self) -> str:
        body = "".join(str(self.assignment.get(c, "*")) for c in self.window)
        return f"{self.window.lo}:{body}"


class ScatteredCylinderError(CylinderError):
    """The permuted cylinder no longer lives on an interval.

    ``mapping`` holds the coordinate -> symbol constraints of the image; use
    :meth:`partial` to re-window it over the enclosing interval.
    """

    def __init__(self, mapping: Mapping[int, int]):
        self.mapping = dict(sorted(mapping.items()))
        super().__init__(f"image cylinder is scattered over coordinates {sorted(self.mapping)}")

    def partial(self) -> PartialCylinder:
        return PartialCylinder.from_mapping(self.mapping)


@dataclass(frozen=True)
class FinitePermutation:
    """Bijection of the integers that is the identity off a finite support.

    Only moved points are stored, so the cost is proportional to the support.
    """

    mapping: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        moved = {int(i): int(j) for i, j in dict(self.mapping).items() if i != j}
        if set(moved) != set(moved.values()):
            raise CylinderError("mapping is not a bijection of its support onto itself")
        object.__setattr__(self, "mapping", dict(sorted(moved.items())))

    def __hash__(self):
        return hash(tuple(self.mapping.items()))

    def __eq__(self, other):
        if not isinstance(other, FinitePermutation):
            return NotImplemented
        return self.mapping == other.mapping

    @classmethod
    def identity(cls) -> FinitePermutation:
        return cls({})

    @classmethod
    def from_one_line(cls, coords: Sequence[int], images: Sequence[int]) -> FinitePermutation:
        """``coords[i] -> images[i]``; ``images`` must rearrange ``coords``."""
        if sorted(coords) != sorted(images):
            raise CylinderError("one-line images must rearrange the coordinates")
        return cls(dict(zip(coords, images)))

    @classmethod
    def from_cycles(cls, cycles: Iterable[Sequence[int]]) -> FinitePermutation:
        mapping: dict[int, int] = {}
        seen: set[int] = set()
        for cyc in cycles:
            cyc = [int(c) for c in cyc]
            if len(set(cyc)) != len(cyc) or seen & set(cyc):
                raise CylinderError(f"cycle {tuple(cyc)} repeats a point")
            seen.update(cyc)
            for a, b in zip(cyc, cyc[1:] + cyc[:1]):
                mapping[a] = b
        return cls(mapping)

    def __call__(self, i: int) -> int:
        return self.mapping.get(i, i)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(self.mapping)

    def is_identity(self) -> bool:
        return not self.mapping

    def inverse(self) -> FinitePermutation:
        return FinitePermutation({j: i for i, j in self.mapping.items()})

    def compose(self, other: FinitePermutation) -> FinitePermutation:
        """``self ∘ other``: apply ``other`` first."""
        pts = self.support | other.support
        return FinitePermutation({i: self(other(i)) for i in pts})

    __matmul__ = compose

    def cycles(self) -> list[tuple[int, ...]]:
        out, seen = [], set()
        for start in self.mapping:
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            out.append(tuple(cyc))
        return out

    def __str__(self) -> str:
        cyc = self.cycles()
        if not cyc:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)

    def __repr__(self) -> str:
        return f"FinitePermutation({self})"

    @classmethod
    def parse(cls, text: str) -> FinitePermutation:
        """Parse cycle notation such as ``(0 1)(4 5)``; ``()`` or ``id`` is the identity."""
        s = text.strip()
        if s in ("", "()", "id", "e"):
            return cls.identity()
        if not re.fullmatch(r"(\(\s*-?\d+(?:[\s,]+-?\d+)*\s*\)\s*)+", s):
            raise CylinderError(f"cannot parse permutation {text!r}; expected cycles like '(0 1)(4 5)'")
        cycles = [
            [int(x) for x in re.split(r"[\s,]+", body.strip())]
            for body in re.findall(r"\(([^)]*)\)", s)
        ]
        return cls.from_cycles(cycles)


def perm_block_swap(P: int, k: int) -> FinitePermutation:
    """Involution exchanging ``{1..k}`` with ``{P+1..P+k}`` (blockwise, in order)."""
    if k < 1:
        raise CylinderError(f"block length k must be >= 1, got {k}")
    if k >= P:
        raise CylinderError(f"blocks overlap: need k < P, got k={k}, P={P}")
    mapping = {}
    for j in range(1, k + 1):
        mapping[j] = P + j
        mapping[P + j] = j
    return FinitePermutation(mapping)


def perm_transposition(i: int, j: int) -> FinitePermutation:
    if i == j:
        return FinitePermutation.identity()
    return FinitePermutation({i: j, j: i})


def perm_compose(sigma: FinitePermutation, tau: FinitePermutation) -> FinitePermutation:
    """``sigma ∘ tau`` (``tau`` applied first)."""
    return sigma.compose(tau)


def perm_inverse(sigma: FinitePermutation) -> FinitePermutation:
    return sigma.inverse()


def perm_apply_to_cylinder(sigma: FinitePermutation, cyl: Cylinder) -> Cylinder:
    """Return the point cylinder ``T_sigma^{-1} C``.

    Raises :class:`ScatteredCylinderError` when ``sigma`` moves a window
    coordinate outside the window.
    """
    tau = sigma.inverse()
    # coordinate k of the image carries cyl[tau(k)], k ranging over sigma(J)
    image = {k: cyl[tau(k)] for k in map(sigma, cyl.window)}
    if any(k not in cyl.window for k in image):
        raise ScatteredCylinderError(image)
    return Cylinder(cyl.window, tuple(image[k] for k in cyl.window))


def permute_word(word: Sequence[int], lo: int, sigma: FinitePermutation) -> tuple[int, ...]:
    """Tuple-level ``T_sigma^{-1}`` for a word starting at ``lo``; ``sigma`` must stabilize it."""
    n = len(word)
    if any(not (0 <= i - lo < n) for i in sigma.mapping):
        raise ScatteredCylinderError({sigma(lo + t): s for t, s in enumerate(word)})
    out = list(word)
    for i, j in sigma.mapping.items():
        out[j - lo] = word[i - lo]
    return tuple(out)


def shift_cylinder(cyl: Cylinder, m: int) -> Cylinder:
    return Cylinder(cyl.window.shifted(m), cyl.symbols)


def all_cylinders(window: Window, alphabet: Alphabet) -> Iterator[Cylinder]:
    """Every point cylinder on ``window`` in lexicographic symbol order."""
    from itertools import product

    for word in product(range(alphabet.size), repeat=window.length):
        yield Cylinder(window, word)
