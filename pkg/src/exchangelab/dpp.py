"""Translation-invariant kernels on Z and determinantal window probabilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence, Union

import numpy as np

from .core import Window

DEFAULT_CAP = 64
CLAMP_TOL = 1e-9


class KernelValidityError(ValueError):
    """A determinant fell outside [0, 1] beyond tolerance."""


class WindowCapError(ValueError):
    pass


def sine_kernel_value(x: int, y: int, a: float) -> float:
    """Discrete sine kernel ``S_1(x - y, a)``.

    ``S_1(d, a) = sin(d * arccos(a/2)) / (pi d)`` and ``S_1(0, a) = arccos(a/2) / pi``.
    At ``a = ±2`` the process is degenerate (empty or full) and off-diagonal
    entries are returned as exact zeros.
    """
    if not -2.0 <= a <= 2.0:
        raise ValueError(f"sine kernel parameter must lie in [-2, 2], got {a}")
    d = abs(x - y)
    theta = math.acos(a / 2.0)
    if d == 0:
        return theta / math.pi
    if a == 2.0 or a == -2.0:
        return 0.0
    return math.sin(d * theta) / (math.pi * d)


@dataclass(frozen=True)
class SineKernel:
    a: float

    def __post_init__(self):
        if not -2.0 <= self.a <= 2.0:
            raise ValueError(f"sine kernel parameter must lie in [-2, 2], got {self.a}")

    def entry(self, d: int) -> float:
        return sine_kernel_value(d, 0, self.a)

    def to_dict(self) -> dict:
        return {"type": "dpp-sine", "a": self.a}


@dataclass(frozen=True)
class ToeplitzKernel:
    """``k(x, y) = c[|x - y|]``, zero beyond ``len(c) - 1``.

    No validity check at construction; ``validate_measure`` reports kernels
    whose spectrum leaves [0, 1].
    """

    c: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        if not self.c:
            raise ValueError("Toeplitz kernel needs at least c_0")

    def entry(self, d: int) -> float:
        d = abs(d)
        return self.c[d] if d < len(self.c) else 0.0

    def to_dict(self) -> dict:
        return {"type": "dpp-toeplitz", "c": list(self.c)}


KernelSpec = Union[SineKernel, ToeplitzKernel]


def _coords(points: Union[Window, Iterable[int]]) -> list[int]:
    return sorted(set(points))


def kernel_matrix(kernel: KernelSpec, points: Union[Window, Iterable[int]]) -> np.ndarray:
    """Kernel restricted to ``points`` (sorted); entries depend on differences only."""
    pts = _coords(points)
    n = len(pts)
    cache: dict[int, float] = {}
    out = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            d = abs(pts[i] - pts[j])
            if d not in cache:
                cache[d] = kernel.entry(d)
            out[i, j] = cache[d]
    return out


def _check_cap(n: int, cap: int) -> None:
    if n > cap:
        raise WindowCapError(f"{n} coordinates exceeds the determinant cap of {cap}")


def _clamp(value: float, what: str) -> float:
    if value < -CLAMP_TOL or value > 1 + CLAMP_TOL:
        raise KernelValidityError(f"{what} = {value:.12g} lies outside [0, 1]; kernel is not a valid DPP kernel")
    return min(max(value, 0.0), 1.0)


def dpp_inclusion_prob(kernel: KernelSpec, points: Iterable[int], cap: int = DEFAULT_CAP) -> float:
    """``P(A ⊆ xi) = det K_A``."""
    pts = _coords(points)
    if not pts:
        raise ValueError("inclusion set must be nonempty")
    _check_cap(len(pts), cap)
    return _clamp(float(np.linalg.det(kernel_matrix(kernel, pts))), "det K_A")


def dpp_window_config_prob(
    kernel: KernelSpec,
    window: Union[Window, Iterable[int]],
    occupied: Iterable[int],
    cap: int = DEFAULT_CAP,
) -> float:
    """``P(xi ∩ W = A)`` as ``(-1)^{|W \\ A|} det(K_W - I_{W \\ A})``.

    ``window`` may be any finite coordinate set, not only an interval.
    """
    pts = _coords(window)
    occ = set(occupied)
    if not occ <= set(pts):
        raise ValueError("occupied set must be a subset of the window")
    _check_cap(len(pts), cap)
    if not pts:
        return 1.0
    m = kernel_matrix(kernel, pts)
    empty = [i for i, x in enumerate(pts) if x not in occ]
    for i in empty:
        m[i, i] -= 1.0
    val = float(np.linalg.det(m))
    if len(empty) % 2:
        val = -val
    return _clamp(val, "P(xi ∩ W = A)")


def inclusion_exclusion_prob(kernel: KernelSpec, window: Iterable[int], occupied: Iterable[int]) -> float:
    """Oracle for :func:`dpp_window_config_prob`.

    ``sum over A ⊆ B ⊆ W of (-1)^{|B \\ A|} det K_B``; exponential in ``|W \\ A|``.
    """
    pts = _coords(window)
    occ = sorted(set(occupied))
    rest = [x for x in pts if x not in occ]
    total = 0.0
    for r in range(len(rest) + 1):
        sign = -1.0 if r % 2 else 1.0
        for extra in combinations(rest, r):
            b = occ + list(extra)
            total += sign * (float(np.linalg.det(kernel_matrix(kernel, b))) if b else 1.0)
    return total


def kernel_spectrum(kernel: KernelSpec, points: Union[Window, Iterable[int]]) -> np.ndarray:
    return np.linalg.eigvalsh(kernel_matrix(kernel, points))


def sequential_conditionals(kernel: KernelSpec, coords: Sequence[int], symbols: Sequence[int]) -> list[float]:
    """``P(xi(x_i) = 1 | xi(x_0..x_{i-1}) = symbols)`` for each ``i`` by Schur updates.

    Equivalent to ratios of window probabilities, at O(n^3) total cost.
    """
    m = kernel_matrix(kernel, coords)
    out = []
    for i, s in enumerate(symbols):
        p = min(max(m[i, i], 0.0), 1.0)
        out.append(p)
        if i + 1 < len(symbols):
            _condition(m, i, s)
    return out


def _condition(m: np.ndarray, i: int, s: int) -> None:
    """Condition the tail block of ``m`` on site ``i`` being ``s`` (in place)."""
    piv = m[i, i] if s == 1 else m[i, i] - 1.0
    if piv == 0.0:
        return
    col = m[i + 1 :, i]
    row = m[i, i + 1 :]
    m[i + 1 :, i + 1 :] -= np.outer(col, row) / piv
