"""Moment-side De Finetti tools for binary exchangeable laws.

For an exchangeable law on {0,1}^Z with mixing measure ``beta`` on [0, 1],
``m_k = mu([[1,...,1]]) = ∫ p^k d beta(p)``. This module computes those
moments, certifies (or refutes) that a sequence can be such a moment
sequence, and recovers a finitely atomic ``beta`` from its moments.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from . import exact
from .core import Cylinder
from .exact import Num, decode_number, encode_number, parse_number
from .measures import MixtureMeasure, ProcessMeasure

PSD_TOL = 1e-9
RANK_RTOL = 1e-8
ATOM_SEP = 1e-10


class NotRepresentableError(ValueError):
    """Atoms could not reproduce the moments within tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class MomentSequence:
    """``m_1..m_r`` (``m_0 = 1`` implicit)."""

    m: tuple[Num, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(self.m))

    @classmethod
    def parse(cls, text: str) -> MomentSequence:
        parts = [p for p in text.replace(";", ",").split(",") if p.strip()]
        vals = []
        for i, p in enumerate(parts):
            p = p.strip()
            # "n/d" stays exact, anything else is a double
            vals.append(parse_number(p if "/" in p else float(p), f"moments[{i}]"))
        return cls(tuple(vals))

    @property
    def r(self) -> int:
        return len(self.m)

    @property
    def exact(self) -> bool:
        return exact.is_exact(self.m)

    def full(self) -> list[Num]:
        """``[m_0, m_1, ..., m_r]``."""
        one = Fraction(1) if self.exact else 1.0
        return [one, *self.m]

    def monotone(self) -> bool:
        """``1 >= m_1 >= m_2 >= ... >= m_r >= 0``."""
        f = self.full()
        return all(a >= b for a, b in zip(f, f[1:])) and f[-1] >= 0

    def to_dict(self) -> dict:
        return {"m": [encode_number(v) for v in self.m]}

    @classmethod
    def from_dict(cls, d: dict) -> MomentSequence:
        return cls(tuple(decode_number(v) for v in d["m"]))


def moments(measure: ProcessMeasure, r: int) -> MomentSequence:
    """``m_k = mu(all-ones cylinder of length k)`` for ``k = 1..r``."""
    if measure.alphabet.size != 2:
        raise ValueError(f"moments need a binary alphabet, got size {measure.alphabet.size}")
    if r < 1:
        raise ValueError("r must be >= 1")
    return MomentSequence(tuple(measure.cylinder_prob(Cylinder.at(0, [1] * k)).value for k in range(1, r + 1)))


def mixture_moments(atoms: Sequence[tuple[Num, Num]], r: int) -> MomentSequence:
    """``sum_i w_i p_i^k`` straight from ``(p, w)`` atoms."""
    return MomentSequence(tuple(sum(w * p**k for p, w in atoms) for k in range(1, r + 1)))


def finite_differences(m: MomentSequence, j: int) -> list[Num]:
    """``(-1)^j Δ^j m_k`` for every admissible ``k``; all ≥ 0 for a Hausdorff sequence."""
    seq = m.full()
    for _ in range(j):
        seq = [a - b for a, b in zip(seq, seq[1:])]
    return seq


# --------------------------------------------------------------------------- Hankel certificate


@dataclass
class HankelBlock:
    name: str
    matrix: list[list[Num]]
    min_eigenvalue: float
    det: Num

    @property
    def psd(self) -> bool:
        return self.min_eigenvalue >= -PSD_TOL


@dataclass
class HankelReport:
    moments: MomentSequence
    blocks: list[HankelBlock]
    monotone: bool

    @property
    def consistent(self) -> bool:
        return all(b.psd for b in self.blocks)

    @property
    def verdict(self) -> str:
        return "consistent with exchangeable" if self.consistent else "NOT exchangeable (certified)"

    @property
    def min_eigenvalue(self) -> float:
        return min(b.min_eigenvalue for b in self.blocks)

    def to_dict(self) -> dict:
        return {
            "moments": [encode_number(v) for v in self.moments.m],
            "verdict": self.verdict,
            "consistent": self.consistent,
            "monotone": self.monotone,
            "blocks": [
                {
                    "name": b.name,
                    "matrix": [[encode_number(v) for v in row] for row in b.matrix],
                    "min_eigenvalue": b.min_eigenvalue,
                    "det": encode_number(b.det),
                }
                for b in self.blocks
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> HankelReport:
        blocks = [
            HankelBlock(
                b["name"],
                [[decode_number(v) for v in row] for row in b["matrix"]],
                b["min_eigenvalue"],
                decode_number(b["det"]),
            )
            for b in d["blocks"]
        ]
        return cls(MomentSequence(tuple(decode_number(v) for v in d["moments"])), blocks, d["monotone"])


def _hankel(f: Sequence[Num], size: int, entry) -> list[list[Num]]:
    return [[entry(f, i + j) for j in range(size)] for i in range(size)]


def hankel_psd_check(m: MomentSequence) -> HankelReport:
    """Hausdorff-moment positivity on [0, 1].

    Four Hankel-type matrices, each the moment matrix of a nonnegative measure
    when ``m`` comes from some ``beta`` on [0, 1], are built at the largest
    size the data allows:

    ``H0 = (m_{i+j})``, ``H1 = (m_{i+j+1})``, ``L0 = (m_{i+j} - m_{i+j+1})`` and
    ``L1 = (m_{i+j+1} - m_{i+j+2})``.

    A negative eigenvalue proves that no mixing measure exists.
    """
    if m.r < 2:
        raise ValueError("need at least m_1, m_2")
    f = m.full()
    r = m.r
    specs = [
        ("H0", r // 2 + 1, lambda f, t: f[t]),
        ("H1", (r - 1) // 2 + 1, lambda f, t: f[t + 1]),
        ("L0", (r - 1) // 2 + 1, lambda f, t: f[t] - f[t + 1]),
        ("L1", r // 2, lambda f, t: f[t + 1] - f[t + 2]),
    ]
    blocks = []
    for name, size, entry in specs:
        if size < 1:
            continue
        mat = _hankel(f, size, entry)
        ev = np.linalg.eigvalsh(np.array([[float(v) for v in row] for row in mat]))
        blocks.append(HankelBlock(name, mat, float(ev.min()), exact.det(mat)))
    return HankelReport(m, blocks, m.monotone())


# --------------------------------------------------------------------------- atom recovery


@dataclass
class AtomicMixingMeasure:
    """Finitely atomic mixing measure: ``(p, w)`` pairs sorted by ``p``."""

    atoms: list[tuple[float, float]]
    residual: float = 0.0

    def __post_init__(self):
        self.atoms = sorted((float(p), float(w)) for p, w in self.atoms)
        if any(not 0.0 <= p <= 1.0 for p, _ in self.atoms):
            raise ValueError("atom locations must lie in [0, 1]")
        if any(w <= 0 for _, w in self.atoms):
            raise ValueError("atom weights must be positive")
        if abs(sum(w for _, w in self.atoms) - 1.0) > 1e-8:
            raise ValueError("atom weights must sum to 1")
        ps = [p for p, _ in self.atoms]
        if any(b - a <= ATOM_SEP for a, b in zip(ps, ps[1:])):
            raise ValueError("atoms must be distinct")

    def moments(self, r: int) -> MomentSequence:
        return mixture_moments(self.atoms, r)

    def to_measure(self) -> MixtureMeasure:
        return MixtureMeasure(tuple((w, (1.0 - p, p)) for p, w in self.atoms))

    def to_dict(self) -> dict:
        return {"atoms": [{"p": p, "w": w} for p, w in self.atoms], "residual": self.residual}

    @classmethod
    def from_dict(cls, d: dict) -> AtomicMixingMeasure:
        return cls([(a["p"], a["w"]) for a in d["atoms"]], d.get("residual", 0.0))


def _numeric_rank(mat: np.ndarray) -> int:
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * s[0]))


def _locations_exact(f: list[Fraction], n: int) -> np.ndarray:
    """Roots of the Prony polynomial from exact moments.

    Solves ``sum_j c_j m_{i+j} = -m_{i+n}`` (``i < n``) over the rationals and
    returns the roots of ``x^n + c_{n-1} x^{n-1} + ... + c_0``; these are the
    generalized eigenvalues of the shifted Hankel pencil.
    """
    a = [[f[i + j] for j in range(n)] for i in range(n)]
    b = [-f[i + n] for i in range(n)]
    c = exact.solve(a, b)
    coeffs = [1.0] + [float(v) for v in reversed(c)]
    roots = np.roots(coeffs)
    # one Newton step against the exact polynomial tightens clustered roots
    poly = np.poly1d(coeffs)
    d = poly.deriv()
    out = []
    for z in roots:
        z = complex(z)
        dz = d(z)
        out.append(z - poly(z) / dz if dz != 0 else z)
    return np.array(out)


def _locations_float(f: np.ndarray, n: int) -> np.ndarray:
    h = np.array([[f[i + j] for j in range(n)] for i in range(n)])
    hs = np.array([[f[i + j + 1] for j in range(n)] for i in range(n)])
    return scipy.linalg.eigvals(hs, h)


def recover_atoms(m: MomentSequence, r_max: int = 4, tol: float = 1e-8) -> AtomicMixingMeasure:
    """Prony-type recovery of an atomic mixing measure from ``m_1..m_r``.

    The number of atoms is the rank of ``(m_{i+j})`` (exact rank for rational
    input, singular values above ``1e-8 * s_max`` otherwise), capped by
    ``r_max`` and by how many atoms the data can identify. Locations are the
    generalized eigenvalues of the shifted Hankel pencil; weights solve the
    Vandermonde least-squares problem against all moments. Raises
    :class:`NotRepresentableError` if ``max_k |sum_i w_i p_i^k - m_k| > tol``.
    """
    if m.r < 1:
        raise ValueError("need at least one moment")
    f = m.full()
    size = m.r // 2 + 1
    identifiable = (m.r + 1) // 2
    h = [[f[i + j] for j in range(size)] for i in range(size)]
    if m.exact:
        rk = exact.rank(h)
    else:
        rk = _numeric_rank(np.array(h, dtype=float))
    n = max(1, min(rk, r_max, identifiable))

    if m.exact:
        try:
            locs = _locations_exact(f, n)
        except ZeroDivisionError:
            locs = _locations_float(np.array([float(v) for v in f]), n)
    else:
        locs = _locations_float(np.array([float(v) for v in f]), n)
    locs = np.clip(np.real(locs), 0.0, 1.0)
    locs = np.unique(np.round(locs, 14))

    ff = np.array([float(v) for v in f])
    ks = np.arange(len(ff))
    V = locs[None, :] ** ks[:, None]
    w, *_ = np.linalg.lstsq(V, ff, rcond=None)
    # weights that are zero up to rounding are dropped, genuinely negative ones fail
    keep = w > 0
    if not keep.any():
        raise NotRepresentableError("no atom received positive weight", float("inf"))
    w = np.where(keep, w, 0.0)
    w = w / w.sum()
    residual = float(np.max(np.abs(V @ w - ff)))
    if residual > tol:
        raise NotRepresentableError(
            f"moments not representable with {r_max} atoms (max residual {residual:.3g} > tol {tol:g})", residual
        )
    atoms = [(float(p), float(wt)) for p, wt in zip(locs[keep], w[keep])]
    return AtomicMixingMeasure(atoms, residual)
