"""Finite-window diagnostics of the product structure behind weak Bernoullicity.

``independence_gap`` measures how far the joint law of a past block and a
future block separated by ``g`` free sites is from the product of the two
marginals. The two-sided tail field has no finite-window counterpart and is
ignored; the gap TV is the usual finite surrogate for the weak Bernoulli
property.

``ergodic_average`` estimates the fluctuation of shifted indicator averages
``(1/Q) sum_{P=R+k+1}^{Q} 1_F o S^P`` around ``mu(F)`` by Monte Carlo.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Optional

import numpy as np

from .core import Cylinder, Window, perm_block_swap, permute_word
from .exact import Num, decode_number, encode_number
from .measures import ProcessMeasure
from .sampling import DEFAULT_SEED, sample_path

CELL_CAP = 1 << 20


class CellCapError(ValueError):
    pass


@dataclass
class IndependenceGapReport:
    past_len: int
    future_len: int
    gap: int
    tv: Num
    cells: int

    def to_dict(self) -> dict:
        return {
            "past_len": self.past_len,
            "future_len": self.future_len,
            "gap": self.gap,
            "tv": encode_number(self.tv),
            "cells": self.cells,
        }

    @classmethod
    def from_dict(cls, d: dict) -> IndependenceGapReport:
        return cls(d["past_len"], d["future_len"], d["gap"], decode_number(d["tv"]), d["cells"])


def independence_gap(
    measure: ProcessMeasure, past_len: int, future_len: int, g: int, cap: int = CELL_CAP
) -> IndependenceGapReport:
    """``TV = 1/2 sum |mu(past ∧ future) - mu(past) mu(future)|``.

    The past block sits on ``[-past_len+1, 0]`` and the future block on
    ``[g+1, g+future_len]``.
    """
    if past_len < 1 or future_len < 1 or g < 0:
        raise ValueError("need past_len >= 1, future_len >= 1, g >= 0")
    k = measure.alphabet.size
    cells = k ** (past_len + future_len)
    if cells > cap:
        raise CellCapError(f"{cells} cells exceeds the cap of {cap}")
    past_coords = list(range(-past_len + 1, 1))
    fut_coords = list(range(g + 1, g + future_len + 1))
    past_words = list(product(range(k), repeat=past_len))
    fut_words = list(product(range(k), repeat=future_len))
    p_past = [measure.assignment_prob(dict(zip(past_coords, w))).value for w in past_words]
    p_fut = [measure.assignment_prob(dict(zip(fut_coords, w))).value for w in fut_words]
    total = 0 * measure.one
    for wp, pp in zip(past_words, p_past):
        base = dict(zip(past_coords, wp))
        for wf, pf in zip(fut_words, p_fut):
            joint = measure.assignment_prob({**base, **dict(zip(fut_coords, wf))}).value
            total = total + abs(joint - pp * pf)
    tv = total / 2
    return IndependenceGapReport(past_len, future_len, g, tv, cells)


def independence_gap_sweep(
    measure: ProcessMeasure, past_len: int, future_len: int, g0: int, g1: int
) -> list[IndependenceGapReport]:
    return [independence_gap(measure, past_len, future_len, g) for g in range(g0, g1 + 1)]


@dataclass
class ErgodicAverageReport:
    F: Cylinder
    Q: int
    R: int
    k: int
    n_paths: int
    estimate: float
    target: Num
    deviation: float
    seed: int
    per_path: list[float] = field(default_factory=list, repr=False)
    xi_estimate: Optional[float] = None

    def to_dict(self, include_paths: bool = False) -> dict:
        d = {
            "F": str(self.F),
            "Q": self.Q,
            "R": self.R,
            "k": self.k,
            "n_paths": self.n_paths,
            "estimate": self.estimate,
            "target": encode_number(self.target),
            "deviation": self.deviation,
            "seed": self.seed,
            "xi_estimate": self.xi_estimate,
        }
        if include_paths:
            d["per_path"] = list(self.per_path)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> ErgodicAverageReport:
        return cls(
            Cylinder.parse(d["F"]),
            d["Q"],
            d["R"],
            d["k"],
            d["n_paths"],
            d["estimate"],
            decode_number(d["target"]),
            d["deviation"],
            d["seed"],
            list(d.get("per_path", [])),
            d.get("xi_estimate"),
        )


def _match_counts(paths: np.ndarray, lo: int, F: Cylinder, shifts: range) -> np.ndarray:
    """Per path, the number of shifts ``P`` with the path matching ``F`` shifted by ``P``."""
    counts = np.zeros(paths.shape[0], dtype=np.int64)
    for P in shifts:
        start = F.window.lo + P - lo
        block = paths[:, start : start + F.length]
        counts += np.all(block == np.asarray(F.symbols), axis=1)
    return counts


def ergodic_average(
    measure: ProcessMeasure,
    F: Cylinder,
    Q: int,
    R: int = 0,
    k: int = 1,
    seed: int = DEFAULT_SEED,
    n_paths: int = 200,
    *,
    weighted: bool = False,
    past_len: int = 0,
    workers: Optional[int] = None,
) -> ErgodicAverageReport:
    """Monte Carlo estimate of ``E|psi^Q - mu(F)|``.

    ``estimate`` is the mean of ``psi^Q`` over paths and ``deviation`` the mean
    absolute deviation from ``mu(F)``. With ``weighted=True`` (expensive,
    quadratic in ``Q``) the density-weighted companion average
    ``xi^Q = (1/Q) sum_P 1_F o S^P * phi_{sigma_{P,k}}`` is also estimated,
    each density replaced by the cylinder ratio
    ``mu(T_sigma^{-1} C_w) / mu(C_w)`` on ``[-past_len, Q+k]``; that needs
    ``F`` to live on ``[1, k]``.
    """
    F.check_alphabet(measure.alphabet)
    if Q <= R + k:
        raise ValueError(f"need Q > R + k, got Q={Q}, R={R}, k={k}")
    shifts = range(R + k + 1, Q + 1)
    lo = F.window.lo + shifts.start
    hi = F.window.hi + Q
    if weighted:
        if F.window != Window(1, k):
            raise ValueError("weighted averages need F on the window [1, k]")
        lo = min(lo, -past_len, 1)
        hi = max(hi, Q + k)
    window = Window(lo, hi)
    paths = sample_path(measure, window, seed=seed, n_paths=n_paths, workers=workers)
    psi = _match_counts(paths, lo, F, shifts) / Q
    target = measure.cylinder_prob(F).value
    t = float(target)
    xi = None
    if weighted:
        xi = float(np.mean([_xi_path(measure, row, lo, F, Q, k, shifts) for row in paths]))
    return ErgodicAverageReport(
        F, Q, R, k, n_paths, float(psi.mean()), target, float(np.abs(psi - t).mean()), seed, psi.tolist(), xi
    )


def _xi_path(measure, row, lo, F, Q, k, shifts) -> float:
    word = tuple(int(s) for s in row)
    window = Window(lo, lo + len(word) - 1)
    base = measure.cylinder_prob(Cylinder(window, word)).value
    acc = 0.0
    for P in shifts:
        start = F.window.lo + P - lo
        if tuple(word[start : start + F.length]) != F.symbols:
            continue
        swapped = permute_word(word, lo, perm_block_swap(P, k))
        acc += float(measure.cylinder_prob(Cylinder(window, swapped)).value / base)
    return acc / Q
