"""Seeded sequential path sampling.

Each coordinate is drawn by inverse CDF from its exact conditional law given
the prefix already drawn. The uniform used at coordinate ``i`` of path ``j``
is the ``i``-th output of a Philox generator keyed by ``(seed, j)``, so paths
can be generated in any order or in parallel with identical results.
"""

from __future__ import annotations

import os
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from itertools import accumulate
from typing import Sequence

import numpy as np

from . import dpp
from .core import Cylinder, Window
from .measures import (
    BernoulliMeasure,
    DeterminantalMeasure,
    MarkovMeasure,
    MixtureMeasure,
    ProcessMeasure,
)

DEFAULT_SEED = 20240917
_MASK64 = (1 << 64) - 1


class ImpossiblePrefixError(ValueError):
    """Conditioning on a prefix of structural probability zero."""


def path_uniforms(seed: int, path_index: int, n: int) -> np.ndarray:
    """Uniforms for one path: counter-based, keyed by ``(seed, path_index)``."""
    key = ((seed & _MASK64) << 64) | (path_index & _MASK64)
    return np.random.Generator(np.random.Philox(key=key)).random(n)


def thread_count(default: int = 1) -> int:
    raw = os.environ.get("EXCHANGELAB_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def conditional_probs(measure: ProcessMeasure, prefix: Cylinder | None, coord: int) -> list[float]:
    """``P(w_coord = s | prefix)`` for every symbol ``s`` via cylinder ratios.

    ``prefix`` must end at ``coord - 1`` (or be ``None`` for the first site).
    This is the reference definition; the samplers below compute the same
    conditionals incrementally.
    """
    if prefix is None:
        return [float(measure.cylinder_prob(Cylinder.at(coord, [s])).value) for s in measure.alphabet.symbols]
    if prefix.window.hi != coord - 1:
        raise ValueError("prefix must end just before the sampled coordinate")
    den = measure.cylinder_prob(prefix)
    if den.structural_zero or den.value == 0:
        raise ImpossiblePrefixError(f"prefix {prefix} has probability zero")
    out = []
    for s in measure.alphabet.symbols:
        num = measure.cylinder_prob(Cylinder(Window(prefix.window.lo, coord), prefix.symbols + (s,)))
        out.append(float(num.value / den.value))
    return out


def _draw(probs: Sequence[float], u: float) -> int:
    cum = list(accumulate(probs))
    idx = bisect_right(cum, u * cum[-1])
    return min(idx, len(probs) - 1)


def _sample_one(measure: ProcessMeasure, window: Window, u: np.ndarray) -> list[int]:
    n = window.length
    if isinstance(measure, BernoulliMeasure):
        cum = list(accumulate(float(v) for v in measure.pi))
        last = len(cum) - 1
        return [min(bisect_right(cum, x * cum[-1]), last) for x in u.tolist()]
    if isinstance(measure, MarkovMeasure):
        rows = [list(accumulate(float(v) for v in r)) for r in measure.Pi]
        last = len(rows) - 1
        out = [_draw([float(v) for v in measure.p], u[0])]
        for x in u[1:].tolist():
            cum = rows[out[-1]]
            out.append(min(bisect_right(cum, x * cum[-1]), last))
        return out
    if isinstance(measure, MixtureMeasure):
        post = [float(w) for w, _ in measure.components]
        pis = [[float(v) for v in pi] for _, pi in measure.components]
        k = measure.alphabet.size
        out = []
        for x in u.tolist():
            z = sum(post)
            probs = [sum(w * pi[s] for w, pi in zip(post, pis)) / z for s in range(k)]
            s = _draw(probs, x)
            out.append(s)
            post = [w * pi[s] for w, pi in zip(post, pis)]
            z = sum(post)
            post = [w / z for w in post]
        return out
    if isinstance(measure, DeterminantalMeasure):
        if n > measure.cap:
            raise dpp.WindowCapError(f"window of {n} sites exceeds the DPP sampling cap of {measure.cap}")
        m = dpp.kernel_matrix(measure.kernel, window)
        out = []
        for i, x in enumerate(u.tolist()):
            p1 = min(max(m[i, i], 0.0), 1.0)
            s = 1 if x >= 1.0 - p1 else 0
            out.append(s)
            if i + 1 < n:
                dpp._condition(m, i, s)
        return out
    # generic fallback through cylinder ratios
    out: list[int] = []
    for i, c in enumerate(window):
        prefix = Cylinder(Window(window.lo, c - 1), tuple(out)) if out else None
        out.append(_draw(conditional_probs(measure, prefix, c), u[i]))
    return out


def sample_path(
    measure: ProcessMeasure,
    window: Window,
    seed: int = DEFAULT_SEED,
    n_paths: int = 1,
    workers: int | None = None,
) -> np.ndarray:
    """Draw ``n_paths`` independent configurations on ``window``.

    Returns an ``(n_paths, len(window))`` integer array whose row ``j`` depends
    only on ``(seed, j)``.
    """
    if n_paths < 0:
        raise ValueError("n_paths must be non-negative")
    if isinstance(measure, DeterminantalMeasure) and window.length > measure.cap:
        raise dpp.WindowCapError(f"window of {window.length} sites exceeds the DPP sampling cap of {measure.cap}")
    n = window.length

    def one(j: int) -> list[int]:
        return _sample_one(measure, window, path_uniforms(seed, j, n))

    workers = thread_count() if workers is None else workers
    if workers > 1 and n_paths > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, range(n_paths)))
    else:
        rows = [one(j) for j in range(n_paths)]
    return np.array(rows, dtype=np.int64).reshape(n_paths, n)
