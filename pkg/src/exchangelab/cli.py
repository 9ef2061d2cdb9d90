"""``exchangelab`` command line interface.

Exit status: 0 on success, 2 when a violation is certified (a witness was
found, exchangeability or quasi-exchangeability fails, the Hankel test
rejects), 1 on operational errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Callable, Optional, Sequence

from . import dpp
from .bernoullicity import ergodic_average, independence_gap, independence_gap_sweep
from .core import Cylinder, CylinderError, FinitePermutation, ScatteredCylinderError, Window, perm_apply_to_cylinder
from .definetti import MomentSequence, NotRepresentableError, hankel_psd_check, moments, recover_atoms
from .exact import decode_number, encode_number, fmt_number
from .exchange import check_exchangeable, quasi_witness_markov, rn_ratio_table, symmetrize
from .measures import (
    DeterminantalMeasure,
    MarkovMeasure,
    MeasureError,
    ProcessMeasure,
    cylinder_prob,
    load_measure,
    validate_measure,
)
from .sampling import DEFAULT_SEED, sample_path, thread_count

EXIT_OK, EXIT_ERROR, EXIT_VIOLATION = 0, 1, 2


class CliError(Exception):
    pass


class Output:
    """Collects one report and renders it in the requested format."""

    def __init__(self, fmt: str, stream=None):
        self.fmt = fmt
        self.stream = stream or sys.stdout

    def emit(self, data: dict, human: Callable[[], str], tsv: Optional[Callable[[], str]] = None) -> None:
        if self.fmt == "json":
            text = json.dumps(data, indent=2)
        elif self.fmt == "tsv":
            text = tsv() if tsv else _flat_tsv(data)
        else:
            text = human()
        self.stream.write(text.rstrip("\n") + "\n")


def _flat_tsv(data: dict) -> str:
    lines = []
    for k, v in data.items():
        if isinstance(v, (dict, list)):
            v = json.dumps(v)
        lines.append(f"{k}\t{v}")
    return "\n".join(lines)


def _parse_ints(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        return [int(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise CliError(f"cannot parse integer list {text!r}") from None


def _parse_range(text: str) -> tuple[int, int]:
    w = Window.parse(text)
    return w.lo, w.hi


def _load(args, need: bool = True) -> Optional[ProcessMeasure]:
    if not getattr(args, "spec", None):
        if need:
            raise CliError("--spec is required")
        return None
    measure = load_measure(args.spec, cap=args.cap)
    if not args.no_validate:
        size = measure.alphabet.size
        win_len = 1
        while win_len < args.validate_len and size ** (win_len + 1) <= 4096:
            win_len += 1
        report = validate_measure(measure, win_len)
        if not report.passed:
            failed = "; ".join(f"{c.name}: {c.detail}" for c in report.checks if not c.passed)
            raise CliError(f"measure failed validation ({failed}); use --no-validate to skip")
    return measure


# --------------------------------------------------------------------------- subcommands


def cmd_validate(args, out: Output) -> int:
    measure = load_measure(args.spec, cap=args.cap)
    rep = validate_measure(measure, args.window_len)
    out.emit(
        rep.to_dict(),
        lambda: "\n".join(
            [f"validation on windows of length {rep.window_len}: {'PASS' if rep.passed else 'FAIL'}"]
            + [f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: {c.detail}" for c in rep.checks]
        ),
    )
    return EXIT_OK if rep.passed else EXIT_ERROR


def cmd_cyl_prob(args, out: Output) -> int:
    measure = _load(args)
    rows = []
    for text in args.cylinder:
        cyl = Cylinder.parse(text)
        cp = measure.cylinder_prob(cyl)
        rows.append({"cylinder": str(cyl), "prob": encode_number(cp.value), "structural_zero": cp.structural_zero})
    out.emit(
        {"rows": rows},
        lambda: "\n".join(
            f"mu({Cylinder.parse(r['cylinder']).bracket()}) = {fmt_number(decode_number(r['prob']))}"
            + ("  [structural zero]" if r["structural_zero"] else "")
            for r in rows
        ),
        lambda: "cylinder\tprob\tstructural_zero\n"
        + "\n".join(f"{r['cylinder']}\t{r['prob']}\t{int(r['structural_zero'])}" for r in rows),
    )
    return EXIT_OK


def cmd_perm_apply(args, out: Output) -> int:
    sigma = FinitePermutation.parse(args.perm)
    cyl = Cylinder.parse(args.cylinder)
    measure = _load(args, need=False)
    data = {"sigma": str(sigma), "cylinder": str(cyl)}
    try:
        image = perm_apply_to_cylinder(sigma, cyl)
        data.update(scattered=False, image=str(image))
        target = image
    except ScatteredCylinderError as exc:
        part = exc.partial()
        data.update(scattered=True, image=str(part), mapping={str(k): v for k, v in exc.mapping.items()})
        target = part
    if measure is not None:
        cp = cylinder_prob(measure, target)
        data["image_prob"] = encode_number(cp.value)
        data["image_structural_zero"] = cp.structural_zero

    def human():
        lines = [f"T_{sigma}^-1 {cyl} = {data['image']}" + ("  (scattered; '*' marks free sites)" if data["scattered"] else "")]
        if "image_prob" in data:
            lines.append(f"probability = {fmt_number(decode_number(data['image_prob']))}")
        return "\n".join(lines)

    out.emit(data, human)
    return EXIT_OK


def cmd_check_exch(args, out: Output) -> int:
    measure = _load(args)
    rep = check_exchangeable(
        measure, args.n, args.tol, enum_cap=args.enum_cap, mode=args.mode, n_samples=args.samples, seed=args.seed
    )
    out.emit(
        rep.to_dict(),
        lambda: (
            f"window {rep.window} ({rep.permutations_checked} permutations, "
            f"{'exhaustive' if rep.exhaustive else f'sampled, coverage {rep.coverage:.3g}'})\n"
            f"max deviation = {fmt_number(rep.max_deviation)}\n"
            f"worst pair: C = {rep.worst_cylinder.bracket()}, sigma = {rep.worst_perm}\n"
            f"verdict: {rep.verdict} (tol {rep.tol:g})"
        ),
    )
    return EXIT_OK if rep.exchangeable else EXIT_VIOLATION


def cmd_rn_table(args, out: Output) -> int:
    measure = _load(args)
    sigma = FinitePermutation.parse(args.perm)
    window = Window.parse(args.window)
    tab = rn_ratio_table(measure, sigma, window)

    def human():
        lines = [f"sigma = {sigma} on window {window}", "cylinder\tmu(T^-1 C)\tmu(C)\tratio\tflag"]
        for r in tab.rows:
            ratio = "-" if r.ratio is None else fmt_number(r.ratio)
            lines.append(f"{r.cylinder}\t{fmt_number(r.permuted_prob)}\t{fmt_number(r.prob)}\t{ratio}\t{r.flag}")
        lines.append("quasi-exchangeable on window" if tab.quasi_exchangeable else f"{len(tab.violations)} violation(s)")
        return "\n".join(lines)

    def tsv():
        lines = ["cylinder\tpermuted_prob\tprob\tratio\tflag"]
        for r in tab.rows:
            ratio = "" if r.ratio is None else encode_number(r.ratio)
            lines.append(f"{r.cylinder}\t{encode_number(r.permuted_prob)}\t{encode_number(r.prob)}\t{ratio}\t{r.flag}")
        return "\n".join(lines)

    out.emit(tab.to_dict(), human, tsv)
    return EXIT_OK if tab.quasi_exchangeable else EXIT_VIOLATION


def cmd_witness(args, out: Output) -> int:
    measure = _load(args)
    if not isinstance(measure, MarkovMeasure):
        raise CliError("witness needs a markov spec")
    w = quasi_witness_markov(measure)
    if w is None:
        out.emit({"witness": None}, lambda: "no zero transition: no witness (chain may be quasi-exchangeable)")
        return EXIT_OK
    out.emit({"witness": w.to_dict()}, w.describe)
    return EXIT_VIOLATION


def cmd_symmetrize(args, out: Output) -> int:
    measure = _load(args)
    window = Window.parse(args.window) if args.window else None
    tab = symmetrize(measure, args.N, window, mode=args.mode, n_samples=args.samples, seed=args.seed)

    def human():
        lines = [f"nu_{args.N} on window {tab.window}"]
        lines += [f"{Cylinder(tab.window, w).bracket()}\t{fmt_number(cp.value)}" for w, cp in tab.probs.items()]
        return "\n".join(lines)

    def tsv():
        return "cylinder\tprob\n" + "\n".join(
            f"{Cylinder(tab.window, w)}\t{encode_number(cp.value)}" for w, cp in tab.probs.items()
        )

    out.emit(tab.to_dict(), human, tsv)
    return EXIT_OK


def cmd_mixing_gap(args, out: Output) -> int:
    measure = _load(args)
    if args.sweep:
        g0, g1 = _parse_range(args.sweep)
        reps = independence_gap_sweep(measure, args.past, args.future, g0, g1)
    else:
        reps = [independence_gap(measure, args.past, args.future, args.g)]
    out.emit(
        {"reports": [r.to_dict() for r in reps]},
        lambda: "\n".join(
            f"past {r.past_len}, future {r.future_len}, gap {r.gap}: tv = {fmt_number(r.tv)} ({r.cells} cells)"
            for r in reps
        ),
        lambda: "g\ttv\n" + "\n".join(f"{r.gap}\t{float(r.tv)!r}" for r in reps),
    )
    return EXIT_OK


def cmd_ergodic_avg(args, out: Output) -> int:
    measure = _load(args)
    F = Cylinder.parse(args.F)
    rep = ergodic_average(
        measure, F, args.Q, args.R, args.k, seed=args.seed, n_paths=args.n_paths,
        weighted=args.weighted, past_len=args.past_len, workers=thread_count(),
    )
    out.emit(
        rep.to_dict(include_paths=args.per_path),
        lambda: (
            f"F = {F.bracket()}, Q = {rep.Q}, R = {rep.R}, k = {rep.k}, {rep.n_paths} paths, seed {rep.seed}\n"
            f"mean psi^Q = {rep.estimate:.10g}\ntarget mu(F) = {fmt_number(rep.target)}\n"
            f"mean |psi^Q - mu(F)| = {rep.deviation:.10g}"
            + ("" if rep.xi_estimate is None else f"\nmean xi^Q = {rep.xi_estimate:.10g}")
        ),
    )
    return EXIT_OK


def cmd_sample(args, out: Output) -> int:
    measure = _load(args)
    window = Window.parse(args.window)
    paths = sample_path(measure, window, seed=args.seed, n_paths=args.n_paths, workers=thread_count())
    rows = paths.tolist()
    data = {"window": str(window), "seed": args.seed, "paths": rows}
    joiner = "," if measure.alphabet.size > 10 else ""
    out.emit(
        data,
        lambda: "\n".join(joiner.join(map(str, r)) for r in rows),
        lambda: "path\t" + "\t".join(str(c) for c in window) + "\n"
        + "\n".join(f"{j}\t" + "\t".join(map(str, r)) for j, r in enumerate(rows)),
    )
    return EXIT_OK


def _kernel(args):
    if args.spec:
        measure = _load(args)
        if not isinstance(measure, DeterminantalMeasure):
            raise CliError("dpp-prob needs a dpp-sine or dpp-toeplitz spec")
        return measure.kernel
    if args.a is not None:
        return dpp.SineKernel(args.a)
    if args.c is not None:
        return dpp.ToeplitzKernel(tuple(float(x) for x in args.c.split(",")))
    raise CliError("give --spec, --a or --c")


def cmd_dpp_prob(args, out: Output) -> int:
    kernel = _kernel(args)
    data = {"kernel": kernel.to_dict()}
    if args.include is not None:
        pts = _parse_ints(args.include)
        val = dpp.dpp_inclusion_prob(kernel, pts, cap=args.cap)
        data.update(kind="inclusion", points=pts, prob=val)
        human = lambda: f"P({{{','.join(map(str, pts))}}} ⊆ xi) = {val:.15g}"
    else:
        if not args.window:
            raise CliError("give --include or --window (with --occupied)")
        w = list(Window.parse(args.window))
        occ = _parse_ints(args.occupied or "")
        val = dpp.dpp_window_config_prob(kernel, w, occ, cap=args.cap)
        data.update(kind="window", window=args.window, occupied=occ, prob=val)
        if args.oracle:
            data["oracle"] = dpp.inclusion_exclusion_prob(kernel, w, occ)
        human = lambda: f"P(xi ∩ [{args.window}] = {{{','.join(map(str, occ))}}}) = {val:.15g}" + (
            f"\ninclusion-exclusion oracle = {data['oracle']:.15g}" if args.oracle else ""
        )
    out.emit(data, human)
    return EXIT_OK


def _moment_input(args) -> MomentSequence:
    if args.moments:
        return MomentSequence.parse(args.moments)
    measure = _load(args)
    return moments(measure, args.r)


def cmd_moments(args, out: Output) -> int:
    m = moments(_load(args), args.r)

    def table():
        return "k\tm_k\n" + "\n".join(f"{k}\t{encode_number(v)}" for k, v in enumerate(m.m, 1))

    # the moment table is tabular either way; human and tsv share it
    out.emit(m.to_dict(), table, table)
    return EXIT_OK


def cmd_hankel(args, out: Output) -> int:
    rep = hankel_psd_check(_moment_input(args))
    out.emit(
        rep.to_dict(),
        lambda: "\n".join(
            [f"verdict: {rep.verdict}", f"monotone 1 >= m_1 >= ... >= 0: {rep.monotone}"]
            + [
                f"  {b.name} ({len(b.matrix)}x{len(b.matrix)}): min eigenvalue {b.min_eigenvalue:.6g}, det {fmt_number(b.det)}"
                for b in rep.blocks
            ]
        ),
    )
    return EXIT_OK if rep.consistent else EXIT_VIOLATION


def cmd_recover(args, out: Output) -> int:
    m = _moment_input(args)
    res = recover_atoms(m, args.r_max, args.tol)
    out.emit(
        res.to_dict(),
        lambda: "p\tw\n" + "\n".join(f"{p:.12g}\t{w:.12g}" for p, w in res.atoms) + f"\nresidual {res.residual:.3g}",
        lambda: "p\tw\n" + "\n".join(f"{p!r}\t{w!r}" for p, w in res.atoms),
    )
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("human", "json", "tsv"), default="human")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"64-bit seed (default {DEFAULT_SEED})")
    common.add_argument("--no-validate", action="store_true", help="skip validate_measure on the spec")
    common.add_argument("--validate-len", type=int, default=3, help="window length for the pre-run validation")
    common.add_argument("--cap", type=int, default=dpp.DEFAULT_CAP, help="determinant / DPP window cap")

    spec = argparse.ArgumentParser(add_help=False)
    spec.add_argument("--spec", help="measure spec file (JSON)")

    p = argparse.ArgumentParser(prog="exchangelab", description="Exchangeability toolkit for stationary processes on K^Z.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_, parents=(common, spec)):
        sp = sub.add_parser(name, help=help_, parents=list(parents))
        sp.set_defaults(func=fn)
        return sp

    sp = add("validate", cmd_validate, "normalization/consistency/spectrum checks")
    sp.add_argument("--window-len", type=int, default=3)

    sp = add("cyl-prob", cmd_cyl_prob, "exact cylinder probabilities")
    sp.add_argument("--cylinder", action="append", required=True, help="offset:symbols, repeatable")

    sp = add("perm-apply", cmd_perm_apply, "T_sigma^-1 applied to a cylinder")
    sp.add_argument("--perm", required=True, help="cycle notation, e.g. '(0 1)(4 5)'")
    sp.add_argument("--cylinder", required=True)

    sp = add("check-exch", cmd_check_exch, "exchangeability deviation on [0, n-1]")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--mode", choices=("auto", "exhaustive", "sampled"), default="auto")
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--enum-cap", type=int, default=10**7)

    sp = add("rn-table", cmd_rn_table, "cylinder Radon-Nikodym ratios for one permutation")
    sp.add_argument("--perm", required=True)
    sp.add_argument("--window", required=True, help="lo..hi")

    add("witness", cmd_witness, "non-quasi-exchangeability witness for a Markov chain")

    sp = add("symmetrize", cmd_symmetrize, "nu_N averaged over permutations of [-N, N]")
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--window", default=None, help="lo..hi (default -N..N)")
    sp.add_argument("--mode", choices=("auto", "exact", "mc"), default="auto")
    sp.add_argument("--samples", type=int, default=20000)

    sp = add("mixing-gap", cmd_mixing_gap, "past/future total-variation gap")
    sp.add_argument("--past", type=int, default=1)
    sp.add_argument("--future", type=int, default=1)
    sp.add_argument("--g", type=int, default=0)
    sp.add_argument("--sweep", default=None, help="g0..g1; emits one row per gap")

    sp = add("ergodic-avg", cmd_ergodic_avg, "Monte Carlo fluctuation of shifted indicator averages")
    sp.add_argument("--F", required=True, help="cylinder offset:symbols")
    sp.add_argument("--Q", type=int, required=True)
    sp.add_argument("--R", type=int, default=0)
    sp.add_argument("--k", type=int, default=1)
    sp.add_argument("--n-paths", type=int, default=200)
    sp.add_argument("--weighted", action="store_true", help="also estimate the density-weighted average (slow)")
    sp.add_argument("--past-len", type=int, default=0)
    sp.add_argument("--per-path", action="store_true", help="include per-path averages in json output")

    sp = add("sample", cmd_sample, "seeded sample paths")
    sp.add_argument("--window", required=True)
    sp.add_argument("--n-paths", type=int, default=1)

    sp = add("dpp-prob", cmd_dpp_prob, "determinantal inclusion / window probabilities")
    sp.add_argument("--a", type=float, default=None, help="sine kernel parameter")
    sp.add_argument("--c", default=None, help="Toeplitz coefficients c0,c1,...")
    sp.add_argument("--include", default=None, help="points A for P(A ⊆ xi)")
    sp.add_argument("--window", default=None, help="lo..hi for P(xi ∩ W = A)")
    sp.add_argument("--occupied", default=None, help="A ⊆ W")
    sp.add_argument("--oracle", action="store_true", help="also print the inclusion-exclusion value")

    sp = add("moments", cmd_moments, "all-ones cylinder moments m_1..m_r")
    sp.add_argument("--r", type=int, default=8)

    sp = add("hankel", cmd_hankel, "Hausdorff moment positivity certificate")
    sp.add_argument("--moments", default=None, help="comma-separated m_1..m_r ('n/d' exact)")
    sp.add_argument("--r", type=int, default=6)

    sp = add("recover", cmd_recover, "recover mixing-measure atoms from moments")
    sp.add_argument("--moments", default=None)
    sp.add_argument("--r", type=int, default=8)
    sp.add_argument("--r-max", type=int, default=4)
    sp.add_argument("--tol", type=float, default=1e-8)
    return p


def main(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Output(args.format, stdout)
    try:
        return args.func(args, out)
    except NotRepresentableError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except (CliError, MeasureError, CylinderError, ValueError, OSError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
