"""Command-line front end.

Machine-readable JSON/CSV goes to stdout or the requested output file; human
progress lines go to stderr.  Exit codes: 0 success, 2 usage error, 3
verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import report
from .measures import measure_report
from .protocol import AmbiguousDecoding, ProtocolError, build_codebook, run_round
from .rng import child_seed
from .solver import (
    SolverConfig,
    compute_nmax,
    corroborate_conjecture,
    dumps_document,
    solution_document,
    solution_from_document,
    verify_set,
)
from .states import (
    GHZ_CLASS,
    PureState,
    SystemShape,
    make_gghz,
    make_gw,
    make_ws,
    sample_class,
    sample_haar_state,
)
from .states import reduce_to_senders
from .survey import (
    SweepGrid,
    advantage_fraction,
    class_survey,
    nmax_percentages,
    sweep_gw,
    ws_scan,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VERIFY = 3


def _default_threads() -> int:
    env = os.environ.get("DDC_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def _add_solver_flags(p: argparse.ArgumentParser, seed_required: bool):
    p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0,
                   help="64-bit seed; required for surveys (no wall-clock seeding)")
    p.add_argument("--tolerance", type=float, default=1e-5)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--max-iterations", type=int, default=2000)
    p.add_argument("--no-capacity-bound", action="store_true",
                   help="disable the exact log2(N) <= M + S(rho_R) pruning")


def _cfg(args) -> SolverConfig:
    return SolverConfig(
        tolerance=args.tolerance,
        restarts=args.restarts,
        max_iterations=args.max_iterations,
        seed=args.seed,
        use_capacity_bound=not args.no_capacity_bound,
    )


def _family_state(args) -> PureState:
    fam = args.family
    if fam == "gghz":
        if args.alpha is None:
            raise SystemExit2("--alpha is required for the gghz family")
        return make_gghz(args.senders, args.alpha, args.mu)
    if fam == "gw":
        if args.alpha is None or args.beta is None:
            raise SystemExit2("--alpha and --beta are required for the gw family")
        return make_gw(args.alpha, args.beta)
    if fam == "ws":
        if args.a is None:
            raise SystemExit2("--a is required for the ws family")
        return make_ws(args.a)
    raise SystemExit2(f"unknown family {fam!r}")


class SystemExit2(SystemExit):
    def __init__(self, msg: str):
        print(f"error: {msg}", file=sys.stderr)
        super().__init__(EXIT_USAGE)


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _outcome_doc(outcome) -> dict:
    doc = {
        "status": outcome.status.value,
        "best_residual": outcome.best_residual,
        "restarts_used": outcome.restarts_used,
        "by_capacity_bound": outcome.by_capacity_bound,
    }
    if outcome.solution is not None:
        from .solver import encoding_set_to_doc

        doc["solution"] = encoding_set_to_doc(outcome.solution)
        doc["N"] = len(outcome.solution)
    return doc


def cmd_nmax(args) -> int:
    state = _family_state(args)
    cfg = _cfg(args)
    result = compute_nmax(state, cfg)
    doc = {
        "family": args.family,
        "label": state.label,
        "n_max": result.n_max,
        "seed": result.seed,
        "per_n_evidence": {str(n): _outcome_doc(o) for n, o in sorted(result.per_n_evidence.items())},
    }
    _emit(dumps_document(doc), args.out)
    if args.solution_out:
        best = result.best_solution()
        if best is None:
            print("error: no solved encoding set at n_max (classical floor)", file=sys.stderr)
            return EXIT_VERIFY
        ev = result.per_n_evidence[len(best)]
        sol = solution_document(best, ev.best_residual, cfg.seed, state=state)
        with open(args.solution_out, "w") as fh:
            fh.write(dumps_document(sol))
    return EXIT_OK


def cmd_sweep(args) -> int:
    grid = SweepGrid(args.alpha_min, args.alpha_max, args.beta_min, args.beta_max, args.step)
    cfg = _cfg(args)
    done = [0]

    def tick(k):
        done[0] = k
        if k % 50 == 0:
            print(f"  {k} grid points done", file=sys.stderr)

    records = sweep_gw(grid, cfg, threads=args.threads, out_path=args.out,
                       checkpoint_every=args.checkpoint_every, progress=tick)
    print(f"sweep finished: {len(records)} points -> {args.out}", file=sys.stderr)
    if args.plot:
        prefix = os.path.splitext(args.out)[0]
        for p in report.render_sweep_maps(records, prefix):
            print(f"figure written: {p}", file=sys.stderr)
    return EXIT_OK


_SURVEY_CLASSES = {"ghz": "ghz_class", "w": "w_class", "gw4": "gw4", "dicke42": "dicke42"}


def cmd_survey(args) -> int:
    family = _SURVEY_CLASSES[args.survey_class]
    cfg = _cfg(args)

    def tick(k):
        if k % 100 == 0:
            print(f"  {k} samples done", file=sys.stderr)

    records = class_survey(family, args.count, cfg, threads=args.threads,
                           out_path=args.out, checkpoint_every=args.checkpoint_every,
                           progress=tick)
    classical = 8 if family in ("gw4", "dicke42") else 4
    summary = {
        "family": family,
        "count": len(records),
        "percent_by_n_max": {str(k): v for k, v in nmax_percentages(records).items()},
        "advantage_fraction_percent": 100.0 * advantage_fraction(records, classical),
        "classical_limit": classical,
        "seed": args.seed,
    }
    sys.stdout.write(dumps_document(summary))
    if args.plot and args.out:
        prefix = os.path.splitext(args.out)[0]
        for p in report.render_class_histogram(records, prefix):
            print(f"figure written: {p}", file=sys.stderr)
    return EXIT_OK


def cmd_ws_scan(args) -> int:
    if args.a_values:
        try:
            values = [float(v) for v in args.a_values.split(",") if v.strip()]
        except ValueError:
            raise SystemExit2("--a-values must be a comma-separated list of reals")
    else:
        n = int(math.floor((args.a_max - args.a_min) / args.step + 1e-9))
        values = [args.a_min + i * args.step for i in range(n + 1)]
    cfg = _cfg(args)
    records = ws_scan(values, cfg, threads=args.threads, out_path=args.out)
    doc = {"a_values": values, "n_max": [r.n_max for r in records], "seed": args.seed}
    sys.stdout.write(dumps_document(doc))
    if args.plot and args.out:
        prefix = os.path.splitext(args.out)[0]
        for p in report.render_scan(records, prefix):
            print(f"figure written: {p}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        import json

        with open(args.solution) as fh:
            doc = json.load(fh)
        enc_set, state = solution_from_document(doc)
    except (OSError, KeyError, ValueError) as exc:
        raise SystemExit2(f"cannot load solution document: {exc}")
    if state is None:
        raise SystemExit2("solution document carries no state; cannot verify")
    rho = reduce_to_senders(state)
    res = verify_set(rho, enc_set, args.tol)
    sys.stdout.write(dumps_document(
        {"max_abs_overlap": res.max_abs_overlap, "pass": res.passed, "tol": args.tol}
    ))
    return EXIT_OK if res.passed else EXIT_VERIFY


def cmd_protocol(args) -> int:
    try:
        import json

        with open(args.solution) as fh:
            doc = json.load(fh)
        enc_set, state = solution_from_document(doc)
    except (OSError, KeyError, ValueError) as exc:
        raise SystemExit2(f"cannot load solution document: {exc}")
    if state is None:
        raise SystemExit2("solution document carries no state; cannot run the protocol")
    try:
        cb = build_codebook(state, enc_set)
        decoded = run_round(cb, args.message)
    except AmbiguousDecoding as exc:
        print(f"decoding ambiguous: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    doc = {
        "n_messages": cb.num_messages,
        "alphabet_split": list(cb.split),
        "sent": args.message,
        "sent_symbols": list(cb.symbols(args.message)),
        "decoded": decoded,
        "decoded_symbols": list(cb.symbols(decoded)),
    }
    sys.stdout.write(dumps_document(doc))
    return EXIT_OK if decoded == args.message else EXIT_VERIFY


def cmd_measures(args) -> int:
    state = _family_state(args)
    node = None if args.node < 0 else args.node
    rep = measure_report(state, node=node)
    sys.stdout.write(dumps_document({
        "label": state.label,
        "ggm": rep.ggm,
        "neg_sq_monogamy": rep.neg_sq_monogamy,
        "dc_capacity_bits": rep.dc_capacity_bits,
        "three_tangle": rep.three_tangle,
    }))
    return EXIT_OK


def cmd_conjecture(args) -> int:
    cfg = _cfg(args)
    shape = SystemShape(args.senders)
    states = []
    for i in range(args.count):
        s = child_seed(args.seed, i)
        if args.senders == 2:
            states.append(sample_class(GHZ_CLASS, s))
        else:
            states.append(sample_haar_state(shape, s))
    rep = corroborate_conjecture(states, cfg)
    sys.stdout.write(dumps_document({
        "tested_n": rep.tested_n,
        "num_states": rep.num_states,
        "infeasible": rep.infeasible,
        "subset_of_full_basis": rep.subset_of_full_basis,
        "counterexample_candidates": rep.counterexample_candidates,
        "seed": args.seed,
    }))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ddc",
        description="Deterministic dense coding capacity of multiqubit sender networks",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nmax", help="maximal orthogonal-encoding alphabet of one state")
    p.add_argument("--family", required=True, choices=["gghz", "gw", "ws"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--senders", type=int, default=2, choices=[2, 3])
    p.add_argument("--out", default=None)
    p.add_argument("--solution-out", default=None, help="write the winning encoding set as JSON")
    _add_solver_flags(p, seed_required=False)
    p.set_defaults(fn=cmd_nmax)

    p = sub.add_parser("sweep", help="(alpha, beta) map of the gw family")
    p.add_argument("--step", type=float, default=0.02)
    p.add_argument("--alpha-min", type=float, default=0.0)
    p.add_argument("--alpha-max", type=float, default=1.0)
    p.add_argument("--beta-min", type=float, default=0.0)
    p.add_argument("--beta-max", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--checkpoint-every", type=int, default=500)
    p.add_argument("--plot", action="store_true", help="render map figures next to the CSV")
    _add_solver_flags(p, seed_required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("survey", help="Monte Carlo n_max statistics of a state family")
    p.add_argument("--class", dest="survey_class", required=True,
                   choices=sorted(_SURVEY_CLASSES))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--checkpoint-every", type=int, default=500)
    p.add_argument("--plot", action="store_true")
    _add_solver_flags(p, seed_required=True)
    p.set_defaults(fn=cmd_survey)

    p = sub.add_parser("ws-scan", help="n_max along the W-to-|000> interpolation")
    p.add_argument("--a-values", default=None, help="comma-separated list")
    p.add_argument("--a-min", type=float, default=0.0)
    p.add_argument("--a-max", type=float, default=0.2)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--out", default=None)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--plot", action="store_true")
    _add_solver_flags(p, seed_required=True)
    p.set_defaults(fn=cmd_ws_scan)

    p = sub.add_parser("verify", help="re-check a serialized encoding set")
    p.add_argument("--solution", required=True)
    p.add_argument("--tol", type=float, default=1e-5)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("protocol", help="run one dense coding round from a solution file")
    p.add_argument("--solution", required=True)
    p.add_argument("--message", type=int, required=True)
    p.set_defaults(fn=cmd_protocol)

    p = sub.add_parser("measures", help="entanglement and capacity measures of one state")
    p.add_argument("--family", required=True, choices=["gghz", "gw", "ws"])
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--a", type=float, default=None)
    p.add_argument("--senders", type=int, default=2, choices=[2, 3])
    p.add_argument("--node", type=int, default=-1,
                   help="monogamy node party index; default: the receiver")
    p.set_defaults(fn=cmd_measures)

    p = sub.add_parser("conjecture", help="probe N = d^(M+1) - 1 on random states")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--senders", type=int, default=2, choices=[2, 3])
    _add_solver_flags(p, seed_required=True)
    p.set_defaults(fn=cmd_conjecture)

    return ap


def main(argv=None) -> int:
    from .rng import limit_blas_threads

    limit_blas_threads()
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except SystemExit2 as exc:
        return int(exc.code)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
