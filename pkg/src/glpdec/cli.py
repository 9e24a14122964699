"""Command-line front end: decode, distance bounds, polytopes, merging,
simulation and code generation. Outputs are files and one-line summaries;
exit codes: 0 success, 1 usage error, 2 computation error."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import bounds, codes, harness, lpdecode, merge, polytope
from .exceptions import GlpdecError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _add_schedule_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K0", type=float, default=1000.0)
    p.add_argument("--eps0", type=float, default=0.01)
    p.add_argument("--growth", type=float, default=1.26)
    p.add_argument("--rounds", type=int, default=10)


def _add_code_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--code", help="alist file (plain LDPC)")
    p.add_argument("--gldpc", help="gldpc text file")
    p.add_argument("--hamming74", action="store_true",
                   help="built-in single Hamming(7,4) constraint")


def _schedule(args) -> lpdecode.ScheduleParams:
    return lpdecode.ScheduleParams(k0=args.K0, eps0_init=args.eps0,
                                   growth=args.growth, rounds=args.rounds)


def _load_graph(args) -> codes.TannerGraph:
    picked = [bool(args.code), bool(args.gldpc), bool(getattr(args, "hamming74", False))]
    if sum(picked) != 1:
        raise _UsageError("pick exactly one of --code, --gldpc, --hamming74")
    if args.code:
        return codes.parse_alist(_read(args.code))
    if args.gldpc:
        return codes.parse_gldpc(_read(args.gldpc))
    return codes.single_check_graph(codes.hamming74_code())


def _read(path: str) -> str:
    if not os.path.exists(path):
        raise _UsageError(f"missing input file: {path}")
    with open(path) as f:
        return f.read()


def _write(path: str | None, text: str, fallback: str) -> str:
    path = path or fallback
    with open(path, "w") as f:
        f.write(text)
    return path


def build_parser() -> _Parser:
    top = _Parser(prog="glpdec", description=__doc__)
    top.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="decode one channel draw")
    _add_code_flags(p)
    _add_schedule_flags(p)
    p.add_argument("--p", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gamma-file", help="text file of per-variable LLRs")

    p = sub.add_parser("mindist", help="minimum-distance bounds (Algorithm-2 style)")
    _add_code_flags(p)
    _add_schedule_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("bar", help="bar-method certified lower bound")
    _add_code_flags(p)
    _add_schedule_flags(p)
    p.add_argument("--bar-lo", type=float, default=1.0)
    p.add_argument("--bar-hi", type=float, default=16.0)
    p.add_argument("--bisect-steps", type=int, default=8)

    p = sub.add_parser("fracdist", help="fractional-distance lower bound")
    _add_code_flags(p)
    _add_schedule_flags(p)
    p.add_argument("--penalty-B", type=float, default=None,
                   help="penalty constant (default 10N)")
    p.add_argument("--out")

    p = sub.add_parser("polytope", help="facet matrix of a constituent code")
    p.add_argument("--hamming74", action="store_true")
    p.add_argument("--spc-gf4-n4", action="store_true")
    p.add_argument("--spc", type=int, help="binary SPC of the given degree")
    p.add_argument("--out")

    p = sub.add_parser("merge", help="write the cycle-merged graph")
    _add_code_flags(p)
    p.add_argument("--max-cycle-len", type=int, default=6)
    p.add_argument("--out")

    p = sub.add_parser("simulate", help="Monte-Carlo word-error simulation")
    _add_code_flags(p)
    _add_schedule_flags(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--decoder", choices=["lp", "lp-merged", "bp"], default="lp")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-cycle-len", type=int, default=6)
    p.add_argument("--out")

    p = sub.add_parser("gencode", help="draw a (dv,dc)-regular code, write alist")
    p.add_argument("--gallager", nargs=3, type=int, metavar=("N", "DV", "DC"),
                   required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = sub.add_parser("oracle", help="brute-force oracles for tiny codes")
    _add_code_flags(p)
    p.add_argument("--what", choices=["mindist", "fracdist"], required=True)
    return top


def _cmd_decode(args) -> int:
    graph = _load_graph(args)
    if args.gamma_file:
        gamma = codes.LLRVector(np.array(
            [float(t) for t in _read(args.gamma_file).split()]))
    else:
        flips = harness._trial_flips(args.seed, 0, graph.n_vars, args.p)
        gamma = codes.bsc_llrs(flips, args.p)
    res = lpdecode.decode(graph, gamma, _schedule(args))
    print(f"decode: primal={res.primal_value:.6f} dual={res.dual_value:.6f} "
          f"gap={res.gap:.3e} cert={res.ml_certificate} "
          f"iters={res.iterations} converged={res.converged}")
    print("c_hat=" + "".join(map(str, res.c_hat.tolist())))
    return 0


def _cmd_mindist(args) -> int:
    graph = _load_graph(args)
    rep = bounds.min_distance_bounds(graph, _schedule(args), threads=args.threads)
    summary = bounds.BranchRecord("summary", -1, "l_min", rep.l_min_lower,
                                  rep.l_min_upper,
                                  rep.runtime_stats["iterations"])
    path = _write(args.out, bounds.branch_csv(rep.per_check, summary),
                  "mindist_branches.csv")
    print(f"mindist: l_min_lower={rep.l_min_lower:.4f} "
          f"l_min_upper={rep.l_min_upper:.4f} branches={len(rep.per_check)} "
          f"csv={path}")
    return 0


def _cmd_bar(args) -> int:
    graph = _load_graph(args)
    level = bounds.bar_method(graph, _schedule(args), bar_lo=args.bar_lo,
                              bar_hi=args.bar_hi, bisect_steps=args.bisect_steps)
    print(f"bar: certified_lower_bound={level:.4f}")
    return 0


def _cmd_fracdist(args) -> int:
    graph = _load_graph(args)
    B = args.penalty_B if args.penalty_B is not None else 10.0 * graph.n_vars
    if graph.is_plain:
        rep = bounds.frac_distance_lower(graph, B, _schedule(args),
                                         threads=args.threads)
    else:
        rep = bounds.frac_distance_lower_gldpc(graph, B, _schedule(args),
                                               threads=args.threads)
    summary = bounds.BranchRecord("summary", -1, "d_frac_B", rep.d_frac_B,
                                  float("inf"), 0)
    path = _write(args.out, bounds.branch_csv(rep.records, summary),
                  "fracdist_branches.csv")
    print(f"fracdist: d_frac_B={rep.d_frac_B:.4f} box={rep.d_frac_box:.4f} "
          f"diag={rep.d_frac_diag:.4f} B={B:g} csv={path}")
    return 0


def _cmd_polytope(args) -> int:
    if sum([args.hamming74, args.spc_gf4_n4, args.spc is not None]) != 1:
        raise _UsageError("pick exactly one of --hamming74, --spc-gf4-n4, --spc")
    if args.hamming74:
        fs, name = polytope.extreme_rays(codes.hamming74_code()), "hamming74"
    elif args.spc_gf4_n4:
        fs, name = polytope.extreme_rays(polytope.spc_gf4_n4_embedded()), "spc_gf4_n4"
    else:
        fs, name = polytope.extreme_rays(codes.spc_code(args.spc)), f"spc{args.spc}"
    path = _write(args.out, polytope.write_facets(fs), f"{name}_facets.txt")
    print(f"polytope: {name} facets={fs.r} width={fs.width} file={path}")
    return 0


def _cmd_merge(args) -> int:
    graph = _load_graph(args)
    cycles = merge.find_short_cycles(graph, args.max_cycle_len)
    merged = merge.merge_constraints(graph, merge.plan_from_cycles(cycles))
    path = _write(args.out, codes.write_gldpc(merged), "merged.gldpc")
    print(f"merge: cycles={len(cycles)} checks {graph.n_checks} -> "
          f"{merged.n_checks} file={path}")
    return 0


def _cmd_simulate(args) -> int:
    graph = _load_graph(args)
    config = harness.SimConfig(p=args.p, trials=args.trials, seed=args.seed,
                               decoder=args.decoder)
    result = harness.simulate(graph, config, _schedule(args),
                              max_cycle_len=args.max_cycle_len,
                              threads=args.threads)
    text = harness.SIM_CSV_HEADER + "\n" + harness.sim_csv_row(config, result) + "\n"
    path = _write(args.out, text, "simulate.csv")
    print(f"simulate: decoder={args.decoder} p={args.p} wer={result.wer:.5f} "
          f"({result.word_errors}/{result.trials}) csv={path}")
    return 0


def _cmd_gencode(args) -> int:
    n, dv, dc = args.gallager
    graph = codes.gallager_ensemble(n, dv, dc, args.seed)
    path = _write(args.out, codes.write_alist(graph), f"gallager_{n}_{dv}_{dc}.alist")
    print(f"gencode: N={n} M={graph.n_checks} ({dv},{dc})-regular file={path}")
    return 0


def _cmd_oracle(args) -> int:
    graph = _load_graph(args)
    if args.what == "mindist":
        print(f"oracle mindist: {harness.oracle_min_distance(graph)}")
    else:
        val = harness.oracle_fractional_distance(graph)
        print(f"oracle fracdist: {val} ({float(val):.6f})")
    return 0


_COMMANDS = {
    "decode": _cmd_decode,
    "mindist": _cmd_mindist,
    "bar": _cmd_bar,
    "fracdist": _cmd_fracdist,
    "polytope": _cmd_polytope,
    "merge": _cmd_merge,
    "simulate": _cmd_simulate,
    "gencode": _cmd_gencode,
    "oracle": _cmd_oracle,
}


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except GlpdecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
