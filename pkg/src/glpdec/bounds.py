"""Distance certification: minimum-distance lower/upper bounds from
per-branch reduced decodes, the bar refinement method, and the penalty-based
fractional-distance lower bound (plus an experimental GLDPC facet hook)."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .codes import CosetSpec, TannerGraph
from .exceptions import ParameterError, SizeLimitError, UnsupportedCodeError
from .lpdecode import DecodeResult, ScheduleParams, decode
from .polytope import FacetSystem, extreme_rays

ODD_SUBSET_DEGREE_CAP = 16

INF = float("inf")


@dataclass(frozen=True)
class BranchRecord:
    kind: str
    r: int
    branch: str
    lower: float
    upper: float
    iterations: int


@dataclass(frozen=True)
class DistanceBoundReport:
    l_min_lower: float
    l_min_upper: float
    per_check: tuple[BranchRecord, ...]
    runtime_stats: dict


@dataclass(frozen=True)
class FracBoundReport:
    d_frac_box: float
    d_frac_diag: float
    d_frac_B: float
    B: float
    records: tuple[BranchRecord, ...] = ()


def branch_csv(records, summary: BranchRecord) -> str:
    """One row per branch plus a summary row."""
    lines = ["kind,r,branch,lower,upper,iterations"]
    for rec in itertools.chain(records, [summary]):
        lines.append(f"{rec.kind},{rec.r},{rec.branch},"
                     f"{rec.lower:.6f},{rec.upper:.6f},{rec.iterations}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reduced problems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedProblem:
    graph: TannerGraph
    var_map: tuple[int, ...]  # reduced index -> original index
    forced_weight: int


def build_reduced(graph: TannerGraph, forced: dict[int, int],
                  removed_checks: frozenset[int] | set[int]) -> ReducedProblem | None:
    """Remove the forced variables (and listed checks); surviving constraints
    that touch forced variables become coset codes. Returns None when a
    forced assignment is inconsistent (an empty coset)."""
    survivors = [i for i in range(graph.n_vars) if i not in forced]
    old2new = {i: t for t, i in enumerate(survivors)}
    constraints = []
    for j, (nbrs, code) in enumerate(graph.constraints):
        if j in removed_checks:
            continue
        if not any(i in forced for i in nbrs):
            constraints.append((tuple(old2new[i] for i in nbrs), code))
            continue
        H = code.parity_matrix
        syndrome = np.zeros(H.shape[0], dtype=np.uint8)
        keep: list[int] = []
        for t, i in enumerate(nbrs):
            if i in forced:
                if forced[i]:
                    syndrome ^= H[:, t]
            else:
                keep.append(t)
        if not keep:
            if syndrome.any():
                return None
            continue  # constraint already satisfied by the forcing
        coset = CosetSpec.build(H[:, keep], syndrome)
        if coset.is_empty:
            return None
        constraints.append((tuple(old2new[nbrs[t]] for t in keep), coset))
    return ReducedProblem(
        graph=TannerGraph(len(survivors), tuple(constraints)),
        var_map=tuple(survivors),
        forced_weight=int(sum(forced.values())))


def _branch_bounds(graph: TannerGraph, forced: dict[int, int], removed,
                   sched: ScheduleParams) -> tuple[float, float, int]:
    """(lower, upper, iterations) for one forced branch, in full-codeword
    Hamming-weight units (the forced weight is added to both bounds)."""
    red = build_reduced(graph, forced, removed)
    if red is None:
        return INF, INF, 0
    w = float(red.forced_weight)
    if red.graph.n_vars == 0:
        return w, w, 0
    gamma = np.ones(red.graph.n_vars)
    res = decode(red.graph, gamma, sched)
    return res.dual_value + w, res.primal_value + w, res.iterations


def _mindist_jobs(graph: TannerGraph):
    for r, (nbrs, code) in enumerate(graph.constraints):
        for ci, c_r in enumerate(code.codewords):
            if not c_r.any():
                continue
            yield r, ci, {i: int(b) for i, b in zip(nbrs, c_r)}


def _eval_mindist_branch(args):
    graph, r, ci, forced, sched = args
    lo, hi, it = _branch_bounds(graph, forced, {r}, sched)
    return BranchRecord("mindist", r, f"cw{ci}", lo, hi, it)


def _run_jobs(fn, jobs, threads: int):
    if threads <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, jobs, chunksize=4))


def min_distance_bounds(graph: TannerGraph, sched: ScheduleParams | None = None,
                        threads: int = 1) -> DistanceBoundReport:
    """Loop over every check and every nonzero local codeword, decode the
    reduced coset problem with unit costs, and aggregate the per-branch
    dual (lower) and primal (upper) values into l_min bounds."""
    sched = sched or ScheduleParams()
    t0 = time.time()
    jobs = [(graph, r, ci, forced, sched) for r, ci, forced in _mindist_jobs(graph)]
    records = _run_jobs(_eval_mindist_branch, jobs, threads)
    lower = min((rec.lower for rec in records), default=INF)
    upper = min((rec.upper for rec in records), default=INF)
    stats = {
        "seconds": time.time() - t0,
        "branches": len(records),
        "infeasible_branches": sum(1 for rec in records if rec.lower == INF),
        "iterations": sum(rec.iterations for rec in records),
    }
    return DistanceBoundReport(l_min_lower=lower, l_min_upper=upper,
                               per_check=tuple(records), runtime_stats=stats)


# ---------------------------------------------------------------------------
# bar method
# ---------------------------------------------------------------------------

def bar_method(graph: TannerGraph, sched: ScheduleParams | None = None,
               bar_lo: float = 1.0, bar_hi: float = 16.0,
               bisect_steps: int = 8) -> float:
    """Highest attainable bar level found by bisection.

    A level is attainable when every check either clears it outright or
    every offending local codeword is refined past it by forcing a second,
    distance-2 check (checks tried in ascending index order). Attainable
    levels are certified minimum-distance lower bounds; the result never
    falls below the plain Algorithm-2 lower bound.
    """
    if bar_lo >= bar_hi:
        raise ParameterError("bar_lo must be below bar_hi")
    sched = sched or ScheduleParams()

    base: dict[tuple[int, int], float] = {}
    for r, ci, forced in _mindist_jobs(graph):
        base[(r, ci)] = _branch_bounds(graph, forced, {r}, sched)[0]
    l_base = min(base.values(), default=INF)

    dist2: dict[int, list[int]] = {}

    def _dist2(r: int) -> list[int]:
        if r not in dist2:
            out: set[int] = set()
            for i in graph.check_nbrs(r):
                out.update(graph.var_adjacency[i])
            out.discard(r)
            dist2[r] = sorted(out)
        return dist2[r]

    refine_cache: dict[tuple[int, int, int], float] = {}

    def _refined(r: int, ci: int, j: int) -> float:
        key = (r, ci, j)
        if key in refine_cache:
            return refine_cache[key]
        nbrs_r, code_r = graph.constraints[r]
        nbrs_j, code_j = graph.constraints[j]
        c_r = code_r.codewords[ci]
        forced_r = {i: int(b) for i, b in zip(nbrs_r, c_r)}
        shared = [t for t, i in enumerate(nbrs_j) if i in forced_r]
        best = INF
        for c_j in code_j.codewords:
            if any(int(c_j[t]) != forced_r[nbrs_j[t]] for t in shared):
                continue
            forced = dict(forced_r)
            forced.update({i: int(b) for i, b in zip(nbrs_j, c_j)})
            lo, _, _ = _branch_bounds(graph, forced, {r, j}, sched)
            best = min(best, lo)
        refine_cache[key] = best
        return best

    def _attainable(level: float) -> bool:
        for (r, ci), lo in base.items():
            if lo >= level:
                continue
            if not any(_refined(r, ci, j) >= level for j in _dist2(r)):
                return False
        return True

    lo, hi = bar_lo, bar_hi
    if _attainable(hi):
        return max(l_base, hi)
    if not _attainable(lo):
        return l_base
    best = lo
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        if _attainable(mid):
            best = mid
            lo = mid
        else:
            hi = mid
    return max(l_base, best)


# ---------------------------------------------------------------------------
# fractional distance lower bound
# ---------------------------------------------------------------------------

def _odd_subsets(degree: int):
    for size in range(3, degree + 1, 2):
        yield from itertools.combinations(range(degree), size)


def _eval_box_branch(args):
    graph, i, sched = args
    lo, _, it = _branch_bounds(graph, {i: 1}, frozenset(), sched)
    return BranchRecord("facet-box", i, f"c{i}=1",
                        lo if lo == INF else lo, INF, it)


def _eval_odd_branch(args):
    graph, r, subset, B, sched = args
    nbrs = graph.check_nbrs(r)
    gamma = np.ones(graph.n_vars)
    sel = set(subset)
    for t, i in enumerate(nbrs):
        gamma[i] = 1.0 - B if t in sel else 1.0 + B
    res = decode(graph, gamma, sched)
    bound = res.dual_value + B * (len(subset) - 1)
    branch = "S=" + "".join("1" if t in sel else "0" for t in range(len(nbrs)))
    return BranchRecord("facet-odd", r, branch, bound, INF, res.iterations)


def frac_distance_lower(graph: TannerGraph, B: float,
                        sched: ScheduleParams | None = None,
                        threads: int = 1) -> FracBoundReport:
    """Penalty-based lower bound on the fractional distance of a plain LDPC
    code: coset-forced decodes over the {c_i = 1} facets plus penalized
    decodes over every odd-subset facet, all with unit base costs.

    eps0 starts at 0.1/B (the rest of the schedule is unchanged).
    """
    if B <= 0:
        raise ParameterError("penalty constant B must be positive")
    if not graph.is_plain:
        raise UnsupportedCodeError(
            "frac_distance_lower covers plain LDPC; use the GLDPC facet hook")
    sched = replace(sched or ScheduleParams(), eps0_init=0.1 / B)
    box_jobs = [(graph, i, sched) for i in range(graph.n_vars)]
    box = _run_jobs(_eval_box_branch, box_jobs, threads)
    odd_jobs = []
    for r, (nbrs, _) in enumerate(graph.constraints):
        if len(nbrs) > ODD_SUBSET_DEGREE_CAP:
            raise SizeLimitError(f"check {r} degree {len(nbrs)} exceeds subset cap")
        odd_jobs.extend((graph, r, s, float(B), sched)
                        for s in _odd_subsets(len(nbrs)))
    odd = _run_jobs(_eval_odd_branch, odd_jobs, threads)
    d_box = min((rec.lower for rec in box), default=INF)
    d_diag = min((rec.lower for rec in odd), default=INF)
    return FracBoundReport(d_frac_box=d_box, d_frac_diag=d_diag,
                           d_frac_B=min(d_box, d_diag), B=float(B),
                           records=tuple(box) + tuple(odd))


def _eval_ray_branch(args):
    graph, r, ray, B, sched = args
    nbrs = graph.check_nbrs(r)
    gamma = np.ones(graph.n_vars)
    for t, i in enumerate(nbrs):
        gamma[i] = 1.0 - B * ray[t + 1]
    res = decode(graph, gamma, sched)
    bound = res.dual_value + B * float(-ray[0])
    kind = "facet-box" if _is_box_ray(ray) else "facet-ray"
    return BranchRecord(kind, r, "v=" + ",".join(map(str, ray)),
                        bound, INF, res.iterations)


def _is_box_ray(ray) -> bool:
    coeffs = ray[1:]
    return ray[0] == -1 and sum(1 for x in coeffs if x) == 1 and max(coeffs) == 1


def frac_distance_lower_gldpc(graph: TannerGraph, B: float,
                              sched: ScheduleParams | None = None,
                              facet_systems: dict[int, FacetSystem] | None = None,
                              threads: int = 1) -> FracBoundReport:
    """Experimental GLDPC fractional-distance hook: apply the penalty scheme
    to every local facet (extreme ray) that does not contain the origin.

    Facet systems default to the double-description rays of each constituent
    code; a mapping from constraint index to FacetSystem overrides them.
    """
    if B <= 0:
        raise ParameterError("penalty constant B must be positive")
    sched = replace(sched or ScheduleParams(), eps0_init=0.1 / B)
    cache: dict[bytes, FacetSystem] = {}
    jobs = []
    for r, (nbrs, code) in enumerate(graph.constraints):
        if facet_systems is not None and r in facet_systems:
            fs = facet_systems[r]
        else:
            key = code.parity_matrix.tobytes() + bytes(code.syndrome)
            if key not in cache:
                cache[key] = extreme_rays(code)
            fs = cache[key]
        for ray in fs.rays:
            if ray[0] == 0:
                continue  # facet contains the origin
            jobs.append((graph, r, ray, float(B), sched))
    records = _run_jobs(_eval_ray_branch, jobs, threads)
    d_box = min((rec.lower for rec in records if rec.kind == "facet-box"),
                default=INF)
    d_diag = min((rec.lower for rec in records if rec.kind != "facet-box"),
                 default=INF)
    return FracBoundReport(d_frac_box=d_box, d_frac_diag=d_diag,
                           d_frac_B=min(d_box, d_diag), B=float(B),
                           records=tuple(records))
