"""Relaxation tightening by merging constraint nodes: short-cycle
enumeration, merged-constituent construction, keep-originals variant, and
the plain-LDPC polytope membership test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import ConstituentCode, TannerGraph, gf2_rref
from .exceptions import MergeError, ParameterError, UnsupportedCodeError

MERGE_SUPPORT_CAP = 24
MERGE_CODEWORD_CAP = 1 << 16


@dataclass(frozen=True)
class CycleList:
    """Simple cycles as (variables, checks) tuples: the cycle visits
    vars[0], checks[0], vars[1], checks[1], ..., closing back to vars[0]."""

    cycles: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]

    def __len__(self) -> int:
        return len(self.cycles)


@dataclass(frozen=True)
class MergePlan:
    groups: tuple[tuple[int, ...], ...]
    keep_originals: bool = True


def find_short_cycles(graph: TannerGraph, max_len: int) -> CycleList:
    """All simple cycles of length <= max_len, each reported once.

    Canonical form: the smallest variable first, direction chosen so the
    first check index is smaller than the last.
    """
    if max_len not in (4, 6, 8):
        raise ParameterError(f"max_len must be 4, 6 or 8, got {max_len}")
    max_checks = max_len // 2
    found: list[tuple[tuple[int, ...], tuple[int, ...]]] = []

    def extend(v0: int, vars_path: list[int], checks_path: list[int],
               used_v: set[int], used_c: set[int]) -> None:
        v_cur = vars_path[-1]
        for j in graph.var_adjacency[v_cur]:
            if j in used_c:
                continue
            checks_path.append(j)
            used_c.add(j)
            for v in graph.check_nbrs(j):
                if v == v0 and len(checks_path) >= 2:
                    if checks_path[0] < checks_path[-1]:
                        found.append((tuple(vars_path), tuple(checks_path)))
                elif v > v0 and v not in used_v and len(checks_path) < max_checks:
                    vars_path.append(v)
                    used_v.add(v)
                    extend(v0, vars_path, checks_path, used_v, used_c)
                    used_v.discard(v)
                    vars_path.pop()
            used_c.discard(j)
            checks_path.pop()

    for v0 in range(graph.n_vars):
        extend(v0, [v0], [], {v0}, set())
    found.sort(key=lambda c: (len(c[1]), c[0], c[1]))
    return CycleList(tuple(found))


def plan_from_cycles(cycles: CycleList) -> MergePlan:
    """One merge group per cycle: that cycle's constraint nodes."""
    groups = tuple(tuple(sorted(set(checks))) for _, checks in cycles.cycles)
    return MergePlan(groups=groups, keep_originals=True)


def merge_constraints(graph: TannerGraph, plan: MergePlan) -> TannerGraph:
    """Merge each group of constraints into one node whose constituent code
    satisfies all member constraints on the union support.

    Identical merged nodes (same support and codeword set) are deduplicated;
    originals are retained iff plan.keep_originals.
    """
    if not plan.keep_originals:
        seen: set[int] = set()
        for group in plan.groups:
            if seen & set(group):
                raise MergeError("overlapping groups require keep_originals")
            seen |= set(group)
    merged: list[tuple[tuple[int, ...], ConstituentCode]] = []
    dedup: set[tuple[tuple[int, ...], bytes]] = set()
    for group in plan.groups:
        ids = sorted(set(group))
        if len(ids) < 2:
            raise MergeError(f"merge group needs >= 2 members: {group}")
        if any(not 0 <= j < graph.n_checks for j in ids):
            raise MergeError(f"merge group references unknown constraint: {group}")
        support = sorted(set().union(*(graph.check_nbrs(j) for j in ids)))
        if len(support) > MERGE_SUPPORT_CAP:
            raise MergeError(
                f"group {tuple(ids)}: union support {len(support)} exceeds cap")
        pos = {i: t for t, i in enumerate(support)}
        rows = []
        for j in ids:
            nbrs, code = graph.constraints[j]
            H = code.parity_matrix
            for row in H:
                wide = np.zeros(len(support), dtype=np.uint8)
                for t, i in enumerate(nbrs):
                    wide[pos[i]] = row[t]
                rows.append(wide)
        stacked = np.array(rows, dtype=np.uint8)
        _, pivots = gf2_rref(stacked)
        n_words = 1 << (len(support) - len(pivots))
        if n_words > MERGE_CODEWORD_CAP:
            raise MergeError(
                f"group {tuple(ids)}: {n_words} merged codewords exceeds cap")
        code = ConstituentCode.from_parity(stacked)
        key = (tuple(support), code.codewords.tobytes())
        if key in dedup:
            continue
        dedup.add(key)
        merged.append((tuple(support), code))
    if plan.keep_originals:
        constraints = list(graph.constraints) + merged
    else:
        dropped = set().union(*map(set, plan.groups)) if plan.groups else set()
        constraints = [c for j, c in enumerate(graph.constraints)
                       if j not in dropped] + merged
    return TannerGraph(graph.n_vars, tuple(constraints))


def polytope_membership(graph: TannerGraph, c, tol: float) -> bool:
    """Exact membership test in the plain-LDPC fundamental polytope.

    Box constraints are tested exactly; each check's odd-subset inequalities
    are verified through their exact minimum (choose per-position minimum and
    repair parity with the cheapest flip), so no subset enumeration is needed.
    """
    if not graph.is_plain:
        raise UnsupportedCodeError("membership test covers plain LDPC only")
    c = np.asarray(c, dtype=np.float64)
    if c.shape[0] != graph.n_vars:
        raise ParameterError("vector length does not match the graph")
    if (c < 0.0).any() or (c > 1.0).any():
        return False
    for nbrs, _ in graph.constraints:
        vals = c[list(nbrs)]
        flipped = vals > 0.5
        base = np.where(flipped, 1.0 - vals, vals).sum()
        if int(flipped.sum()) % 2 == 0:
            base += np.abs(1.0 - 2.0 * vals).min()
        if base < 1.0 - tol:
            return False
    return True
