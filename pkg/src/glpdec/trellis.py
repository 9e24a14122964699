"""Syndrome-trellis kernels: log-domain partition sums A_k/B_k and exact
local minima of the dual objective, for constituent codes and their cosets.

All partition arithmetic is log-domain (additions only, never differences),
so sharpness constants up to 1e4 and penalty-scaled objectives stay stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .codes import LocalCode, TannerGraph
from .exceptions import SizeLimitError

NEG_INF = float("-inf")
POS_INF = float("inf")

_log1p = math.log1p
_exp = math.exp


def _check_state_cap(code: LocalCode) -> int:
    m = code.parity_matrix.shape[0]
    if m > 20:
        raise SizeLimitError(f"trellis state cap exceeded: {m} parity rows")
    return 1 << m


@dataclass(frozen=True)
class ABValues:
    """Per-position sums A_k (words with g_k=1, own term removed) and B_k
    (words with g_k=0), stored as log-values; -inf marks an empty side."""

    log_a: tuple[float, ...]
    log_b: tuple[float, ...]

    def degenerate_positions(self) -> list[int]:
        return [k for k in range(len(self.log_a))
                if self.log_a[k] == NEG_INF or self.log_b[k] == NEG_INF]


def _forward(cols, scaled: list[float], nstates: int) -> list[list[float]]:
    """fwd[k] holds E(k-1, .): sums over prefixes g_0..g_{k-1}."""
    row = [NEG_INF] * nstates
    row[0] = 0.0
    out = [row]
    for k, h in enumerate(cols):
        prev = out[-1]
        shift = scaled[k]
        nxt = [0.0] * nstates
        for s in range(nstates):
            a = prev[s]
            b = prev[s ^ h] + shift
            if a >= b:
                nxt[s] = a if b == NEG_INF else a + _log1p(_exp(b - a))
            else:
                nxt[s] = b if a == NEG_INF else b + _log1p(_exp(a - b))
        out.append(nxt)
    return out


def _backward(cols, scaled: list[float], nstates: int) -> list[list[float]]:
    """bwd[k] holds E~(k, .): sums over suffixes g_{k+1}..g_{n-1}."""
    n = len(cols)
    row = [NEG_INF] * nstates
    row[0] = 0.0
    out = [row] * max(n, 1)
    out = list(out)
    out[n - 1] = row
    for k in range(n - 2, -1, -1):
        prev = out[k + 1]
        h = cols[k + 1]
        shift = scaled[k + 1]
        nxt = [0.0] * nstates
        for s in range(nstates):
            a = prev[s]
            b = prev[s ^ h] + shift
            if a >= b:
                nxt[s] = a if b == NEG_INF else a + _log1p(_exp(b - a))
            else:
                nxt[s] = b if a == NEG_INF else b + _log1p(_exp(a - b))
        out[k] = nxt
    return out


def _logsum_pairs(left: list[float], right: list[float], nstates: int,
                  lshift: int, rshift: int) -> float:
    """log sum over states s of exp(left[s^lshift] + right[s^rshift])."""
    best = NEG_INF
    for s in range(nstates):
        t = left[s ^ lshift] + right[s ^ rshift]
        if t > best:
            best = t
    if best == NEG_INF:
        return NEG_INF
    acc = 0.0
    for s in range(nstates):
        t = left[s ^ lshift] + right[s ^ rshift]
        if t != NEG_INF:
            acc += _exp(t - best)
    return best + math.log(acc)


def compute_ab(code: LocalCode, u, K: float) -> ABValues:
    """A_k and B_k for one constraint via forward/backward recursions.

    The coset syndrome enters only through the backward lookup offset; an
    empty side is reported as -inf in the result (degenerate-coset signal),
    never silently clipped.
    """
    if K <= 0:
        raise ValueError("K must be positive")
    cols = code.col_masks
    n = len(cols)
    nstates = _check_state_cap(code)
    st = code.syndrome_mask
    scaled = [-K * float(x) for x in u]
    if len(scaled) != n:
        raise ValueError(f"u has length {len(scaled)}, code length {n}")
    fwd = _forward(cols, scaled, nstates)
    bwd = _backward(cols, scaled, nstates)
    log_a = []
    log_b = []
    for k in range(n):
        # A_k = sum_s E(k-1, s^h_k) E~(k, s^st): the e^{+-K u_k} factors cancel
        log_a.append(_logsum_pairs(fwd[k], bwd[k], nstates, cols[k], st))
        log_b.append(_logsum_pairs(fwd[k], bwd[k], nstates, 0, st))
    return ABValues(tuple(log_a), tuple(log_b))


def local_log_partition(code: LocalCode, u, K: float) -> float:
    """log of Z = sum over (coset) codewords of exp(-K u.g); -inf if empty."""
    cols = code.col_masks
    nstates = _check_state_cap(code)
    scaled = [-K * float(x) for x in u]
    fwd = _forward(cols, scaled, nstates)
    return fwd[len(cols)][code.syndrome_mask]


def local_dual_min(code: LocalCode, u) -> float:
    """Exact min over (coset) codewords of u.g via the min-sum recursion.

    Returns +inf for an empty coset.
    """
    cols = code.col_masks
    nstates = _check_state_cap(code)
    row = [POS_INF] * nstates
    row[0] = 0.0
    for k, h in enumerate(cols):
        uk = float(u[k])
        nxt = [0.0] * nstates
        for s in range(nstates):
            a = row[s]
            b = row[s ^ h] + uk
            nxt[s] = a if a <= b else b
        row = nxt
    return row[code.syndrome_mask]


def dual_objective(graph: TannerGraph, u_edges) -> float:
    """D(u): sum over constraints of the local dual minimum.

    `u_edges[j]` is aligned with constraint j's neighbor list.
    """
    total = 0.0
    for j, (_, code) in enumerate(graph.constraints):
        total += local_dual_min(code, u_edges[j])
    return total
