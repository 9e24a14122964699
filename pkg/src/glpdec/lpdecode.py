"""Iterative approximate LP decoder: Gauss-Seidel coordinate ascent on the
smoothed dual with active-set scheduling, annealed sharpness, primal
recovery and the integrality certificate."""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .codes import LLRVector, TannerGraph, compute_eta
from .exceptions import ParameterError
from .trellis import NEG_INF, compute_ab, dual_objective, local_log_partition

V_MAX = 1e6
CERT_TOL = 1e-4


@dataclass(frozen=True)
class ScheduleParams:
    """Sharpness/active-set annealing schedule.

    Defaults follow the standard protocol: start at K=1000, eps0=0.01,
    then ten rounds of K *= 1.26, eps0 /= 1.26 (final K ~ 1e4, eps0 ~ 1e-3).
    """

    k0: float = 1000.0
    eps0_init: float = 0.01
    growth: float = 1.26
    rounds: int = 10
    max_iters_per_round: int | None = None  # None -> 200 * n_vars

    def __post_init__(self):
        if self.growth <= 1.0:
            raise ParameterError("growth must exceed 1")
        if self.rounds < 1:
            raise ParameterError("rounds must be >= 1")
        if self.k0 <= 0 or self.eps0_init <= 0:
            raise ParameterError("K and eps0 must be positive")


@dataclass
class DecoderState:
    """Mutable working state of one decode; confined to a single task."""

    u: list[list[float]]          # per check, aligned with its neighbor list
    v: list[list[float]]
    lam_edge: list[list[float]]
    lam_node: list[float]
    eps_node: list[float]
    active: set[int]
    K: float
    eps0: float
    queue: deque = field(default_factory=deque)
    queued: set[int] = field(default_factory=set)
    var_inc: list[list[tuple[int, int]]] = field(default_factory=list)


@dataclass(frozen=True)
class DecodeResult:
    lam_tilde: np.ndarray
    u_final: tuple[tuple[float, ...], ...]
    c_hat: np.ndarray
    primal_value: float
    dual_value: float
    ml_certificate: bool
    iterations: int
    converged: bool
    k_final: float
    eps0_final: float
    eta: float

    @property
    def gap(self) -> float:
        return self.primal_value - self.dual_value


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _edge_v(log_a: float, log_b: float, K: float) -> float:
    # v = -(1/K) log(B/A); an empty side is clamped to +-V_MAX
    if log_a == NEG_INF and log_b == NEG_INF:
        raise ParameterError("constraint with empty coset reached the decoder")
    if log_a == NEG_INF:
        return -V_MAX
    if log_b == NEG_INF:
        return V_MAX
    return (log_a - log_b) / K


def _as_gamma(gamma) -> np.ndarray:
    if isinstance(gamma, LLRVector):
        return gamma.gamma
    return np.asarray(gamma, dtype=np.float64)


def _refresh(state: DecoderState, graph: TannerGraph) -> None:
    """Recompute v, lambda, node stats and the active set from current u/K."""
    K = state.K
    for j, (nbrs, code) in enumerate(graph.constraints):
        ab = compute_ab(code, state.u[j], K)
        vj = state.v[j]
        uj = state.u[j]
        lj = state.lam_edge[j]
        for t in range(len(nbrs)):
            vj[t] = _edge_v(ab.log_a[t], ab.log_b[t], K)
            lj[t] = _sigmoid(K * (vj[t] - uj[t]))
    state.active.clear()
    state.queue.clear()
    state.queued.clear()
    for i in range(len(state.lam_node)):
        inc = state.var_inc[i]
        mean = sum(state.lam_edge[j][t] for j, t in inc) / len(inc)
        state.lam_node[i] = mean
        eps = max(abs(state.lam_edge[j][t] - mean) for j, t in inc)
        state.eps_node[i] = eps
        if eps >= state.eps0:
            state.active.add(i)
            state.queue.append(i)
            state.queued.add(i)


def initialize(graph: TannerGraph, gamma, K: float,
               eps0: float = 0.01) -> DecoderState:
    """Step-1 initialization: split each gamma_i evenly over its edges, then
    derive v, lambda, the node means and the active set."""
    g = _as_gamma(gamma)
    if g.shape[0] != graph.n_vars:
        raise ParameterError("gamma length does not match the graph")
    var_inc: list[list[tuple[int, int]]] = [[] for _ in range(graph.n_vars)]
    for j, (nbrs, _) in enumerate(graph.constraints):
        for t, i in enumerate(nbrs):
            var_inc[i].append((j, t))
    for i, inc in enumerate(var_inc):
        if not inc:
            raise ParameterError(f"variable {i} has no incident constraint")
    u = []
    for j, (nbrs, _) in enumerate(graph.constraints):
        u.append([float(g[i]) / len(var_inc[i]) for i in nbrs])
    state = DecoderState(
        u=u,
        v=[[0.0] * len(nbrs) for nbrs, _ in graph.constraints],
        lam_edge=[[0.0] * len(nbrs) for nbrs, _ in graph.constraints],
        lam_node=[0.0] * graph.n_vars,
        eps_node=[0.0] * graph.n_vars,
        active=set(),
        K=float(K),
        eps0=float(eps0),
    )
    state.var_inc = var_inc
    _refresh(state, graph)
    return state


def iterate_once(state: DecoderState, k: int, graph: TannerGraph, gamma) -> None:
    """One step-2 update for variable k: recenter u on k's edges, refresh v
    on the other edges of the touched checks, then update the lambdas,
    node means and active-set membership on the affected neighborhood."""
    if k not in state.active:
        raise ParameterError(f"variable {k} is not in the active set")
    g = _as_gamma(gamma)
    inc = state.var_inc[k]
    shift = (float(g[k]) - sum(state.v[j][t] for j, t in inc)) / len(inc)
    for j, t in inc:
        state.u[j][t] = state.v[j][t] + shift
    K = state.K
    touched: dict[int, None] = {}  # insertion-ordered, matches the fast path
    for j, tk in inc:
        nbrs, code = graph.constraints[j]
        ab = compute_ab(code, state.u[j], K)
        vj, uj, lj = state.v[j], state.u[j], state.lam_edge[j]
        for t, i in enumerate(nbrs):
            if t != tk:
                vj[t] = _edge_v(ab.log_a[t], ab.log_b[t], K)
            lj[t] = _sigmoid(K * (vj[t] - uj[t]))
            touched[i] = None
    for i in touched:
        inc_i = state.var_inc[i]
        mean = sum(state.lam_edge[j][t] for j, t in inc_i) / len(inc_i)
        state.lam_node[i] = mean
        eps = max(abs(state.lam_edge[j][t] - mean) for j, t in inc_i)
        state.eps_node[i] = eps
        if i in state.active:
            if eps < state.eps0:
                state.active.discard(i)
        elif eps >= state.eps0:
            state.active.add(i)
            if i not in state.queued:
                state.queue.append(i)
                state.queued.add(i)


def _pop_fifo(state: DecoderState) -> int:
    while True:
        k = state.queue.popleft()
        state.queued.discard(k)
        if k in state.active:
            return k


def _flat_graph(graph: TannerGraph):
    flat = graph.__dict__.get("_flat_cache")
    if flat is None:
        from ._fastdecode import FlatGraph
        flat = FlatGraph(graph)
        graph.__dict__["_flat_cache"] = flat
    return flat


def _adaptive_eps(graph: TannerGraph, lam: np.ndarray, eta: float) -> float | None:
    """Smallest shrink that provably repairs every odd-subset deficit of the
    node beliefs, for graphs whose checks are all SPCs or SPC cosets.

    Returns None when a check is not SPC-shaped (merged/GLDPC constituents),
    in which case the caller falls back to the schedule's final eps0.
    Cosets are handled by flipping one coordinate (any coset representative
    maps the odd-parity hull onto the even-parity hull); checks of length
    <= 2 describe affine segments that no shrink can repair and are skipped.
    """
    if eta <= 0:
        return None
    needed = 0.0
    for nbrs, code in graph.constraints:
        H = code.parity_matrix
        if H.shape[0] != 1 or not H.all():
            return None
        d = len(nbrs)
        if d < 3:
            continue
        vals = lam[list(nbrs)]
        if code.syndrome_mask:
            vals = vals.copy()
            vals[0] = 1.0 - vals[0]
        flipped = vals > 0.5
        base = float(np.where(flipped, 1.0 - vals, vals).sum())
        if int(flipped.sum()) % 2 == 0:
            base += float(np.abs(1.0 - 2.0 * vals).min())
        deficit = 1.0 - base
        if deficit > 0.0:
            needed = max(needed, deficit / (eta * (0.5 * d - 1.0 + deficit)))
    return needed


def _run_phases_fast(graph: TannerGraph, g: np.ndarray, sched: ScheduleParams,
                     max_iters: int):
    from . import _fastdecode as fd

    flat = _flat_graph(graph)
    n, n_edges = flat.n_vars, len(flat.evar)
    deg = (flat.var_ptr[1:] - flat.var_ptr[:-1]).astype(np.float64)
    u = (g[flat.evar] / deg[flat.evar]).astype(np.float64)
    v = np.zeros(n_edges)
    lam = np.zeros(n_edges)
    lam_node = np.zeros(n)
    eps_node = np.zeros(n)
    active = np.zeros(n, dtype=np.uint8)
    in_queue = np.zeros(n, dtype=np.uint8)
    queue = np.zeros(n + 1, dtype=np.int64)  # ring; each var queued at most once
    fwd = np.full((flat.dmax + 1, flat.smax), NEG_INF)
    bwd = np.full((max(flat.dmax, 1), flat.smax), NEG_INF)
    touched = np.zeros(n, dtype=np.int64)
    K, eps0 = sched.k0, sched.eps0_init
    total = 0
    converged = True
    for phase in range(sched.rounds + 1):
        if phase > 0:
            K *= sched.growth
            eps0 /= sched.growth
        head, tail = fd.refresh_kernel(
            flat.check_ptr, flat.evar, flat.cmask, flat.states, flat.syndrome,
            flat.var_ptr, flat.vedge, u, v, lam, lam_node, eps_node, active,
            in_queue, queue, K, eps0, fwd, bwd)
        it, head, tail = fd.phase_kernel(
            flat.check_ptr, flat.evar, flat.cmask, flat.states, flat.syndrome,
            flat.var_ptr, flat.vedge, flat.echeck, u, v, lam, lam_node,
            eps_node, active, in_queue, queue, head, tail, K, eps0, g,
            max_iters, fwd, bwd, touched)
        total += it
        if active.any():
            converged = False
    u_edges = tuple(
        tuple(float(x) for x in u[flat.check_ptr[j]:flat.check_ptr[j + 1]])
        for j in range(flat.n_checks))
    return lam_node, u_edges, total, converged, K, eps0


def _run_phases_pure(graph: TannerGraph, g: np.ndarray, sched: ScheduleParams,
                     max_iters: int, rng):
    K, eps0 = sched.k0, sched.eps0_init
    state = initialize(graph, g, K, eps0)
    total = 0
    converged = True
    for phase in range(sched.rounds + 1):
        if phase > 0:
            K *= sched.growth
            eps0 /= sched.growth
            state.K, state.eps0 = K, eps0
            _refresh(state, graph)
        it = 0
        while state.active and it < max_iters:
            if rng is None:
                k = _pop_fifo(state)
            else:
                k = rng.choice(sorted(state.active))
            iterate_once(state, k, graph, g)
            it += 1
        total += it
        if state.active:
            converged = False
    u_edges = tuple(tuple(row) for row in state.u)
    return np.asarray(state.lam_node), u_edges, total, converged, K, eps0


def decode(graph: TannerGraph, gamma, sched: ScheduleParams | None = None,
           pick: str = "fifo", seed: int | None = None,
           eta: float | None = None, cert_tol: float = CERT_TOL) -> DecodeResult:
    """Full annealed decode: iterate each phase until the active set empties,
    sharpening K and tightening eps0 between phases, then recover the
    primal-feasible point, the bitwise estimate and the certificate.

    The interior shrink applied to the node beliefs uses the smallest eps
    that repairs their measured per-check infeasibility (SPC-shaped graphs),
    capped at min(final eps0, 1/eta); other constituents use the cap itself.
    """
    sched = sched or ScheduleParams()
    g = _as_gamma(gamma)
    if g.shape[0] != graph.n_vars:
        raise ParameterError("gamma length does not match the graph")
    if pick not in ("fifo", "random"):
        raise ParameterError(f"unknown pick rule {pick!r}")
    if graph.n_vars == 0:
        return DecodeResult(
            lam_tilde=np.zeros(0), u_final=(), c_hat=np.zeros(0, dtype=np.uint8),
            primal_value=0.0, dual_value=0.0, ml_certificate=True, iterations=0,
            converged=True, k_final=sched.k0 * sched.growth ** sched.rounds,
            eps0_final=sched.eps0_init / sched.growth ** sched.rounds, eta=0.0)
    if eta is None:
        eta = compute_eta(graph, allow_pinv=True)
    max_iters = sched.max_iters_per_round
    if max_iters is None:
        max_iters = 200 * graph.n_vars
    from ._fastdecode import HAVE_NUMBA
    if pick == "fifo" and HAVE_NUMBA:
        lam, u_final, total_iters, converged, K, eps0 = _run_phases_fast(
            graph, g, sched, max_iters)
    else:
        rng = random.Random(seed) if pick == "random" else None
        lam, u_final, total_iters, converged, K, eps0 = _run_phases_pure(
            graph, g, sched, max_iters, rng)
    eps_cap = min(eps0, 1.0 / eta) if eta > 0 else eps0
    needed = _adaptive_eps(graph, lam, eta)
    if needed is None:
        eps_used = eps_cap
    else:
        eps_used = min(max(2.0 * needed, 2e-8 / eta), eps_cap)
    lam_tilde = lam * (1.0 - eta * eps_used) + 0.5 * eta * eps_used
    c_hat = (lam_tilde > 0.5).astype(np.uint8)
    primal = primal_value(g, lam_tilde)
    dual = dual_objective(graph, u_final)
    cert = bool(np.minimum(lam_tilde, 1.0 - lam_tilde).max() <= cert_tol)
    return DecodeResult(
        lam_tilde=lam_tilde, u_final=u_final, c_hat=c_hat,
        primal_value=primal, dual_value=dual, ml_certificate=cert,
        iterations=total_iters, converged=converged, k_final=K,
        eps0_final=eps0, eta=eta)


def primal_value(gamma, c) -> float:
    """P(c) = sum_i c_i gamma_i."""
    g = _as_gamma(gamma)
    c = np.asarray(c, dtype=np.float64)
    if c.shape != g.shape:
        raise ParameterError("length mismatch in primal value")
    return float(np.dot(g, c))


def ds_objective(graph: TannerGraph, u_edges, K: float) -> float:
    """Smoothed dual objective DS(u) = -(1/K) sum_j log Z_j."""
    total = 0.0
    for j, (_, code) in enumerate(graph.constraints):
        total += local_log_partition(code, u_edges[j], K)
    return -total / K
