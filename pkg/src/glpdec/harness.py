"""Monte-Carlo BSC simulation, reference sum-product decoder, and the
brute-force oracles (ML, minimum distance, exact fractional distance,
direct partition sums) that anchor the test suite."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import merge
from .codes import LocalCode, TannerGraph, bsc_llrs, compute_eta, gf2_kernel_basis, _span, _lex_sorted
from .exceptions import ParameterError, SizeLimitError, UnsupportedCodeError
from .lpdecode import ScheduleParams, decode
from .trellis import ABValues, NEG_INF
from .polytope import FacetSystem, vertex_enumerate

ML_DIMENSION_CAP = 20
FRAC_ORACLE_VAR_CAP = 12
FRAC_ORACLE_DEGREE_CAP = 4
BP_LLR_CLIP = 30.0


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    p: float
    trials: int
    seed: int
    decoder: str = "lp"
    max_bp_iters: int = 100

    def __post_init__(self):
        if not 0.0 < self.p < 0.5:
            raise ParameterError(f"crossover probability out of range: {self.p}")
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.decoder not in ("lp", "lp-merged", "bp"):
            raise ParameterError(f"unknown decoder {self.decoder!r}")


@dataclass(frozen=True)
class SimResult:
    word_errors: int
    trials: int
    wer: float
    ml_cert_rate: float
    mean_iterations: float

    @property
    def stderr(self) -> float:
        return math.sqrt(self.wer * (1.0 - self.wer) / self.trials)


def _trial_flips(seed: int, trial: int, n: int, p: float) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed,
                                                       spawn_key=(trial,)))
    return (rng.random(n) < p).astype(np.uint8)


def _sim_trial(args) -> tuple[bool, bool, int]:
    graph, decode_graph, config, sched, eta, trial = args
    y = _trial_flips(config.seed, trial, graph.n_vars, config.p)
    gamma = bsc_llrs(y, config.p)
    if config.decoder == "bp":
        bits, iters = _bp_full(graph, gamma.gamma, config.max_bp_iters)
        return bool(bits.any()), False, iters
    res = decode(decode_graph, gamma, sched, eta=eta)
    return bool(res.c_hat.any()), res.ml_certificate, res.iterations


def simulate(graph: TannerGraph, config: SimConfig,
             sched: ScheduleParams | None = None, max_cycle_len: int = 6,
             threads: int = 1) -> SimResult:
    """Transmit the all-zero codeword over a BSC and count word errors.

    The channel draw of trial t depends only on (seed, t), so runs with the
    same seed but different decoders are paired sample-by-sample.
    """
    sched = sched or ScheduleParams()
    decode_graph = graph
    if config.decoder == "lp-merged":
        cycles = merge.find_short_cycles(graph, max_cycle_len)
        decode_graph = merge.merge_constraints(graph, merge.plan_from_cycles(cycles))
    eta = compute_eta(decode_graph, allow_pinv=True) if config.decoder != "bp" else 0.0
    jobs = [(graph, decode_graph, config, sched, eta, t)
            for t in range(config.trials)]
    if threads <= 1:
        outcomes = [_sim_trial(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_sim_trial, jobs, chunksize=8))
    errors = sum(1 for e, _, _ in outcomes if e)
    certs = sum(1 for _, c, _ in outcomes if c)
    iters = sum(it for _, _, it in outcomes)
    return SimResult(
        word_errors=errors, trials=config.trials, wer=errors / config.trials,
        ml_cert_rate=(certs / config.trials if config.decoder != "bp"
                      else float("nan")),
        mean_iterations=iters / config.trials)


def sim_csv_row(config: SimConfig, result: SimResult) -> str:
    cert = "" if math.isnan(result.ml_cert_rate) else f"{result.ml_cert_rate:.6f}"
    return (f"{config.p},{result.trials},{result.word_errors},"
            f"{result.wer:.6f},{result.stderr:.6f},{cert},"
            f"{result.mean_iterations:.2f},{config.decoder}")


SIM_CSV_HEADER = "p,trials,word_errors,wer,stderr,ml_cert_rate,mean_iters,decoder"


# ---------------------------------------------------------------------------
# belief propagation reference decoder
# ---------------------------------------------------------------------------

def _bp_structure(graph: TannerGraph):
    e_var = []
    starts = []
    for nbrs, _ in graph.constraints:
        starts.append(len(e_var))
        e_var.extend(nbrs)
    return np.array(e_var, dtype=np.int64), np.array(starts, dtype=np.int64)


def _bp_full(graph: TannerGraph, gamma: np.ndarray,
             max_iters: int) -> tuple[np.ndarray, int]:
    if not graph.is_plain:
        raise UnsupportedCodeError("sum-product reference covers plain LDPC only")
    n = graph.n_vars
    e_var, starts = _bp_structure(graph)
    n_edges = e_var.shape[0]
    seg = np.repeat(np.arange(len(starts)), np.diff(np.append(starts, n_edges)))
    c2v = np.zeros(n_edges)
    bits = (gamma < 0).astype(np.uint8)
    for it in range(1, max_iters + 1):
        post = gamma + np.bincount(e_var, weights=c2v, minlength=n)
        v2c = np.clip(post[e_var] - c2v, -BP_LLR_CLIP, BP_LLR_CLIP)
        sgn = np.where(v2c < 0, -1.0, 1.0)
        mag = np.abs(v2c)
        # phi(x) = -log tanh(x/2) is its own inverse; excluded-edge sums
        phi = -np.log(np.tanh(np.clip(mag, 1e-12, None) / 2.0))
        phi_sum = np.bincount(seg, weights=phi, minlength=len(starts))
        neg = (sgn < 0).astype(np.int64)
        neg_sum = np.bincount(seg, weights=neg, minlength=len(starts))
        excl_phi = phi_sum[seg] - phi
        excl_sgn = np.where((neg_sum[seg] - neg) % 2 == 1, -1.0, 1.0)
        c2v = excl_sgn * np.where(
            excl_phi < 1e-12, BP_LLR_CLIP,
            -np.log(np.clip(np.tanh(np.clip(excl_phi, 1e-12, None) / 2.0),
                            1e-300, None)))
        c2v = np.clip(c2v, -BP_LLR_CLIP, BP_LLR_CLIP)
        total = gamma + np.bincount(e_var, weights=c2v, minlength=n)
        bits = (total < 0).astype(np.uint8)
        parities = np.bitwise_xor.reduceat(bits[e_var], starts)
        if not parities.any():
            return bits, it
    return bits, max_iters


def bp_decode(graph: TannerGraph, gamma, max_iters: int = 100) -> np.ndarray:
    """Standard sum-product with flooding schedule and early parity exit."""
    g = gamma.gamma if hasattr(gamma, "gamma") else np.asarray(gamma, dtype=np.float64)
    bits, _ = _bp_full(graph, g, max_iters)
    return bits


# ---------------------------------------------------------------------------
# brute-force oracles
# ---------------------------------------------------------------------------

def stacked_parity(graph: TannerGraph) -> np.ndarray:
    """All local parity rows scattered onto the global coordinates."""
    rows = []
    for nbrs, code in graph.constraints:
        H = code.parity_matrix
        for row in H:
            wide = np.zeros(graph.n_vars, dtype=np.uint8)
            for t, i in enumerate(nbrs):
                wide[i] = row[t]
            rows.append(wide)
    if not rows:
        return np.zeros((0, graph.n_vars), dtype=np.uint8)
    return np.array(rows, dtype=np.uint8)


def enumerate_graph_codewords(graph: TannerGraph) -> np.ndarray:
    """Every codeword of the full code, lex-sorted; dimension cap 20."""
    basis = gf2_kernel_basis(stacked_parity(graph))
    if basis.shape[0] > ML_DIMENSION_CAP:
        raise SizeLimitError(f"code dimension {basis.shape[0]} exceeds the cap")
    return _lex_sorted(_span(basis, graph.n_vars))


def oracle_ml(graph: TannerGraph, gamma) -> tuple[np.ndarray, float]:
    """Exhaustive ML: argmin of sum gamma_i c_i over all codewords,
    ties broken to the lexicographically smallest word."""
    g = gamma.gamma if hasattr(gamma, "gamma") else np.asarray(gamma, dtype=np.float64)
    words = enumerate_graph_codewords(graph)
    values = words.astype(np.float64) @ g
    best = int(np.argmin(values))  # words are lex-sorted: first minimum wins
    return words[best].copy(), float(values[best])


def oracle_min_distance(graph: TannerGraph) -> int:
    words = enumerate_graph_codewords(graph)
    weights = words.sum(axis=1)
    nonzero = weights[weights > 0]
    if nonzero.size == 0:
        raise ParameterError("code contains only the zero word")
    return int(nonzero.min())


def _logsumexp(a: np.ndarray) -> float:
    if a.size == 0:
        return NEG_INF
    m = float(a.max())
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(float(np.exp(a - m).sum()))


def oracle_ab(code: LocalCode, u, K: float) -> ABValues:
    """Direct summation over the enumerated (coset) codeword list."""
    words = code.codewords.astype(np.float64)
    u = np.asarray(u, dtype=np.float64)
    scores = -K * (words @ u)
    log_a, log_b = [], []
    for k in range(words.shape[1]):
        on = words[:, k] == 1
        log_a.append(_logsumexp(scores[on] + K * u[k]))
        log_b.append(_logsumexp(scores[~on]))
    return ABValues(tuple(log_a), tuple(log_b))


def oracle_local_min(code: LocalCode, u) -> float:
    words = code.codewords.astype(np.float64)
    if words.shape[0] == 0:
        return float("inf")
    return float((words @ np.asarray(u, dtype=np.float64)).min())


def oracle_ds(graph: TannerGraph, u_edges, K: float) -> float:
    """Smoothed dual objective by direct enumeration per constraint."""
    total = 0.0
    for j, (_, code) in enumerate(graph.constraints):
        words = code.codewords.astype(np.float64)
        scores = -K * (words @ np.asarray(u_edges[j], dtype=np.float64))
        total += _logsumexp(scores)
    return -total / K


# ---------------------------------------------------------------------------
# exact fractional distance
# ---------------------------------------------------------------------------

def _omegaj_rows(graph: TannerGraph) -> tuple[list, list, list]:
    """(all rows, {c_i=1} rows, odd-|S|>1 rows) of the plain-LDPC polytope,
    each row (v0, v) encoding v0 + v.c <= 0."""
    n = graph.n_vars
    box_low = [tuple([0] + [-1 if t == i else 0 for t in range(n)])
               for i in range(n)]
    box_high = [tuple([-1] + [1 if t == i else 0 for t in range(n)])
                for i in range(n)]
    odd_rows, odd_big = [], []
    for nbrs, _ in graph.constraints:
        for size in range(1, len(nbrs) + 1, 2):
            for sel in itertools.combinations(nbrs, size):
                v = [0] * n
                for i in nbrs:
                    v[i] = 1 if i in sel else -1
                row = tuple([1 - size] + v)
                odd_rows.append(row)
                if size > 1:
                    odd_big.append(row)
    return box_low + box_high + odd_rows, box_high, odd_big


def oracle_fractional_distance(graph: TannerGraph) -> Fraction:
    """Exact fractional distance of a plain LDPC code: for every facet not
    containing the origin, intersect the polytope with it, enumerate the
    vertices in exact rational arithmetic, and take the minimum L1 norm."""
    if not graph.is_plain:
        raise UnsupportedCodeError("fractional-distance oracle needs plain LDPC")
    if graph.n_vars > FRAC_ORACLE_VAR_CAP:
        raise SizeLimitError(f"N = {graph.n_vars} exceeds the oracle cap")
    if any(len(nbrs) > FRAC_ORACLE_DEGREE_CAP for nbrs, _ in graph.constraints):
        raise SizeLimitError("check degree exceeds the oracle cap")
    all_rows, box_high, odd_big = _omegaj_rows(graph)
    best: Fraction | None = None
    for facet in box_high + odd_big:
        reverse = tuple(-x for x in facet)
        system = FacetSystem(rays=tuple(all_rows) + (reverse,))
        try:
            vertices = vertex_enumerate(system)
        except UnsupportedCodeError:
            continue  # empty intersection
        for v in vertices:
            l1 = sum(v, start=Fraction(0))
            if best is None or l1 < best:
                best = l1
    if best is None:
        raise ParameterError("no facet avoids the origin")
    return best


# ---------------------------------------------------------------------------
# exact LP weights (Problem-P certificate at a point)
# ---------------------------------------------------------------------------

def _phase1_simplex(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction] | None:
    """Exact-feasibility simplex: find x >= 0 with A x = b, or None.

    Phase-1 with artificial variables and Bland's rule; all arithmetic in
    Fractions, so the answer is exact.
    """
    m = len(A)
    n = len(A[0]) if m else 0
    tab = []
    for r in range(m):
        row = list(A[r])
        rhs = b[r]
        if rhs < 0:
            row = [-x for x in row]
            rhs = -rhs
        art = [Fraction(1) if t == r else Fraction(0) for t in range(m)]
        tab.append(row + art + [rhs])
    basis = [n + r for r in range(m)]

    def reduced_costs() -> list[Fraction]:
        # phase-1 objective: minimize the sum of artificial variables
        cost = [Fraction(0)] * (n + m + 1)
        for r in range(m):
            if basis[r] >= n:
                for c in range(n + m + 1):
                    cost[c] -= tab[r][c]
        return cost

    while True:
        cost = reduced_costs()
        enter = next((c for c in range(n + m) if cost[c] < 0), None)  # Bland
        if enter is None:
            break
        ratios = [(tab[r][-1] / tab[r][enter], basis[r], r) for r in range(m)
                  if tab[r][enter] > 0]
        if not ratios:
            return None  # cannot happen with artificial variables present
        _, _, leave = min(ratios)
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for r in range(m):
            if r != leave and tab[r][enter] != 0:
                f = tab[r][enter]
                tab[r] = [x - f * y for x, y in zip(tab[r], tab[leave])]
        basis[leave] = enter
    total = sum(tab[r][-1] for r in range(m) if basis[r] >= n)
    if total != 0:
        return None
    x = [Fraction(0)] * n
    for r in range(m):
        if basis[r] < n:
            x[basis[r]] = tab[r][-1]
    return x


@dataclass(frozen=True)
class LocalWeighting:
    """Per-constraint codeword weights with marginals c: an exact-rational
    witness that c lies in the fundamental polytope."""

    weights: tuple[tuple[Fraction, ...], ...]

    @staticmethod
    def from_point(graph: TannerGraph, c) -> "LocalWeighting | None":
        point = [Fraction(x) for x in c]
        per_check: list[tuple[Fraction, ...]] = []
        for nbrs, code in graph.constraints:
            words = code.codewords
            A = [[Fraction(1)] * words.shape[0]]
            for t, i in enumerate(nbrs):
                A.append([Fraction(int(w[t])) for w in words])
            b = [Fraction(1)] + [point[i] for i in nbrs]
            w = _phase1_simplex(A, b)
            if w is None:
                return None
            per_check.append(tuple(w))
        return LocalWeighting(weights=tuple(per_check))

    def verify(self, graph: TannerGraph, c) -> bool:
        point = [Fraction(x) for x in c]
        for (nbrs, code), w in zip(graph.constraints, self.weights):
            words = code.codewords
            if len(w) != words.shape[0] or any(x < 0 for x in w):
                return False
            if sum(w, start=Fraction(0)) != 1:
                return False
            for t, i in enumerate(nbrs):
                marg = sum((x for x, word in zip(w, words) if word[t]),
                           start=Fraction(0))
                if marg != point[i]:
                    return False
        return True
