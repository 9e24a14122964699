"""Code and graph representation: constituent/coset codes, Tanner graphs,
ensemble generation and file I/O (alist, gldpc text format)."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ConstituentCodeError,
    ParameterError,
    ParseError,
    SizeLimitError,
)

ENUM_COLUMN_CAP = 24
SYNDROME_STATE_CAP = 20  # max parity rows per local code (2^m trellis states)

_GRAM_PIVOT_TOL = 1e-10


# ---------------------------------------------------------------------------
# GF(2) linear algebra helpers
# ---------------------------------------------------------------------------

def gf2_rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(2). Returns (rref, pivot columns)."""
    m = mat.copy().astype(np.uint8) % 2
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        hit = np.nonzero(m[r:, c])[0]
        if hit.size == 0:
            continue
        p = r + hit[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        other = np.nonzero(m[:, c])[0]
        for q in other:
            if q != r:
                m[q] ^= m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def gf2_kernel_basis(mat: np.ndarray) -> np.ndarray:
    """Basis of the null space of `mat` over GF(2), shape (k, n)."""
    rref, pivots = gf2_rref(mat)
    n = mat.shape[1]
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for bi, fc in enumerate(free):
        basis[bi, fc] = 1
        for r, pc in enumerate(pivots):
            basis[bi, pc] = rref[r, fc]
    return basis


def gf2_solve(mat: np.ndarray, rhs: np.ndarray) -> np.ndarray | None:
    """One solution of mat @ x = rhs over GF(2), or None if inconsistent."""
    m = mat.shape[0]
    aug = np.concatenate([mat.astype(np.uint8) % 2, (rhs.astype(np.uint8) % 2).reshape(m, 1)], axis=1)
    rref, pivots = gf2_rref(aug)
    n = mat.shape[1]
    if n in pivots:  # pivot in the rhs column: inconsistent
        return None
    x = np.zeros(n, dtype=np.uint8)
    for r, pc in enumerate(pivots):
        x[pc] = rref[r, n]
    return x


def _lex_sorted(words: np.ndarray) -> np.ndarray:
    """Sort codeword rows lexicographically (first coordinate most significant)."""
    if words.shape[0] <= 1:
        return words
    order = np.lexsort(words[:, ::-1].T)
    return words[order]


def enumerate_codewords(parity: np.ndarray, limit: int = ENUM_COLUMN_CAP) -> np.ndarray:
    """All solutions of H g = 0 over GF(2), lexicographically sorted.

    `parity` is an (m, n) 0/1 matrix; the result has shape (2^(n - rank H), n).
    """
    parity = np.atleast_2d(np.asarray(parity, dtype=np.uint8))
    n = parity.shape[1]
    if n > limit:
        raise SizeLimitError(f"codeword enumeration cap exceeded: n={n} > {limit}")
    basis = gf2_kernel_basis(parity)
    return _lex_sorted(_span(basis, n))


def _span(basis: np.ndarray, n: int) -> np.ndarray:
    k = basis.shape[0]
    idx = np.arange(1 << k, dtype=np.uint32)
    sel = ((idx[:, None] >> np.arange(k, dtype=np.uint32)) & 1).astype(np.uint8)
    return (sel @ basis) % 2 if k else np.zeros((1, n), dtype=np.uint8)


# ---------------------------------------------------------------------------
# eta (feasibility-margin constant)
# ---------------------------------------------------------------------------

def _eta_term(words: np.ndarray, degree: int) -> tuple[float, bool]:
    """Per-constraint term |C| * n * max|Xi| with Xi = Psi~^T (Psi~ Psi~^T)^-1.

    Returns (value, exact) where exact=False marks a singular Gram resolved by
    pseudo-inverse (happens when the dual distance drops below 3, e.g. merged
    4-cycle constituents or coset codes).
    """
    if words.shape[0] == 0:
        return 0.0, True
    psi = np.vstack([np.ones((1, words.shape[0])), words.T.astype(np.float64)])
    gram = psi @ psi.T
    try:
        chol = np.linalg.cholesky(gram)
        piv = np.diag(chol) ** 2
        if piv.min() < _GRAM_PIVOT_TOL * max(piv.max(), 1.0):
            raise np.linalg.LinAlgError("pivot below threshold")
        ginv = np.linalg.solve(gram, np.eye(gram.shape[0]))
        exact = True
    except np.linalg.LinAlgError:
        ginv = np.linalg.pinv(gram, rcond=_GRAM_PIVOT_TOL)
        exact = False
    xi = psi.T @ ginv
    return float(words.shape[0] * degree * np.abs(xi).max()), exact


def _dual_distance_at_least_3(parity: np.ndarray) -> bool:
    """Check min weight of nonzero dual codewords (row span of H) is >= 3."""
    rref, pivots = gf2_rref(parity)
    rows = rref[: len(pivots)]
    r = rows.shape[0]
    if r == 0:
        return True
    if r > SYNDROME_STATE_CAP:
        raise SizeLimitError(f"dual enumeration cap exceeded: rank {r}")
    for mask in range(1, 1 << r):
        w = np.zeros(parity.shape[1], dtype=np.uint8)
        for t in range(r):
            if (mask >> t) & 1:
                w ^= rows[t]
        if 0 < int(w.sum()) < 3:
            return False
    return True


def _column_masks(parity: np.ndarray) -> tuple[int, ...]:
    m, n = parity.shape
    return tuple(int(sum(int(parity[t, i]) << t for t in range(m))) for i in range(n))


# ---------------------------------------------------------------------------
# Local codes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstituentCode:
    """Small binary linear code attached to a constraint node.

    Carries the full codeword list (columns of the codeword matrix) and the
    constants the decoder needs: the per-constraint eta term and trellis
    column masks.
    """

    parity_matrix: np.ndarray
    codewords: np.ndarray
    eta_term: float
    eta_exact: bool
    dual_distance_ok: bool
    col_masks: tuple[int, ...]

    @staticmethod
    def from_parity(parity: np.ndarray, limit: int = ENUM_COLUMN_CAP) -> "ConstituentCode":
        parity = np.atleast_2d(np.asarray(parity, dtype=np.uint8)) % 2
        if parity.shape[0] > SYNDROME_STATE_CAP:
            raise SizeLimitError(
                f"local parity matrix has {parity.shape[0]} rows > {SYNDROME_STATE_CAP}"
            )
        words = enumerate_codewords(parity, limit=limit)
        eta, exact = _eta_term(words, parity.shape[1])
        return ConstituentCode(
            parity_matrix=parity,
            codewords=words,
            eta_term=eta,
            eta_exact=exact,
            dual_distance_ok=_dual_distance_at_least_3(parity),
            col_masks=_column_masks(parity),
        )

    @property
    def n(self) -> int:
        return self.parity_matrix.shape[1]

    @property
    def n_rows(self) -> int:
        return self.parity_matrix.shape[0]

    @property
    def syndrome(self) -> np.ndarray:
        return np.zeros(self.n_rows, dtype=np.uint8)

    @property
    def syndrome_mask(self) -> int:
        return 0

    @property
    def is_spc(self) -> bool:
        return self.n_rows == 1 and bool(self.parity_matrix.all())

    def contains(self, word) -> bool:
        w = np.asarray(word, dtype=np.uint8) % 2
        return w.shape == (self.n,) and not ((self.parity_matrix @ w) % 2).any()


@dataclass(frozen=True)
class CosetSpec:
    """Coset code {g : H^r g = h~} on the surviving positions of a constraint."""

    base: ConstituentCode
    syndrome: np.ndarray
    codewords: np.ndarray
    eta_term: float
    eta_exact: bool

    @staticmethod
    def build(columns: np.ndarray, syndrome: np.ndarray,
              limit: int = ENUM_COLUMN_CAP) -> "CosetSpec":
        base = ConstituentCode.from_parity(columns, limit=limit)
        syndrome = np.asarray(syndrome, dtype=np.uint8) % 2
        particular = gf2_solve(base.parity_matrix, syndrome)
        if particular is None:
            words = np.zeros((0, base.n), dtype=np.uint8)
        else:
            words = _lex_sorted((base.codewords ^ particular).astype(np.uint8))
        eta, exact = _eta_term(words, base.n)
        return CosetSpec(base=base, syndrome=syndrome, codewords=words,
                         eta_term=eta, eta_exact=exact)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def parity_matrix(self) -> np.ndarray:
        return self.base.parity_matrix

    @property
    def col_masks(self) -> tuple[int, ...]:
        return self.base.col_masks

    @property
    def syndrome_mask(self) -> int:
        return int(sum(int(b) << t for t, b in enumerate(self.syndrome)))

    @property
    def is_empty(self) -> bool:
        return self.codewords.shape[0] == 0

    @property
    def dual_distance_ok(self) -> bool:
        return self.base.dual_distance_ok

    @property
    def is_spc(self) -> bool:
        return False


LocalCode = ConstituentCode | CosetSpec


@functools.lru_cache(maxsize=None)
def spc_code(n: int) -> ConstituentCode:
    """Single parity check code of length n."""
    if n < 1:
        raise ParameterError(f"SPC length must be positive, got {n}")
    return ConstituentCode.from_parity(np.ones((1, n), dtype=np.uint8))


@functools.lru_cache(maxsize=None)
def hamming74_code() -> ConstituentCode:
    """(7,4) Hamming code; column i of H is the binary representation of i+1."""
    cols = [[(i >> b) & 1 for b in range(3)] for i in range(1, 8)]
    return ConstituentCode.from_parity(np.array(cols, dtype=np.uint8).T)


# ---------------------------------------------------------------------------
# Tanner graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TannerGraph:
    """Bipartite graph of variable nodes and constraint nodes.

    Immutable after construction; `var_adjacency[i]` lists the constraint
    indices incident to variable i.
    """

    n_vars: int
    constraints: tuple[tuple[tuple[int, ...], LocalCode], ...]
    var_adjacency: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        adjacency: list[list[int]] = [[] for _ in range(self.n_vars)]
        for j, (nbrs, code) in enumerate(self.constraints):
            if len(set(nbrs)) != len(nbrs):
                raise ParameterError(f"constraint {j} has a parallel edge: {nbrs}")
            if code.n != len(nbrs):
                raise ParameterError(
                    f"constraint {j}: code length {code.n} != degree {len(nbrs)}")
            for i in nbrs:
                if not 0 <= i < self.n_vars:
                    raise ParameterError(f"constraint {j}: variable {i} out of range")
                adjacency[i].append(j)
        object.__setattr__(self, "var_adjacency",
                           tuple(tuple(a) for a in adjacency))

    @property
    def n_checks(self) -> int:
        return len(self.constraints)

    def check_nbrs(self, j: int) -> tuple[int, ...]:
        return self.constraints[j][0]

    def check_code(self, j: int) -> LocalCode:
        return self.constraints[j][1]

    @property
    def is_plain(self) -> bool:
        return all(isinstance(c, ConstituentCode) and c.is_spc
                   for _, c in self.constraints)


def single_check_graph(code: ConstituentCode) -> TannerGraph:
    """Graph with one constraint covering all variables."""
    return TannerGraph(code.n, ((tuple(range(code.n)), code),))


def graph_from_parity_matrix(H: np.ndarray) -> TannerGraph:
    """Plain-LDPC graph: one SPC constraint per row of H."""
    H = np.atleast_2d(np.asarray(H, dtype=np.uint8))
    constraints = []
    for row in H:
        nbrs = tuple(int(i) for i in np.nonzero(row)[0])
        constraints.append((nbrs, spc_code(len(nbrs))))
    return TannerGraph(H.shape[1], tuple(constraints))


# ---------------------------------------------------------------------------
# Channel LLRs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LLRVector:
    """Per-variable log-likelihood ratios log Q(y|0)/Q(y|1), natural log."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=np.float64)
        if not np.isfinite(g).all():
            raise ParameterError("LLR vector must be finite; renormalize first")
        object.__setattr__(self, "gamma", g)

    def __len__(self) -> int:
        return self.gamma.shape[0]

    @property
    def gamma_max(self) -> float:
        return float(np.abs(self.gamma).max()) if len(self) else 0.0


def bsc_llrs(received, p: float) -> LLRVector:
    """LLRs for a BSC with crossover probability p in (0, 1/2)."""
    if not 0.0 < p < 0.5:
        raise ParameterError(f"BSC crossover probability must be in (0, 1/2): {p}")
    y = np.asarray(received, dtype=np.uint8)
    mag = float(np.log((1.0 - p) / p))
    return LLRVector(np.where(y == 0, mag, -mag).astype(np.float64))


def bec_renormalize(raw) -> LLRVector:
    """Replace +/-inf entries (perfect measurements) with +/-1."""
    g = np.asarray(raw, dtype=np.float64).copy()
    g[np.isposinf(g)] = 1.0
    g[np.isneginf(g)] = -1.0
    return LLRVector(g)


# ---------------------------------------------------------------------------
# Coset construction
# ---------------------------------------------------------------------------

def coset_syndrome(graph: TannerGraph, j: int, r: int, c_r) -> CosetSpec:
    """Coset code on constraint j when local codeword c_r is forced on r.

    The syndrome is the GF(2) sum of j's parity columns at the shared
    variables that c_r sets to 1; the base keeps the non-shared columns.
    """
    if j == r:
        raise ParameterError("j and r must be distinct constraints")
    nbrs_j, code_j = graph.constraints[j]
    nbrs_r, code_r = graph.constraints[r]
    overlap = set(nbrs_j) & set(nbrs_r)
    if not overlap:
        raise ParameterError(f"constraints {j} and {r} share no variable")
    c_r = np.asarray(c_r, dtype=np.uint8)
    if not code_r.contains(c_r):
        raise ParameterError("c_r is not a codeword of constraint r")
    forced = {i: int(c_r[t]) for t, i in enumerate(nbrs_r)}
    H = code_j.parity_matrix
    syndrome = np.zeros(H.shape[0], dtype=np.uint8)
    keep: list[int] = []
    for t, i in enumerate(nbrs_j):
        if i in overlap:
            if forced[i]:
                syndrome ^= H[:, t]
        else:
            keep.append(t)
    return CosetSpec.build(H[:, keep], syndrome)


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

def gallager_ensemble(n_vars: int, dv: int, dc: int, seed: int,
                      max_retries: int = 100) -> TannerGraph:
    """(dv, dc)-regular LDPC graph from Gallager's permuted-band construction.

    Deterministic for a fixed seed; permutations are re-drawn (bounded
    retries) if a draw produces a parallel edge.
    """
    if dc < 3:
        raise ParameterError("check degree must be >= 3 (dual distance assumption)")
    if dv < 1:
        raise ParameterError("variable degree must be positive")
    if (dv * n_vars) % dc != 0:
        raise ParameterError(f"dv*N = {dv * n_vars} not divisible by dc = {dc}")
    if n_vars % dc != 0:
        raise ParameterError(
            f"N = {n_vars} not divisible by dc = {dc} (banded construction)")
    rows_per_block = n_vars // dc
    rng = np.random.default_rng(seed)
    for _ in range(max_retries):
        constraints = []
        ok = True
        for b in range(dv):
            perm = np.arange(n_vars) if b == 0 else rng.permutation(n_vars)
            for t in range(rows_per_block):
                nbrs = tuple(sorted(int(v) for v in perm[t * dc:(t + 1) * dc]))
                if len(set(nbrs)) != dc:
                    ok = False
                    break
                constraints.append((nbrs, spc_code(dc)))
            if not ok:
                break
        if ok:
            return TannerGraph(n_vars, tuple(constraints))
    raise ParameterError("gallager_ensemble: retry budget exhausted")


def random_regular_gldpc(n_vars: int, var_degree: int, code: ConstituentCode,
                         n_checks: int, seed: int,
                         max_retries: int = 1000) -> TannerGraph:
    """Random GLDPC graph: every variable in `var_degree` checks, each check
    carrying `code`. Built with the configuration model, rejecting draws
    that would create parallel edges."""
    if n_vars * var_degree != n_checks * code.n:
        raise ParameterError("edge count mismatch: N*dv must equal M*n")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n_vars), var_degree)
    for _ in range(max_retries):
        perm = rng.permutation(stubs)
        constraints = []
        ok = True
        for j in range(n_checks):
            nbrs = perm[j * code.n:(j + 1) * code.n]
            if len(set(int(v) for v in nbrs)) != code.n:
                ok = False
                break
            constraints.append((tuple(int(v) for v in nbrs), code))
        if ok:
            return TannerGraph(n_vars, tuple(constraints))
    raise ParameterError("random_regular_gldpc: retry budget exhausted")


def compute_eta(graph: TannerGraph, allow_pinv: bool = False) -> float:
    """Max over constraints of the eta term; deterministic.

    With allow_pinv=False a singular Gram matrix (dual distance < 3) raises;
    allow_pinv=True accepts the pseudo-inverse value instead, which the
    decoder needs for merged and coset constituents.
    """
    if graph.n_checks == 0:
        return 0.0
    eta = 0.0
    for j, (_, code) in enumerate(graph.constraints):
        if not code.eta_exact and not allow_pinv:
            raise ConstituentCodeError(
                f"constraint {j}: singular Gram matrix (dual distance < 3)")
        eta = max(eta, code.eta_term)
    return eta


# ---------------------------------------------------------------------------
# File formats
# ---------------------------------------------------------------------------

def parse_alist(text: str) -> TannerGraph:
    """Parse the de-facto standard alist format into a plain-LDPC graph."""
    lines = text.splitlines()
    rows: list[tuple[int, list[int]]] = []  # (line number, ints)
    for ln, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            continue
        try:
            rows.append((ln, [int(tok) for tok in stripped.split()]))
        except ValueError:
            raise ParseError(f"line {ln}: non-integer token")
    if len(rows) < 4:
        raise ParseError("truncated alist: need header, degrees and index lists")
    ln0, header = rows[0]
    if len(header) != 2:
        raise ParseError(f"line {ln0}: header must be 'N M'")
    n, m = header
    if n <= 0 or m <= 0:
        raise ParseError(f"line {ln0}: N and M must be positive")
    if len(rows[1][1]) != 2:
        raise ParseError(f"line {rows[1][0]}: expected max degrees")
    if len(rows[2][1]) != n:
        raise ParseError(f"line {rows[2][0]}: expected {n} variable degrees")
    if len(rows[3][1]) != m:
        raise ParseError(f"line {rows[3][0]}: expected {m} check degrees")
    var_degs = rows[2][1]
    check_degs = rows[3][1]
    if len(rows) != 4 + n + m:
        raise ParseError(f"expected {4 + n + m} non-blank lines, found {len(rows)}")

    def indices(row: tuple[int, list[int]], degree: int, limit: int) -> list[int]:
        ln, toks = row
        vals = [t for t in toks if t != 0]
        if len(vals) != degree:
            raise ParseError(f"line {ln}: expected {degree} indices, found {len(vals)}")
        out = []
        for t in vals:
            if not 1 <= t <= limit:
                raise ParseError(f"line {ln}: index {t} out of range 1..{limit}")
            out.append(t - 1)
        if len(set(out)) != len(out):
            raise ParseError(f"line {ln}: duplicate index (parallel edge)")
        return out

    var_lists = [indices(rows[4 + i], var_degs[i], m) for i in range(n)]
    check_lists = [indices(rows[4 + n + j], check_degs[j], n) for j in range(m)]
    for i, checks in enumerate(var_lists):
        for j in checks:
            if i not in check_lists[j]:
                raise ParseError(
                    f"line {rows[4 + i][0]}: edge ({i + 1},{j + 1}) missing from check list")
    constraints = tuple((tuple(sorted(lst)), spc_code(len(lst))) for lst in check_lists)
    return TannerGraph(n, constraints)


def write_alist(graph: TannerGraph) -> str:
    """Serialize a plain-LDPC graph in alist format."""
    if not graph.is_plain:
        raise ParameterError("alist covers plain LDPC graphs only")
    n, m = graph.n_vars, graph.n_checks
    var_lists = [[j + 1 for j in graph.var_adjacency[i]] for i in range(n)]
    check_lists = [[i + 1 for i in graph.check_nbrs(j)] for j in range(m)]
    out = [f"{n} {m}",
           f"{max(map(len, var_lists), default=0)} {max(map(len, check_lists), default=0)}",
           " ".join(str(len(v)) for v in var_lists),
           " ".join(str(len(c)) for c in check_lists)]
    out += [" ".join(map(str, v)) for v in var_lists]
    out += [" ".join(map(str, c)) for c in check_lists]
    return "\n".join(out) + "\n"


def parse_gldpc(text: str) -> TannerGraph:
    """Parse the GLDPC text format.

    Header "gldpc N M"; per constraint a line "check j d m", the d neighbor
    indices (1-based) and m rows of d bits. Blank lines ignored, '#' comments.
    """
    tokens: list[tuple[int, str]] = []
    for ln, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.extend((ln, tok) for tok in body.split())
    pos = 0

    def take(what: str) -> tuple[int, str]:
        nonlocal pos
        if pos >= len(tokens):
            last = tokens[-1][0] if tokens else 0
            raise ParseError(f"line {last}: unexpected end of input, expected {what}")
        tok = tokens[pos]
        pos += 1
        return tok

    def take_int(what: str) -> int:
        ln, tok = take(what)
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"line {ln}: expected {what}, got {tok!r}")

    ln, magic = take("'gldpc' header")
    if magic != "gldpc":
        raise ParseError(f"line {ln}: expected 'gldpc' header, got {magic!r}")
    n = take_int("N")
    m = take_int("M")
    if n <= 0 or m < 0:
        raise ParseError(f"line {ln}: bad dimensions N={n} M={m}")
    constraints = []
    for jx in range(m):
        ln, kw = take("'check'")
        if kw != "check":
            raise ParseError(f"line {ln}: expected 'check', got {kw!r}")
        j = take_int("constraint index")
        if j != jx + 1:
            raise ParseError(f"line {ln}: constraint index {j}, expected {jx + 1}")
        d = take_int("degree")
        nrows = take_int("parity row count")
        if d <= 0 or nrows <= 0:
            raise ParseError(f"line {ln}: degree and row count must be positive")
        nbrs = []
        for _ in range(d):
            v = take_int("neighbor index")
            if not 1 <= v <= n:
                raise ParseError(f"line {ln}: variable index {v} out of range")
            nbrs.append(v - 1)
        if len(set(nbrs)) != d:
            raise ParseError(f"line {ln}: duplicate neighbor (parallel edge)")
        H = np.zeros((nrows, d), dtype=np.uint8)
        for t in range(nrows):
            for i in range(d):
                b = take_int("parity bit")
                if b not in (0, 1):
                    raise ParseError(f"line {ln}: parity entries must be bits")
                H[t, i] = b
        constraints.append((tuple(nbrs), ConstituentCode.from_parity(H)))
    if pos != len(tokens):
        raise ParseError(f"line {tokens[pos][0]}: trailing input")
    return TannerGraph(n, tuple(constraints))


def write_gldpc(graph: TannerGraph) -> str:
    """Serialize any graph in the GLDPC text format."""
    out = [f"gldpc {graph.n_vars} {graph.n_checks}"]
    for j, (nbrs, code) in enumerate(graph.constraints):
        H = code.parity_matrix
        out.append(f"check {j + 1} {len(nbrs)} {H.shape[0]}")
        out.append(" ".join(str(i + 1) for i in nbrs))
        out.extend(" ".join(str(int(b)) for b in row) for row in H)
    return "\n".join(out) + "\n"
