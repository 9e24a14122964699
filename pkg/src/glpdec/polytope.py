"""Fundamental polytopes of small constituent codes via the double
description method in exact integer arithmetic: extreme rays of the
support cone, facet files, vertex enumeration and the nonbinary-to-binary
indicator embedding."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .codes import ConstituentCode
from .exceptions import ParameterError, ParseError, SizeLimitError, UnsupportedCodeError

RAY_CODEWORD_CAP = 1 << 12
RAY_DIM_CAP = 16
VERTEX_DIM_CAP = 16
VERTEX_FACET_CAP = 128


# ---------------------------------------------------------------------------
# exact integer helpers
# ---------------------------------------------------------------------------

def _primitive(vec: tuple[int, ...]) -> tuple[int, ...]:
    g = 0
    for x in vec:
        g = math.gcd(g, x)
    if g <= 1:
        return vec
    return tuple(x // g for x in vec)


def _dot(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    return sum(x * y for x, y in zip(a, b))


def _exact_rank(rows: list[tuple[int, ...]]) -> int:
    """Rank of integer rows over the rationals (fraction-free elimination)."""
    mat = [list(map(Fraction, r)) for r in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(mat)) if mat[r][c] != 0), None)
        if piv is None:
            continue
        mat[rank], mat[piv] = mat[piv], mat[rank]
        for r in range(len(mat)):
            if r != rank and mat[r][c] != 0:
                f = mat[r][c] / mat[rank][c]
                mat[r] = [x - f * y for x, y in zip(mat[r], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank


# ---------------------------------------------------------------------------
# double description core: extreme rays of {x : row . x <= 0 for all rows}
# ---------------------------------------------------------------------------

def _dd_rays(rows: list[tuple[int, ...]], dim: int) -> list[tuple[tuple[int, ...], int]]:
    """Incremental DD with lineality tracking.

    Returns (ray, tight_mask) pairs; bit p of the mask marks rows[p] tight.
    Raises UnsupportedCodeError if the final cone still contains a line.
    """
    lineality: list[tuple[int, ...]] = [
        tuple(1 if t == s else 0 for t in range(dim)) for s in range(dim)]
    rays: list[list] = []  # [vec, mask]

    for p, a in enumerate(rows):
        dots_l = [_dot(a, l) for l in lineality]
        hit = next((t for t, d in enumerate(dots_l) if d != 0), None)
        if hit is not None:
            l0 = lineality.pop(hit)
            d0 = dots_l.pop(hit)
            if d0 > 0:
                l0 = tuple(-x for x in l0)
                d0 = -d0
            lineality = [
                _primitive(tuple((-d0) * x + dl * y for x, y in zip(l, l0)))
                for l, dl in zip(lineality, dots_l)]
            new_rays: list[list] = []
            for vec, mask in rays:
                dr = _dot(a, vec)
                proj = _primitive(tuple((-d0) * x + dr * y for x, y in zip(vec, l0)))
                new_rays.append([proj, mask | (1 << p)])
            full = (1 << p) - 1  # l0 was in the lineality: tight on all before p
            new_rays.append([l0, full])
            rays = new_rays
            continue
        # lineality untouched: classic positive/zero/negative split
        dots = [_dot(a, vec) for vec, _ in rays]
        neg = [t for t, d in enumerate(dots) if d < 0]
        zero = [t for t, d in enumerate(dots) if d == 0]
        pos = [t for t, d in enumerate(dots) if d > 0]
        for t in zero:
            rays[t][1] |= 1 << p
        if not pos:
            continue
        need = dim - len(lineality) - 2
        adjacent_pairs = []
        for tp in pos:
            mp = rays[tp][1]
            for tn in neg:
                common = mp & rays[tn][1]
                if common.bit_count() < need:
                    continue
                ok = True
                for t3, (_, m3) in enumerate(rays):
                    if t3 != tp and t3 != tn and (m3 & common) == common:
                        ok = False
                        break
                if ok:
                    adjacent_pairs.append((tp, tn))
        kept = [rays[t] for t in neg + zero]
        for tp, tn in adjacent_pairs:
            vp, mp = rays[tp]
            vn, mn = rays[tn]
            dp, dn = dots[tp], dots[tn]
            w = _primitive(tuple((-dn) * x + dp * y for x, y in zip(vp, vn)))
            kept.append([w, (mp & mn) | (1 << p)])
        rays = kept

    if lineality:
        raise UnsupportedCodeError("cone contains a line (inputs do not span)")
    return [(vec, mask) for vec, mask in rays]


# ---------------------------------------------------------------------------
# public types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConeSystem:
    """Constraint matrix of the support cone, one row -(1, c) per codeword."""

    a_matrix: np.ndarray

    @property
    def width(self) -> int:
        return self.a_matrix.shape[1]


@dataclass(frozen=True)
class FacetSystem:
    """Extreme rays (v0, v1..vd), each encoding the facet v0 + v.c <= 0."""

    rays: tuple[tuple[int, ...], ...]

    @property
    def r(self) -> int:
        return len(self.rays)

    @property
    def width(self) -> int:
        return len(self.rays[0]) if self.rays else 0

    def as_array(self) -> np.ndarray:
        return np.array(self.rays, dtype=np.int64)


@dataclass(frozen=True)
class EmbeddedCode:
    """Binary indicator image of a nonbinary code: each symbol maps to a
    zero block or a unit vector of length q-1."""

    binary_codewords: np.ndarray
    q: int
    symbols: int

    @property
    def codewords(self) -> np.ndarray:
        return self.binary_codewords

    @property
    def n(self) -> int:
        return self.binary_codewords.shape[1]


def cone_system(code) -> ConeSystem:
    words = np.asarray(code.codewords, dtype=np.int64)
    rows = np.hstack([np.ones((words.shape[0], 1), dtype=np.int64), words])
    return ConeSystem(a_matrix=-rows)


def _sorted_constraint_rows(words: np.ndarray) -> list[tuple[int, ...]]:
    rows = [(int(w.sum()), tuple(int(x) for x in w)) for w in words]
    rows.sort()
    return [(1,) + w for _, w in rows]


def extreme_rays(code) -> FacetSystem:
    """Complete irredundant extreme-ray set of {v : (1, c).v <= 0 for all
    codewords c}, in primitive integer form, rows sorted lexicographically.

    Accepts any object with a 0/1 `codewords` matrix (constituent codes and
    embedded nonbinary codes).
    """
    words = np.asarray(code.codewords, dtype=np.uint8)
    n_words, d = words.shape
    if n_words > RAY_CODEWORD_CAP:
        raise SizeLimitError(f"{n_words} codewords exceeds the DD cap")
    if d > RAY_DIM_CAP:
        raise SizeLimitError(f"block length {d} exceeds the DD cap")
    rows = _sorted_constraint_rows(words)
    rays = _dd_rays(rows, d + 1)
    for vec, _ in rays:
        tight = [rows[p] for p in range(len(rows)) if _dot(rows[p], vec) == 0]
        if _exact_rank(tight) != d:
            raise UnsupportedCodeError("double description postcondition failed")
    return FacetSystem(rays=tuple(sorted(vec for vec, _ in rays)))


def facet_check(fs: FacetSystem, c, tol: float = 0.0) -> bool:
    """True iff v0 + v.c <= tol for every ray."""
    c = np.asarray(c, dtype=np.float64)
    if fs.r == 0:
        return True
    if c.shape[0] != fs.width - 1:
        raise ParameterError("vector length does not match the facet system")
    mat = fs.as_array()
    return bool((mat[:, 0] + mat[:, 1:] @ c <= tol).all())


def vertex_enumerate(fs: FacetSystem) -> list[tuple[Fraction, ...]]:
    """All vertices of {c : v0 + v.c <= 0 for all rays}, exact rationals.

    The reverse DD direction: homogenize with a leading coordinate t >= 0
    and read vertices off the rays with t > 0. Raises if the polytope is
    unbounded (a t = 0 ray exists).
    """
    d = fs.width - 1
    if d > VERTEX_DIM_CAP:
        raise SizeLimitError(f"dimension {d} exceeds the vertex cap")
    if fs.r > VERTEX_FACET_CAP:
        raise SizeLimitError(f"{fs.r} facets exceeds the vertex cap")
    rows = [tuple(v) for v in fs.rays]
    rows.append((-1,) + (0,) * d)  # t >= 0
    rays = _dd_rays(rows, d + 1)
    out = []
    for vec, _ in rays:
        t = vec[0]
        if t == 0:
            raise UnsupportedCodeError("polytope is unbounded")
        if t < 0:
            raise UnsupportedCodeError("double description postcondition failed")
        out.append(tuple(Fraction(x, t) for x in vec[1:]))
    return sorted(set(out))


# ---------------------------------------------------------------------------
# nonbinary embedding
# ---------------------------------------------------------------------------

_GF_POLY = {4: 0b111, 8: 0b1011, 16: 0b10011}


def _gf_mul(a: int, b: int, q: int) -> int:
    if q in _GF_POLY:
        poly = _GF_POLY[q]
        bits = q.bit_length() - 1
        acc = 0
        while b:
            if b & 1:
                acc ^= a
            b >>= 1
            a <<= 1
            if a >> bits:
                a ^= poly
        return acc
    return (a * b) % q


def _gf_add(a: int, b: int, q: int) -> int:
    if q in _GF_POLY:
        return a ^ b
    return (a + b) % q


def _is_prime(q: int) -> bool:
    return q >= 2 and all(q % f for f in range(2, int(q ** 0.5) + 1))


def nonbinary_embed(q: int, parity, n: int, arithmetic: str = "gf") -> EmbeddedCode:
    """Binary image of {x in R^n : H x = 0} under the indicator embedding.

    `arithmetic="gf"` uses GF(q) (prime q, or q in {4, 8, 16});
    `arithmetic="mod"` uses the integer ring Z_q.
    """
    if arithmetic not in ("gf", "mod"):
        raise ParameterError(f"unknown arithmetic {arithmetic!r}")
    if arithmetic == "gf" and not (_is_prime(q) or q in _GF_POLY):
        raise ParameterError(f"GF({q}) is not supported; use a prime or 4/8/16")
    if q < 2:
        raise ParameterError("ring size must be >= 2")
    if q ** n > 1 << 20:
        raise SizeLimitError(f"{q}^{n} nonbinary words exceeds the enumeration cap")
    H = np.atleast_2d(np.asarray(parity, dtype=np.int64)) % q
    if H.shape[1] != n:
        raise ParameterError("parity matrix width does not match n")
    mul = _gf_mul if arithmetic == "gf" else lambda a, b, qq: (a * b) % qq
    add = _gf_add if arithmetic == "gf" else lambda a, b, qq: (a + b) % qq
    images = []
    for word in itertools.product(range(q), repeat=n):
        ok = True
        for row in H:
            acc = 0
            for hi, xi in zip(row, word):
                acc = add(acc, mul(int(hi), int(xi), q), q)
            if acc != 0:
                ok = False
                break
        if ok:
            vec = np.zeros(n * (q - 1), dtype=np.uint8)
            for i, s in enumerate(word):
                if s:
                    vec[i * (q - 1) + (s - 1)] = 1
            images.append(vec)
    return EmbeddedCode(binary_codewords=np.array(images, dtype=np.uint8),
                        q=q, symbols=n)


def spc_gf4_n4_embedded() -> EmbeddedCode:
    """Length-4 single parity check code over GF(4), embedded to 12 bits."""
    return nonbinary_embed(4, np.ones((1, 4), dtype=np.int64), 4)


# ---------------------------------------------------------------------------
# facet matrix files
# ---------------------------------------------------------------------------

def write_facets(fs: FacetSystem) -> str:
    lines = [f"facets {fs.r} {fs.width}"]
    lines.extend(" ".join(str(x) for x in row) for row in fs.rays)
    return "\n".join(lines) + "\n"


def parse_facets(text: str) -> FacetSystem:
    lines = [ln for ln in (l.strip() for l in text.splitlines()) if ln]
    if not lines:
        raise ParseError("empty facet file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "facets":
        raise ParseError("facet file header must be 'facets r width'")
    r, width = int(head[1]), int(head[2])
    if len(lines) != 1 + r:
        raise ParseError(f"expected {r} facet rows, found {len(lines) - 1}")
    rows = []
    for ln in lines[1:]:
        vals = tuple(int(t) for t in ln.split())
        if len(vals) != width:
            raise ParseError(f"facet row has {len(vals)} entries, expected {width}")
        rows.append(vals)
    return FacetSystem(rays=tuple(rows))
