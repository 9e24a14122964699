"""Numba-compiled inner loop of the iterative decoder.

Same arithmetic as the pure-Python path in lpdecode (flat storage, identical
update order); decode() falls back to the reference implementation when
numba is unavailable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

from .codes import TannerGraph

NEG_INF = float("-inf")
V_MAX = 1e6


class FlatGraph:
    """Flat edge-indexed arrays for one graph, shared across decodes."""

    def __init__(self, graph: TannerGraph):
        check_ptr = [0]
        evar, cmask = [], []
        states, syndrome = [], []
        for nbrs, code in graph.constraints:
            evar.extend(nbrs)
            cmask.extend(code.col_masks)
            states.append(1 << code.parity_matrix.shape[0])
            syndrome.append(code.syndrome_mask)
            check_ptr.append(len(evar))
        self.check_ptr = np.array(check_ptr, dtype=np.int64)
        self.evar = np.array(evar, dtype=np.int64)
        self.cmask = np.array(cmask, dtype=np.int64)
        self.states = np.array(states, dtype=np.int64)
        self.syndrome = np.array(syndrome, dtype=np.int64)
        order = np.argsort(self.evar, kind="stable")
        self.vedge = order.astype(np.int64)
        degs = np.bincount(self.evar, minlength=graph.n_vars)
        self.var_ptr = np.concatenate([[0], np.cumsum(degs)]).astype(np.int64)
        self.echeck = np.zeros(len(evar), dtype=np.int64)
        for j in range(graph.n_checks):
            self.echeck[self.check_ptr[j]:self.check_ptr[j + 1]] = j
        self.n_vars = graph.n_vars
        self.n_checks = graph.n_checks
        self.dmax = int(max((self.check_ptr[1:] - self.check_ptr[:-1]).max(initial=0), 1))
        self.smax = int(self.states.max(initial=1))


if njit is not None:

    @njit(cache=True, fastmath=False)
    def _ladd(a, b):
        if a >= b:
            if b == NEG_INF:
                return a
            return a + np.log1p(np.exp(b - a))
        if a == NEG_INF:
            return b
        return b + np.log1p(np.exp(a - b))

    @njit(cache=True, fastmath=False)
    def _sig(x):
        if x >= 0.0:
            return 1.0 / (1.0 + np.exp(-x))
        e = np.exp(x)
        return e / (1.0 + e)

    @njit(cache=True, fastmath=False)
    def _check_v_lam(j, check_ptr, evar, cmask, states, syndrome, u, v, lam,
                     K, fwd, bwd, skip_var):
        """Rebuild check j's trellis; refresh v (except at skip_var) and lam."""
        lo, hi = check_ptr[j], check_ptr[j + 1]
        n = hi - lo
        ns = states[j]
        st = syndrome[j]
        for s in range(ns):
            fwd[0, s] = NEG_INF
        fwd[0, 0] = 0.0
        for k in range(n):
            h = cmask[lo + k]
            shift = -K * u[lo + k]
            for s in range(ns):
                fwd[k + 1, s] = _ladd(fwd[k, s], fwd[k, s ^ h] + shift)
        for s in range(ns):
            bwd[n - 1, s] = NEG_INF
        bwd[n - 1, 0] = 0.0
        for k in range(n - 2, -1, -1):
            h = cmask[lo + k + 1]
            shift = -K * u[lo + k + 1]
            for s in range(ns):
                bwd[k, s] = _ladd(bwd[k + 1, s], bwd[k + 1, s ^ h] + shift)
        for k in range(n):
            h = cmask[lo + k]
            la = NEG_INF
            lb = NEG_INF
            for s in range(ns):
                t = fwd[k, s ^ h] + bwd[k, s ^ st]
                if t > la:
                    la = t
                t = fwd[k, s] + bwd[k, s ^ st]
                if t > lb:
                    lb = t
            if la > NEG_INF:
                acc = 0.0
                for s in range(ns):
                    t = fwd[k, s ^ h] + bwd[k, s ^ st]
                    if t != NEG_INF:
                        acc += np.exp(t - la)
                la += np.log(acc)
            if lb > NEG_INF:
                acc = 0.0
                for s in range(ns):
                    t = fwd[k, s] + bwd[k, s ^ st]
                    if t != NEG_INF:
                        acc += np.exp(t - lb)
                lb += np.log(acc)
            e = lo + k
            if evar[e] != skip_var:
                if la == NEG_INF:
                    v[e] = -V_MAX
                elif lb == NEG_INF:
                    v[e] = V_MAX
                else:
                    v[e] = (la - lb) / K
            lam[e] = _sig(K * (v[e] - u[e]))

    @njit(cache=True, fastmath=False)
    def _node_stats(i, var_ptr, vedge, lam, lam_node, eps_node):
        lo, hi = var_ptr[i], var_ptr[i + 1]
        mean = 0.0
        for x in range(lo, hi):
            mean += lam[vedge[x]]
        mean /= hi - lo
        lam_node[i] = mean
        eps = 0.0
        for x in range(lo, hi):
            d = lam[vedge[x]] - mean
            if d < 0.0:
                d = -d
            if d > eps:
                eps = d
        eps_node[i] = eps

    @njit(cache=True, fastmath=False)
    def refresh_kernel(check_ptr, evar, cmask, states, syndrome, var_ptr, vedge,
                       u, v, lam, lam_node, eps_node, active, in_queue, queue,
                       K, eps0, fwd, bwd):
        """Recompute v/lam everywhere, node stats, and rebuild the queue."""
        n_checks = len(check_ptr) - 1
        for j in range(n_checks):
            _check_v_lam(j, check_ptr, evar, cmask, states, syndrome, u, v, lam,
                         K, fwd, bwd, -1)
        n_vars = len(var_ptr) - 1
        head = 0
        tail = 0
        for i in range(n_vars):
            _node_stats(i, var_ptr, vedge, lam, lam_node, eps_node)
            if eps_node[i] >= eps0:
                active[i] = 1
                in_queue[i] = 1
                queue[tail] = i
                tail += 1
            else:
                active[i] = 0
                in_queue[i] = 0
        return head, tail

    @njit(cache=True, fastmath=False)
    def phase_kernel(check_ptr, evar, cmask, states, syndrome, var_ptr, vedge,
                     echeck, u, v, lam, lam_node, eps_node, active, in_queue,
                     queue, head, tail, K, eps0, gamma, max_iters, fwd, bwd,
                     touched):
        """FIFO Gauss-Seidel sweeps until the active set empties or the
        iteration budget runs out. A variable sits in the queue at most once
        (pushed on activation, flag cleared on pop). Returns
        (iterations, head, tail)."""
        n_active = 0
        n_vars = len(var_ptr) - 1
        for i in range(n_vars):
            if active[i]:
                n_active += 1
        cap = len(queue)
        iters = 0
        while n_active > 0 and iters < max_iters:
            k = -1
            while head != tail:
                cand = queue[head]
                head = (head + 1) % cap
                in_queue[cand] = 0
                if active[cand]:
                    k = cand
                    break
            if k < 0:
                # queue exhausted with active vars: rebuild from flags
                head = 0
                tail = 0
                for i in range(n_vars):
                    if active[i]:
                        queue[tail] = i
                        in_queue[i] = 1
                        tail += 1
                continue
            lo, hi = var_ptr[k], var_ptr[k + 1]
            deg = hi - lo
            vsum = 0.0
            for x in range(lo, hi):
                vsum += v[vedge[x]]
            shift = (gamma[k] - vsum) / deg
            for x in range(lo, hi):
                e = vedge[x]
                u[e] = v[e] + shift
            ntouch = 0
            for x in range(lo, hi):
                j = echeck[vedge[x]]
                _check_v_lam(j, check_ptr, evar, cmask, states, syndrome,
                             u, v, lam, K, fwd, bwd, k)
                for e in range(check_ptr[j], check_ptr[j + 1]):
                    i = evar[e]
                    dup = False
                    for t in range(ntouch):
                        if touched[t] == i:
                            dup = True
                            break
                    if not dup:
                        touched[ntouch] = i
                        ntouch += 1
            for t in range(ntouch):
                i = touched[t]
                _node_stats(i, var_ptr, vedge, lam, lam_node, eps_node)
                if active[i]:
                    if eps_node[i] < eps0:
                        active[i] = 0
                        n_active -= 1
                elif eps_node[i] >= eps0:
                    active[i] = 1
                    n_active += 1
                    if not in_queue[i]:
                        in_queue[i] = 1
                        queue[tail] = i
                        tail = (tail + 1) % cap
            iters += 1
        return iters, head, tail

    HAVE_NUMBA = True
else:  # pragma: no cover
    HAVE_NUMBA = False
