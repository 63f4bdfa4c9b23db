"""Hot inner loops, each with a numba kernel and a pure-numpy twin.

Public wrappers dispatch on :func:`ctables._accel.use_numba`.
"""
import numpy as np

from . import _accel
from ._accel import njit


# ---------------------------------------------------------------------------
# exact counting: one column of the residual-state DP
#
# State: residual sums of the free rows (all rows but one), stored densely
# with shape ``shape``; the omitted row's residual is implied by the total.
# For a column with sum b the new state array is
#     new[v] = [|v| <= r_next] * sum_{x >= 0, |x| <= b} old[v + x]
# computed by streaming over the first axis and carrying, per slice, the
# exact-budget sums E[q, c] = sum_{|x| = c} old[v + x] for c = 0..b.
# All arithmetic is modulo ``p`` (p < 2**31).
# ---------------------------------------------------------------------------


@njit(cache=True)
def _column_numba(old, shape, b, r_next, p):
    k = shape.shape[0]
    L1 = shape[0]
    S = old.shape[0] // L1
    strides = np.ones(k, dtype=np.int64)
    for i in range(k - 2, -1, -1):
        strides[i] = strides[i + 1] * shape[i + 1]
    # coordinate sum of each slice index
    qsum = np.zeros(S, dtype=np.int64)
    for q in range(S):
        s = 0
        for i in range(1, k):
            s += (q // strides[i]) % shape[i]
        qsum[q] = s
    w = b + 1
    prev = np.zeros(S * w, dtype=np.int64)
    cur = np.zeros(S * w, dtype=np.int64)
    new = np.zeros(old.shape[0], dtype=np.int64)
    for v1 in range(L1 - 1, -1, -1):
        base = v1 * S
        for t in range(S * w):
            cur[t] = 0
        any_nz = False
        for q in range(S):
            val = old[base + q]
            cur[q * w] = val
            if val != 0:
                any_nz = True
        if any_nz:
            for i in range(1, k):
                st = strides[i]
                Li = shape[i]
                for q in range(S - 1, -1, -1):
                    if (q // st) % Li == Li - 1:
                        continue
                    src = (q + st) * w
                    dst = q * w
                    for c in range(1, w):
                        x = cur[dst + c] + cur[src + c - 1]
                        if x >= p:
                            x -= p
                        cur[dst + c] = x
        if v1 < L1 - 1:
            for q in range(S):
                dst = q * w
                for c in range(1, w):
                    x = cur[dst + c] + prev[dst + c - 1]
                    if x >= p:
                        x -= p
                    cur[dst + c] = x
        for q in range(S):
            if v1 + qsum[q] > r_next:
                continue
            dst = q * w
            acc = 0
            for c in range(w):
                acc += cur[dst + c]
                if acc >= p:
                    acc -= p
            new[base + q] = acc
        prev, cur = cur, prev
    return new


def _column_numpy(old, shape, b, r_next, p):
    shape = tuple(int(s) for s in shape)
    arr = old.reshape(shape)
    L1, rest = shape[0], shape[1:]
    w = b + 1
    grids = np.indices(rest).sum(axis=0) if rest else np.zeros((), dtype=np.int64)
    new = np.zeros(shape, dtype=np.int64)
    prev = None
    for v1 in range(L1 - 1, -1, -1):
        cur = np.zeros(rest + (w,), dtype=np.int64)
        cur[..., 0] = arr[v1]
        if arr[v1].any():
            for ax in range(len(rest)):
                view = np.moveaxis(cur, ax, 0)
                for t in range(rest[ax] - 2, -1, -1):
                    view[t, ..., 1:] += view[t + 1, ..., :-1]
                    view[t] %= p
        if prev is not None:
            cur[..., 1:] += prev[..., :-1]
            cur %= p
        tot = cur.sum(axis=-1) % p
        new[v1] = np.where(v1 + grids > r_next, 0, tot)
        prev = cur
    return new.ravel()


def column_transition(old, shape, b, r_next, p):
    """Apply one column of sum ``b`` to the flat residual-state array ``old``."""
    old = np.ascontiguousarray(old, dtype=np.int64)
    shape = np.asarray(shape, dtype=np.int64)
    if b == 0:
        out = old.copy()
        grids = np.indices(tuple(shape)).sum(axis=0).ravel()
        out[grids > r_next] = 0
        return out
    if _accel.use_numba():
        return _column_numba(old, shape, int(b), int(r_next), int(p))
    return _column_numpy(old, shape, int(b), int(r_next), int(p))


# ---------------------------------------------------------------------------
# typical table: exact row (or column) dual updates
#
# For each row i find lam_i with  sum_j 1/expm1(lam_i + mu_j) = a_i.
# The left side is convex and strictly decreasing in lam_i on
# (-min mu, inf); the root lies in
#     [log1p(1/a_i) - min mu, log1p(n/a_i) - min mu].
# Newton steps are kept inside a shrinking bisection bracket.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _rows_numba(lam, mu, a, rtol, maxit):
    m = lam.shape[0]
    n = mu.shape[0]
    mu_min = mu.min()
    for i in range(m):
        ai = a[i]
        lo = np.log1p(1.0 / ai) - mu_min
        hi = np.log1p(n / ai) - mu_min
        x = lam[i]
        if not (x > lo and x < hi):
            x = lo
        for _ in range(maxit):
            h = 0.0
            dh = 0.0
            for j in range(n):
                e = np.expm1(x + mu[j])
                z = 1.0 / e
                h += z
                dh -= z * (z + 1.0)
            r = h - ai
            if r > 0:
                lo = x
            else:
                hi = x
            if abs(r) <= rtol * ai:
                break
            step = x - r / dh
            if step <= lo or step >= hi:
                step = 0.5 * (lo + hi)
            if step == x:
                break
            x = step
        lam[i] = x
    return lam


def _rows_numpy(lam, mu, a, rtol, maxit):
    n = mu.shape[0]
    mu_min = mu.min()
    lo = np.log1p(1.0 / a) - mu_min
    hi = np.log1p(n / a) - mu_min
    x = np.where((lam > lo) & (lam < hi), lam, lo)
    active = np.ones_like(a, dtype=bool)
    for _ in range(maxit):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        z = 1.0 / np.expm1(x[idx, None] + mu[None, :])
        h = z.sum(axis=1)
        dh = -(z * (z + 1.0)).sum(axis=1)
        r = h - a[idx]
        pos = r > 0
        lo[idx[pos]] = x[idx[pos]]
        hi[idx[~pos]] = x[idx[~pos]]
        done = np.abs(r) <= rtol * a[idx]
        step = x[idx] - r / dh
        bad = (step <= lo[idx]) | (step >= hi[idx])
        step[bad] = 0.5 * (lo[idx][bad] + hi[idx][bad])
        stalled = step == x[idx]
        x[idx[~done]] = step[~done]
        active[idx[done | stalled]] = False
    lam[:] = x
    return lam


def update_rows(lam, mu, a, rtol=1e-15, maxit=200):
    """Solve every row's dual equation in place, holding ``mu`` fixed."""
    if _accel.use_numba():
        return _rows_numba(lam, mu, a, float(rtol), int(maxit))
    return _rows_numpy(lam, mu, a, float(rtol), int(maxit))
