# Compiled simulation kernel.
#
# Twin of `_kernel_py.py`: identical inputs, outputs and RNG consumption,
# draw for draw, so trajectories are bit-identical across the two kernels
# (the extension is compiled with -ffp-contract=off to keep float arithmetic
# IEEE-matched to CPython's).  All hot paths run without the GIL, which lets
# the ensemble driver parallelize runs with plain threads.

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, log1p, INFINITY
from libc.stdlib cimport free, malloc
from libc.string cimport memset

from numpy.random cimport bitgen_t

import numpy as np

BACKEND_NAME = "cython"

cdef enum:
    _UNIFORM = 0
    _TOPC = 1
    _GIBBS = 2

STRATEGY_UNIFORM = _UNIFORM
STRATEGY_TOPC = _TOPC
STRATEGY_GIBBS = _GIBBS

DEF GIBBS_LOG_DOMAIN_THRESHOLD = 500.0
DEF GIBBS_BAND_HALF_WIDTH = 50.0
DEF ETABLE_MAX = 1e300

cdef double INV_2_53 = 1.0 / 9007199254740992.0


# ---------------------------------------------------------------------------
# RNG primitives (must match rng.BitStream exactly).
# ---------------------------------------------------------------------------

cdef inline unsigned long long _next_u64(bitgen_t *bg) noexcept nogil:
    return bg.next_uint64(bg.state)


cdef inline long _randbelow(bitgen_t *bg, long n) noexcept nogil:
    cdef unsigned long long mask, r
    cdef unsigned long long nn = <unsigned long long> (n - 1)
    if n <= 1:
        return 0
    mask = nn
    mask |= mask >> 1
    mask |= mask >> 2
    mask |= mask >> 4
    mask |= mask >> 8
    mask |= mask >> 16
    mask |= mask >> 32
    while True:
        r = _next_u64(bg) & mask
        if r < <unsigned long long> n:
            return <long> r


cdef inline double _uniform(bitgen_t *bg) noexcept nogil:
    return <double> (_next_u64(bg) >> 11) * INV_2_53


# ---------------------------------------------------------------------------
# Scratch workspace, allocated once per run.
# ---------------------------------------------------------------------------

cdef struct Workspace:
    long long *conf        # n * n confidence table
    long *sample           # <= n selected positions
    long *idx              # Fisher-Yates order buffer
    long *tied             # tie buffer for top-C
    long long *scratch     # quickselect buffer
    double *w              # per-position weights
    double *etab           # (n+1) * (c+1) suffix e-table
    double *letab          # log-domain twin
    long *counts           # n+1 vote counts


cdef int _ws_alloc(Workspace *ws, long n, long c) except -1:
    ws.conf = <long long *> malloc(n * n * sizeof(long long))
    ws.sample = <long *> malloc(n * sizeof(long))
    ws.idx = <long *> malloc(n * sizeof(long))
    ws.tied = <long *> malloc(n * sizeof(long))
    ws.scratch = <long long *> malloc(n * sizeof(long long))
    ws.w = <double *> malloc(n * sizeof(double))
    ws.etab = <double *> malloc((n + 1) * (c + 1) * sizeof(double))
    ws.letab = <double *> malloc((n + 1) * (c + 1) * sizeof(double))
    ws.counts = <long *> malloc((n + 1) * sizeof(long))
    if (ws.conf == NULL or ws.sample == NULL or ws.idx == NULL or
            ws.tied == NULL or ws.scratch == NULL or ws.w == NULL or
            ws.etab == NULL or ws.letab == NULL or ws.counts == NULL):
        _ws_free(ws)
        raise MemoryError("kernel workspace allocation failed")
    return 0


cdef void _ws_free(Workspace *ws):
    free(ws.conf); free(ws.sample); free(ws.idx); free(ws.tied)
    free(ws.scratch); free(ws.w); free(ws.etab); free(ws.letab)
    free(ws.counts)


# ---------------------------------------------------------------------------
# Subset draws (must match samplers.{uniform,topc,gibbs}_positions).
# ---------------------------------------------------------------------------

cdef inline long _draw_uniform(bitgen_t *dyn, Workspace *ws, long n, long c) noexcept nogil:
    cdef long i, j, t
    if c == n:
        for i in range(n):
            ws.sample[i] = i
        return n
    for i in range(n):
        ws.idx[i] = i
    for i in range(c):
        j = i + _randbelow(dyn, n - i)
        t = ws.idx[i]; ws.idx[i] = ws.idx[j]; ws.idx[j] = t
        ws.sample[i] = ws.idx[i]
    return c


cdef long long _kth_smallest(long long *a, long n, long k) noexcept nogil:
    # k-th smallest (0-based) of a[0..n-1]; destroys a.  Median-of-three
    # quickselect, no allocation.
    cdef long lo = 0, hi = n - 1, mid, i, j
    cdef long long pivot, tmp
    while True:
        if hi <= lo + 1:
            if hi == lo + 1 and a[hi] < a[lo]:
                tmp = a[lo]; a[lo] = a[hi]; a[hi] = tmp
            return a[k]
        mid = (lo + hi) >> 1
        tmp = a[mid]; a[mid] = a[lo + 1]; a[lo + 1] = tmp
        if a[lo] > a[hi]:
            tmp = a[lo]; a[lo] = a[hi]; a[hi] = tmp
        if a[lo + 1] > a[hi]:
            tmp = a[lo + 1]; a[lo + 1] = a[hi]; a[hi] = tmp
        if a[lo] > a[lo + 1]:
            tmp = a[lo]; a[lo] = a[lo + 1]; a[lo + 1] = tmp
        i = lo + 1
        j = hi
        pivot = a[lo + 1]
        while True:
            i += 1
            while a[i] < pivot:
                i += 1
            j -= 1
            while a[j] > pivot:
                j -= 1
            if j < i:
                break
            tmp = a[i]; a[i] = a[j]; a[j] = tmp
        a[lo + 1] = a[j]
        a[j] = pivot
        if j >= k:
            hi = j - 1
        if j <= k:
            lo = i


cdef inline long _draw_topc(bitgen_t *dyn, Workspace *ws, const long long *frow,
                            long n, long c) noexcept nogil:
    cdef long i, j, t, cnt, ntied, r
    cdef long long thr
    if c == n:
        for i in range(n):
            ws.sample[i] = i
        return n
    for i in range(n):
        ws.scratch[i] = frow[i]
    thr = _kth_smallest(ws.scratch, n, n - c)
    cnt = 0
    ntied = 0
    for i in range(n):
        if frow[i] > thr:
            ws.sample[cnt] = i
            cnt += 1
        elif frow[i] == thr:
            ws.tied[ntied] = i
            ntied += 1
    r = c - cnt
    if r == ntied:
        for i in range(ntied):
            ws.sample[cnt + i] = ws.tied[i]
        return c
    for i in range(r):
        j = i + _randbelow(dyn, ntied - i)
        t = ws.tied[i]; ws.tied[i] = ws.tied[j]; ws.tied[j] = t
        ws.sample[cnt + i] = ws.tied[i]
    return c


cdef inline double _logaddexp(double a, double b) noexcept nogil:
    if a == -INFINITY:
        return b
    if b == -INFINITY:
        return a
    if a >= b:
        return a + log1p(exp(b - a))
    return b + log1p(exp(a - b))


cdef long _seq_log(bitgen_t *dyn, Workspace *ws, const long long *values,
                   const long *posmap, long m, long k, double beta,
                   long *out, long offset) noexcept nogil:
    # Log-domain twin of _seq_draw, exact at any exponent range.
    cdef long i, j, imax, need, cnt, stride = k + 1
    cdef long long vmax
    cdef double *lw = ws.w
    cdef double *le = ws.letab
    cdef double p
    vmax = values[0]
    for i in range(1, m):
        if values[i] > vmax:
            vmax = values[i]
    for i in range(m):
        lw[i] = -(beta * <double> (vmax - values[i]))
    le[m * stride] = 0.0
    for i in range(1, k + 1):
        le[m * stride + i] = -INFINITY
    for j in range(m - 1, -1, -1):
        le[j * stride] = 0.0
        imax = k if k < m - j else m - j
        for i in range(1, imax + 1):
            le[j * stride + i] = _logaddexp(le[(j + 1) * stride + i],
                                            lw[j] + le[(j + 1) * stride + i - 1])
        for i in range(imax + 1, k + 1):
            le[j * stride + i] = -INFINITY
    need = k
    cnt = 0
    for j in range(m):
        if need == 0:
            break
        p = exp(lw[j] + le[(j + 1) * stride + need - 1] - le[j * stride + need])
        if _uniform(dyn) < p:
            out[offset + cnt] = posmap[j] if posmap != NULL else j
            cnt += 1
            need -= 1
    return cnt


cdef long _seq_draw(bitgen_t *dyn, Workspace *ws, const long long *values,
                    const long *posmap, long m, long k, double beta,
                    const double *exp_table, long table_len,
                    long *out, long offset) noexcept nogil:
    # Draw k of m items with weights exp(beta * value) by the sequential
    # conditional-Poisson method; writes chosen positions (mapped through
    # posmap when given) into out[offset:].  Falls back to the log domain
    # when the linear e-table degenerates.
    cdef long i, j, imax, need, cnt, stride = k + 1
    cdef long long vmax, dk
    cdef double z, p, denom
    cdef double *et = ws.etab
    vmax = values[0]
    for i in range(1, m):
        if values[i] > vmax:
            vmax = values[i]
    for i in range(m):
        dk = vmax - values[i]
        if dk < table_len:
            ws.w[i] = exp_table[dk]
        else:
            ws.w[i] = exp(-(beta * <double> dk))

    et[m * stride] = 1.0
    for i in range(1, k + 1):
        et[m * stride + i] = 0.0
    for j in range(m - 1, -1, -1):
        et[j * stride] = 1.0
        imax = k if k < m - j else m - j
        for i in range(1, imax + 1):
            et[j * stride + i] = et[(j + 1) * stride + i] + ws.w[j] * et[(j + 1) * stride + i - 1]
        for i in range(imax + 1, k + 1):
            et[j * stride + i] = 0.0
    z = et[k]
    if not (0.0 < z and z <= ETABLE_MAX):
        return _seq_log(dyn, ws, values, posmap, m, k, beta, out, offset)

    need = k
    cnt = 0
    for j in range(m):
        if need == 0:
            break
        denom = et[j * stride + need]
        if denom == 0.0:
            return _seq_log(dyn, ws, values, posmap, m, k, beta, out, offset)
        p = ws.w[j] * et[(j + 1) * stride + need - 1] / denom
        if p != p:
            return _seq_log(dyn, ws, values, posmap, m, k, beta, out, offset)
        if _uniform(dyn) < p:
            out[offset + cnt] = posmap[j] if posmap != NULL else j
            cnt += 1
            need -= 1
    return cnt


cdef long _draw_gibbs(bitgen_t *dyn, Workspace *ws, const long long *frow,
                      long n, long c, double beta,
                      const double *exp_table, long table_len) noexcept nogil:
    cdef long i, nf, nb, need
    cdef long long fmax, fmin, fstar
    cdef double d
    if c == n:
        for i in range(n):
            ws.sample[i] = i
        return n
    fmax = frow[0]
    fmin = frow[0]
    for i in range(1, n):
        if frow[i] > fmax:
            fmax = frow[i]
        elif frow[i] < fmin:
            fmin = frow[i]
    if beta * <double> (fmax - fmin) <= GIBBS_LOG_DOMAIN_THRESHOLD:
        return _seq_draw(dyn, ws, frow, NULL, n, c, beta,
                         exp_table, table_len, ws.sample, 0)

    # Wide-range draw: split around the rank-C confidence.  Cards more than
    # an e^50 weight ratio above it are certainly shown, those as far below
    # are never shown (corrections fall under the 2^-53 draw resolution);
    # only the boundary band needs the sequential pass, and its shifted
    # exponents span at most 100, safe for the linear e-table.
    for i in range(n):
        ws.scratch[i] = frow[i]
    fstar = _kth_smallest(ws.scratch, n, n - c)
    nf = 0
    nb = 0
    for i in range(n):
        d = beta * <double> (frow[i] - fstar)
        if d > GIBBS_BAND_HALF_WIDTH:
            ws.sample[nf] = i
            nf += 1
        elif d >= -GIBBS_BAND_HALF_WIDTH:
            ws.idx[nb] = i
            nb += 1
    need = c - nf
    if need == nb:
        for i in range(nb):
            ws.sample[nf + i] = ws.idx[i]
        return c
    for i in range(nb):
        ws.scratch[i] = frow[ws.idx[i]]
    return nf + _seq_draw(dyn, ws, ws.scratch, ws.idx, nb, need, beta,
                          exp_table, table_len, ws.sample, nf)


cdef inline long _draw_positions(bitgen_t *dyn, Workspace *ws, const long long *frow,
                                 long n, long c, int strategy, double beta,
                                 const double *exp_table, long table_len) noexcept nogil:
    if strategy == _UNIFORM:
        return _draw_uniform(dyn, ws, n, c)
    if strategy == _TOPC:
        return _draw_topc(dyn, ws, frow, n, c)
    return _draw_gibbs(dyn, ws, frow, n, c, beta, exp_table, table_len)


# ---------------------------------------------------------------------------
# Decisions (must match _kernel_py._evaluate).
# ---------------------------------------------------------------------------

cdef inline long _agent_vote(bitgen_t *dec, const long long *frow, long n, long agent) noexcept nogil:
    cdef long p, ties, pick, seen
    cdef long long best = frow[0]
    ties = 1
    for p in range(1, n):
        if frow[p] > best:
            best = frow[p]
            ties = 1
        elif frow[p] == best:
            ties += 1
    pick = _randbelow(dec, ties) if ties > 1 else 0
    seen = 0
    for p in range(n):
        if frow[p] == best:
            if seen == pick:
                return p + 1 if p >= agent else p
            seen += 1
    return 0  # unreachable


cdef void _evaluate(bitgen_t *dec, Workspace *ws, long n,
                    int *out_choice, int *out_errors) noexcept nogil:
    cdef long agent, card, best, ntied, pick, seen, errors
    for card in range(n + 1):
        ws.counts[card] = 0
    errors = 0
    for agent in range(n):
        card = _agent_vote(dec, ws.conf + agent * n, n, agent)
        ws.counts[card] += 1
        if card != n:
            errors += 1
    best = 0
    for card in range(n + 1):
        if ws.counts[card] > best:
            best = ws.counts[card]
    ntied = 0
    for card in range(n + 1):
        if ws.counts[card] == best:
            ntied += 1
    pick = _randbelow(dec, ntied) if ntied > 1 else 0
    seen = 0
    for card in range(n + 1):
        if ws.counts[card] == best:
            if seen == pick:
                out_choice[0] = <int> (card + 1)
                out_errors[0] = <int> errors
                return
            seen += 1


# ---------------------------------------------------------------------------
# Public entry points.
# ---------------------------------------------------------------------------

cdef bitgen_t *_get_bitgen(bit_generator) except NULL:
    return <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


def simulate_run(
    long n,
    long c,
    int strategy,
    double beta,
    const int[::1] observers,
    const int[::1] observeds,
    const long long[::1] checkpoints,
    long long tau_max,
    dyn_bg,
    dec_bg,
    exp_table,
    int[::1] out_choices,
    int[::1] out_errors,
    out_final_conf=None,
):
    """One full run; see `_kernel_py.simulate_run` for the contract."""
    cdef bitgen_t *dyn = _get_bitgen(dyn_bg)
    cdef bitgen_t *dec = _get_bitgen(dec_bg)
    cdef long npairs = observers.shape[0]
    cdef long ncp = checkpoints.shape[0]
    cdef const double[::1] table_view
    cdef const double *table_ptr = NULL
    cdef long table_len = 0
    if exp_table is not None:
        table_view = exp_table
        table_ptr = &table_view[0]
        table_len = table_view.shape[0]

    cdef Workspace ws
    _ws_alloc(&ws, n, c)

    cdef long long tau
    cdef long cp_idx = 0, step, pair, obs, obd, nsel, s, pos, card
    cdef long long[:, ::1] final_view
    try:
        with nogil:
            memset(ws.conf, 0, n * n * sizeof(long long))
            if cp_idx < ncp and checkpoints[cp_idx] == 0:
                _evaluate(dec, &ws, n, &out_choices[cp_idx], &out_errors[cp_idx])
                cp_idx += 1
            for tau in range(1, tau_max + 1):
                for step in range(n):
                    pair = _randbelow(dyn, npairs)
                    obs = observers[pair]
                    obd = observeds[pair]
                    nsel = _draw_positions(dyn, &ws, ws.conf + obd * n, n, c,
                                           strategy, beta, table_ptr, table_len)
                    for s in range(nsel):
                        pos = ws.sample[s]
                        card = pos + 1 if pos >= obd else pos
                        if card == obs:
                            continue
                        ws.conf[obs * n + (card - 1 if card > obs else card)] += 1
                while cp_idx < ncp and checkpoints[cp_idx] == tau:
                    _evaluate(dec, &ws, n, &out_choices[cp_idx], &out_errors[cp_idx])
                    cp_idx += 1
        if out_final_conf is not None:
            final_view = out_final_conf
            for pos in range(n):
                for card in range(n):
                    final_view[pos, card] = ws.conf[pos * n + card]
    finally:
        _ws_free(&ws)


def draw_subset_counts(
    int strategy,
    frow,
    long c,
    double beta,
    long long n_draws,
    bit_gen,
):
    """Histogram of repeated draws keyed by position bitmask (n <= 20)."""
    cdef long long[::1] fview = np.ascontiguousarray(frow, dtype=np.int64)
    cdef long n = fview.shape[0]
    if n > 20:
        raise ValueError("bitmask histogram supports n <= 20")
    cdef bitgen_t *dyn = _get_bitgen(bit_gen)
    counts = np.zeros(1 << n, dtype=np.int64)
    cdef long long[::1] cview = counts
    cdef Workspace ws
    _ws_alloc(&ws, n, c)
    cdef long long d
    cdef long nsel, s, mask
    try:
        with nogil:
            for d in range(n_draws):
                nsel = _draw_positions(dyn, &ws, &fview[0], n, c, strategy,
                                       beta, NULL, 0)
                mask = 0
                for s in range(nsel):
                    mask |= 1 << ws.sample[s]
                cview[mask] += 1
    finally:
        _ws_free(&ws)
    return counts
