"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Outputs are bit-identical to the compiled versions. Used when the extension
is not built or when ``SPIKEPOP_PURE_PYTHON`` is set.
"""

import numpy as np


def lif_encode_flat(x, offsets, threshold, decay):
    x = np.asarray(x, dtype=np.float64)
    offsets = np.asarray(offsets, dtype=np.int64)
    lengths = np.diff(offsets)
    n_stim = lengths.size
    out = np.zeros(x.size, dtype=np.uint8)
    if n_stim == 0 or x.size == 0:
        return out
    n_max = int(lengths.max())
    # pad to a (stimulus, time) grid and step all stimuli together;
    # samples past a stimulus' end are discarded when unpadding
    grid = np.zeros((n_stim, n_max))
    col = np.arange(n_max)
    valid = col[None, :] < lengths[:, None]
    grid[valid] = x
    spikes = np.zeros((n_stim, n_max), dtype=np.uint8)
    v = np.zeros(n_stim)
    for i in range(n_max):
        v = v * decay + grid[:, i]
        fired = v >= threshold
        spikes[:, i] = fired
        v[fired] = 0.0
    out[:] = spikes[valid]
    return out


def _first_not_below(xg, x, d, lo, hi):
    # vectorised bisection: first j in [lo, hi) with xg[j] - x >= d
    lo = lo.copy()
    hi = hi.copy()
    while True:
        active = lo < hi
        if not active.any():
            return lo
        mid = (lo + hi) >> 1
        midc = np.minimum(mid, xg.size - 1)
        below = (xg[midc] - x) < d
        go_right = active & below
        go_left = active & ~below
        lo[go_right] = mid[go_right] + 1
        hi[go_left] = mid[go_left]


def _first_inside(xg, x, d, lo, hi):
    # first j in [lo, hi) with x - xg[j] < d
    lo = lo.copy()
    hi = hi.copy()
    while True:
        active = lo < hi
        if not active.any():
            return lo
        mid = (lo + hi) >> 1
        midc = np.minimum(mid, xg.size - 1)
        inside = (x - xg[midc]) < d
        go_left = active & inside
        go_right = active & ~inside
        hi[go_left] = mid[go_left]
        lo[go_right] = mid[go_right] + 1


def neighbour_counts(xs, start, stop, xg, k):
    xs = np.asarray(xs, dtype=np.float64)
    start = np.asarray(start, dtype=np.int64)
    stop = np.asarray(stop, dtype=np.int64)
    xg = np.asarray(xg, dtype=np.float64)
    n = xs.size
    p = np.arange(n, dtype=np.int64)
    kc = np.minimum(k, stop - start - 1)
    a_lo = np.maximum(0, kc - (stop - 1 - p))
    a_hi = np.minimum(kc, p - start)

    # kth-neighbour distance in 1-D: min over windows of kc+1 consecutive
    # class-sorted samples that contain p
    d = np.full(n, np.inf)
    for a in range(k + 1):
        ok = (a >= a_lo) & (a <= a_hi)
        if not ok.any():
            continue
        left_idx = np.where(ok, p - a, 0)
        right_idx = np.where(ok, p - a + kc, 0)
        r = np.maximum(xs - xs[left_idx], xs[right_idx] - xs)
        d = np.where(ok & (r < d), r, d)

    k_out = kc.astype(np.int64)
    m_out = np.empty(n, dtype=np.int64)

    pos = np.searchsorted(xg, xs, side="left").astype(np.int64)
    pos_ok = d > 0
    if pos_ok.any():
        x = xs[pos_ok]
        dd = d[pos_ok]
        pp = pos[pos_ok]
        hi = _first_not_below(xg, x, dd, pp, np.full(pp.size, xg.size, dtype=np.int64))
        lo = _first_inside(xg, x, dd, np.zeros(pp.size, dtype=np.int64), pp)
        m_out[pos_ok] = hi - lo

    zero = ~pos_ok
    if zero.any():
        x = xs[zero]
        m_out[zero] = (np.searchsorted(xg, x, side="right")
                       - np.searchsorted(xg, x, side="left"))
        # equal values within a class block are a contiguous run of xs
        run_start = np.r_[True, (xs[1:] != xs[:-1]) | (start[1:] != start[:-1])]
        run_id = np.cumsum(run_start) - 1
        run_len = np.bincount(run_id)
        k_out[zero] = run_len[run_id[zero]]
    return k_out, m_out
