# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled event kernel; semantics identical to kpzlab._engine_py."""

from libc.math cimport log1p


def run_events(long long[::1] pos, long long[::1] row_start,
               int[::1] level_of, int[::1] index_of, int M, long long n_slow,
               double rate_slow, double rate_fast, double clock,
               double horizon, double[::1] uniforms):
    """Drive block/push events until the horizon or the buffer runs out.

    Returns (clock, consumed, events, finished); see the pure-Python twin
    for the uniform-consumption contract.
    """
    cdef long long n_total = row_start[M + 1]
    cdef double slow_total = rate_slow * n_slow
    cdef double total = slow_total + rate_fast * (n_total - n_slow)
    cdef Py_ssize_t n = uniforms.shape[0]
    cdef Py_ssize_t i = 0
    cdef long long events = 0
    cdef long long j, x, idx
    cdef int m, k, l
    cdef double dt, r
    while True:
        if i + 2 > n:
            return clock, i, events, False
        dt = -log1p(-uniforms[i]) / total
        if clock + dt > horizon:
            return horizon, i + 1, events, True
        clock += dt
        i += 1
        r = uniforms[i] * total
        i += 1
        if r < slow_total:
            j = <long long>(r / rate_slow)
            if j >= n_slow:
                j = n_slow - 1
        else:
            j = n_slow + <long long>((r - slow_total) / rate_fast)
            if j >= n_total:
                j = n_total - 1
        m = level_of[j]
        k = index_of[j]
        x = pos[row_start[m] + k - 1]
        if m > 1 and k <= m - 1 and pos[row_start[m - 1] + k - 1] == x + 1:
            events += 1
            continue
        pos[row_start[m] + k - 1] = x + 1
        l = 1
        while m + l <= M:
            idx = row_start[m + l] + k + l - 1
            if pos[idx] == x:
                pos[idx] = x + 1
                l += 1
            else:
                break
        events += 1
