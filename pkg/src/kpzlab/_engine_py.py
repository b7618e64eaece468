"""Pure-Python event kernel for the interlacing growth dynamics.

Reference implementation of the hot loop; kpzlab._engine is the compiled
twin. Both consume the same uniform stream with the same arithmetic, so
trajectories are bit-for-bit identical between them.
"""

from math import log1p


def run_events(pos, row_start, level_of, index_of, M, n_slow,
               rate_slow, rate_fast, clock, horizon, uniforms):
    """Drive block/push events until the horizon or the buffer runs out.

    Each event consumes two uniforms: one for the exponential waiting
    time at the total rate, one for rate-proportional particle selection.
    A draw whose waiting time would pass the horizon consumes only its
    first uniform and ends the run with clock pinned to the horizon.

    Returns (clock, consumed, events, finished).
    """
    n_total = row_start[M + 1]
    slow_total = rate_slow * n_slow
    total = slow_total + rate_fast * (n_total - n_slow)
    n = uniforms.shape[0]
    i = 0
    events = 0
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
            j = int(r / rate_slow)
            if j >= n_slow:
                j = n_slow - 1
        else:
            j = n_slow + int((r - slow_total) / rate_fast)
            if j >= n_total:
                j = n_total - 1
        m = level_of[j]
        k = index_of[j]
        x = pos[row_start[m] + k - 1]
        # blocked by the particle below-right sitting on the target site
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
