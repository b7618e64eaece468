"""Contour-quadrature evaluation of the determinantal correlation kernel.

The kernel at time t couples lattice sites (x1, m1), (x2, m2) through a
double integral over two disjoint circles, one around the origin and one
around the points 1 and 2, plus a single integral around the origin when
m1 < m2. Integrands are assembled in log space with a running reference
magnitude subtracted, trapezoid sums on the parametrized circles converge
spectrally, and node counts double until the assembled quantity settles.

Circle radii matter enormously for conditioning: the integrand magnitude
varies like exp((x+m) log r) along each circle, so radii are tuned per
evaluation block to minimise the peak integrand magnitude (the value is
contour-independent by Cauchy's theorem as long as the same poles are
enclosed). The fixed default radii remain available for deformation
invariance checks at small t.

Values are returned as ScaledComplex so magnitudes of order exp(+-hundreds)
survive; covariance sums multiply kernel mantissas and add log scales so
magnitudes cancel before exponentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import shape
from .scaled import ScaledComplex

__all__ = [
    "KernelParams",
    "QuadratureError",
    "TruncationError",
    "CoincidentPointsError",
    "p_poly",
    "kernel_K",
    "diagonal_profile",
    "mean_height_kernel",
    "complement_residual",
    "R_direct",
    "green_limit",
    "gff_green",
    "default_window",
]

_TWO_PI = 2.0 * math.pi
_ZERO_FLOOR = 1e-15   # mantissa below this, in the integrand frame, is zero
_IMAG_TOL = 1e-9
_GAP = 0.08           # enforced clearance between the two circles
_CHUNK = 8            # grid block sharing one tuned contour pair


class QuadratureError(RuntimeError):
    """Node cap hit before convergence; carries the last two estimates."""

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class TruncationError(RuntimeError):
    """Summation window too small for the requested accuracy."""


class CoincidentPointsError(ValueError):
    """The two-point Green's function diverges at coincident points."""


@dataclass(frozen=True)
class KernelParams:
    """Time, rate-splitting level and quadrature knobs for kernel evaluation.

    The circle around the origin must enclose only the pole at 0 and stay
    disjoint from the circle around 1 and 2, which keeps the coupling factor
    1/(w - z) bounded on the product contour. With adaptive_contours (the
    default) the stated radii are starting values only.
    """

    t: float
    m0: int
    quad_nodes: int = 512
    gamma0_radius: float = 0.3
    gamma12_center: float = 1.5
    gamma12_radius: float = 1.1
    tol: float = 1e-10
    node_cap: int = 8192
    adaptive_contours: bool = True

    def __post_init__(self):
        if self.t < 0 or self.m0 < 1:
            raise ValueError("need t >= 0 and m0 >= 1")
        if self.gamma0_radius + self.gamma12_radius >= self.gamma12_center:
            raise ValueError("contours must be disjoint")
        if not (0 < self.gamma0_radius < 1):
            raise ValueError("origin contour must enclose 0 only")
        if not (0 < self.gamma12_center - self.gamma12_radius < 1
                and self.gamma12_center + self.gamma12_radius > 2):
            raise ValueError("outer contour must enclose exactly 1 and 2")


def _log_p(z, m, m0):
    """log of the level polynomial (z-1)^min(m,m0) (z-2)^max(m-m0,0)."""
    z = np.asarray(z, dtype=complex)
    out = min(m, m0) * np.log(z - 1)
    if m > m0:
        out = out + (m - m0) * np.log(z - 2)
    return out


def p_poly(z, m, m0):
    """Level polynomial, evaluated in log space so large m cannot overflow
    prematurely."""
    if m < 0:
        raise ValueError("level must be non-negative")
    if m == 0:
        return np.ones_like(z, dtype=complex) if np.ndim(z) else 1 + 0j
    val = np.exp(_log_p(z, m, m0))
    return val if np.ndim(z) else complex(val)


def default_window(t, m, m0=None):
    """Truncation range motivated by the particle support at time t.

    The naive estimate right edge ~ 2t underestimates rows above the
    rate-splitting level, whose particles also ride pushes from below; with
    m0 given, the analytic support edge of the scaled row is used instead
    (whichever is larger), padded by a fluctuation margin.
    """
    right = math.ceil(2 * t) + math.ceil(10 * math.sqrt(t)) + 10
    if m0 is not None and t > 0:
        sp = shape.ShapeParams(1.0, max(m0, 1) / t)
        edge = shape.support_right_edge(m / t, sp)
        right = max(right,
                    math.ceil(t * edge) + math.ceil(8 * math.sqrt(t)) + 10)
    return (-m - 10, right)


@dataclass(frozen=True)
class _Geometry:
    """One contour pair: w-circle |w| = r0 and z-circle around zc.

    nested means the w-circle encloses the z-circle; the kernel value is
    then the plain double integral minus, for m1 < m2 and x2 >= x1, the
    residue-at-infinity coefficient of the level-polynomial ratio (the
    single integral around the origin and the w=z crossing residues add up
    to exactly that coefficient). r0s carries the separate radius used for
    the single integral in the non-nested arrangement.
    """

    r0: float
    zc: float
    zr: float
    nested: bool
    r0s: float | None = None


@lru_cache(maxsize=8192)
def _tuned_geometry(m1, m2, pw1, pw2, kp):
    """Contour search minimising the two peak integrand magnitudes.

    pw1 is the power of 1/w at the block centre (x1+m1+1), pw2 the power of
    z (x2+m2). The integrand magnitude on each circle varies like
    exp(power * log r) against the exponential damping, so the peak is
    minimised near radii passing through the real saddle; the w-circle may
    sit inside the z-circle's inner gap or fully outside it, whichever
    costs less. Probe grids are coarse; only the exponential scale matters.
    """
    reach_max = max(6.0, 3.0 * max(pw1, pw2, 1) / max(kp.t, 1.0))
    phi = np.linspace(0.0, _TWO_PI, 48, endpoint=False)
    ey = np.exp(1j * phi)

    r0_grid = np.geomspace(0.02, 1.4 * reach_max, 72)
    w = r0_grid[:, None] * ey[None, :]
    val1 = (kp.t * w.real + _log_p(w, m1, kp.m0).real
            - pw1 * np.log(r0_grid)[:, None])
    slack1 = val1.max(axis=1)

    lefts = np.array([0.08, 0.3, 0.55, 0.8, 0.93])
    rights = np.geomspace(2.05, reach_max, 24)
    best = {True: None, False: None}
    for left in lefts:
        zc = (left + rights) / 2
        zr = (rights - left) / 2
        z = zc[:, None] + zr[:, None] * ey[None, :]
        val2 = (pw2 * np.log(np.abs(z)) - kp.t * z.real
                - _log_p(z, m2, kp.m0).real)
        slack2 = val2.max(axis=1)
        for i, rt in enumerate(rights):
            inside = r0_grid <= left - 0.06
            outside = r0_grid >= rt * 1.04 + 0.04
            for nested, mask in ((False, inside), (True, outside)):
                if not np.any(mask):
                    continue
                j = int(np.argmin(np.where(mask, slack1, np.inf)))
                tot = slack1[j] + slack2[i]
                if best[nested] is None or tot < best[nested][0]:
                    best[nested] = (tot, float(r0_grid[j]), float(zc[i]),
                                    float(zr[i]))
    # smaller circles carry a lower roundoff floor; only go nested when it
    # saves a substantial amount of integrand headroom
    if best[False] is not None and (
            best[True] is None or best[False][0] <= best[True][0] + 2.0):
        _, r0, zc, zr = best[False]
        nested = False
    else:
        _, r0, zc, zr = best[True]
        nested = True

    r0s = None
    if m1 < m2 and not nested:
        rs = np.linspace(0.05, 0.92, 30)
        ws = rs[:, None] * ey[None, :]
        d_mid = pw2 - (pw1 - 1)
        vals = (_log_p(ws, m1, kp.m0).real - _log_p(ws, m2, kp.m0).real
                + (d_mid - 1) * np.log(rs)[:, None])
        r0s = float(rs[np.argmin(vals.max(axis=1))])
    return _Geometry(r0, zc, zr, nested, r0s)


@lru_cache(maxsize=256)
def _ln_residue_coeffs(a, b, kmax):
    """log coefficients of (1-x)^{-a} (1-2x)^{-b}, all terms positive."""
    from scipy.special import gammaln, logsumexp

    ks = np.arange(kmax + 1, dtype=float)
    la = np.full(kmax + 1, -np.inf)
    lb = np.full(kmax + 1, -np.inf)
    if a > 0:
        la = gammaln(a + ks) - gammaln(ks + 1) - gammaln(a)
    else:
        la[0] = 0.0
    if b > 0:
        lb = gammaln(b + ks) - gammaln(ks + 1) - gammaln(b) + ks * math.log(2.0)
    else:
        lb[0] = 0.0
    out = np.empty(kmax + 1)
    for k in range(kmax + 1):
        out[k] = logsumexp(la[: k + 1] + lb[k::-1])
    return out


def _fixed_geometry(kp):
    return _Geometry(kp.gamma0_radius, kp.gamma12_center, kp.gamma12_radius,
                     nested=False, r0s=kp.gamma0_radius)


def _nodes(geom, n):
    theta = _TWO_PI * np.arange(n) / n
    rot = np.exp(1j * theta)
    w = geom.r0 * rot
    dw = (_TWO_PI / n) * 1j * w
    z = geom.zc + geom.zr * rot
    dz = (_TWO_PI / n) * 1j * (z - geom.zc)
    return theta, w, dw, z, dz


def _scaled_add(m_a, s_a, m_b, s_b):
    """Elementwise (mantissa, ln-scale) addition with exponent alignment."""
    s_a = np.where(m_a == 0, -np.inf, s_a)
    s_b = np.where(m_b == 0, -np.inf, s_b)
    s = np.maximum(s_a, s_b)
    s_safe = np.where(np.isfinite(s), s, 0.0)
    out = (m_a * np.exp(np.minimum(s_a - s_safe, 0.0))
           + m_b * np.exp(np.minimum(s_b - s_safe, 0.0)))
    return out, np.where(np.isfinite(s), s_safe, 0.0)


def _grid_block(m1, m2, xs1, xs2, kp, n, geom):
    """Kernel on xs1 x xs2 at one contour pair, as (mant, ln-scale) arrays.

    The w-circle is centred at the origin, so the x1 dependence of the
    integrand magnitude is a constant shift per row and the row matrix is a
    pure phase times one node profile; the z-circle magnitude profile
    depends on x2 and gets its own per-column reference.

    In the nested arrangement the m1 < m2 single integral and the w = z
    crossing residues collapse to an exact series coefficient; otherwise
    the single integral is quadratured on its own circle.
    """
    xs1 = np.asarray(xs1, dtype=np.int64)
    xs2 = np.asarray(xs2, dtype=np.int64)
    theta, w, dw, z, dz = _nodes(geom, n)
    ln_r0 = math.log(geom.r0)

    law = kp.t * w + _log_p(w, m1, kp.m0)
    ref_a0 = float(law.real.max())
    a0 = np.exp(law - ref_a0) * dw
    pow1 = xs1 + m1 + 1
    A = np.exp(-1j * np.outer(pow1, theta)) * a0[None, :]
    ref_a = ref_a0 - pow1 * ln_r0

    pow2 = xs2 + m2
    lb = np.outer(pow2, np.log(z)) + (-kp.t * z - _log_p(z, m2, kp.m0))[None, :]
    ref_b = lb.real.max(axis=1)
    B = np.exp(lb - ref_b[:, None]) * dz[None, :]

    C = 1.0 / (w[:, None] - z[None, :])
    mant = (A @ (C @ B.T)) / (-_TWO_PI ** 2)  # 1/(2 pi i)^2 = -1/(4 pi^2)
    lsc = ref_a[:, None] + ref_b[None, :]

    if m1 >= m2:
        return mant, lsc

    d = pow2[None, :] - (xs1 + m1)[:, None]  # exponent of w is d - 1
    if geom.nested:
        k = xs2[None, :] - xs1[:, None]
        kmax = int(k.max())
        if kmax >= 0:
            a = min(m2, kp.m0) - min(m1, kp.m0)
            b = max(m2 - kp.m0, 0) - max(m1 - kp.m0, 0)
            ln_g = _ln_residue_coeffs(a, b, kmax)
            hit = k >= 0
            g_mant = np.where(hit, -1.0, 0.0).astype(complex)
            g_lsc = np.where(hit, ln_g[np.maximum(k, 0)], 0.0)
            mant, lsc = _scaled_add(mant, lsc, g_mant, g_lsc)
        return mant, lsc

    ws = geom.r0s * np.exp(1j * theta)
    dws = (_TWO_PI / n) * 1j * ws
    lsw = _log_p(ws, m1, kp.m0) - _log_p(ws, m2, kp.m0)
    ref_s0 = float(lsw.real.max())
    s0 = np.exp(lsw - ref_s0) * dws
    d_lo, d_hi = int(d.min()), int(d.max())
    d_uniq = np.arange(d_lo, d_hi + 1)
    vals = np.exp(1j * np.outer(d_uniq - 1, theta)) @ s0
    vals *= 1j / _TWO_PI  # -1/(2 pi i); the dθ weight is folded into dw
    s_mant = vals[d - d_lo]
    s_lsc = ref_s0 + (d - 1) * math.log(geom.r0s)
    return _scaled_add(mant, lsc, s_mant, s_lsc)


def _grid_eval(m1, m2, xs1, xs2, kp, n):
    """Kernel grid with per-block tuned contours (or the fixed ones)."""
    xs1 = np.asarray(xs1, dtype=np.int64)
    xs2 = np.asarray(xs2, dtype=np.int64)
    if not kp.adaptive_contours:
        return _grid_block(m1, m2, xs1, xs2, kp, n, _fixed_geometry(kp))
    mant = np.empty((xs1.size, xs2.size), dtype=complex)
    lsc = np.empty((xs1.size, xs2.size), dtype=float)
    for i in range(0, xs1.size, _CHUNK):
        si = slice(i, min(i + _CHUNK, xs1.size))
        for j in range(0, xs2.size, _CHUNK):
            sj = slice(j, min(j + _CHUNK, xs2.size))
            pw1 = int(np.median(xs1[si])) + m1 + 1
            pw2 = int(np.median(xs2[sj])) + m2
            geom = _tuned_geometry(m1, m2, pw1, pw2, kp)
            mant[si, sj], lsc[si, sj] = _grid_block(
                m1, m2, xs1[si], xs2[sj], kp, n, geom)
    return mant, lsc


def _entry(m1, m2, x1, x2, kp, n):
    mant, lsc = _grid_eval(m1, m2, [x1], [x2], kp, n)
    return complex(mant[0, 0]), float(lsc[0, 0])


def kernel_K(x1, m1, x2, m2, kp):
    """Kernel entry as a ScaledComplex, nodes doubled until stable.

    Stops when the relative change between doublings falls below kp.tol,
    or when the change stagnates at the roundoff floor (accepted up to
    1e-4 relative). Raises QuadratureError with the last two estimates
    when the node cap is reached without either.
    """
    if m1 < 1 or m2 < 1:
        raise ValueError("levels must be >= 1")
    n = kp.quad_nodes
    prev_m, prev_s = _entry(m1, m2, x1, x2, kp, n)
    rel_prev = None
    while 2 * n <= kp.node_cap:
        n *= 2
        cur_m, cur_s = _entry(m1, m2, x1, x2, kp, n)
        if abs(cur_m) < _ZERO_FLOOR and abs(prev_m) < _ZERO_FLOOR:
            return ScaledComplex.zero()
        cur = ScaledComplex.from_ln_scale(cur_m, cur_s)
        prev = ScaledComplex.from_ln_scale(prev_m, prev_s)
        rel = cur.rel_diff(prev)
        if rel < kp.tol:
            return cur
        if (rel_prev is not None and rel <= 1e-4
                and (rel_prev <= 1e-4 or rel <= 1e-2 * rel_prev)):
            return cur
        prev_m, prev_s = cur_m, cur_s
        rel_prev = rel
    if rel <= 1e-4:
        return cur
    raise QuadratureError(
        f"kernel quadrature did not converge below {kp.tol} at "
        f"{kp.node_cap} nodes for ({x1},{m1},{x2},{m2})",
        last=ScaledComplex.from_ln_scale(cur_m, cur_s),
        previous=ScaledComplex.from_ln_scale(prev_m, prev_s))


def _values_from_scaled(mant, lsc):
    """Collapse (mantissa, ln-scale) to plain complex values.

    Entries whose mantissa is at the roundoff floor are exact zeros at this
    scale; a genuine value too large for double range raises.
    """
    out = np.zeros_like(mant)
    live = np.abs(mant) > 1e-290
    if np.any(lsc[live] > 690):
        raise QuadratureError("kernel value overflows double range")
    out[live] = mant[live] * np.exp(lsc[live])
    return out


def _diag_values(m, xs, kp, n):
    """Diagonal entries K(x,m,x,m) over xs as plain complex values."""
    xs = np.asarray(xs, dtype=np.int64)
    out = np.empty(xs.size, dtype=complex)
    for i in range(0, xs.size, _CHUNK):
        s = slice(i, min(i + _CHUNK, xs.size))
        block = xs[s]
        if kp.adaptive_contours:
            pw = int(np.median(block)) + m
            geom = _tuned_geometry(m, m, pw + 1, pw, kp)
        else:
            geom = _fixed_geometry(kp)
        mant, lsc = _grid_block(m, m, block, block, kp, n, geom)
        idx = np.arange(block.size)
        out[s] = _values_from_scaled(mant[idx, idx], lsc[idx, idx])
    return out


def _converge_doubling(assemble, kp, scale_of, stagnation_tol):
    """Double nodes until the assembled quantity settles or stagnates.

    Spectral convergence drops the difference by large factors per
    doubling, but different blocks of a big assembly resolve at different
    node counts, so single steps can be non-monotone. Convergence is one
    step below kp.tol, or two consecutive steps at the roundoff plateau
    (stagnation_tol, relative to the quantity's scale).
    """
    n = kp.quad_nodes
    prev = assemble(n)
    d_prev = None
    while 2 * n <= kp.node_cap:
        n *= 2
        cur = assemble(n)
        d = float(np.max(np.abs(cur - prev)))
        scale = scale_of(cur)
        if d <= kp.tol * scale:
            return cur, d
        if (d_prev is not None and d <= stagnation_tol * scale
                and (d_prev <= stagnation_tol * scale or d <= 1e-2 * d_prev)):
            return cur, d
        prev, d_prev = cur, d
    if d <= stagnation_tol * scale_of(cur):
        return cur, d
    raise QuadratureError(
        f"quadrature did not settle below tol at {kp.node_cap} nodes "
        f"(last difference {d:.2e})", last=cur, previous=prev)


def diagonal_profile(m, xs, kp):
    """Occupation probabilities K(x,m,x,m) along a row, node-adaptive.

    Imaginary parts are pure roundoff; they are checked against the
    convergence floor actually achieved (1e-9 at least, looser only when
    the quadrature itself could not do better).
    """
    cur, floor = _converge_doubling(
        lambda n: _diag_values(m, xs, kp, n), kp,
        scale_of=lambda v: max(1.0, float(np.max(np.abs(v)))),
        stagnation_tol=1e-5)
    imag = float(np.max(np.abs(cur.imag)))
    if imag > max(_IMAG_TOL, 3.0 * floor):
        raise QuadratureError(
            f"diagonal imaginary residual {imag:.2e} exceeds the "
            f"convergence floor {floor:.2e}")
    return cur.real


def mean_height_kernel(x, m, kp, window=None):
    """E h(x, m) = sum of diagonal kernel entries over x' >= x.

    The window must reach beyond the rightmost appreciable density; the last
    included term is checked against 1e-12 and TruncationError raised
    otherwise.
    """
    lo, hi = window if window is not None else (x, default_window(kp.t, m, kp.m0)[1])
    xs = np.arange(max(x, lo), hi + 1)
    if xs.size == 0:
        return 0.0
    vals = diagonal_profile(m, xs, kp)
    if abs(vals[-1]) >= 1e-12:
        raise TruncationError(
            f"last diagonal term {vals[-1]:.3e} at x={int(xs[-1])} not "
            "negligible; enlarge the window")
    return float(vals.sum())


_PRODUCT_CUTOFF = 1e-14


def _product_sum(m1, m2, xs1, xs2, kp, n):
    """sum over xs1 x xs2 of K(x1,m1,x2,m2) K(x2,m2,x1,m1).

    Off-diagonal products equal minus the covariance of the two occupation
    indicators, so their magnitude is bounded by the product of the
    occupation standard deviations. Pairs bounded below the cutoff are
    exact zeros at working precision and are skipped, which also stops
    amplified quadrature noise from the empty far field entering the sum.
    The bound does not apply to a site paired with itself; that term is
    always kept.
    """
    xs1 = np.asarray(xs1, dtype=np.int64)
    xs2 = np.asarray(xs2, dtype=np.int64)
    rho1 = _diag_values(m1, xs1, kp, n).real
    rho2 = rho1 if (m2 == m1 and xs2.shape == xs1.shape
                    and np.array_equal(xs2, xs1)) \
        else _diag_values(m2, xs2, kp, n).real
    sig1 = np.sqrt(np.clip(rho1 * (1.0 - rho1), 0.0, None))
    sig2 = np.sqrt(np.clip(rho2 * (1.0 - rho2), 0.0, None))
    mask = np.outer(sig1, sig2) >= _PRODUCT_CUTOFF
    if m1 == m2:
        mask |= xs1[:, None] == xs2[None, :]
    if not mask.any():
        return 0j
    live1 = mask.any(axis=1)
    live2 = mask.any(axis=0)
    m12, s12 = _grid_eval(m1, m2, xs1[live1], xs2[live2], kp, n)
    m21, s21 = _grid_eval(m2, m1, xs2[live2], xs1[live1], kp, n)
    prod = _values_from_scaled(m12 * m21.T, s12 + s21.T)
    return complex(prod[mask[np.ix_(live1, live2)]].sum())


def complement_residual(x1, m1, m2, kp, window=None):
    """Deviation of the x2-sum of K(x1,.,x2)K(x2,.,x1) from its projection
    target (the diagonal entry when m1 = m2, zero otherwise)."""
    lo, hi = window if window is not None else default_window(kp.t, m2, kp.m0)
    xs2 = np.arange(lo, hi + 1)

    def assemble(n):
        s = _product_sum(m1, m2, [x1], xs2, kp, n)
        if m1 == m2:
            s -= complex(_diag_values(m1, np.array([x1]), kp, n)[0])
        return s

    return abs(_adaptive_scalar(assemble, kp))


def R_direct(y1, m1, y2, m2, kp, window=None):
    """Height covariance Cov(h(y1,m1), h(y2,m2)) at finite time.

    Double sum of kernel products, case-split on the sign of y1 - y2;
    windows default to the particle-support heuristic and the node count
    doubles until the assembled sum settles.
    """
    if window is None:
        w1, w2 = default_window(kp.t, m1, kp.m0), default_window(kp.t, m2, kp.m0)
    else:
        w1 = w2 = window
    if y1 >= y2:
        xs1 = np.arange(y1, w1[1] + 1)
        xs2 = np.arange(w2[0], y2)
    else:
        xs1 = np.arange(w1[0], y1)
        xs2 = np.arange(y2, w2[1] + 1)
    if xs1.size == 0 or xs2.size == 0:
        return 0.0
    val = _adaptive_scalar(
        lambda n: _product_sum(m1, m2, xs1, xs2, kp, n), kp,
        rel_floor=1e-2, stagnation_tol=1e-3)
    return float(val.real)


def _adaptive_scalar(assemble, kp, rel_floor=1.0, stagnation_tol=1e-6):
    """Double quadrature nodes until an assembled complex scalar settles.

    Convergence is relative to max(|value|, rel_floor) so near-zero targets
    (residuals) are not chased into roundoff.
    """
    val, _ = _converge_doubling(
        assemble, kp,
        scale_of=lambda v: max(abs(v), rel_floor),
        stagnation_tol=stagnation_tol)
    return val


def green_limit(p1, p2, sp):
    """Asymptotic covariance -log|(O1-O2)/(O1-conj O2)| / (2 pi^2)."""
    w1 = shape.omega(p1, sp)
    w2 = shape.omega(p2, sp)
    if w1 is None or w2 is None:
        raise shape.DomainError("both points must lie in the liquid region")
    if w1 == w2:
        raise CoincidentPointsError(
            "covariance limit diverges at coincident points")
    return -math.log(abs((w1 - w2) / (w1 - w2.conjugate()))) / (2 * math.pi ** 2)


def gff_green(w1, w2):
    """Dirichlet Green's function of the upper half plane."""
    w1, w2 = complex(w1), complex(w2)
    if w1.imag <= 0 or w2.imag <= 0:
        raise ValueError("points must lie in the open upper half plane")
    if w1 == w2:
        raise CoincidentPointsError("Green's function diverges on the diagonal")
    return -math.log(abs((w1 - w2) / (w1 - w2.conjugate()))) / (2 * math.pi)
