"""Limit shape of the two-rate growth model and its complex structure.

The scaled height surface is encoded by a map from the liquid region of the
(xi, mu) plane to the open upper half plane: the unique upper-half-plane
critical point of the action

    F(z) = tau*z + mu*log(z-1) - (xi+mu)*log(z)          for mu <= mu0,
    F(z) = tau*z + mu0*log(z-1) + (mu-mu0)*log(z-2)
           - (xi+mu)*log(z)                              for mu > mu0,

with principal logarithms. Clearing denominators of F' = 0 gives a
quadratic (lower branch) or cubic (upper branch) with real coefficients;
a root in the upper half plane exists exactly on the liquid region, and
the map is inverted in closed form. Everything here is a pure function.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "BranchCrossingError",
    "ShapeParams",
    "ShapePoint",
    "eval_F",
    "eval_F2",
    "omega",
    "inverse_omega",
    "in_domain",
    "boundary_point",
    "boundary_curve",
    "support_right_edge",
    "limit_height",
    "limit_height_or_frozen",
    "surface_normal",
    "density",
    "jacobian",
    "burgers_residual",
    "kpz_f",
    "pde_residual",
]

NEWTON_TOL = 1e-13
NEWTON_MAX_ITER = 60
JAC_FD_STEP = 1e-6
IM_CUTOFF = 1e-12


class DomainError(ValueError):
    """Raised when a point lies outside the liquid region."""


class BranchCrossingError(ValueError):
    """Raised when a finite-difference stencil straddles the mu0 line."""


@dataclass(frozen=True)
class ShapeParams:
    """Scaled time and scaled separating height."""

    tau: float
    mu0: float

    def __post_init__(self):
        if self.tau <= 0 or self.mu0 <= 0:
            raise ValueError("tau and mu0 must be positive")


@dataclass(frozen=True)
class ShapePoint:
    """Scaled coordinates: xi horizontal, mu vertical (mu > 0)."""

    xi: float
    mu: float

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")


def _as_point(p):
    if isinstance(p, ShapePoint):
        return p
    xi, mu = p
    return ShapePoint(float(xi), float(mu))


def eval_F(z, p, sp):
    """Action F(z) at the scaled point p, principal branch logarithms."""
    p = _as_point(p)
    z = complex(z)
    if z == 0 or z == 1 or (p.mu > sp.mu0 and z == 2):
        raise ZeroDivisionError("z sits on a branch point of F")
    if p.mu <= sp.mu0:
        return (sp.tau * z + p.mu * cmath.log(z - 1)
                - (p.xi + p.mu) * cmath.log(z))
    return (sp.tau * z + sp.mu0 * cmath.log(z - 1)
            + (p.mu - sp.mu0) * cmath.log(z - 2)
            - (p.xi + p.mu) * cmath.log(z))


def _dF(z, p, sp):
    if p.mu <= sp.mu0:
        return sp.tau + p.mu / (z - 1) - (p.xi + p.mu) / z
    return (sp.tau + sp.mu0 / (z - 1) + (p.mu - sp.mu0) / (z - 2)
            - (p.xi + p.mu) / z)


def eval_F2(z, p, sp):
    """Second derivative of the action."""
    p = _as_point(p)
    if p.mu <= sp.mu0:
        return -p.mu / (z - 1) ** 2 + (p.xi + p.mu) / z ** 2
    return (-sp.mu0 / (z - 1) ** 2 - (p.mu - sp.mu0) / (z - 2) ** 2
            + (p.xi + p.mu) / z ** 2)


def _newton_refine(z, p, sp):
    for _ in range(NEWTON_MAX_ITER):
        f = _dF(z, p, sp)
        if abs(f) <= NEWTON_TOL:
            return z
        d = eval_F2(z, p, sp)
        if d == 0:
            break
        z = z - f / d
    return z


def omega(p, sp):
    """Upper-half-plane critical point of F at p, or None outside the region.

    Lower branch solves tau*z^2 - (tau+xi)*z + (xi+mu) = 0; upper branch the
    cubic obtained by clearing denominators of F'. Candidate roots are
    polished by Newton iteration on F' itself, which keeps the residual
    at machine scale even near the frozen boundary where roots almost merge.
    """
    p = _as_point(p)
    tau, mu0 = sp.tau, sp.mu0
    if p.mu <= mu0:
        disc = (tau + p.xi) ** 2 - 4 * tau * (p.xi + p.mu)
        if disc >= 0:
            return None
        z = complex(tau + p.xi, math.sqrt(-disc)) / (2 * tau)
    else:
        coeffs = [
            tau,
            -3 * tau - p.xi,
            2 * tau - mu0 + 2 * p.mu + 3 * p.xi,
            -2 * (p.xi + p.mu),
        ]
        roots = np.roots(coeffs)
        z = None
        for r in roots:
            if r.imag > IM_CUTOFF and (z is None or r.imag > z.imag):
                z = complex(r)
        if z is None:
            return None
    z = _newton_refine(z, p, sp)
    if z.imag <= IM_CUTOFF:
        return None
    return z


def in_domain(p, sp):
    return omega(p, sp) is not None


def inverse_omega(w, sp):
    """Scaled point whose critical point is w (Im w > 0)."""
    w = complex(w)
    if w.imag <= 0:
        raise DomainError("inverse map is defined on the open upper half plane")
    tau, mu0 = sp.tau, sp.mu0
    a2 = abs(w) ** 2
    b2 = abs(w - 1) ** 2
    if b2 <= mu0 / tau:
        return ShapePoint(tau * (a2 - b2), tau * b2)
    c2 = abs(w - 2) ** 2
    mu = mu0 + 0.5 * c2 * (tau - mu0 / b2)
    xi = 0.5 * a2 * (tau + mu0 / b2) - mu
    return ShapePoint(xi, mu)


def boundary_point(w, sp):
    """Frozen-boundary point generated by the real double critical point w.

    For real w, F'(w) = F''(w) = 0 is linear in (xi, mu). On the branch
    with tau*(w-1)^2 <= mu0 the solution is the closed form
    (xi, mu) = tau*(2w - 1, (w-1)^2); otherwise the 2x2 system of the
    three-log action is solved. Returns (xi, mu, branch) or None when the
    system is singular or lands on the wrong branch.
    """
    tau, mu0 = sp.tau, sp.mu0
    w = float(w)
    if tau * (w - 1) ** 2 <= mu0:
        return tau * (2 * w - 1), tau * (w - 1) ** 2, "low"
    if w in (0.0, 1.0, 2.0):
        return None
    # rows: F'(w) = 0 and F''(w) = 0, unknowns (xi, mu)
    a = np.array([
        [-1.0 / w, 1.0 / (w - 2) - 1.0 / w],
        [1.0 / w ** 2, 1.0 / w ** 2 - 1.0 / (w - 2) ** 2],
    ])
    rhs = np.array([
        -tau - mu0 / (w - 1) + mu0 / (w - 2),
        mu0 / (w - 1) ** 2 - mu0 / (w - 2) ** 2,
    ])
    try:
        xi, mu = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        return None
    if mu <= mu0:
        return None
    return float(xi), float(mu), "high"


def boundary_curve(sp, n, omega_min=-2.0, omega_max=4.0):
    """Frozen-boundary polyline sampled through n real values of the map.

    Returns a list of (omega_real, xi, mu, branch) tuples with branch in
    {"low", "high"}; samples hitting a singular system are skipped.
    """
    if n < 2:
        raise ValueError("need at least two samples")
    out = []
    for w in np.linspace(omega_min, omega_max, n):
        pt = boundary_point(w, sp)
        if pt is not None:
            out.append((float(w), pt[0], pt[1], pt[2]))
    return out


def support_right_edge(mu, sp):
    """Largest xi of the liquid region on the row mu.

    Lower-branch rows end at tau + 2 sqrt(tau mu); above the separating
    height the edge comes from the high-branch boundary, found by bisection
    in the real double critical point (mu is increasing in it there).
    """
    tau, mu0 = sp.tau, sp.mu0
    if mu <= mu0:
        return tau + 2 * math.sqrt(tau * mu)
    # the right edge above mu0 sits on the arc of real double critical
    # points beyond both 2 and 1 + sqrt(mu0/tau), where mu is increasing
    lo = max(2.0, 1 + math.sqrt(mu0 / tau)) + 1e-9
    hi = max(4.0, 2 * lo)
    for _ in range(200):
        pt = boundary_point(hi, sp)
        if pt is not None and pt[1] >= mu:
            break
        hi *= 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        pt = boundary_point(mid, sp)
        if pt is None or pt[1] < mu:
            lo = mid
        else:
            hi = mid
    pt = boundary_point(hi, sp)
    return pt[0]


def limit_height(p, sp):
    """Scaled mean height Im F(Omega)/pi; DomainError outside the region."""
    p = _as_point(p)
    w = omega(p, sp)
    if w is None:
        raise DomainError(f"({p.xi}, {p.mu}) lies outside the liquid region")
    return eval_F(w, p, sp).imag / math.pi


def limit_height_or_frozen(p, sp):
    """Limit height extended by the frozen conventions.

    Left of the slanted line xi + mu <= 0 every particle of the row sits to
    the right, so the value is mu exactly; east of the liquid region it is
    0. On the lower branch the west facet is also exact: density 0 (value
    mu) for rows below tau, density 1 (value -xi) above. Facets of the
    upper branch adjacent to the cusp are not interpolated and raise.
    """
    p = _as_point(p)
    w = omega(p, sp)
    if w is not None:
        return eval_F(w, p, sp).imag / math.pi
    if p.xi + p.mu <= 0:
        return p.mu
    if p.mu <= sp.mu0:
        # liquid slice of the row is |xi - tau| < 2 sqrt(tau mu)
        half = 2 * math.sqrt(sp.tau * p.mu)
        if p.xi >= sp.tau + half:
            return 0.0
        if p.xi <= sp.tau - half:
            return p.mu if p.mu < sp.tau else -p.xi
    raise DomainError("frozen facet without a stated convention")


def surface_normal(p, sp):
    """Normal (n1, n2, 1) to the limit surface via the triangle angles.

    The triangle has vertices 0, sigma and Omega with sigma = 1 on the lower
    branch and 2 on the upper; n1 is the angle at 0 over pi and n2 minus the
    angle at Omega over pi.
    """
    p = _as_point(p)
    w = omega(p, sp)
    if w is None:
        raise DomainError(f"({p.xi}, {p.mu}) lies outside the liquid region")
    sigma = 1.0 if p.mu <= sp.mu0 else 2.0
    theta1 = cmath.phase(w)
    theta3 = cmath.phase(w - sigma) - theta1
    return (theta1 / math.pi, -theta3 / math.pi, 1.0)


def density(p, sp):
    """Bulk particle density arg(Omega)/pi, strictly inside (0, 1)."""
    p = _as_point(p)
    w = omega(p, sp)
    if w is None:
        raise DomainError(f"({p.xi}, {p.mu}) lies outside the liquid region")
    return cmath.phase(w) / math.pi


def jacobian(p, sp):
    """|det d(Re Omega, Im Omega)/d(xi, mu)|.

    Closed form 1/(4 tau^2 Im Omega) on the lower branch (from the explicit
    inverse map); Richardson-refined central differences of omega on the
    upper branch. Both stay positive on the open region.
    """
    p = _as_point(p)
    w = omega(p, sp)
    if w is None:
        raise DomainError(f"({p.xi}, {p.mu}) lies outside the liquid region")
    if p.mu <= sp.mu0:
        return 1.0 / (4 * sp.tau ** 2 * w.imag)
    return _jacobian_fd(p, sp, JAC_FD_STEP)


def _omega_strict(p, sp):
    w = omega(p, sp)
    if w is None:
        raise DomainError(f"({p.xi}, {p.mu}) lies outside the liquid region")
    return w


def _partials_fd(p, sp, h):
    d_xi = (_omega_strict(ShapePoint(p.xi + h, p.mu), sp)
            - _omega_strict(ShapePoint(p.xi - h, p.mu), sp)) / (2 * h)
    d_mu = (_omega_strict(ShapePoint(p.xi, p.mu + h), sp)
            - _omega_strict(ShapePoint(p.xi, p.mu - h), sp)) / (2 * h)
    return d_xi, d_mu


def _jacobian_fd(p, sp, h):
    def det_at(step):
        d_xi, d_mu = _partials_fd(p, sp, step)
        return abs(d_xi.real * d_mu.imag - d_xi.imag * d_mu.real)

    coarse, fine = det_at(h), det_at(h / 2)
    return (4 * fine - coarse) / 3


def _check_stencil(p, sp, h):
    if (p.mu - h - sp.mu0) * (p.mu + h - sp.mu0) <= 0:
        raise BranchCrossingError(
            "mu stencil straddles the separating line mu0")


def burgers_residual(p, sp, fd_step=1e-5):
    """Residual of the complex transport equation satisfied by the map.

    Central differences with the given step; the identity checked is
    dOmega/dmu = sigma/(sigma - Omega) * dOmega/dxi with sigma = 1 below
    the separating line and 2 above it. Points whose mu stencil crosses
    the line raise BranchCrossingError.
    """
    p = _as_point(p)
    _check_stencil(p, sp, fd_step)
    w = _omega_strict(p, sp)
    sigma = 1.0 if p.mu < sp.mu0 else 2.0
    d_xi, d_mu = _partials_fd(p, sp, fd_step)
    return d_mu - sigma / (sigma - w) * d_xi


def kpz_f(x, y):
    """Slope-dependent growth speed -sin(pi x) sin(pi (y-x)) / (pi sin(pi y))."""
    if float(y).is_integer():
        raise ZeroDivisionError("pole: sin(pi y) vanishes at integer y")
    s = math.sin(math.pi * y)
    return -math.sin(math.pi * x) * math.sin(math.pi * (y - x)) / (math.pi * s)


def pde_residual(p, sp, fd_step=1e-4):
    """dh/dtau - c*f(dh/dxi, dh/dmu) with c = 1 below mu0 and 2 above."""
    p = _as_point(p)
    _check_stencil(p, sp, fd_step)
    c = 1.0 if p.mu < sp.mu0 else 2.0
    h = fd_step
    dh_xi = (limit_height(ShapePoint(p.xi + h, p.mu), sp)
             - limit_height(ShapePoint(p.xi - h, p.mu), sp)) / (2 * h)
    dh_mu = (limit_height(ShapePoint(p.xi, p.mu + h), sp)
             - limit_height(ShapePoint(p.xi, p.mu - h), sp)) / (2 * h)
    dh_tau = (limit_height(p, ShapeParams(sp.tau + h, sp.mu0))
              - limit_height(p, ShapeParams(sp.tau - h, sp.mu0))) / (2 * h)
    return dh_tau - c * kpz_f(dh_xi, dh_mu)
