"""Monte Carlo fluctuation statistics against the Gaussian free field.

The height fluctuations, pushed forward to the upper half plane by the
complex structure, should behave like the Gaussian free field: pairings of
the height field with smooth compactly supported test functions are
asymptotically centred Gaussians whose variance is the Dirichlet energy of
the test function. This module provides the discrete pairing, the
equivalent linear statistic, ensemble running with reproducible per-replica
streams, and the statistical reports used by the acceptance suite.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.stats import kurtosis, skew

from . import growth, kernel, shape

__all__ = [
    "TestBump",
    "PairingWeights",
    "EnsembleRecord",
    "bump_eval",
    "bump_laplacian",
    "sobolev_norm_sq",
    "pairing",
    "linear_f",
    "run_ensemble",
    "covariance_report",
    "gaussianity_report",
    "jackknife_stderr",
]


@dataclass(frozen=True)
class TestBump:
    """Radial C^2 bump amplitude*(1-u)^3, u = |z-center|^2/radius^2.

    The closed-form Laplacian avoids numerical differentiation inside the
    pairing. The support disk must sit strictly inside the upper half
    plane.
    """

    center: complex
    radius: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if complex(self.center).imag <= self.radius:
            raise ValueError("support must stay inside the upper half plane")


def bump_eval(bump, z):
    u = abs(complex(z) - complex(bump.center)) ** 2 / bump.radius ** 2
    if u >= 1.0:
        return 0.0
    return bump.amplitude * (1.0 - u) ** 3


def bump_laplacian(bump, z):
    u = abs(complex(z) - complex(bump.center)) ** 2 / bump.radius ** 2
    if u >= 1.0:
        return 0.0
    return 12.0 * bump.amplitude / bump.radius ** 2 * (1.0 - u) * (3.0 * u - 1.0)


def sobolev_norm_sq(bump, quad_resolution=4001):
    """Dirichlet energy of the bump, computed two independent ways.

    Returns (value, discrepancy): the gradient-square integral and the
    -phi*laplacian integral must agree (integration by parts); their
    relative discrepancy is a quadrature diagnostic and must stay below
    1e-6.
    """
    r = bump.radius
    s = np.linspace(0.0, r, quad_resolution)
    u = (s / r) ** 2
    dphi = -3.0 * bump.amplitude * (1 - u) ** 2 * (2 * s / r ** 2)
    grad_sq = 2 * math.pi * simpson(dphi ** 2 * s, x=s)
    phi = bump.amplitude * (1 - u) ** 3
    lap = 12.0 * bump.amplitude / r ** 2 * (1 - u) * (3 * u - 1)
    by_parts = -2 * math.pi * simpson(phi * lap * s, x=s)
    disc = abs(grad_sq - by_parts) / max(abs(grad_sq), 1e-300)
    if disc > 1e-6:
        raise RuntimeError(
            f"Sobolev quadrature discrepancy {disc:.2e}; raise the "
            "resolution")
    return grad_sq, disc


class PairingWeights:
    """Precomputed lattice weights of the discrete Sobolev pairing.

    weight(x, m) = -(sqrt(pi)/L^2) * lap(bump)(Omega(x/L, m/L)) * J(x/L, m/L)
    on lattice points of the scaled liquid region; zero off the bump
    support. The pairing of a field is then a plain weighted sum, and the
    equivalent linear statistic uses the row-wise prefix sums.
    """

    def __init__(self, bump, L, sp):
        self.bump = bump
        self.L = int(L)
        self.sp = sp
        self.rows = {}
        self._build()

    def _build(self):
        c, r = complex(self.bump.center), self.bump.radius
        phis = np.linspace(0, 2 * math.pi, 721)
        disk = c + r * np.exp(1j * phis)
        pts = [shape.inverse_omega(w, self.sp) for w in disk]
        pts.append(shape.inverse_omega(c, self.sp))
        xi_lo = min(p.xi for p in pts) - 2.0 / self.L
        xi_hi = max(p.xi for p in pts) + 2.0 / self.L
        mu_lo = max(min(p.mu for p in pts) - 2.0 / self.L, 1.0 / self.L)
        mu_hi = max(p.mu for p in pts) + 2.0 / self.L
        pref = -math.sqrt(math.pi) / self.L ** 2
        for m in range(max(1, math.floor(self.L * mu_lo)),
                       math.ceil(self.L * mu_hi) + 1):
            xs, ws = [], []
            for x in range(math.floor(self.L * xi_lo),
                           math.ceil(self.L * xi_hi) + 1):
                p = shape.ShapePoint(x / self.L, m / self.L)
                w = shape.omega(p, self.sp)
                if w is None:
                    continue
                lap = bump_laplacian(self.bump, w)
                if lap == 0.0:
                    continue
                xs.append(x)
                ws.append(pref * lap * shape.jacobian(p, self.sp))
            if xs:
                self.rows[m] = (np.array(xs), np.array(ws))

    @property
    def max_level(self):
        return max(self.rows) if self.rows else 0

    def pairing_of_config(self, cfg):
        """Pairing of the configuration's height field, via prefix sums."""
        h = growth.height_field(cfg)
        total = 0.0
        for m, (xs, ws) in self.rows.items():
            total += float(np.dot(ws, h.row_heights(m, xs)))
        return total

    def linear_statistic(self, cfg):
        """X_f over the configuration for the equivalent statistic f."""
        total = 0.0
        for m, (xs, ws) in self.rows.items():
            prefix = np.cumsum(ws)
            pos = cfg.row(m)
            idx = np.searchsorted(xs, pos, side="right") - 1
            good = idx >= 0
            total += float(prefix[idx[good]].sum())
        return total


def pairing(field, bump, L, sp, weights=None):
    """Discrete Sobolev pairing of a lattice field with a test bump.

    field is a callable (x, m) -> value defined on all lattice points of
    the scaled liquid region where the pushed-forward Laplacian is nonzero.
    """
    pw = weights if weights is not None else PairingWeights(bump, L, sp)
    total = 0.0
    for m, (xs, ws) in pw.rows.items():
        for x, w in zip(xs, ws):
            total += w * field(int(x), int(m))
    return total


def linear_f(bump, L, sp, weights=None):
    """The equivalent linear-statistic summand f with X_f = <h, bump>.

    Returns a callable f(x, m), equal to the row-wise prefix sums of the
    pairing weights and constant to the right of the support on each row.
    """
    pw = weights if weights is not None else PairingWeights(bump, L, sp)
    prefixes = {m: (xs, np.cumsum(ws)) for m, (xs, ws) in pw.rows.items()}

    def f(x, m):
        if m not in prefixes:
            return 0.0
        xs, prefix = prefixes[m]
        i = np.searchsorted(xs, x, side="right") - 1
        return float(prefix[i]) if i >= 0 else 0.0

    return f


@dataclass
class EnsembleRecord:
    """Persisted Monte Carlo run: parameters, probes, per-replica samples."""

    L: int
    tau: float
    mu0: float
    rate_slow: float
    rate_fast: float
    master_seed: int
    n_replicas: int
    levels: int
    probes: list
    bumps: list
    probe_heights: np.ndarray   # (n_replicas, n_probes)
    pairings: np.ndarray        # (n_replicas, n_bumps)
    meta: dict = field(default_factory=dict)

    @property
    def rates_analytic(self):
        return self.rate_slow == 1.0 and self.rate_fast == 2.0

    def summary(self):
        out = {
            "probe_mean": self.probe_heights.mean(axis=0).tolist(),
            "probe_var": self.probe_heights.var(axis=0, ddof=1).tolist()
            if self.n_replicas > 1 else None,
            "probe_mean_stderr": (
                self.probe_heights.std(axis=0, ddof=1)
                / math.sqrt(self.n_replicas)).tolist()
            if self.n_replicas > 1 else None,
            "pairing_mean": self.pairings.mean(axis=0).tolist()
            if self.pairings.size else [],
            "pairing_var": self.pairings.var(axis=0, ddof=1).tolist()
            if self.pairings.size and self.n_replicas > 1 else [],
            "rates_analytic": self.rates_analytic,
        }
        return out

    def to_json(self, keep_raw=True):
        doc = {
            "params": {
                "L": self.L, "tau": self.tau, "mu0": self.mu0,
                "rate_slow": self.rate_slow, "rate_fast": self.rate_fast,
                "levels": self.levels,
            },
            "master_seed": self.master_seed,
            "n_replicas": self.n_replicas,
            "probes": [list(p) for p in self.probes],
            "bumps": [{"center_re": complex(b.center).real,
                       "center_im": complex(b.center).imag,
                       "radius": b.radius, "amplitude": b.amplitude}
                      for b in self.bumps],
            "summary": self.summary(),
            "metadata": self.meta,
        }
        if keep_raw:
            doc["probe_heights"] = self.probe_heights.tolist()
            doc["pairings"] = self.pairings.tolist()
        return doc

    def save(self, path, keep_raw=True):
        with open(path, "w") as fh:
            json.dump(self.to_json(keep_raw), fh)

    @classmethod
    def from_json(cls, doc):
        params = doc["params"]
        bumps = [TestBump(complex(b["center_re"], b["center_im"]),
                          b["radius"], b["amplitude"])
                 for b in doc["bumps"]]
        n = doc["n_replicas"]
        ph = np.array(doc.get("probe_heights",
                              np.empty((n, len(doc["probes"])))))
        pr = np.array(doc.get("pairings", np.empty((n, len(bumps)))))
        if pr.ndim == 1:
            pr = pr.reshape(n, -1)
        return cls(L=params["L"], tau=params["tau"], mu0=params["mu0"],
                   rate_slow=params["rate_slow"],
                   rate_fast=params["rate_fast"],
                   master_seed=doc["master_seed"], n_replicas=n,
                   levels=params["levels"], probes=[tuple(p) for p in
                                                    doc["probes"]],
                   bumps=bumps, probe_heights=ph, pairings=pr,
                   meta=doc.get("metadata", {}))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _required_levels(L, sp, probes, weights_list):
    need = max((m for _, m in probes), default=1)
    for pw in weights_list:
        need = max(need, pw.max_level)
    return max(need, 1)


def _replica_batch(args):
    (L, tau, mu0, rates, levels, seed, idx_range, probes, weights) = args
    m0 = max(1, math.floor(L * mu0))
    horizon = L * tau
    ph = np.empty((len(idx_range), len(probes)))
    pr = np.empty((len(idx_range), len(weights)))
    for row, replica in enumerate(idx_range):
        cfg = growth.init_packed(levels, m0, rates[0], rates[1])
        rng = growth.RngStream(seed, replica)
        growth.run_until(cfg, horizon, rng)
        h = growth.height_field(cfg)
        ph[row] = [h(x, m) for (x, m) in probes]
        pr[row] = [pw.pairing_of_config(cfg) for pw in weights]
    return ph, pr


def run_ensemble(L, tau, mu0, probes=(), bumps=(), n=2, seed=0,
                 rates=(1.0, 2.0), workers=1, levels=None, meta=None):
    """Simulate n independent replicas to horizon L*tau and collect samples.

    Each replica runs on its own counter-derived stream, so the record is
    reproducible from (parameters, seed) alone and independent of the
    worker count; results are reduced in replica order.
    """
    if n < 1:
        raise ValueError("need at least one replica")
    sp = shape.ShapeParams(tau, mu0)
    weights = [PairingWeights(b, L, sp) for b in bumps]
    if levels is None:
        levels = _required_levels(L, sp, probes, weights)
    for _, m in probes:
        if m > levels:
            raise ValueError(f"probe level {m} above simulated levels "
                             f"{levels}")
    args = (L, tau, mu0, tuple(rates), levels, seed)
    batches = _split_indices(n, workers)
    tasks = [args + (rng_block, tuple(probes), tuple(weights))
             for rng_block in batches]
    if workers > 1 and len(batches) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_replica_batch, tasks))
    else:
        parts = [_replica_batch(t) for t in tasks]
    ph = np.vstack([p[0] for p in parts])
    pr = np.vstack([p[1] for p in parts])
    return EnsembleRecord(
        L=L, tau=tau, mu0=mu0, rate_slow=rates[0], rate_fast=rates[1],
        master_seed=seed, n_replicas=n, levels=levels,
        probes=[tuple(p) for p in probes], bumps=list(bumps),
        probe_heights=ph, pairings=pr, meta=dict(meta or {}))


def _split_indices(n, workers):
    """Contiguous replica blocks; ordering keeps the reduction deterministic."""
    blocks = max(1, min(int(workers) * 4, n))
    edges = np.linspace(0, n, blocks + 1, dtype=int)
    return [range(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def jackknife_stderr(samples, estimator):
    """Delete-one jackknife standard error of a statistic of the rows."""
    samples = np.asarray(samples)
    n = samples.shape[0]
    if n < 2:
        raise ValueError("need at least two samples")
    parts = np.array([estimator(np.delete(samples, i, axis=0))
                      for i in range(n)])
    return float(np.sqrt((n - 1) / n * np.sum((parts - parts.mean()) ** 2)))


def _cov_jackknife(xs, ys):
    """Covariance of two sample vectors with a moment-based jackknife error."""
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    n = xs.size
    cov = float(np.cov(xs, ys, ddof=1)[0, 1])
    # leave-one-out covariances from running sums
    sx, sy, sxy = xs.sum(), ys.sum(), (xs * ys).sum()
    loo = np.empty(n)
    for i in range(n):
        m = n - 1
        mx = (sx - xs[i]) / m
        my = (sy - ys[i]) / m
        loo[i] = ((sxy - xs[i] * ys[i]) - m * mx * my) / (m - 1)
    se = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return cov, se


def covariance_report(rec, probe1, probe2, kp, sp=None, n_sigma=4.0):
    """Sample covariance of two probes against the exact finite-time value
    and the asymptotic Green's function, with pass/fail flags."""
    probe1, probe2 = tuple(probe1), tuple(probe2)
    for p in (probe1, probe2):
        if p not in rec.probes:
            raise ValueError(f"probe {p} not registered in the record")
    if probe1 == probe2:
        raise ValueError("probes must be distinct")
    i, j = rec.probes.index(probe1), rec.probes.index(probe2)
    cov, se = _cov_jackknife(rec.probe_heights[:, i], rec.probe_heights[:, j])
    r_val = kernel.R_direct(probe1[0], probe1[1], probe2[0], probe2[1], kp)
    sp = sp if sp is not None else shape.ShapeParams(rec.tau, rec.mu0)
    g_val = kernel.green_limit(
        (probe1[0] / rec.L, probe1[1] / rec.L),
        (probe2[0] / rec.L, probe2[1] / rec.L), sp)
    return {
        "probe1": probe1, "probe2": probe2,
        "sample_cov": cov, "stderr": se,
        "R_direct": r_val, "green_limit": g_val,
        "n_sigma": n_sigma,
        "cov_matches_R": bool(abs(cov - r_val) <= n_sigma * se),
        "R_green_gap": abs(r_val - g_val),
        "rates_analytic": rec.rates_analytic,
    }


def gaussianity_report(samples, skew_tol=0.15, kurt_tol=0.25, ecf_tol=0.05,
                       t_grid=None):
    """Moments and empirical-characteristic-function Gaussianity checks.

    The ECF of the centred samples is compared with exp(-t^2 s^2 / 2) on
    t in [-3, 3], s^2 the sample variance. Thresholds are configurable;
    at least 1000 samples are required for the asymptotics to be
    meaningful.
    """
    samples = np.asarray(samples, float)
    if samples.size < 1000:
        raise ValueError("need at least 1000 samples")
    centred = samples - samples.mean()
    s2 = samples.var(ddof=1)
    ts = t_grid if t_grid is not None else np.linspace(-3.0, 3.0, 241)
    ecf = np.exp(1j * np.outer(ts, centred)).mean(axis=1)
    target = np.exp(-ts ** 2 * s2 / 2.0)
    sup = float(np.max(np.abs(ecf - target)))
    sk = float(skew(samples))
    ku = float(kurtosis(samples))
    return {
        "n": int(samples.size),
        "mean": float(samples.mean()),
        "variance": float(s2),
        "skewness": sk,
        "excess_kurtosis": ku,
        "ecf_sup_distance": sup,
        "thresholds": {"skew": skew_tol, "kurt": kurt_tol, "ecf": ecf_tol},
        "skew_ok": bool(abs(sk) <= skew_tol),
        "kurt_ok": bool(abs(ku) <= kurt_tol),
        "ecf_ok": bool(sup <= ecf_tol),
        "passed": bool(abs(sk) <= skew_tol and abs(ku) <= kurt_tol
                       and sup <= ecf_tol),
    }
