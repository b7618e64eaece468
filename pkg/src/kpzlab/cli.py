"""Command-line harness: configuration, subcommands, seeding, file emission.

Subcommands: simulate (one trajectory), shape (limit-shape fields and
boundary), kernel (entries, identity residuals, covariance tables),
fluctuations (Monte Carlo ensembles), report (cross-tabulate persisted
records against analytic targets). Flags override TOML config-file values;
unknown config keys are rejected. KPZLAB_THREADS provides the worker-count
fallback. Timestamps live in a separate metadata block so content hashes
stay stable.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field, fields

import numpy as np

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

from . import fluct, growth, kernel, shape

__all__ = ["RunConfig", "parse_config", "dispatch", "main"]


@dataclass
class RunConfig:
    """Resolved run parameters shared by the subcommands."""

    L: int = 20
    tau: float = 1.0
    mu0: float = 1.5
    rate_slow: float = 1.0
    rate_fast: float = 2.0
    replicas: int = 100
    seed: int = 0
    workers: int = 0  # 0: use KPZLAB_THREADS or 1
    horizon: float | None = None
    levels: int | None = None
    quad_nodes: int = 512
    quad_tol: float = 1e-10
    gamma0_radius: float = 0.3
    gamma12_radius: float = 1.1
    probes: list = field(default_factory=list)    # [(x, m), ...]
    bumps: list = field(default_factory=list)     # [(re, im, radius, amp)]
    out_dir: str = "."
    keep_raw: bool = False
    grid: int = 60
    xi_range: tuple = (-2.0, 4.0)
    mu_range: tuple = (0.1, 3.0)

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be >= 1")
        if self.tau <= 0 or self.mu0 <= 0:
            raise ValueError("tau and mu0 must be positive")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")

    @property
    def worker_count(self):
        if self.workers > 0:
            return self.workers
        env = os.environ.get("KPZLAB_THREADS", "")
        return int(env) if env.isdigit() and int(env) > 0 else 1

    @property
    def t(self):
        return self.horizon if self.horizon is not None else self.L * self.tau

    @property
    def m0(self):
        return max(1, math.floor(self.L * self.mu0))

    @property
    def rates_analytic(self):
        return self.rate_slow == 1.0 and self.rate_fast == 2.0

    def shape_params(self):
        return shape.ShapeParams(self.tau, self.mu0)

    def kernel_params(self):
        return kernel.KernelParams(
            t=self.t, m0=self.m0, quad_nodes=self.quad_nodes,
            tol=self.quad_tol, gamma0_radius=self.gamma0_radius,
            gamma12_radius=self.gamma12_radius)


def _parse_probes(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        x, m = part.split(":")
        out.append((int(x), int(m)))
    return out


def _parse_bumps(text):
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        vals = [float(v) for v in part.split(",")]
        if len(vals) == 2:
            vals += [1.0, 1.0]
        elif len(vals) == 3:
            vals.append(1.0)
        if len(vals) != 4:
            raise ValueError("bump spec is re,im[,radius[,amplitude]]")
        out.append(tuple(vals))
    return out


_FLAG_TYPES = {
    "L": int, "tau": float, "mu0": float, "rate_slow": float,
    "rate_fast": float, "replicas": int, "seed": int, "workers": int,
    "horizon": float, "levels": int, "quad_nodes": int, "quad_tol": float,
    "gamma0_radius": float, "gamma12_radius": float, "out_dir": str,
    "keep_raw": bool, "grid": int,
}


def parse_config(argv=None):
    """Parse CLI arguments plus an optional TOML config file into RunConfig.

    Flags override file values; unknown keys in the file are rejected with
    a usage error.
    """
    parser = argparse.ArgumentParser(
        prog="kpzlab",
        description="Two-rate interlacing growth laboratory")
    parser.add_argument("command", choices=[
        "simulate", "shape", "kernel", "fluctuations", "report"])
    parser.add_argument("--config", help="TOML config file")
    for name, typ in _FLAG_TYPES.items():
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            parser.add_argument(flag, action="store_true", default=None,
                                dest=name)
        else:
            parser.add_argument(flag, type=typ, default=None, dest=name)
    parser.add_argument("--probes", type=str, default=None,
                        help="comma-separated x:m pairs")
    parser.add_argument("--bumps", type=str, default=None,
                        help="semicolon-separated re,im,radius,amplitude")
    parser.add_argument("--xi-range", type=str, default=None)
    parser.add_argument("--mu-range", type=str, default=None)
    parser.add_argument("--identity", action="store_true",
                        help="kernel: emit complementation residual table")
    parser.add_argument("--records", nargs="*", default=None,
                        help="report: EnsembleRecord JSON files")
    args = parser.parse_args(argv)

    known = {f.name for f in fields(RunConfig)}
    values = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                doc = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            parser.error(f"cannot read config file: {exc}")
        for key, val in doc.items():
            if key not in known:
                parser.error(f"unknown config key: {key!r}")
            if key == "probes":
                val = [tuple(p) for p in val]
            if key == "bumps":
                val = [tuple(b) for b in val]
            if key in ("xi_range", "mu_range"):
                val = tuple(val)
            values[key] = val
    for name in _FLAG_TYPES:
        if getattr(args, name) is not None:
            values[name] = getattr(args, name)
    if args.probes is not None:
        values["probes"] = _parse_probes(args.probes)
    if args.bumps is not None:
        values["bumps"] = _parse_bumps(args.bumps)
    for rng_name in ("xi_range", "mu_range"):
        raw = getattr(args, rng_name)
        if raw is not None:
            a, b = (float(v) for v in raw.split(","))
            values[rng_name] = (a, b)
    try:
        cfg = RunConfig(**values)
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))
    return cfg, args


def _meta():
    return {"timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "engine": growth.ENGINE}


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def cmd_simulate(cfg):
    levels = cfg.levels if cfg.levels is not None else max(
        cfg.L * max(1, math.ceil(2 * cfg.mu0)), 4)
    pc = growth.init_packed(levels, cfg.m0, cfg.rate_slow, cfg.rate_fast)
    rng = growth.RngStream(cfg.seed, 0)
    horizon = cfg.horizon if cfg.horizon is not None else cfg.L * cfg.tau
    growth.run_until(pc, horizon, rng)
    os.makedirs(cfg.out_dir, exist_ok=True)
    snap_path = os.path.join(cfg.out_dir, "config_snapshot.json")
    doc = pc.to_snapshot()
    doc["metadata"] = _meta()
    with open(snap_path, "w") as fh:
        json.dump(doc, fh)
    csv_path = os.path.join(cfg.out_dir, "height_field.csv")
    growth.export_height_csv(pc, csv_path)
    print(f"wrote {snap_path} and {csv_path}")
    return 0


def cmd_shape(cfg):
    sp = cfg.shape_params()
    os.makedirs(cfg.out_dir, exist_ok=True)
    rows = []
    xis = np.linspace(*cfg.xi_range, cfg.grid)
    mus = np.linspace(*cfg.mu_range, cfg.grid)
    for mu in mus:
        for xi in xis:
            p = shape.ShapePoint(float(xi), float(mu))
            w = shape.omega(p, sp)
            if w is None:
                continue
            n1, n2, _ = shape.surface_normal(p, sp)
            rows.append([
                f"{xi:.8g}", f"{mu:.8g}", f"{w.real:.12g}", f"{w.imag:.12g}",
                f"{shape.limit_height(p, sp):.12g}",
                f"{shape.density(p, sp):.12g}",
                f"{n1:.12g}", f"{n2:.12g}",
                f"{shape.jacobian(p, sp):.12g}",
            ])
    field_path = os.path.join(cfg.out_dir, "shape_field.csv")
    _write_csv(field_path,
               ["xi", "mu", "re_omega", "im_omega", "height", "density",
                "n1", "n2", "jacobian"], rows)
    bnd = shape.boundary_curve(sp, max(cfg.grid * 4, 64))
    bnd_path = os.path.join(cfg.out_dir, "boundary.csv")
    _write_csv(bnd_path, ["omega_real", "xi", "mu", "branch"],
               [[f"{w:.10g}", f"{xi:.10g}", f"{mu:.10g}", br]
                for (w, xi, mu, br) in bnd])
    print(f"wrote {field_path} and {bnd_path}")
    return 0


def cmd_kernel(cfg, args):
    kp = cfg.kernel_params()
    os.makedirs(cfg.out_dir, exist_ok=True)
    sp = cfg.shape_params()
    if args.identity:
        rows = []
        probes = cfg.probes or [(0, max(1, cfg.m0 // 2))]
        for (x1, m1) in probes:
            for m2 in {max(1, m1 - 1), m1, m1 + 1}:
                res = kernel.complement_residual(x1, m1, m2, kp)
                rows.append([x1, m1, m2, f"{res:.6e}"])
        path = os.path.join(cfg.out_dir, "kernel_identity.csv")
        _write_csv(path, ["x1", "m1", "m2", "complement_residual"], rows)
        print(f"wrote {path}")
        return 0
    if len(cfg.probes) >= 2:
        rows = []
        for (y1, m1) in cfg.probes:
            for (y2, m2) in cfg.probes:
                if (y1, m1) >= (y2, m2):
                    continue
                r = kernel.R_direct(y1, m1, y2, m2, kp)
                g = kernel.green_limit((y1 / cfg.L, m1 / cfg.L),
                                       (y2 / cfg.L, m2 / cfg.L), sp)
                rows.append([y1, m1, y2, m2, f"{r:.8e}", f"{g:.8e}"])
        path = os.path.join(cfg.out_dir, "covariance_table.csv")
        _write_csv(path, ["y1", "m1", "y2", "m2", "R", "green_limit"], rows)
        print(f"wrote {path}")
        return 0
    rows = []
    probes = cfg.probes or [(0, max(1, cfg.m0 // 2))]
    for (x, m) in probes:
        v = kernel.kernel_K(x, m, x, m, kp)
        rows.append([x, m, x, m, f"{v.mantissa.real:.12g}",
                     f"{v.mantissa.imag:.12g}", v.exp10])
    path = os.path.join(cfg.out_dir, "kernel_entries.csv")
    _write_csv(path, ["x1", "m1", "x2", "m2", "re_K", "im_K", "exp10"], rows)
    print(f"wrote {path}")
    return 0


def cmd_fluctuations(cfg):
    bumps = [fluct.TestBump(complex(re, im), r, a)
             for (re, im, r, a) in cfg.bumps]
    rec = fluct.run_ensemble(
        L=cfg.L, tau=cfg.tau, mu0=cfg.mu0, probes=cfg.probes, bumps=bumps,
        n=cfg.replicas, seed=cfg.seed,
        rates=(cfg.rate_slow, cfg.rate_fast),
        workers=cfg.worker_count, levels=cfg.levels, meta=_meta())
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "ensemble.json")
    rec.save(path, keep_raw=cfg.keep_raw)
    if bumps:
        csv_path = os.path.join(cfg.out_dir, "pairing_samples.csv")
        np.savetxt(csv_path, rec.pairings[:, 0], fmt="%.12g",
                   header="pairing", comments="")
        print(f"wrote {path} and {csv_path}")
    else:
        print(f"wrote {path}")
    return 0


def cmd_report(cfg, args):
    paths = args.records or []
    if not paths:
        print(json.dumps({"error": "report needs --records files"}),
              file=sys.stderr)
        return 2
    sp = cfg.shape_params()
    report = {"records": [], "metadata": _meta()}
    for path in paths:
        rec = fluct.EnsembleRecord.load(path)
        sp_rec = shape.ShapeParams(rec.tau, rec.mu0)
        entry = {
            "path": path,
            "L": rec.L, "replicas": rec.n_replicas,
            "rates_analytic": rec.rates_analytic,
            "probes": [],
            "pairings": [],
        }
        if not rec.rates_analytic:
            entry["warning"] = ("rates differ from (1,2); analytic targets "
                                "do not apply")
        for i, (x, m) in enumerate(rec.probes):
            mean = float(rec.probe_heights[:, i].mean())
            se = float(rec.probe_heights[:, i].std(ddof=1)
                       / math.sqrt(rec.n_replicas)) if rec.n_replicas > 1 \
                else float("nan")
            item = {"probe": [x, m], "mc_mean": mean, "stderr": se}
            if rec.rates_analytic:
                p = shape.ShapePoint(x / rec.L, m / rec.L)
                try:
                    item["limit_height_scaled"] = shape.limit_height(p, sp_rec)
                    item["mc_mean_scaled"] = mean / rec.L
                except shape.DomainError:
                    item["limit_height_scaled"] = None
            entry["probes"].append(item)
        for j, bump in enumerate(rec.bumps):
            if rec.n_replicas < 2:
                continue
            samples = rec.pairings[:, j]
            norm, _ = fluct.sobolev_norm_sq(bump)
            item = {
                "bump": rec.to_json()["bumps"][j],
                "sample_var": float(samples.var(ddof=1)),
                "sobolev_norm_sq": norm,
            }
            if samples.size >= 1000:
                item["gaussianity"] = fluct.gaussianity_report(samples)
            entry["pairings"].append(item)
        report["records"].append(entry)
    os.makedirs(cfg.out_dir, exist_ok=True)
    out_path = os.path.join(cfg.out_dir, "report.json")
    with open(out_path, "w") as fh:
        json.dump(report, fh, indent=2)
    text_path = os.path.join(cfg.out_dir, "report.txt")
    with open(text_path, "w") as fh:
        for entry in report["records"]:
            fh.write(f"record {entry['path']}: L={entry['L']} "
                     f"n={entry['replicas']}\n")
            for item in entry["probes"]:
                fh.write(f"  probe {tuple(item['probe'])}: "
                         f"mean={item['mc_mean']:.4f} "
                         f"se={item['stderr']:.4f}")
                if item.get("limit_height_scaled") is not None:
                    fh.write(f" scaled={item['mc_mean_scaled']:.4f} "
                             f"limit={item['limit_height_scaled']:.4f}")
                fh.write("\n")
            for item in entry["pairings"]:
                fh.write(f"  pairing var={item['sample_var']:.4f} "
                         f"target={item['sobolev_norm_sq']:.4f}\n")
                if "gaussianity" in item:
                    g = item["gaussianity"]
                    fh.write(f"    gaussianity: skew={g['skewness']:.3f} "
                             f"kurt={g['excess_kurtosis']:.3f} "
                             f"ecf={g['ecf_sup_distance']:.3f} "
                             f"passed={g['passed']}\n")
    print(f"wrote {out_path} and {text_path}")
    return 0


def dispatch(cfg, args):
    """Run the selected pipeline; exit status 0 on success."""
    try:
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "shape":
            return cmd_shape(cfg)
        if args.command == "kernel":
            return cmd_kernel(cfg, args)
        if args.command == "fluctuations":
            return cmd_fluctuations(cfg)
        if args.command == "report":
            return cmd_report(cfg, args)
    except (kernel.QuadratureError, kernel.TruncationError,
            shape.DomainError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


def main(argv=None):
    cfg, args = parse_config(argv)
    return dispatch(cfg, args)


if __name__ == "__main__":
    sys.exit(main())
