"""Exact continuous-time dynamics of the two-rate interlacing particle system.

Particles live on rows 1..M of a triangular array, row m holding m strictly
increasing integer positions that interlace with the neighbouring rows. A
jump attempt is blocked by the particle below-right and pushes the column of
particles above that share its position. Rows below ``m0`` carry the slow
clock rate, rows at or above it the fast one.

Event sampling is Gillespie-style: one exponential waiting time at the total
rate, then rate-proportional selection of the attempting particle. The inner
loop lives in a compiled extension when available, with a pure-Python twin
producing bit-identical trajectories.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from math import log1p

import numpy as np

try:
    from . import _engine as _default_engine

    ENGINE = "compiled"
except ImportError:  # pragma: no cover - depends on build environment
    from . import _engine_py as _default_engine

    ENGINE = "python"

__all__ = [
    "ENGINE",
    "HeightField",
    "JumpOutcome",
    "ParticleConfig",
    "RngStream",
    "attempt_jump",
    "height_field",
    "init_packed",
    "run_until",
    "step",
    "total_rate",
    "verify_interlacing",
]


@lru_cache(maxsize=64)
def _layout(M):
    """Flat triangular layout: row m occupies [row_start[m], row_start[m]+m)."""
    row_start = np.zeros(M + 2, dtype=np.int64)
    for m in range(1, M + 2):
        row_start[m] = row_start[m - 1] + (m - 1)
    n = int(row_start[M + 1])
    level_of = np.empty(n, dtype=np.int32)
    index_of = np.empty(n, dtype=np.int32)
    for m in range(1, M + 1):
        s = int(row_start[m])
        level_of[s:s + m] = m
        index_of[s:s + m] = np.arange(1, m + 1, dtype=np.int32)
    return row_start, level_of, index_of


class RngStream:
    """Counter-based uniform stream derived from (master_seed, replica_index).

    Identical (master_seed, replica_index) pairs reproduce identical event
    trajectories bit-for-bit. Uniforms are drawn in blocks from a Philox
    generator and handed to the event kernels in order.
    """

    def __init__(self, master_seed, replica_index=0, chunk=1 << 16):
        self.master_seed = int(master_seed)
        self.replica_index = int(replica_index)
        self._chunk = max(int(chunk), 2)
        ss = np.random.SeedSequence(self.master_seed,
                                    spawn_key=(self.replica_index,))
        self._gen = np.random.Generator(np.random.Philox(ss))
        self._buf = np.empty(0, dtype=np.float64)
        self._pos = 0

    def _refill(self):
        left = self._buf[self._pos:]
        fresh = self._gen.random(self._chunk)
        self._buf = np.concatenate([left, fresh]) if left.size else fresh
        self._pos = 0

    def next_uniform(self):
        if self._pos >= self._buf.size:
            self._refill()
        u = float(self._buf[self._pos])
        self._pos += 1
        return u

    def remaining(self):
        return self._buf.size - self._pos


@dataclass
class JumpOutcome:
    """Result of one jump attempt.

    ``kind`` is "blocked" or "moved"; ``moved_chain`` lists the displaced
    (level, index) pairs, initiator first, on consecutive levels.
    """

    kind: str
    moved_chain: list = field(default_factory=list)


class ParticleConfig:
    """Interlaced particle positions plus rates and the model clock."""

    def __init__(self, M, m0, rate_slow=1.0, rate_fast=2.0):
        if M < 1 or m0 < 1:
            raise ValueError("M and m0 must be positive integers")
        self.M = int(M)
        self.m0 = int(m0)
        self.rate_slow = float(rate_slow)
        self.rate_fast = float(rate_fast)
        self.clock = 0.0
        row_start, _, _ = _layout(self.M)
        self._row_start = row_start
        self._flat = np.empty(int(row_start[self.M + 1]), dtype=np.int64)

    def row(self, m):
        """Writable view of row m (1-based), positions left to right."""
        s = int(self._row_start[m])
        return self._flat[s:s + m]

    @property
    def levels(self):
        return [self.row(m) for m in range(1, self.M + 1)]

    @property
    def n_particles(self):
        return self._flat.size

    @property
    def n_slow(self):
        ms = min(self.m0 - 1, self.M)
        return ms * (ms + 1) // 2

    def copy(self):
        dup = ParticleConfig(self.M, self.m0, self.rate_slow, self.rate_fast)
        dup._flat[:] = self._flat
        dup.clock = self.clock
        return dup

    def __eq__(self, other):
        if not isinstance(other, ParticleConfig):
            return NotImplemented
        return (self.M == other.M and self.m0 == other.m0
                and self.rate_slow == other.rate_slow
                and self.rate_fast == other.rate_fast
                and self.clock == other.clock
                and np.array_equal(self._flat, other._flat))

    def to_snapshot(self):
        return {
            "clock": self.clock,
            "m0": self.m0,
            "rate_slow": self.rate_slow,
            "rate_fast": self.rate_fast,
            "levels": [self.row(m).tolist() for m in range(1, self.M + 1)],
        }

    @classmethod
    def from_snapshot(cls, snap):
        levels = snap["levels"]
        cfg = cls(len(levels), snap["m0"], snap["rate_slow"], snap["rate_fast"])
        for m, row in enumerate(levels, start=1):
            if len(row) != m:
                raise ValueError(f"row {m} must hold exactly {m} positions")
            cfg.row(m)[:] = row
        cfg.clock = float(snap["clock"])
        return cfg

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_snapshot(), fh)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_snapshot(json.load(fh))


def init_packed(M, m0, rate_slow=1.0, rate_fast=2.0):
    """Densely packed initial configuration: row m holds -m, ..., -1."""
    cfg = ParticleConfig(M, m0, rate_slow, rate_fast)
    for m in range(1, M + 1):
        cfg.row(m)[:] = np.arange(-m, 0, dtype=np.int64)
    return cfg


def total_rate(cfg):
    """Sum of per-particle clock rates; constant along a run."""
    n_slow = cfg.n_slow
    return cfg.rate_slow * n_slow + cfg.rate_fast * (cfg.n_particles - n_slow)


def attempt_jump(cfg, m, k):
    """Apply the jump attempt of particle k on level m (both 1-based).

    Blocked when the level below holds a particle on the target site;
    otherwise the particle moves right by one and pushes the chain of
    particles above that sat on its old position. Interlacing is preserved.
    """
    if not (1 <= m <= cfg.M and 1 <= k <= m):
        raise IndexError(f"no particle (m={m}, k={k}) in a {cfg.M}-level config")
    row = cfg.row(m)
    x = int(row[k - 1])
    if m > 1 and k <= m - 1 and cfg.row(m - 1)[k - 1] == x + 1:
        return JumpOutcome("blocked")
    row[k - 1] = x + 1
    chain = [(m, k)]
    l = 1
    while m + l <= cfg.M:
        above = cfg.row(m + l)
        if above[k + l - 1] == x:
            above[k + l - 1] = x + 1
            chain.append((m + l, k + l))
            l += 1
        else:
            break
    return JumpOutcome("moved", chain)


def _select_particle(cfg, u):
    """Map a uniform onto a particle with probability proportional to its rate.

    Mirrors the kernel arithmetic exactly so step() and run_until() walk
    the same trajectory from the same stream.
    """
    _, level_of, index_of = _layout(cfg.M)
    n_slow = cfg.n_slow
    n_total = cfg.n_particles
    slow_total = cfg.rate_slow * n_slow
    total = slow_total + cfg.rate_fast * (n_total - n_slow)
    r = u * total
    if r < slow_total:
        j = int(r / cfg.rate_slow)
        if j >= n_slow:
            j = n_slow - 1
    else:
        j = n_slow + int((r - slow_total) / cfg.rate_fast)
        if j >= n_total:
            j = n_total - 1
    return int(level_of[j]), int(index_of[j])


def step(cfg, rng):
    """One event: exponential waiting time, particle selection, jump attempt.

    Returns (waiting_time, (level, index), outcome). Blocked attempts
    consume time but change no positions.
    """
    dt = -log1p(-rng.next_uniform()) / total_rate(cfg)
    cfg.clock += dt
    m, k = _select_particle(cfg, rng.next_uniform())
    outcome = attempt_jump(cfg, m, k)
    return dt, (m, k), outcome


def run_until(cfg, horizon, rng, engine=None):
    """Advance the configuration to the given model time.

    Equivalent in law (and in trajectory, for a shared stream) to repeated
    step() calls until the next waiting time would pass the horizon; the
    clock is then pinned to the horizon. Returns the mutated cfg.
    """
    if horizon < cfg.clock:
        raise ValueError("horizon must not precede the current clock")
    impl = engine if engine is not None else _default_engine
    row_start, level_of, index_of = _layout(cfg.M)
    while True:
        if rng.remaining() < 2:
            rng._refill()
        clock, consumed, _, finished = impl.run_events(
            cfg._flat, row_start, level_of, index_of, cfg.M, cfg.n_slow,
            cfg.rate_slow, cfg.rate_fast, cfg.clock, horizon,
            rng._buf[rng._pos:])
        cfg.clock = clock
        rng._pos += consumed
        if finished:
            return cfg


class HeightField:
    """Snapshot of h(x, m) = number of level-m particles at or right of x."""

    def __init__(self, cfg):
        self.M = cfg.M
        self._rows = [np.sort(cfg.row(m)) for m in range(1, cfg.M + 1)]

    def __call__(self, x, m):
        if not 1 <= m <= self.M:
            raise IndexError(f"level {m} outside 1..{self.M}")
        row = self._rows[m - 1]
        return int(m - np.searchsorted(row, x, side="left"))

    def row_heights(self, m, xs):
        """Vector of h(x, m) over an array of x values."""
        row = self._rows[m - 1]
        return m - np.searchsorted(row, np.asarray(xs), side="left")

    def positions(self, m):
        return self._rows[m - 1].copy()


def height_field(cfg):
    return HeightField(cfg)


def verify_interlacing(cfg):
    """True iff every row is strictly increasing and rows interlace."""
    for m in range(1, cfg.M + 1):
        row = cfg.row(m)
        if row.size != m or np.any(np.diff(row) <= 0):
            return False
    for m in range(1, cfg.M):
        low, high = cfg.row(m), cfg.row(m + 1)
        if np.any(high[:m] >= low) or np.any(low > high[1:]):
            return False
    return True


def export_height_csv(cfg, path, x_min=None, x_max=None):
    """Write the height field as CSV columns x,m,h."""
    lo = int(min(cfg.row(m).min() for m in range(1, cfg.M + 1))) - 1
    hi = int(max(cfg.row(m).max() for m in range(1, cfg.M + 1))) + 1
    lo = lo if x_min is None else int(x_min)
    hi = hi if x_max is None else int(x_max)
    h = height_field(cfg)
    xs = np.arange(lo, hi + 1)
    with open(path, "w") as fh:
        fh.write("x,m,h\n")
        for m in range(1, cfg.M + 1):
            for x, v in zip(xs, h.row_heights(m, xs)):
                fh.write(f"{x},{m},{v}\n")
