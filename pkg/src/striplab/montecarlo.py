"""Path simulation of Brownian motion in the strip and its boundary excursions.

Random numbers come from a counter-based generator: path ``i`` under master
seed ``s`` draws its ``n``-th uniform from ``splitmix64(key_i + n * gamma)``
with ``key_i = splitmix64(s ^ splitmix64(i + 1))``. Streams therefore do not
depend on scheduling, and results are identical for any worker count.

Exit sampling uses the unreflected vertical walk with a Brownian-bridge
barrier test on every step. Reflected runs fold the vertical walk into
``[0, pi]`` and flag the steps whose bridge touches a boundary line; the
excursion harvester cuts the path at those contacts.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numba as nb
import numpy as np
from scipy import integrate, stats

from .kernels import (
    BoundarySide,
    InteriorPoint,
    integrated_hitting_density,
    poisson_kernel,
)

__all__ = [
    "SimConfig",
    "PathState",
    "ExitSample",
    "ExitBatch",
    "ExcursionRecord",
    "ExcursionSet",
    "EmpiricalLaw",
    "PathChunk",
    "fold",
    "sample_exit",
    "exit_place_histogram",
    "poisson_bin_integrals",
    "empirical_exit_time",
    "simulate_reflected",
    "ExcursionHarvester",
    "excursion_harvest",
    "excursion_jump_law",
    "reflected_heat_kernel",
    "reflected_marginal",
    "DEFAULT_BIN_EDGES",
]

# numba probes an optional TBB runtime on first parallel launch; an old one only warns
warnings.filterwarnings("ignore", message="The TBB threading layer", category=nb.NumbaWarning)

PI = math.pi
TWO_PI = 2.0 * math.pi

#: Histogram edges for exit places along one boundary line.
DEFAULT_BIN_EDGES = np.array([-4.0, -2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 4.0])


@dataclass(frozen=True)
class SimConfig:
    """Simulation controls.

    ``horizon`` is the duration of each reflected path; ``t_max`` caps exit
    sampling (paths still inside are reported as truncated).
    """

    dt: float = 1e-4
    n_paths: int = 200_000
    seed: int = 20240521
    bridge_correction: bool = True
    horizon: float = 100.0
    workers: int = 1
    t_max: float = 200.0
    chunk_steps: int = 2_000_000

    def __post_init__(self):
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be positive")
        if self.n_paths < 1:
            raise ValueError("n_paths must be positive")
        if not self.horizon > 0 or not self.t_max > 0:
            raise ValueError("horizon and t_max must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.workers < 1 or self.chunk_steps < 2:
            raise ValueError("workers and chunk_steps must be positive")


@dataclass(frozen=True)
class PathState:
    b1: float
    b2: float
    t: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.b2 <= PI:
            raise ValueError("b2 must lie in [0, pi]")


@dataclass(frozen=True)
class ExitSample:
    tau: float
    side: BoundarySide
    xi1: float


@dataclass(frozen=True)
class ExcursionRecord:
    start_x1: float
    end_x1: float
    start_side: BoundarySide
    end_side: BoundarySide
    max_height: float
    duration: float

    @property
    def displacement(self) -> float:
        return self.end_x1 - self.start_x1


# --------------------------------------------------------------------------
# counter-based generator

_GAMMA = np.uint64(0x9E3779B97F4A7C15)


@nb.njit(inline="always", cache=True)
def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@nb.njit(inline="always", cache=True)
def _path_key(seed, i):
    return _mix(np.uint64(seed) ^ _mix(np.uint64(i) + np.uint64(1)))


@nb.njit(inline="always", cache=True)
def _uniform(key, ctr):
    # open interval (0, 1)
    bits = _mix(key + ctr * np.uint64(0x9E3779B97F4A7C15)) >> np.uint64(11)
    return (float(bits) + 0.5) * (1.0 / 9007199254740992.0), ctr + np.uint64(1)


def _ziggurat_tables(n=256, r=3.6541528853610088, v=0.00492867323399):
    # layer edges x[0] > x[1] = r > ... > x[n] = 0 of the 256-layer normal ziggurat
    x = np.empty(n + 1)
    x[0] = v / math.exp(-0.5 * r * r)
    x[1] = r
    for i in range(2, n):
        x[i] = math.sqrt(-2.0 * math.log(v / x[i - 1] + math.exp(-0.5 * x[i - 1] ** 2)))
    x[n] = 0.0
    return x, x[1:] / x[:-1]


_ZX, _ZR = _ziggurat_tables()
_ZTAIL = float(_ZX[1])


@nb.njit(inline="always", cache=True)
def _normal(key, ctr):
    # ziggurat: layer from the low 8 bits, signed abscissa from the top 53 bits
    while True:
        bits = _mix(key + ctr * np.uint64(0x9E3779B97F4A7C15))
        ctr += np.uint64(1)
        i = int(bits & np.uint64(255))
        u = 2.0 * ((float(bits >> np.uint64(11)) + 0.5) * (1.0 / 9007199254740992.0)) - 1.0
        if abs(u) < _ZR[i]:
            return u * _ZX[i], ctr
        if i == 0:
            while True:
                a, ctr = _uniform(key, ctr)
                b, ctr = _uniform(key, ctr)
                x = -math.log(a) / _ZTAIL
                y = -math.log(b)
                if 2.0 * y > x * x:
                    return (_ZTAIL + x) if u > 0 else -(_ZTAIL + x), ctr
        xx = u * _ZX[i]
        f0 = math.exp(-0.5 * (_ZX[i] * _ZX[i] - xx * xx))
        f1 = math.exp(-0.5 * (_ZX[i + 1] * _ZX[i + 1] - xx * xx))
        a, ctr = _uniform(key, ctr)
        if f1 + a * (f0 - f1) < 1.0:
            return xx, ctr


@nb.njit(inline="always", cache=True)
def _fold(y):
    # single reflections cover every realistic step; the modulus handles the rest
    if y < 0.0:
        y = -y
    elif y > math.pi:
        y = 2.0 * math.pi - y
    if 0.0 <= y <= math.pi:
        return y
    y = y % (2.0 * math.pi)
    if y > math.pi:
        y = 2.0 * math.pi - y
    return y


def fold(y):
    """Map a real line position onto ``[0, pi]`` by reflection at both ends."""
    y = np.mod(np.asarray(y, dtype=float), TWO_PI)
    out = np.where(y > PI, TWO_PI - y, y)
    return out if out.ndim else float(out)


# --------------------------------------------------------------------------
# exit sampling


@nb.njit(cache=True)
def _exit_one(key, x1, x2, dt, bridge, t_max):
    sq = math.sqrt(dt)
    ctr = np.uint64(0)
    y = x2
    t = 0.0
    side = -1
    status = 0
    while True:
        z, ctr = _normal(key, ctr)
        y1 = y + sq * z
        if not math.isfinite(y1):
            status = 2
            break
        if y1 <= 0.0:
            side = 0
        elif y1 >= math.pi:
            side = 1
        elif bridge:
            # one-sided bridge crossing probabilities; skip when negligible
            e = 2.0 * y * y1 / dt
            if e < 40.0:
                u, ctr = _uniform(key, ctr)
                if u < math.exp(-e):
                    side = 0
            if side < 0:
                e = 2.0 * (math.pi - y) * (math.pi - y1) / dt
                if e < 40.0:
                    u, ctr = _uniform(key, ctr)
                    if u < math.exp(-e):
                        side = 1
        if side >= 0:
            break
        y = y1
        t += dt
        if t >= t_max:
            status = 1
            break
    if side >= 0:
        if bridge:
            u, ctr = _uniform(key, ctr)
            tau = t + u * dt
        else:
            tau = t + dt
        z, ctr = _normal(key, ctr)
        xi1 = x1 + math.sqrt(tau) * z
    else:
        tau = math.nan
        xi1 = math.nan
    return tau, side, xi1, status


@nb.njit(parallel=True, cache=True)
def _exit_batch(seed, n, x1, x2, dt, bridge, t_max):
    tau = np.empty(n)
    side = np.empty(n, dtype=np.int8)
    xi1 = np.empty(n)
    status = np.empty(n, dtype=np.int8)
    for i in nb.prange(n):
        a, b, c, d = _exit_one(_path_key(seed, i), x1, x2, dt, bridge, t_max)
        tau[i] = a
        side[i] = b
        xi1[i] = c
        status[i] = d
    return tau, side, xi1, status


def _set_workers(workers: int):
    nb.set_num_threads(max(1, min(int(workers), nb.config.NUMBA_NUM_THREADS)))


@dataclass
class ExitBatch:
    """Columns of exit samples; ``status`` is 0 (exited), 1 (truncated) or 2 (aborted)."""

    tau: np.ndarray
    side: np.ndarray
    xi1: np.ndarray
    status: np.ndarray
    start: InteriorPoint
    config: SimConfig

    def __len__(self):
        return self.tau.size

    def __getitem__(self, i) -> ExitSample:
        return ExitSample(float(self.tau[i]), BoundarySide(int(self.side[i])), float(self.xi1[i]))

    @property
    def ok(self) -> np.ndarray:
        return self.status == 0

    @property
    def n_exited(self) -> int:
        return int(np.count_nonzero(self.ok))

    def diagnostics(self) -> dict:
        return {"exited": self.n_exited,
                "truncated": int(np.count_nonzero(self.status == 1)),
                "aborted": int(np.count_nonzero(self.status == 2))}

    def side_probability(self, side) -> float:
        side = BoundarySide.parse(side)
        return float(np.count_nonzero(self.side[self.ok] == int(side))) / max(self.n_exited, 1)

    def rows(self):
        for t, s, x in zip(self.tau, self.side, self.xi1):
            yield {"tau": float(t), "side": "lower" if s == 0 else "upper" if s == 1 else "none",
                   "xi1": float(x)}


def sample_exit(x, config: SimConfig = SimConfig()) -> ExitBatch:
    """Simulate ``config.n_paths`` exits from ``x``."""
    x = x if isinstance(x, InteriorPoint) else InteriorPoint(*map(float, x))
    _set_workers(config.workers)
    tau, side, xi1, status = _exit_batch(np.uint64(config.seed), int(config.n_paths), float(x.x1),
                                         float(x.x2), float(config.dt), bool(config.bridge_correction),
                                         float(config.t_max))
    return ExitBatch(tau, side, xi1, status, x, config)


# --------------------------------------------------------------------------
# empirical laws


@dataclass
class EmpiricalLaw:
    """Histogram (``edges``, ``counts``, ``total``) and/or sorted samples."""

    edges: Optional[np.ndarray] = None
    counts: Optional[np.ndarray] = None
    total: int = 0
    samples: Optional[np.ndarray] = None

    @classmethod
    def from_samples(cls, x, edges=None) -> "EmpiricalLaw":
        x = np.sort(np.asarray(x, dtype=float))
        counts = None
        if edges is not None:
            edges = np.asarray(edges, dtype=float)
            counts = np.histogram(x, bins=edges)[0]
        return cls(edges, counts, int(x.size), x)

    def cdf(self, t):
        if self.samples is None:
            raise ValueError("no samples stored")
        return np.searchsorted(self.samples, np.asarray(t, dtype=float), side="right") / max(self.total, 1)

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.samples, q))

    def ks_distance(self, cdf) -> float:
        return float(stats.kstest(self.samples, cdf).statistic)


def poisson_bin_integrals(x: InteriorPoint, side, edges=DEFAULT_BIN_EDGES) -> np.ndarray:
    """``int P(x, xi) d xi`` over consecutive bins of one boundary line (adaptive quadrature)."""
    out = []
    for a, b in zip(edges[:-1], edges[1:]):
        v, _ = integrate.quad(lambda s: poisson_kernel(x.x1, x.x2, s, side), a, b,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
        out.append(v)
    return np.asarray(out)


def exit_place_histogram(batch: ExitBatch, edges=DEFAULT_BIN_EDGES) -> dict:
    """Compare exit-place frequencies per bin and side with the Poisson kernel."""
    n = len(batch)
    out = {"edges": list(map(float, edges)), "n_paths": n, "sides": {}}
    worst = 0.0
    for side in BoundarySide:
        sel = batch.ok & (batch.side == int(side))
        counts = np.histogram(batch.xi1[sel], bins=edges)[0]
        freq = counts / n
        exact = poisson_bin_integrals(batch.start, side, edges)
        rel = np.abs(freq - exact) / exact
        se = np.sqrt(exact * (1.0 - exact) / n) / exact
        worst = max(worst, float(rel.max()))
        out["sides"][side.name.lower()] = {"counts": counts.tolist(), "frequency": freq.tolist(),
                                           "exact": exact.tolist(), "relative_error": rel.tolist(),
                                           "relative_standard_error": se.tolist()}
    out["sup_relative_error"] = worst
    return out


def empirical_exit_time(x, config: SimConfig = SimConfig(), batch: ExitBatch | None = None,
                        times: Sequence[float] = (0.1, 0.5, 1.0, 2.0)):
    """ECDF of the exit time against the integrated hitting densities.

    Returns the law and a report with the CDF gaps at ``times`` and the
    medians of both distributions.
    """
    batch = batch if batch is not None else sample_exit(x, config)
    x = batch.start
    tau = batch.tau[batch.ok]
    law = EmpiricalLaw.from_samples(tau)
    # censored paths count as not yet exited
    scale = tau.size / len(batch)
    rows = []
    for t in times:
        emp = float(law.cdf(t)) * scale
        exact = integrated_hitting_density(t, x.x2)
        rows.append({"t": float(t), "empirical": emp, "exact": exact, "gap": abs(emp - exact)})
    from scipy.optimize import brentq
    median = brentq(lambda t: integrated_hitting_density(t, x.x2) - 0.5, 1e-6, 100.0, xtol=1e-12)
    report = {"rows": rows, "max_gap": max(r["gap"] for r in rows),
              "median_empirical": law.quantile(0.5 / scale) if scale > 0.5 else math.nan,
              "median_exact": median, **batch.diagnostics()}
    return law, report


# --------------------------------------------------------------------------
# reflected paths


@dataclass
class PathChunk:
    """Grid values ``t0 + k dt`` for ``k = 1..n`` of one reflected path.

    ``touch[k]`` is 1 (lower) or 2 (upper) when the bridge over the step
    ending at ``k`` touches that boundary line, else 0.
    """

    path: int
    t0: float
    dt: float
    b1: np.ndarray
    b2: np.ndarray
    touch: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(1, self.b1.size + 1)


@nb.njit(cache=True)
def _reflect_chunk(key, ctr, b1, y, n, dt, out_b1, out_b2, out_touch):
    sq = math.sqrt(dt)
    for k in range(n):
        z, ctr = _normal(key, ctr)
        w, ctr = _normal(key, ctr)
        b1 += sq * w
        y1 = y + sq * z
        touch = 0
        if y1 <= 0.0:
            touch = 1
        elif y1 >= math.pi:
            touch = 2
        else:
            e = 2.0 * y * y1 / dt
            if e < 40.0:
                u, ctr = _uniform(key, ctr)
                if u < math.exp(-e):
                    touch = 1
            if touch == 0:
                e = 2.0 * (math.pi - y) * (math.pi - y1) / dt
                if e < 40.0:
                    u, ctr = _uniform(key, ctr)
                    if u < math.exp(-e):
                        touch = 2
        y = _fold(y1)
        out_b1[k] = b1
        out_b2[k] = y
        out_touch[k] = touch
    return ctr, b1, y


def simulate_reflected(x, config: SimConfig = SimConfig(), n_paths: int | None = None) -> Iterator[PathChunk]:
    """Stream reflected paths from ``x`` in chunks of ``config.chunk_steps`` steps.

    Path ``i`` runs for ``config.horizon`` with its own counter stream; paths
    are emitted one after the other.
    """
    if isinstance(x, PathState):
        start = (x.b1, x.b2)
    elif isinstance(x, InteriorPoint):
        start = (x.x1, x.x2)
    else:
        start = tuple(map(float, x))
    if not 0.0 <= start[1] <= PI:
        raise ValueError("start height must lie in [0, pi]")
    n_paths = config.n_paths if n_paths is None else n_paths
    total = int(round(config.horizon / config.dt))
    for p in range(n_paths):
        key = np.uint64(_path_key(np.uint64(config.seed), np.uint64(p)))
        ctr = np.uint64(0)
        b1, y = float(start[0]), float(start[1])
        done = 0
        while done < total:
            n = min(config.chunk_steps, total - done)
            out_b1 = np.empty(n)
            out_b2 = np.empty(n)
            out_touch = np.empty(n, dtype=np.int8)
            ctr, b1, y = _reflect_chunk(key, np.uint64(ctr), b1, y, n, config.dt,
                                                     out_b1, out_b2, out_touch)
            if not (math.isfinite(b1) and math.isfinite(y)):
                raise FloatingPointError(f"non-finite state in reflected path {p}")
            yield PathChunk(p, done * config.dt, config.dt, out_b1, out_b2, out_touch)
            done += n


def reflected_heat_kernel(t, x, y, n_terms: int = 64):
    """Transition density of reflected Brownian motion on ``[0, pi]`` (cosine series)."""
    n = np.arange(1, n_terms + 1, dtype=float)
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    s = np.sum(np.exp(-0.5 * n * n * t) * np.cos(n * x) * np.cos(n * y), axis=-1)
    return (1.0 + 2.0 * s) / PI


@nb.njit(parallel=True, cache=True)
def _marginal_batch(seed, n, x2, dt, steps):
    out = np.empty(n)
    sq = math.sqrt(dt)
    for i in nb.prange(n):
        key = _path_key(seed, i)
        ctr = np.uint64(0)
        y = x2
        for _ in range(steps):
            z, ctr = _normal(key, ctr)
            y = _fold(y + sq * z)
        out[i] = y
    return out


def reflected_marginal(x2: float, t: float, config: SimConfig = SimConfig()) -> np.ndarray:
    """Heights at time ``t`` of ``config.n_paths`` folded walks started at ``x2``."""
    steps = int(round(t / config.dt))
    _set_workers(config.workers)
    return _marginal_batch(np.uint64(config.seed), int(config.n_paths), float(x2), float(config.dt), steps)


# --------------------------------------------------------------------------
# excursions


@nb.njit(cache=True)
def _harvest(b1, b2, touch, t0, dt, eps, h_min, state, out):
    # state: [have_contact, contact_x1, contact_side, contact_t, seg_max]
    n_out = 0
    have = state[0] > 0.5
    cx1 = state[1]
    cside = state[2]
    ct = state[3]
    seg = state[4]
    for k in range(b1.size):
        y = b2[k]
        d = min(y, math.pi - y)
        tk = t0 + (k + 1) * dt
        if touch[k] != 0 or d <= eps:
            side = touch[k] - 1.0 if touch[k] != 0 else (0.0 if y < 0.5 * math.pi else 1.0)
            if have and seg >= h_min:
                out[n_out, 0] = cx1
                out[n_out, 1] = b1[k]
                out[n_out, 2] = cside
                out[n_out, 3] = side
                out[n_out, 4] = seg
                out[n_out, 5] = tk - ct
                n_out += 1
            have = True
            cx1 = b1[k]
            cside = side
            ct = tk
            seg = 0.0
        elif d > seg:
            seg = d
    state[0] = 1.0 if have else 0.0
    state[1] = cx1
    state[2] = cside
    state[3] = ct
    state[4] = seg
    return n_out


_COLUMNS = ("start_x1", "end_x1", "start_side", "end_side", "max_height", "duration")


@dataclass
class ExcursionSet:
    """Columns of excursion records plus bookkeeping."""

    data: np.ndarray  # shape (n, 6) in the order of _COLUMNS
    h_min: float
    delta: float
    horizon: float
    discarded: int = 0
    unfiltered: int = 0

    def __len__(self):
        return self.data.shape[0]

    def __getitem__(self, i) -> ExcursionRecord:
        r = self.data[i]
        return ExcursionRecord(float(r[0]), float(r[1]), BoundarySide(int(r[2])), BoundarySide(int(r[3])),
                               float(r[4]), float(r[5]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def displacement(self) -> np.ndarray:
        return self.data[:, 1] - self.data[:, 0]

    @property
    def same_side(self) -> np.ndarray:
        return self.data[:, 2] == self.data[:, 3]

    def rows(self):
        for r in self.data:
            yield {"start_x1": r[0], "end_x1": r[1],
                   "start_side": "lower" if r[2] == 0 else "upper",
                   "end_side": "lower" if r[3] == 0 else "upper",
                   "max_height": r[4], "duration": r[5]}


class ExcursionHarvester:
    """Cut a reflected path stream at boundary contacts and keep the high excursions.

    A contact is a grid instant within ``h_min / 10`` of a boundary line or
    a step whose bridge touches one. The segment between consecutive
    contacts is recorded when its largest distance to the boundary reaches
    ``h_min``; records are then filtered to ``|end_x1 - start_x1| > delta``.
    Segments cut by the start or the end of a path are discarded and counted.
    """

    def __init__(self, h_min: float = 0.1, delta: float = 1.0):
        if not 0.0 < h_min < PI / 2:
            raise ValueError("h_min must lie in (0, pi/2)")
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.h_min = float(h_min)
        self.delta = float(delta)
        self._parts: List[np.ndarray] = []
        self._state = np.zeros(5)
        self._path = None
        self._discarded = 0
        self._unfiltered = 0
        self._horizon = 0.0
        self._dt = None

    def feed(self, chunk: PathChunk):
        if chunk.path != self._path:
            self._close_path()
            self._path = chunk.path
            self._state[:] = 0.0
        out = np.empty((chunk.b1.size // 2 + 1, 6))
        n = _harvest(chunk.b1, chunk.b2, chunk.touch, chunk.t0, chunk.dt, 0.1 * self.h_min,
                     self.h_min, self._state, out)
        rec = out[:n]
        self._unfiltered += n
        keep = np.abs(rec[:, 1] - rec[:, 0]) > self.delta
        self._parts.append(rec[keep].copy())
        self._horizon += chunk.b1.size * chunk.dt

    def _close_path(self):
        if self._path is not None:
            # the segments before the first and after the last contact
            self._discarded += 2

    def result(self) -> ExcursionSet:
        self._close_path()
        self._path = None
        data = np.concatenate(self._parts) if self._parts else np.empty((0, 6))
        return ExcursionSet(data, self.h_min, self.delta, self._horizon, self._discarded, self._unfiltered)


def excursion_harvest(stream, h_min: float = 0.1, delta: float = 1.0) -> ExcursionSet:
    harvester = ExcursionHarvester(h_min, delta)
    for chunk in stream:
        harvester.feed(chunk)
    return harvester.result()


def _same_side_cdf(delta):
    c = 1.0 / math.tanh(0.5 * delta)

    def cdf(u):
        u = np.maximum(np.asarray(u, dtype=float), delta)
        return (c - 1.0 / np.tanh(0.5 * u)) / (c - 1.0)
    return cdf


def _cross_side_cdf(delta):
    c = math.tanh(0.5 * delta)

    def cdf(u):
        u = np.maximum(np.asarray(u, dtype=float), delta)
        return (np.tanh(0.5 * u) - c) / (1.0 - c)
    return cdf


def excursion_jump_law(records: ExcursionSet, min_records: int = 10_000) -> dict:
    """Compare excursion endpoint statistics with the boundary jump density.

    The same-line to cross-line count ratio above ``delta`` should equal
    ``coth(delta/2)``; the conditional laws of ``|displacement|`` should
    follow the normalised tails of ``1/(cosh u - 1)`` and ``1/(cosh u + 1)``.
    """
    delta = records.delta
    disp = np.abs(records.displacement)
    same = records.same_side
    n_same = int(np.count_nonzero(same))
    n_cross = int(np.count_nonzero(~same))
    target = 1.0 / math.tanh(0.5 * delta)
    ratio = n_same / n_cross if n_cross else math.inf
    ks_same = float(stats.kstest(disp[same], _same_side_cdf(delta)).statistic) if n_same else math.nan
    ks_cross = float(stats.kstest(disp[~same], _cross_side_cdf(delta)).statistic) if n_cross else math.nan
    n = len(records)
    errors = []
    if n < min_records:
        errors.append(f"only {n} filtered excursions, fewer than {min_records}")
    return {
        "n_records": n,
        "n_same": n_same,
        "n_cross": n_cross,
        "side_ratio": ratio,
        "side_ratio_target": target,
        "side_ratio_relative_error": abs(ratio - target) / target,
        "ks_same": ks_same,
        "ks_cross": ks_cross,
        "positive_fraction": float(np.mean(records.displacement > 0)) if n else math.nan,
        "h_min": records.h_min,
        "delta": delta,
        "horizon": records.horizon,
        "discarded": records.discarded,
        "unfiltered": records.unfiltered,
        "errors": errors,
    }
