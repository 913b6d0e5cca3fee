"""Seeded chaos-game orbits and ergodic statistics.

One orbit step evaluates the weights at the current window, draws a
symbol by inverse-CDF over the weight indices (ties to the lowest
index), applies that map, and slides the window. The SplitMix64 stream
consumes exactly one draw per step, so a (system, seed) pair replays the
identical symbol and point sequence bit for bit.

Observables are vectorized: a point observable maps an (N, d) array to
(N,), a window observable maps flattened windows (N, m*d) to (N,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .constants import DEFAULT_BURN_IN, DEFAULT_SEED, WEIGHT_SUM_TOL
from .core import Box, GifsSystem, WeightSystem
from .errors import PointOutsideDomain, SumNotOne, WeightBelowDelta
from .grids import GridSet
from .rng import SplitMix64

__all__ = [
    "OrbitStream",
    "ErgodicReport",
    "chaos_orbit",
    "ergodic_average",
    "extended_ergodic_average",
    "visitation_frequency",
    "holonomic_defect",
    "orbit_closure",
    "ergodic_report",
]


@dataclass
class OrbitStream:
    """A realized chaos-game trajectory with its symbol sequence."""

    seed: int
    degree: int
    dim: int
    domain: Box
    burn_in: int
    steps: int
    symbols: np.ndarray            # (steps,)
    points: Optional[np.ndarray]   # (degree + steps, dim); None when windowed
    window: np.ndarray             # final m points
    history: str                   # "full" | "windowed"

    @property
    def total_points(self) -> int:
        return self.degree + self.steps

    def stat_points(self) -> np.ndarray:
        """Points available to statistics (burn-in excluded)."""
        if self.points is None:
            raise ValueError("orbit was recorded in windowed mode; no history")
        return self.points[self.burn_in:]

    def stat_windows(self, count: int) -> np.ndarray:
        """`count` consecutive flattened windows starting after burn-in."""
        pts = self.stat_points()
        m = self.degree
        if count + m - 1 > pts.shape[0]:
            raise ValueError(f"orbit too short for {count} windows")
        cols = [pts[i:i + count] for i in range(m)]
        return np.stack(cols, axis=1).reshape(count, m * self.dim)


def _affine_scalar_coeffs(sys: GifsSystem):
    if sys.dim != 1:
        return None
    coeffs = []
    offs = []
    for mp in sys.maps:
        if mp.blocks is None:
            return None
        coeffs.append(tuple(float(b[0, 0]) for b in mp.blocks))
        offs.append(float(mp.offset[0]))
    return coeffs, offs


def _weight_scalar_eval(ws: WeightSystem, sys: GifsSystem):
    """Plain-float weight evaluator for the scalar fast path, or None."""
    from .core import _AffineWeight, _ConstantWeight

    if sys.dim != 1:
        return None
    kinds = []
    for fn in ws.fns:
        if isinstance(fn, _ConstantWeight):
            kinds.append(("c", float(fn.value), 0.0))
        elif isinstance(fn, _AffineWeight):
            kinds.append(("a", tuple(fn.coeffs), float(fn.intercept)))
        else:
            return None

    def evaluate(window):
        out = []
        for kind, a, b in kinds:
            if kind == "c":
                out.append(a)
            else:
                v = b
                for c, x in zip(a, window):
                    v += c * x
                out.append(min(max(v, 0.0), 1.0))
        return out

    return evaluate


def chaos_orbit(
    sys: GifsSystem,
    ws: WeightSystem,
    init,
    steps: int,
    seed: int = DEFAULT_SEED,
    burn_in: int = DEFAULT_BURN_IN,
    history: str = "full",
) -> OrbitStream:
    """Run a seeded place-dependent random orbit of `steps` new points.

    The first `burn_in` points (counting from the initial window) are
    recorded but excluded from downstream statistics. Raises
    PointOutsideDomain if a map image escapes the domain box, which
    signals an invalid system.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if history not in ("full", "windowed"):
        raise ValueError("history must be 'full' or 'windowed'")
    m, d = sys.degree, sys.dim
    window = sys.canon_window(init)
    if not sys.domain.contains(window).all():
        raise PointOutsideDomain("initial window outside the domain")

    rng = SplitMix64(seed)
    symbols = np.empty(steps, dtype=np.int64)
    points = None
    if history == "full":
        points = np.empty((m + steps, d))
        points[:m] = window

    lo, hi = sys.domain.lo, sys.domain.hi
    n = sys.n
    delta = ws.delta

    scalar = _affine_scalar_coeffs(sys)
    weval = _weight_scalar_eval(ws, sys)
    if scalar is not None and weval is not None:
        coeffs, offs = scalar
        lo0, hi0 = lo[0] - 1e-12, hi[0] + 1e-12
        win = [float(x) for x in window[:, 0]]
        for t in range(steps):
            p = weval(win)
            total = 0.0
            for i, v in enumerate(p):
                if v < delta - 1e-12:
                    raise WeightBelowDelta(f"weight {i} = {v!r} at step {t}")
                total += v
            if abs(total - 1.0) > WEIGHT_SUM_TOL:
                raise SumNotOne(f"weights sum to {total!r} at step {t}")
            u = rng.next_float()
            cum = 0.0
            a = n - 1
            for i in range(n):
                cum += p[i]
                if u < cum:
                    a = i
                    break
            ca = coeffs[a]
            x = offs[a]
            for k in range(m):
                x += ca[k] * win[k]
            if x < lo0 or x > hi0:
                raise PointOutsideDomain(f"orbit escaped at step {t}: {x!r}")
            symbols[t] = a
            if points is not None:
                points[m + t, 0] = x
            win.pop(0)
            win.append(x)
        window = np.asarray(win, dtype=float)[:, None]
    else:
        for t in range(steps):
            p = ws.eval_all_many(window.ravel()[None, :])[0]
            total = float(p.sum())
            if abs(total - 1.0) > WEIGHT_SUM_TOL:
                raise SumNotOne(f"weights sum to {total!r} at step {t}")
            if (p < delta - 1e-12).any():
                raise WeightBelowDelta(f"weight below delta at step {t}")
            u = rng.next_float()
            cum = 0.0
            a = n - 1
            for i in range(n):
                cum += float(p[i])
                if u < cum:
                    a = i
                    break
            x = sys.maps[a].eval(window)
            if not sys.domain.contains(x[None, :]).all():
                raise PointOutsideDomain(f"orbit escaped at step {t}: {x.tolist()}")
            symbols[t] = a
            if points is not None:
                points[m + t] = x
            window = np.concatenate([window[1:], x[None, :]], axis=0)

    return OrbitStream(
        seed=seed,
        degree=m,
        dim=d,
        domain=sys.domain,
        burn_in=burn_in,
        steps=steps,
        symbols=symbols,
        points=points,
        window=np.asarray(window, dtype=float),
        history=history,
    )


def ergodic_average(orbit: OrbitStream, f, count: Optional[int] = None) -> float:
    """Mean of a point observable over the first `count` post-burn-in points."""
    pts = orbit.stat_points()
    if count is None:
        count = pts.shape[0]
    if count < 1 or count > pts.shape[0]:
        raise ValueError(f"count {count} outside 1..{pts.shape[0]}")
    vals = np.asarray(f(pts[:count]), dtype=float)
    return float(vals.mean())


def extended_ergodic_average(orbit: OrbitStream, g, count: Optional[int] = None) -> float:
    """Mean of a window observable over consecutive post-burn-in windows."""
    pts = orbit.stat_points()
    avail = pts.shape[0] - orbit.degree + 1
    if count is None:
        count = avail
    if count < 1 or count > avail:
        raise ValueError(f"count {count} outside 1..{avail}")
    vals = np.asarray(g(orbit.stat_windows(count)), dtype=float)
    return float(vals.mean())


def visitation_frequency(orbit: OrbitStream, region, count: Optional[int] = None) -> float:
    """Fraction of the first `count` post-burn-in points inside `region`.

    `region` is a Box inside the domain, or a (lo, hi) pair of vectors
    which may be empty (some lo > hi).
    """
    pts = orbit.stat_points()
    if count is None:
        count = pts.shape[0]
    if count < 1 or count > pts.shape[0]:
        raise ValueError(f"count {count} outside 1..{pts.shape[0]}")
    if isinstance(region, Box):
        lo, hi = region.lo_arr, region.hi_arr
        dlo, dhi = orbit.domain.lo_arr, orbit.domain.hi_arr
        if (lo < dlo - 1e-12).any() or (hi > dhi + 1e-12).any():
            raise ValueError("region must lie inside the domain")
    else:
        lo, hi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in region)
    sel = pts[:count]
    inside = np.all((sel >= lo) & (sel <= hi), axis=1)
    return float(inside.mean())


def holonomic_defect(orbit: OrbitStream, g, count: Optional[int] = None) -> float:
    """Shift-invariance defect of the empirical window averages.

    Equals |mean of g over windows 1..N minus mean over windows 0..N-1|,
    computed through the telescoping identity |g(w_N) - g(w_0)| / N, so
    the bound 2*sup|g|/N holds exactly.
    """
    pts = orbit.stat_points()
    avail = pts.shape[0] - orbit.degree + 1
    if count is None:
        count = avail - 1
    if count < 1 or count + 1 > avail:
        raise ValueError(f"count {count} outside 1..{avail - 1}")
    windows = orbit.stat_windows(count + 1)
    ends = np.asarray(g(windows[[0, count]]), dtype=float)
    return abs(float(ends[1]) - float(ends[0])) / count


def orbit_closure(
    orbit: OrbitStream,
    eps: float,
    count: Optional[int] = None,
    tail_start: int = 0,
) -> GridSet:
    """Grid cover of the tail window-points of the orbit.

    Windows (x_n, ..., x_{n+m-1}) for tail_start <= n are binned at
    resolution eps over the window-space box; `count` limits the orbit
    prefix considered (in points, default all).
    """
    if orbit.points is None:
        raise ValueError("orbit was recorded in windowed mode; no history")
    total = orbit.total_points
    if count is None:
        count = total
    if count > total:
        raise ValueError(f"count {count} exceeds recorded points {total}")
    m = orbit.degree
    if not 0 <= tail_start <= count - m:
        raise ValueError("tail_start leaves no complete window")
    pts = orbit.points[:count]
    nwin = count - m + 1 - tail_start
    cols = [pts[tail_start + i: tail_start + i + nwin] for i in range(m)]
    windows = np.stack(cols, axis=1).reshape(nwin, m * orbit.dim)
    return GridSet.from_points(orbit.domain.power(m), eps, windows)


@dataclass
class ErgodicReport:
    """Running averages with a heuristic band (no rate is implied)."""

    count: int
    averages: Dict[str, float]
    halfwidth: float
    visitation: Dict[str, float]
    defects: Dict[str, float]

    def to_dict(self) -> dict:
        return {
            "N": self.count,
            "averages": dict(sorted(self.averages.items())),
            "halfwidth": self.halfwidth,
            "visitation": dict(sorted(self.visitation.items())),
            "defects": dict(sorted(self.defects.items())),
        }


def ergodic_report(
    orbit: OrbitStream,
    observables: Dict[str, object],
    window_observables: Dict[str, object],
    regions: Dict[str, object],
    count: Optional[int] = None,
) -> ErgodicReport:
    """Evaluate point/window averages, visitations and defects in one pass."""
    pts = orbit.stat_points()
    if count is None:
        count = pts.shape[0] - orbit.degree
    averages = {name: ergodic_average(orbit, f, count) for name, f in observables.items()}
    averages.update(
        {
            name: extended_ergodic_average(orbit, g, count)
            for name, g in window_observables.items()
        }
    )
    visitation = {
        name: visitation_frequency(orbit, region, count)
        for name, region in regions.items()
    }
    defects = {
        name: holonomic_defect(orbit, g, count)
        for name, g in window_observables.items()
    }
    return ErgodicReport(
        count=count,
        averages=averages,
        halfwidth=3.0 / math.sqrt(count),
        visitation=visitation,
        defects=defects,
    )
