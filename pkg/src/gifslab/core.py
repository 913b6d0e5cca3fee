"""Core data types for generalized IFS with place-dependent weights.

A system of degree ``m`` is a finite family of maps taking windows of
``m`` points of a box domain ``X`` into ``X``. Each map declares one
Lipschitz coefficient per window slot; the contraction hypothesis asks
that every map's coefficients sum below one. Weights are probability
functions over the same windows, bounded below by a positive ``delta``
and Lipschitz in each slot.

The metric on ``X`` is Euclidean; windows are compared with the max of
the per-slot distances.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import (
    AFFINE_LIP_TOL,
    DEFAULT_SEED,
    LIP_SLACK,
    WEIGHT_SUM_TOL,
)
from .errors import (
    IndexOutOfRange,
    PointOutsideDomain,
    SumNotOne,
    WeightBelowDelta,
)

__all__ = [
    "Box",
    "GifsMap",
    "GifsSystem",
    "WeightSystem",
    "Violation",
    "ValidationReport",
    "eval_map",
    "eval_weight",
    "validate_system",
    "window_distances",
    "window_metric",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact box in R^d, the domain of a system."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.hi))
        if len(lo) != len(hi) or len(lo) < 1:
            raise ValueError("lo and hi must be equal-length, nonempty vectors")
        if not all(a < b for a, b in zip(lo, hi)):
            raise ValueError("box requires lo[k] < hi[k] in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def lo_arr(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    @property
    def hi_arr(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    @classmethod
    def interval(cls, lo: float, hi: float) -> "Box":
        return cls((lo,), (hi,))

    @classmethod
    def unit(cls, dim: int = 1) -> "Box":
        return cls((0.0,) * dim, (1.0,) * dim)

    def power(self, m: int) -> "Box":
        """The m-fold product box (window space)."""
        return Box(self.lo * m, self.hi * m)

    def block(self, j: int, size: int) -> "Box":
        """Coordinate block j of a product box built from blocks of `size`."""
        return Box(self.lo[j * size:(j + 1) * size], self.hi[j * size:(j + 1) * size])

    def contains(self, pts: np.ndarray, slack: float = 1e-9) -> np.ndarray:
        """Boolean mask of rows of `pts` inside the box (within slack)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.all((pts >= self.lo_arr - slack) & (pts <= self.hi_arr + slack), axis=1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lo_arr, self.hi_arr, size=(count, self.dim))


def window_distances(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Per-slot Euclidean distances between window batches (T, m, d) -> (T, m)."""
    return np.linalg.norm(np.asarray(u) - np.asarray(v), axis=-1)


def window_metric(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Max-of-slots metric between window batches (T, m, d) -> (T,)."""
    return window_distances(u, v).max(axis=-1)


@dataclass(frozen=True)
class GifsMap:
    """One map of a system: affine blocks or an opaque callable.

    Affine maps evaluate sum_k blocks[k] @ window[k] + offset and their
    per-slot Lipschitz coefficients are the spectral norms of the blocks
    (verified against a declared vector within 1e-12 when given).
    Opaque maps must declare their coefficients; sampled validation can
    refute but never certify them.
    """

    lip: tuple
    blocks: Optional[np.ndarray] = None    # (m, d, d), read-only
    offset: Optional[np.ndarray] = None    # (d,), read-only
    fn: Optional[Callable] = None
    vectorized: bool = False
    certified: bool = field(default=False)

    @classmethod
    def affine(cls, blocks, offset, lip: Optional[Sequence[float]] = None) -> "GifsMap":
        blocks = _readonly(np.atleast_3d(blocks))
        offset = _readonly(np.atleast_1d(offset))
        m, d, d2 = blocks.shape
        if d != d2 or offset.shape != (d,):
            raise ValueError("blocks must be (m, d, d) with offset of length d")
        norms = tuple(float(np.linalg.norm(b, ord=2)) for b in blocks)
        if lip is not None:
            declared = tuple(float(v) for v in lip)
            if len(declared) != m or any(
                abs(a - b) > AFFINE_LIP_TOL for a, b in zip(declared, norms)
            ):
                raise ValueError(
                    "declared lip %r does not match block operator norms %r"
                    % (declared, norms)
                )
        return cls(lip=norms, blocks=blocks, offset=offset, certified=True)

    @classmethod
    def opaque(cls, fn: Callable, lip: Sequence[float], vectorized: bool = False) -> "GifsMap":
        lip = tuple(float(v) for v in lip)
        if any(v < 0 for v in lip):
            raise ValueError("Lipschitz coefficients must be nonnegative")
        return cls(lip=lip, fn=fn, vectorized=vectorized, certified=False)

    @property
    def degree(self) -> int:
        return len(self.lip)

    @property
    def lip_sum(self) -> float:
        return float(sum(self.lip))

    def eval_many(self, windows: np.ndarray) -> np.ndarray:
        """Evaluate on a batch of windows (T, m, d) -> (T, d)."""
        windows = np.asarray(windows, dtype=float)
        if self.blocks is not None:
            return np.einsum("kij,tkj->ti", self.blocks, windows) + self.offset
        if self.vectorized:
            return np.atleast_2d(np.asarray(self.fn(windows), dtype=float))
        return np.stack(
            [np.atleast_1d(np.asarray(self.fn(w), dtype=float)) for w in windows]
        )

    def eval(self, window: np.ndarray) -> np.ndarray:
        return self.eval_many(window[None])[0]


@dataclass(frozen=True)
class GifsSystem:
    """Degree-m system of n maps on a box domain."""

    domain: Box
    degree: int
    maps: tuple

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not self.maps:
            raise ValueError("a system needs at least one map")
        d = self.domain.dim
        for j, mp in enumerate(self.maps):
            if mp.degree != self.degree:
                raise ValueError(f"map {j}: lip vector length {mp.degree} != degree {self.degree}")
            if mp.blocks is not None and mp.blocks.shape != (self.degree, d, d):
                raise ValueError(f"map {j}: blocks shape {mp.blocks.shape} mismatches system")

    @property
    def n(self) -> int:
        return len(self.maps)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def lip_matrix(self) -> np.ndarray:
        return np.array([mp.lip for mp in self.maps], dtype=float)

    @property
    def contraction_factor(self) -> float:
        """max over maps of the summed per-slot coefficients."""
        return float(self.lip_matrix.sum(axis=1).max())

    @property
    def certified(self) -> bool:
        return all(mp.certified for mp in self.maps)

    def window_box(self) -> Box:
        return self.domain.power(self.degree)

    def canon_window(self, window) -> np.ndarray:
        w = np.asarray(window, dtype=float).reshape(self.degree, self.dim)
        return w


# ---------------------------------------------------------------------------
# Weights


@dataclass(frozen=True)
class _ConstantWeight:
    value: float

    def eval_many(self, flat: np.ndarray) -> np.ndarray:
        return np.full(flat.shape[0], self.value)


@dataclass(frozen=True)
class _AffineWeight:
    coeffs: tuple     # length m*d
    intercept: float

    def eval_many(self, flat: np.ndarray) -> np.ndarray:
        return flat @ np.asarray(self.coeffs) + self.intercept


@dataclass(frozen=True)
class _OpaqueWeight:
    fn: Callable
    vectorized: bool = False

    def eval_many(self, flat: np.ndarray) -> np.ndarray:
        if self.vectorized:
            return np.asarray(self.fn(flat), dtype=float)
        return np.array([float(self.fn(row)) for row in flat])


@dataclass(frozen=True)
class WeightSystem:
    """Place-dependent probabilities over windows.

    ``fns[j]`` evaluates weight j on a flattened window (length m*d);
    values are clipped to [0, 1] after evaluation and the sum-to-one
    condition is *checked*, never silently repaired. ``delta`` is the
    declared positive lower bound, ``lip`` the per-slot Lipschitz
    coefficients (n rows of length m).
    """

    fns: tuple
    delta: float
    lip: tuple
    certified: bool = False

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "fns", tuple(self.fns))
        object.__setattr__(
            self, "lip", tuple(tuple(float(v) for v in row) for row in self.lip)
        )
        if len(self.lip) != len(self.fns):
            raise ValueError("need one lip vector per weight")

    @classmethod
    def constant(cls, values: Sequence[float], degree: int = 2) -> "WeightSystem":
        values = [float(v) for v in values]
        if any(v <= 0 for v in values):
            raise ValueError("constant weights must be positive")
        if abs(sum(values) - 1.0) > WEIGHT_SUM_TOL:
            raise SumNotOne(f"constant weights sum to {sum(values)!r}")
        fns = tuple(_ConstantWeight(v) for v in values)
        lip = tuple((0.0,) * degree for _ in values)
        return cls(fns=fns, delta=min(values), lip=lip, certified=True)

    @classmethod
    def affine(
        cls,
        coeffs: Sequence[Sequence[float]],
        intercepts: Sequence[float],
        delta: float,
        degree: int,
        dim: int = 1,
    ) -> "WeightSystem":
        """Affine-clipped weights p_j(w) = clip(coeffs[j]. w + intercepts[j])."""
        fns = []
        lip = []
        for row, b in zip(coeffs, intercepts):
            row = tuple(float(v) for v in row)
            if len(row) != degree * dim:
                raise ValueError("each coefficient row must have m*d entries")
            fns.append(_AffineWeight(row, float(b)))
            arr = np.asarray(row).reshape(degree, dim)
            lip.append(tuple(float(np.linalg.norm(r)) for r in arr))
        return cls(fns=tuple(fns), delta=float(delta), lip=tuple(lip), certified=True)

    @classmethod
    def opaque(
        cls,
        fns: Sequence[Callable],
        lip: Sequence[Sequence[float]],
        delta: float,
        vectorized: bool = False,
    ) -> "WeightSystem":
        wrapped = tuple(_OpaqueWeight(f, vectorized) for f in fns)
        return cls(fns=wrapped, delta=float(delta), lip=lip, certified=False)

    @property
    def n(self) -> int:
        return len(self.fns)

    @property
    def lip_matrix(self) -> np.ndarray:
        return np.array(self.lip, dtype=float)

    def eval_all_many(self, flat_windows: np.ndarray) -> np.ndarray:
        """All n weights on a batch of flattened windows (T, m*d) -> (T, n)."""
        flat_windows = np.atleast_2d(np.asarray(flat_windows, dtype=float))
        cols = [fn.eval_many(flat_windows) for fn in self.fns]
        return np.clip(np.stack(cols, axis=1), 0.0, 1.0)

    def eval_all(self, flat_window: np.ndarray) -> np.ndarray:
        return self.eval_all_many(np.asarray(flat_window, dtype=float)[None])[0]


# ---------------------------------------------------------------------------
# Operations


def eval_map(sys: GifsSystem, j: int, window) -> np.ndarray:
    """Apply map j to a window of m domain points; returns a point of X."""
    if not 0 <= j < sys.n:
        raise IndexOutOfRange(f"map index {j} outside 0..{sys.n - 1}")
    w = sys.canon_window(window)
    if not sys.domain.contains(w).all():
        raise PointOutsideDomain(f"window {w.tolist()} not inside domain")
    return sys.maps[j].eval(w)


def eval_weight(ws: WeightSystem, j: int, window) -> float:
    """Weight j at a window; checks the lower bound and the sum-to-one rule."""
    if not 0 <= j < ws.n:
        raise IndexOutOfRange(f"weight index {j} outside 0..{ws.n - 1}")
    flat = np.asarray(window, dtype=float).ravel()
    p = ws.eval_all(flat)
    total = float(p.sum())
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise SumNotOne(f"weights sum to {total!r} at {flat.tolist()}")
    if p[j] < ws.delta - 1e-12:
        raise WeightBelowDelta(
            f"weight {j} = {p[j]!r} below delta = {ws.delta!r} at {flat.tolist()}"
        )
    return float(p[j])


@dataclass(frozen=True)
class Violation:
    kind: str
    index: int
    point: tuple
    value: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "index": self.index,
            "point": list(self.point),
            "value": self.value,
        }


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of sampled hypothesis checks.

    ``certified`` distinguishes affine systems (coefficients proven from
    block norms) from opaque ones, where sampling can only refute.
    """

    e1_ok: bool
    e2_ok: bool
    lam: float
    violations: tuple
    certified: bool
    samples: int
    seed: int

    @property
    def ok(self) -> bool:
        return self.e1_ok and self.e2_ok

    def to_dict(self) -> dict:
        return {
            "e1_ok": self.e1_ok,
            "e2_ok": self.e2_ok,
            "lambda": self.lam,
            "violations": [v.to_dict() for v in self.violations],
            "certified": self.certified,
            "samples": self.samples,
            "seed": self.seed,
        }


_MAX_RECORDED = 16


def validate_system(
    sys: GifsSystem,
    ws: Optional[WeightSystem] = None,
    samples: int = 1024,
    seed: int = DEFAULT_SEED,
) -> ValidationReport:
    """Check the contraction and weight hypotheses at sampled windows.

    Deterministic given (sys, ws, samples, seed). Failures are recorded
    as violations in the report, never raised. Checks per map: declared
    per-slot Lipschitz bounds on random window pairs, summed coefficients
    below one, and image containment in the domain; per weight (when
    given): the lower bound delta, sum-to-one, the declared Lipschitz
    bounds, and summed coefficients below one.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    m, d = sys.degree, sys.dim
    wbox = sys.window_box()
    u = wbox.sample(rng, samples).reshape(samples, m, d)
    v = wbox.sample(rng, samples).reshape(samples, m, d)
    slot_dist = window_distances(u, v)

    violations = []

    def record(kind, index, pts, vals, mask):
        idxs = np.nonzero(mask)[0][:_MAX_RECORDED]
        for t in idxs:
            violations.append(
                Violation(kind, index, tuple(np.round(pts[t].ravel(), 12)), float(vals[t]))
            )

    lam = sys.contraction_factor
    e1_ok = True
    for j, mp in enumerate(sys.maps):
        if mp.lip_sum >= 1.0:
            e1_ok = False
            violations.append(Violation("map_lip_sum", j, (), mp.lip_sum))
        img_u = mp.eval_many(u)
        img_v = mp.eval_many(v)
        measured = np.linalg.norm(img_u - img_v, axis=1)
        bound = slot_dist @ np.asarray(mp.lip) + LIP_SLACK
        bad = measured > bound
        if bad.any():
            e1_ok = False
            record("map_lipschitz", j, u, measured / np.maximum(bound, 1e-300), bad)
        inside = sys.domain.contains(img_u)
        if not inside.all():
            e1_ok = False
            record("map_image_escape", j, u, img_u[:, 0], ~inside)

    e2_ok = True
    if ws is not None:
        flat_u = u.reshape(samples, m * d)
        flat_v = v.reshape(samples, m * d)
        pu = ws.eval_all_many(flat_u)
        pv = ws.eval_all_many(flat_v)
        sums = pu.sum(axis=1)
        bad = np.abs(sums - 1.0) > WEIGHT_SUM_TOL
        if bad.any():
            e2_ok = False
            record("weight_sum", -1, u, sums, bad)
        for j in range(ws.n):
            low = pu[:, j] < ws.delta - 1e-12
            if low.any():
                e2_ok = False
                record("weight_below_delta", j, u, pu[:, j], low)
            wl = np.asarray(ws.lip[j])
            if wl.sum() >= 1.0:
                e2_ok = False
                violations.append(Violation("weight_lip_sum", j, (), float(wl.sum())))
            wbound = slot_dist @ wl + LIP_SLACK
            wbad = np.abs(pu[:, j] - pv[:, j]) > wbound
            if wbad.any():
                e2_ok = False
                record("weight_lipschitz", j, u, np.abs(pu[:, j] - pv[:, j]), wbad)

    certified = sys.certified and (ws is None or ws.certified)
    if e1_ok and not lam < 1.0:
        # sums below one per map imply lam < 1; keep the flag honest anyway
        e1_ok = False
    return ValidationReport(
        e1_ok=e1_ok,
        e2_ok=e2_ok,
        lam=lam,
        violations=tuple(violations),
        certified=certified,
        samples=samples,
        seed=seed,
    )


def sample_windows(box: Box, degree: int, count: int, seed: int) -> np.ndarray:
    """Uniform window batch (count, m, d) from a seeded numpy generator."""
    rng = np.random.default_rng(seed)
    return box.power(degree).sample(rng, count).reshape(count, degree, box.dim)
