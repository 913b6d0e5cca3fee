"""Grid-based set dynamics: Hutchinson steps, attractors, Hausdorff metric.

Compact sets are outer-approximated by occupied cells of a uniform grid.
A Hutchinson step evaluates every map on all tuples of occupied cell
centers and marks each cell intersecting a ball around the image point;
the ball radius guarantees that every true image of points inside the
argument cells is enclosed, so iterates remain certified outer covers
at resolution eps.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .constants import DEFAULT_EPS, TUPLE_BUDGET
from .core import Box, GifsSystem
from .errors import CellBudgetExceeded, EmptySet, NoConvergence
from .extension import ExtendedIfs

__all__ = [
    "GridSet",
    "TraceEntry",
    "ConvergenceTrace",
    "AttractorResult",
    "hutchinson_step",
    "extended_step",
    "iterate_attractor",
    "hausdorff_distance",
    "project_set",
]


def _grid_shape(box: Box, eps: float) -> tuple:
    span = box.hi_arr - box.lo_arr
    return tuple(int(math.ceil(s / eps - 1e-9)) for s in span)


@dataclass
class GridSet:
    """Occupied cells of a uniform grid over a box (outer set cover)."""

    box: Box
    eps: float
    cells: np.ndarray

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=bool)
        if self.cells.shape != _grid_shape(self.box, self.eps):
            raise ValueError(
                f"cells shape {self.cells.shape} mismatches grid "
                f"{_grid_shape(self.box, self.eps)}"
            )

    @classmethod
    def empty(cls, box: Box, eps: float) -> "GridSet":
        return cls(box, eps, np.zeros(_grid_shape(box, eps), dtype=bool))

    @classmethod
    def full(cls, box: Box, eps: float) -> "GridSet":
        return cls(box, eps, np.ones(_grid_shape(box, eps), dtype=bool))

    @classmethod
    def from_points(cls, box: Box, eps: float, pts: np.ndarray) -> "GridSet":
        g = cls.empty(box, eps)
        g.mark_points(pts)
        return g

    @classmethod
    def cover_box(cls, box: Box, eps: float, sub: Box) -> "GridSet":
        """Cells needed to cover `sub` (boundary-touching-only cells excluded)."""
        g = cls.empty(box, eps)
        lo_idx = []
        hi_idx = []
        for a, (lo, hi, n) in enumerate(zip(sub.lo, sub.hi, g.shape)):
            base = box.lo[a]
            lo_idx.append(max(0, int(math.floor((lo - base) / eps + 1e-9))))
            hi_idx.append(min(n, int(math.ceil((hi - base) / eps - 1e-9))))
        sl = tuple(slice(a, b) for a, b in zip(lo_idx, hi_idx))
        g.cells[sl] = True
        return g

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def shape(self) -> tuple:
        return self.cells.shape

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    def indices(self) -> np.ndarray:
        return np.argwhere(self.cells)

    def centers(self) -> np.ndarray:
        """Centers of occupied cells, (count, dim)."""
        idx = self.indices()
        return self.box.lo_arr + (idx + 0.5) * self.eps

    def mark_points(self, pts: np.ndarray) -> None:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx = np.floor((pts - self.box.lo_arr) / self.eps).astype(np.int64)
        idx = np.clip(idx, 0, np.asarray(self.shape) - 1)
        self.cells[tuple(idx.T)] = True

    def issubset(self, other: "GridSet") -> bool:
        self._check_compatible(other)
        return bool(np.all(other.cells | ~self.cells))

    def same_cells(self, other: "GridSet") -> bool:
        self._check_compatible(other)
        return bool(np.array_equal(self.cells, other.cells))

    def dilated(self, rings: int = 1) -> "GridSet":
        if rings < 1:
            return GridSet(self.box, self.eps, self.cells.copy())
        struct = np.ones((3,) * self.dim, dtype=bool)
        out = ndimage.binary_dilation(self.cells, structure=struct, iterations=rings)
        return GridSet(self.box, self.eps, out)

    def _check_compatible(self, other: "GridSet") -> None:
        if self.box != other.box or abs(self.eps - other.eps) > 1e-15:
            raise ValueError("grid sets live on different grids")


def _mark_balls(grid: GridSet, pts: np.ndarray, radius: float) -> None:
    """Mark every cell whose closed box intersects a ball around each point."""
    if pts.size == 0:
        return
    lo = grid.box.lo_arr
    eps = grid.eps
    shape = np.asarray(grid.shape)
    base = np.floor((pts - lo) / eps).astype(np.int64)
    reach = int(math.ceil(radius / eps + 1e-12))
    r2 = radius * radius + 1e-15
    for off in itertools.product(range(-reach, reach + 1), repeat=grid.dim):
        cand = base + np.asarray(off)
        ok = np.all((cand >= 0) & (cand < shape), axis=1)
        if not ok.any():
            continue
        cand_ok = cand[ok]
        p_ok = pts[ok]
        cell_lo = lo + cand_ok * eps
        gap_lo = cell_lo - p_ok
        gap_hi = p_ok - (cell_lo + eps)
        gap = np.maximum(np.maximum(gap_lo, gap_hi), 0.0)
        hit = (gap * gap).sum(axis=1) <= r2
        if hit.any():
            grid.cells[tuple(cand_ok[hit].T)] = True


def _cartesian_windows(grids: Sequence[GridSet]) -> np.ndarray:
    """All tuples of occupied-cell centers, (T, m, d)."""
    centers = [g.centers() for g in grids]
    counts = [c.shape[0] for c in centers]
    idx = np.indices(counts).reshape(len(grids), -1)
    cols = [centers[k][idx[k]] for k in range(len(grids))]
    return np.stack(cols, axis=1)


def hutchinson_step(
    sys: GifsSystem,
    grids: Sequence[GridSet],
    budget: int = TUPLE_BUDGET,
) -> GridSet:
    """One application of the set operator: union of map images of the covers."""
    if len(grids) != sys.degree:
        raise ValueError(f"need {sys.degree} grid sets, got {len(grids)}")
    for g in grids:
        grids[0]._check_compatible(g)
        if g.count == 0:
            raise EmptySet("all argument grid sets must be nonempty")
    eps = grids[0].eps
    tuples = 1
    for g in grids:
        tuples *= g.count
    if tuples * sys.n > budget:
        raise CellBudgetExceeded(
            f"{tuples * sys.n} map evaluations exceed budget {budget}"
        )
    windows = _cartesian_windows(grids)
    out = GridSet.empty(sys.domain, eps)
    # Arguments stray from their cell centers by at most half a cell
    # diagonal, so images stray by lambda times that: the tight radius
    # that still encloses every true image point.
    radius = sys.contraction_factor * eps * math.sqrt(sys.dim) / 2.0
    for mp in sys.maps:
        _mark_balls(out, mp.eval_many(windows), radius)
    return out


def _extended_radius(ext: ExtendedIfs, eps: float) -> float:
    # True images of points inside an argument cell stray from the
    # center image by eps*sqrt(d)/2 per shifted slot and by
    # lambda*eps*sqrt(d)/2 in the new slot.
    m, d = ext.degree, ext.block_dim
    lam = ext.lip_bound
    return 0.5 * eps * math.sqrt((m - 1) * d + lam * lam * d)


def extended_step(
    ext: ExtendedIfs,
    grid: GridSet,
    budget: int = TUPLE_BUDGET,
) -> GridSet:
    """One set step of the extended IFS on a window-space grid."""
    if grid.count == 0:
        raise EmptySet("argument grid set is empty")
    if grid.count * ext.n > budget:
        raise CellBudgetExceeded(
            f"{grid.count * ext.n} map evaluations exceed budget {budget}"
        )
    centers = grid.centers()
    out = GridSet.empty(ext.domain, grid.eps)
    radius = _extended_radius(ext, grid.eps)
    for i in range(ext.n):
        _mark_balls(out, ext.eval_many(i, centers), radius)
    return out


@dataclass(frozen=True)
class TraceEntry:
    step: int
    gap: float
    cells: int

    def to_dict(self) -> dict:
        return {"step": self.step, "gap": self.gap, "cells": self.cells}


@dataclass
class ConvergenceTrace:
    entries: List[TraceEntry]
    converged: bool = False

    @property
    def gaps(self) -> list:
        return [e.gap for e in self.entries]

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": [e.to_dict() for e in self.entries],
        }


@dataclass
class AttractorResult:
    attractor: GridSet
    trace: ConvergenceTrace

    @property
    def converged(self) -> bool:
        return self.trace.converged


def iterate_attractor(
    system: Union[GifsSystem, ExtendedIfs],
    seeds: Optional[Sequence[GridSet]] = None,
    eps: float = DEFAULT_EPS,
    tol: Optional[float] = None,
    max_iter: int = 200,
    budget: int = TUPLE_BUDGET,
) -> AttractorResult:
    """Iterate the set operator until successive covers are Hausdorff-close.

    For a base system the recursion slides a window of m covers; for an
    extended IFS a single cover is iterated. Stops once the gaps between
    successive iterates stay at tol (default 2*eps) for m consecutive
    steps, i.e. a full window cycle: a single small gap can occur while
    older window slots still move. Raises NoConvergence (with the
    partial result attached) if max_iter is hit first.
    """
    if tol is None:
        tol = 2.0 * eps
    if tol < eps:
        raise ValueError("tol below the grid resolution is not meaningful")
    extended = isinstance(system, ExtendedIfs)
    if extended:
        if seeds is None:
            current = GridSet.full(system.domain, eps)
        else:
            (current,) = tuple(seeds)
        history = None
    else:
        if seeds is None:
            history = [GridSet.full(system.domain, eps) for _ in range(system.degree)]
        else:
            history = list(seeds)
            if len(history) != system.degree:
                raise ValueError(f"need {system.degree} seed covers")
        current = history[-1]

    cycle = 1 if extended else system.degree
    small_run = 0
    still_run = 0
    triggered = False
    trace = ConvergenceTrace(entries=[])
    for step in range(1, max_iter + 1):
        if extended:
            new = extended_step(system, current, budget=budget)
        else:
            new = hutchinson_step(system, history, budget=budget)
        gap = hausdorff_distance(new, current)
        unchanged = new.same_cells(current)
        trace.entries.append(TraceEntry(step=step, gap=gap, cells=new.count))
        if extended:
            current = new
        else:
            history = history[1:] + [new]
            current = new
        small_run = small_run + 1 if gap <= tol else 0
        still_run = still_run + 1 if unchanged else 0
        if small_run >= cycle:
            # Tolerance met over a full window cycle. Keep polishing while
            # the cover still moves below tol, so slow one-cell drifts
            # settle onto the exact fixed cover instead of freezing 2*eps
            # away from it.
            triggered = True
        if triggered and (still_run >= cycle or gap > tol):
            trace.converged = True
            return AttractorResult(attractor=current, trace=trace)
    if triggered:
        trace.converged = True
        return AttractorResult(attractor=current, trace=trace)
    result = AttractorResult(attractor=current, trace=trace)
    raise NoConvergence(
        f"gap {trace.entries[-1].gap!r} > tol {tol!r} after {max_iter} steps",
        partial=result,
    )


def hausdorff_distance(k1: GridSet, k2: GridSet) -> float:
    """Exact Hausdorff distance between the two occupied-center sets."""
    k1._check_compatible(k2)
    if k1.count == 0 or k2.count == 0:
        raise EmptySet("Hausdorff distance needs nonempty sets")
    if k1.same_cells(k2):
        return 0.0
    # Distance (in cell units) from every cell to the nearest occupied
    # cell of the other set, via the exact Euclidean distance transform.
    d_to_2 = ndimage.distance_transform_edt(~k2.cells)
    d_to_1 = ndimage.distance_transform_edt(~k1.cells)
    forward = float(d_to_2[k1.cells].max())
    backward = float(d_to_1[k2.cells].max())
    return max(forward, backward) * k1.eps


def project_set(grid: GridSet, block: int, block_size: int = 1) -> GridSet:
    """Project a window-space cover onto one coordinate block."""
    if grid.count == 0:
        raise EmptySet("cannot project an empty grid set")
    nblocks = grid.dim // block_size
    if grid.dim % block_size or not 0 <= block < nblocks:
        raise ValueError("block index/size inconsistent with grid dimension")
    keep = tuple(range(block * block_size, (block + 1) * block_size))
    drop = tuple(a for a in range(grid.dim) if a not in keep)
    cells = np.any(grid.cells, axis=drop) if drop else grid.cells.copy()
    return GridSet(grid.box.block(block, block_size), grid.eps, cells)
