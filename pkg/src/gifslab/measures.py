"""Discrete-measure dynamics: transfer and Markov operators, fixed points.

Measures are weighted atom clouds. One Markov step pushes every atom
tuple through every map, weighting by the place-dependent probability at
the tuple; no renormalization is ever applied, so mass drift stays
observable. Fixed-point iteration prunes atoms by grid-cell collapse
(mass-weighted centroids) and stops when the Wasserstein gap between
successive iterates falls below tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .constants import ATOM_BUDGET, DEFAULT_MAX_ITER, DEFAULT_TOL, prune_cell_for_dim
from .core import Box, GifsSystem, WeightSystem
from .errors import AtomBudgetExceeded, NoConvergence
from .extension import ExtendedIfs
from .transport import TransportPlan, flow_plan, ground_cost_matrix, quantile_plan

__all__ = [
    "DiscreteMeasure",
    "PruneRule",
    "MeasureIterationResult",
    "transfer_apply",
    "markov_step",
    "extended_markov_step",
    "iterate_hutchinson_measure",
    "wasserstein",
    "marginal",
]

_MASS_TOL = 1e-6


@dataclass(frozen=True)
class DiscreteMeasure:
    """Finitely supported probability measure on a box.

    ``blocks`` records a product structure of the ambient (a window space
    of `blocks` point blocks); it selects the ground metric for
    transport and the meaning of coordinate-block marginals.
    """

    points: np.ndarray   # (k, dim), read-only
    weights: np.ndarray  # (k,), positive
    ambient: Box
    blocks: int = 1

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if pts.shape[0] != w.shape[0] or pts.shape[0] < 1:
            raise ValueError("points and weights must align and be nonempty")
        if pts.shape[1] != self.ambient.dim:
            raise ValueError("point dimension mismatches ambient box")
        if self.ambient.dim % self.blocks:
            raise ValueError("ambient dimension must split into equal blocks")
        if (w <= 0).any():
            raise ValueError("atom weights must be positive")
        total = float(w.sum())
        if abs(total - 1.0) > _MASS_TOL:
            raise ValueError(f"atom weights sum to {total!r}, not 1")
        if not self.ambient.contains(pts).all():
            raise ValueError("atoms must lie inside the ambient box")
        pts = pts.copy()
        w = w.copy()
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def dirac(cls, point, ambient: Box, blocks: int = 1) -> "DiscreteMeasure":
        return cls(np.atleast_1d(point)[None, :], np.ones(1), ambient, blocks)

    @classmethod
    def uniform(cls, points, ambient: Box, blocks: int = 1) -> "DiscreteMeasure":
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = pts.shape[0]
        return cls(pts, np.full(k, 1.0 / k), ambient, blocks)

    @classmethod
    def grid_uniform(cls, ambient: Box, per_axis: int, blocks: int = 1) -> "DiscreteMeasure":
        """Uniform weights on the centers of a regular sub-grid."""
        axes = [
            lo + (np.arange(per_axis) + 0.5) * (hi - lo) / per_axis
            for lo, hi in zip(ambient.lo, ambient.hi)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in mesh], axis=1)
        return cls.uniform(pts, ambient, blocks)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def block_dim(self) -> int:
        return self.dim // self.blocks

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def mean(self) -> np.ndarray:
        return self.weights @ self.points

    def moment(self, exponents: Sequence[int]) -> float:
        """Mixed moment E[prod_a x_a**e_a]."""
        vals = np.prod(self.points ** np.asarray(exponents, dtype=float), axis=1)
        return float(self.weights @ vals)


@dataclass(frozen=True)
class PruneRule:
    """Collapse atoms sharing a grid cell into their weighted centroid."""

    cell: Optional[float]

    def apply(self, mu: DiscreteMeasure) -> DiscreteMeasure:
        if self.cell is None or mu.size <= 1:
            return mu
        lo = mu.ambient.lo_arr
        shape = np.maximum(
            np.ceil((mu.ambient.hi_arr - lo) / self.cell - 1e-9).astype(np.int64), 1
        )
        idx = np.floor((mu.points - lo) / self.cell).astype(np.int64)
        idx = np.clip(idx, 0, shape - 1)
        keys = np.ravel_multi_index(tuple(idx.T), tuple(shape))
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        w = mu.weights[order]
        pts = mu.points[order]
        starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
        wsum = np.add.reduceat(w, starts)
        centroid = np.add.reduceat(pts * w[:, None], starts, axis=0) / wsum[:, None]
        # centroids of in-box atoms stay in the box; clip float dust only
        centroid = np.clip(centroid, lo, mu.ambient.hi_arr)
        return DiscreteMeasure(centroid, wsum, mu.ambient, mu.blocks)


def transfer_apply(system: Union[GifsSystem, ExtendedIfs], ws: WeightSystem, f, window) -> float:
    """Weighted branch average: sum_j p_j(w) f(image_j(w)).

    For a base system `f` sees points of X; for an extended IFS it sees
    flattened window states.
    """
    if isinstance(system, ExtendedIfs):
        state = np.asarray(window, dtype=float).ravel()[None, :]
        p = ws.eval_all_many(state)[0]
        total = 0.0
        for j in range(system.n):
            total += p[j] * float(f(system.eval_many(j, state)[0]))
        return total
    w = system.canon_window(window)
    p = ws.eval_all_many(w.ravel()[None, :])[0]
    total = 0.0
    for j in range(system.n):
        total += p[j] * float(f(system.maps[j].eval(w)))
    return total


def _tuple_windows(mus: Sequence[DiscreteMeasure]) -> tuple:
    sizes = [mu.size for mu in mus]
    idx = np.indices(sizes).reshape(len(mus), -1)
    pts = np.stack([mus[k].points[idx[k]] for k in range(len(mus))], axis=1)
    wprod = np.ones(idx.shape[1])
    for k, mu in enumerate(mus):
        wprod = wprod * mu.weights[idx[k]]
    return pts, wprod


def markov_step(
    sys: GifsSystem,
    ws: WeightSystem,
    mus: Sequence[DiscreteMeasure],
    budget: int = ATOM_BUDGET,
) -> DiscreteMeasure:
    """Push the product of m measures through the weighted branches."""
    if len(mus) != sys.degree:
        raise ValueError(f"need {sys.degree} measures, got {len(mus)}")
    tuples = 1
    for mu in mus:
        tuples *= mu.size
    if tuples * sys.n > budget:
        raise AtomBudgetExceeded(f"{tuples * sys.n} atoms exceed budget {budget}")
    windows, wprod = _tuple_windows(mus)
    flat = windows.reshape(tuples, -1)
    p = ws.eval_all_many(flat)
    pts = []
    wts = []
    for j, mp in enumerate(sys.maps):
        pts.append(mp.eval_many(windows))
        wts.append(wprod * p[:, j])
    new_pts = np.concatenate(pts, axis=0)
    new_w = np.concatenate(wts)
    keep = new_w > 0
    return DiscreteMeasure(new_pts[keep], new_w[keep], sys.domain, blocks=1)


def extended_markov_step(
    ext: ExtendedIfs,
    ws: WeightSystem,
    alpha: DiscreteMeasure,
    budget: int = ATOM_BUDGET,
) -> DiscreteMeasure:
    """Push a window-space measure through the extended branches."""
    if alpha.size * ext.n > budget:
        raise AtomBudgetExceeded(f"{alpha.size * ext.n} atoms exceed budget {budget}")
    p = ws.eval_all_many(alpha.points)
    pts = []
    wts = []
    for j in range(ext.n):
        pts.append(ext.eval_many(j, alpha.points))
        wts.append(alpha.weights * p[:, j])
    new_pts = np.concatenate(pts, axis=0)
    new_w = np.concatenate(wts)
    keep = new_w > 0
    return DiscreteMeasure(new_pts[keep], new_w[keep], ext.domain, blocks=ext.degree)


def wasserstein(mu: DiscreteMeasure, nu: DiscreteMeasure) -> TransportPlan:
    """Exact 1-Wasserstein plan between two measures on the same ambient."""
    if mu.ambient != nu.ambient or mu.blocks != nu.blocks:
        raise ValueError("measures must share ambient box and block structure")
    if mu.dim == 1:
        return quantile_plan(mu.points, mu.weights, nu.points, nu.weights)
    cost = ground_cost_matrix(mu.points, nu.points, mu.block_dim)
    return flow_plan(cost, mu.weights, nu.weights)


def marginal(alpha: DiscreteMeasure, block: int) -> DiscreteMeasure:
    """Pushforward onto one coordinate block (duplicates merged)."""
    bd = alpha.block_dim
    if not 0 <= block < alpha.blocks:
        raise ValueError(f"block {block} outside 0..{alpha.blocks - 1}")
    pts = alpha.points[:, block * bd:(block + 1) * bd]
    order = np.lexsort(pts.T[::-1])
    pts = pts[order]
    w = alpha.weights[order]
    newgroup = np.r_[True, np.any(pts[1:] != pts[:-1], axis=1)]
    starts = np.flatnonzero(newgroup)
    wsum = np.add.reduceat(w, starts)
    return DiscreteMeasure(pts[starts], wsum, alpha.ambient.block(block, bd), blocks=1)


@dataclass
class MeasureIterationResult:
    measure: DiscreteMeasure
    gaps: list
    converged: bool
    steps: int


def iterate_hutchinson_measure(
    system: Union[GifsSystem, ExtendedIfs],
    ws: WeightSystem,
    seeds: Optional[Sequence[DiscreteMeasure]] = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    prune: Optional[PruneRule] = None,
    budget: int = ATOM_BUDGET,
) -> MeasureIterationResult:
    """Iterate the Markov operator to its fixed point.

    Gaps are exact Wasserstein distances between successive (pruned)
    iterates; iteration stops once the gaps stay below tol for m
    consecutive steps (one full window cycle: a single small gap can
    occur while older window slots still move) and raises NoConvergence
    (partial result attached) if max_iter is exhausted.

    The operators themselves never renormalize, but the iteration resets
    each pruned iterate to unit mass: the base recursion multiplies the
    masses of its m arguments every step, which would compound the
    one-ulp weight-sum rounding geometrically over long runs.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    extended = isinstance(system, ExtendedIfs)
    if extended:
        ambient = system.domain
        if prune is None:
            prune = PruneRule(prune_cell_for_dim(ambient.dim))
        if seeds is None:
            center = (ambient.lo_arr + ambient.hi_arr) / 2.0
            current = DiscreteMeasure.dirac(center, ambient, blocks=system.degree)
        else:
            (current,) = tuple(seeds)
        history = None
    else:
        ambient = system.domain
        if prune is None:
            prune = PruneRule(prune_cell_for_dim(ambient.dim))
        if seeds is None:
            center = (ambient.lo_arr + ambient.hi_arr) / 2.0
            history = [
                DiscreteMeasure.dirac(center, ambient) for _ in range(system.degree)
            ]
        else:
            history = list(seeds)
            if len(history) != system.degree:
                raise ValueError(f"need {system.degree} seed measures")
        current = history[-1]

    cycle = 1 if extended else system.degree
    small_run = 0
    gaps: list = []
    for step in range(1, max_iter + 1):
        if extended:
            new = prune.apply(extended_markov_step(system, ws, current, budget=budget))
        else:
            new = prune.apply(markov_step(system, ws, history, budget=budget))
        new = DiscreteMeasure(
            new.points, new.weights / new.mass, new.ambient, new.blocks
        )
        gap = wasserstein(new, current).cost
        gaps.append(gap)
        if extended:
            current = new
        else:
            history = history[1:] + [new]
            current = new
        small_run = small_run + 1 if gap <= tol else 0
        if small_run >= cycle:
            return MeasureIterationResult(
                measure=current, gaps=gaps, converged=True, steps=step
            )
    result = MeasureIterationResult(
        measure=current, gaps=gaps, converged=False, steps=max_iter
    )
    raise NoConvergence(
        f"measure gap {gaps[-1]!r} > tol {tol!r} after {max_iter} steps",
        partial=result,
    )
