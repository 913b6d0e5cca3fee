"""Exact 1-Wasserstein distance between finitely supported measures.

Dimension one uses the sorted quantile coupling; higher dimensions run
successive-shortest-path min-cost flow on the complete bipartite graph
(Dijkstra with node potentials), exact up to float rounding. Supports
beyond the flow cap are refused: prune first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .constants import FLOW_SUPPORT_CAP
from .errors import SupportTooLarge

__all__ = ["TransportPlan", "quantile_plan", "flow_plan", "ground_cost_matrix"]


@dataclass(frozen=True)
class TransportPlan:
    """Optimal coupling as sparse flows plus its total cost."""

    source: np.ndarray   # (F,) atom indices into mu
    target: np.ndarray   # (F,) atom indices into nu
    mass: np.ndarray     # (F,) transported masses
    cost: float

    @property
    def distance(self) -> float:
        return self.cost

    @property
    def flows(self) -> list:
        return [
            {"source": int(i), "target": int(j), "mass": float(m)}
            for i, j, m in zip(self.source, self.target, self.mass)
        ]

    def marginals(self, k1: int, k2: int) -> tuple:
        row = np.zeros(k1)
        col = np.zeros(k2)
        np.add.at(row, self.source, self.mass)
        np.add.at(col, self.target, self.mass)
        return row, col


def ground_cost_matrix(
    pts_a: np.ndarray, pts_b: np.ndarray, block_dim: int
) -> np.ndarray:
    """Pairwise ground distances: max over coordinate blocks of Euclidean."""
    a = np.atleast_2d(pts_a)
    b = np.atleast_2d(pts_b)
    ka, kb = a.shape[0], b.shape[0]
    diff = a[:, None, :] - b[None, :, :]
    diff = diff.reshape(ka, kb, -1, block_dim)
    return np.linalg.norm(diff, axis=3).max(axis=2)


def quantile_plan(x: np.ndarray, wx: np.ndarray, y: np.ndarray, wy: np.ndarray) -> TransportPlan:
    """Exact W1 coupling on the line by merging sorted quantile profiles."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    ix = np.argsort(x, kind="stable")
    iy = np.argsort(y, kind="stable")
    src, tgt, mss = [], [], []
    cost = 0.0
    ai = bi = 0
    ra = float(wx[ix[0]])
    rb = float(wy[iy[0]])
    while True:
        take = ra if ra < rb else rb
        if take > 0.0:
            src.append(ix[ai])
            tgt.append(iy[bi])
            mss.append(take)
            cost += take * abs(x[ix[ai]] - y[iy[bi]])
        ra -= take
        rb -= take
        advanced = False
        if ra <= 1e-15 and ai + 1 < len(ix):
            ai += 1
            ra = float(wx[ix[ai]])
            advanced = True
        if rb <= 1e-15 and bi + 1 < len(iy):
            bi += 1
            rb = float(wy[iy[bi]])
            advanced = True
        if not advanced and (ra <= 1e-15 or rb <= 1e-15):
            break
    return TransportPlan(
        source=np.asarray(src, dtype=np.int64),
        target=np.asarray(tgt, dtype=np.int64),
        mass=np.asarray(mss, dtype=float),
        cost=float(cost),
    )


@njit(cache=True)
def _ssp(cost, supply, demand):  # pragma: no cover - exercised via flow_plan
    m, n = cost.shape
    nn = m + n
    flow = np.zeros((m, n))
    pot = np.zeros(nn)
    a_rem = supply.copy()
    b_rem = demand.copy()
    dist = np.empty(nn)
    prev = np.empty(nn, dtype=np.int64)
    visited = np.empty(nn, dtype=np.bool_)
    inf = 1e30
    remaining = a_rem.sum()
    guard = 4 * m * n + 8 * nn + 64
    rounds = 0
    while remaining > 1e-14:
        rounds += 1
        if rounds > guard:
            return flow, -1.0
        for xn in range(nn):
            dist[xn] = inf
            prev[xn] = -1
            visited[xn] = False
        for i in range(m):
            if a_rem[i] > 1e-15:
                dist[i] = 0.0
        target = -1
        while True:
            best = -1
            bd = inf
            for xn in range(nn):
                if not visited[xn] and dist[xn] < bd:
                    bd = dist[xn]
                    best = xn
            if best < 0:
                break
            visited[best] = True
            if best >= m and b_rem[best - m] > 1e-15:
                target = best
                break
            if best < m:
                di = dist[best]
                for j in range(n):
                    rc = cost[best, j] + pot[best] - pot[m + j]
                    if rc < 0.0:
                        rc = 0.0
                    nd = di + rc
                    if nd < dist[m + j] - 1e-15:
                        dist[m + j] = nd
                        prev[m + j] = best
            else:
                j = best - m
                dj = dist[best]
                for i in range(m):
                    if flow[i, j] > 1e-15:
                        rc = -cost[i, j] + pot[m + j] - pot[i]
                        if rc < 0.0:
                            rc = 0.0
                        nd = dj + rc
                        if nd < dist[i] - 1e-15:
                            dist[i] = nd
                            prev[i] = m + j
        if target < 0:
            return flow, -2.0
        dt = dist[target]
        for xn in range(nn):
            dx = dist[xn]
            if dx > dt:
                dx = dt
            pot[xn] += dx
        # bottleneck along the predecessor chain
        bott = b_rem[target - m]
        xn = target
        while True:
            p = prev[xn]
            if p < 0:
                if a_rem[xn] < bott:
                    bott = a_rem[xn]
                break
            if p >= m and flow[xn, p - m] < bott:
                bott = flow[xn, p - m]
            xn = p
        xn = target
        while True:
            p = prev[xn]
            if p < 0:
                a_rem[xn] -= bott
                break
            if p < m:
                flow[p, xn - m] += bott
            else:
                flow[xn, p - m] -= bott
            xn = p
        b_rem[target - m] -= bott
        remaining -= bott
    return flow, 1.0


def flow_plan(cost: np.ndarray, a: np.ndarray, b: np.ndarray) -> TransportPlan:
    """Exact min-cost flow between weight vectors a and b under `cost`."""
    k1, k2 = cost.shape
    if k1 > FLOW_SUPPORT_CAP or k2 > FLOW_SUPPORT_CAP:
        raise SupportTooLarge(
            f"supports {k1}x{k2} exceed the flow cap {FLOW_SUPPORT_CAP}; prune first"
        )
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    flow, status = _ssp(cost, a, b)
    if status < 0.0:
        raise RuntimeError(f"min-cost flow failed to terminate (status {status})")
    src, tgt = np.nonzero(flow > 1e-15)
    mass = flow[src, tgt]
    total = float((flow * cost).sum())
    return TransportPlan(source=src, target=tgt, mass=mass, cost=total)
