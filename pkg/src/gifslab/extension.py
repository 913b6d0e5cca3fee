"""Extension of a degree-m system to an ordinary IFS on the window space.

Each extended map shifts the window one slot left and appends the base
map's image: phi_hat_i(x_0,...,x_{m-1}) = (x_1,...,x_{m-1}, phi_i(x)).
The extension is generally not contractive (the shifted slots move with
ratio one) but its m-th power contracts with the base factor
lambda = max_j sum_k lip[j][k].
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .constants import DEFAULT_SEED, WORD_CAP
from .core import Box, GifsSystem, WeightSystem, sample_windows
from .errors import (
    E1Violation,
    IndexOutOfRange,
    NotEventuallyContractive,
    WordSpaceTooLarge,
)

__all__ = [
    "ExtendedIfs",
    "PowerSystem",
    "ContractivityCertificate",
    "build_extension",
    "power_system",
    "certify_contractivity",
    "power_weight_modulus",
    "block_metric",
]


def block_metric(u: np.ndarray, v: np.ndarray, dim: int) -> np.ndarray:
    """Window metric on flattened states (T, m*d): max per-block Euclidean."""
    u = np.atleast_2d(u)
    v = np.atleast_2d(v)
    t = u.shape[0]
    diff = (u - v).reshape(t, -1, dim)
    return np.linalg.norm(diff, axis=2).max(axis=1)


@dataclass(frozen=True)
class ExtendedIfs:
    """Shift-and-apply IFS on the window space of a base system."""

    base: GifsSystem
    lip_bound: float

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def degree(self) -> int:
        return self.base.degree

    @property
    def block_dim(self) -> int:
        return self.base.dim

    @property
    def state_dim(self) -> int:
        return self.base.degree * self.base.dim

    @property
    def domain(self) -> Box:
        return self.base.window_box()

    def eval_many(self, i: int, states: np.ndarray) -> np.ndarray:
        """Apply extended map i to flattened states (T, m*d) -> (T, m*d)."""
        if not 0 <= i < self.n:
            raise IndexOutOfRange(f"map index {i} outside 0..{self.n - 1}")
        states = np.atleast_2d(np.asarray(states, dtype=float))
        t = states.shape[0]
        windows = states.reshape(t, self.degree, self.block_dim)
        img = self.base.maps[i].eval_many(windows)
        return np.concatenate([states[:, self.block_dim:], img], axis=1)

    def eval(self, i: int, state: np.ndarray) -> np.ndarray:
        return self.eval_many(i, np.asarray(state, dtype=float)[None])[0]


def build_extension(sys: GifsSystem) -> ExtendedIfs:
    """Extend a system; requires the declared contraction hypothesis."""
    sums = sys.lip_matrix.sum(axis=1)
    if not (sums < 1.0).all():
        bad = int(np.argmax(sums))
        raise E1Violation(
            f"map {bad} has summed Lipschitz coefficients {float(sums[bad])!r} >= 1"
        )
    return ExtendedIfs(base=sys, lip_bound=float(sums.max()))


def _slot_matrices(sys: GifsSystem) -> np.ndarray:
    """Per-map m-by-m matrices propagating per-slot distance bounds."""
    m = sys.degree
    mats = np.zeros((sys.n, m, m))
    for i in range(sys.n):
        for r in range(m - 1):
            mats[i, r, r + 1] = 1.0
        mats[i, m - 1, :] = sys.maps[i].lip
    return mats


@dataclass(frozen=True)
class PowerSystem:
    """The k-th power of an extended IFS, with composed weights.

    Words are enumerated lexicographically; word (i_1,...,i_k) applies
    i_1 first. The composed weight is the product of the step weights
    along the intermediate orbit, so the words partition unity.
    """

    ext: ExtendedIfs
    k: int
    words: tuple
    weights: Optional[WeightSystem]
    lip_words: np.ndarray    # analytic per-word bound in the window metric

    @property
    def word_count(self) -> int:
        return len(self.words)

    def eval_word_many(self, word_index: int, states: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(states, dtype=float))
        for i in self.words[word_index]:
            z = self.ext.eval_many(i, z)
        return z

    def weight_word_many(self, word_index: int, states: np.ndarray) -> np.ndarray:
        if self.weights is None:
            raise ValueError("power system was built without weights")
        z = np.atleast_2d(np.asarray(states, dtype=float))
        total = np.ones(z.shape[0])
        for i in self.words[word_index]:
            total = total * self.weights.eval_all_many(z)[:, i]
            z = self.ext.eval_many(i, z)
        return total

    def weight_all_many(self, states: np.ndarray) -> np.ndarray:
        """Composed weights of every word at each state: (T, n^k)."""
        cols = [self.weight_word_many(w, states) for w in range(self.word_count)]
        return np.stack(cols, axis=1)


def power_system(
    ext: ExtendedIfs,
    k: int,
    weights: Optional[WeightSystem] = None,
    word_cap: int = WORD_CAP,
) -> PowerSystem:
    """Build the k-th power with n^k composed maps and weights."""
    if k < 1:
        raise ValueError("power k must be >= 1")
    count = ext.n ** k
    if count > word_cap:
        raise WordSpaceTooLarge(f"n^k = {count} exceeds cap {word_cap}")
    words = tuple(itertools.product(range(ext.n), repeat=k))
    mats = _slot_matrices(ext.base)
    m = ext.degree
    lip_words = np.empty(count)
    for w, word in enumerate(words):
        prod = np.eye(m)
        for i in word:
            prod = mats[i] @ prod
        lip_words[w] = prod.sum(axis=1).max()
    lip_words.setflags(write=False)
    return PowerSystem(ext=ext, k=k, words=words, weights=weights, lip_words=lip_words)


@dataclass(frozen=True)
class ContractivityCertificate:
    k_star: int
    lambda_measured: float
    per_power: tuple    # max sampled stretch for k = 1..k_star


def certify_contractivity(
    ext: ExtendedIfs,
    samples: int = 10_000,
    seed: int = DEFAULT_SEED,
) -> ContractivityCertificate:
    """Smallest power k <= m whose sampled word stretches all fall below one.

    Raises NotEventuallyContractive when no power up to the degree works,
    which signals an inconsistency with the contraction hypothesis.
    """
    base = ext.base
    u = sample_windows(base.domain, base.degree, samples, seed)
    v = sample_windows(base.domain, base.degree, samples, seed + 1)
    uf = u.reshape(samples, -1)
    vf = v.reshape(samples, -1)
    denom = block_metric(uf, vf, ext.block_dim)
    keep = denom > 1e-12
    uf, vf, denom = uf[keep], vf[keep], denom[keep]

    per_power = []
    for k in range(1, base.degree + 1):
        ps = power_system(ext, k)
        worst = 0.0
        for w in range(ps.word_count):
            iu = ps.eval_word_many(w, uf)
            iv = ps.eval_word_many(w, vf)
            stretch = block_metric(iu, iv, ext.block_dim) / denom
            worst = max(worst, float(stretch.max()))
        per_power.append(worst)
        if worst < 1.0:
            return ContractivityCertificate(
                k_star=k, lambda_measured=worst, per_power=tuple(per_power)
            )
    raise NotEventuallyContractive(
        f"no power k <= {base.degree} contracted at sampled pairs "
        f"(stretches {per_power!r})"
    )


def power_weight_modulus(
    ps: PowerSystem,
    samples: int = 10_000,
    seed: int = DEFAULT_SEED,
) -> float:
    """Max sampled |p_word(u) - p_word(v)| / d(u, v) over all words."""
    ext = ps.ext
    base = ext.base
    u = sample_windows(base.domain, base.degree, samples, seed).reshape(samples, -1)
    v = sample_windows(base.domain, base.degree, samples, seed + 1).reshape(samples, -1)
    denom = block_metric(u, v, ext.block_dim)
    keep = denom > 1e-12
    u, v, denom = u[keep], v[keep], denom[keep]
    pu = ps.weight_all_many(u)
    pv = ps.weight_all_many(v)
    ratios = np.abs(pu - pv) / denom[:, None]
    return float(ratios.max())
