"""Finite difference equations with a control alphabet, compiled to systems.

An order-m FDE x_{j+m} = f(window, a_j) with finitely many control values
becomes a degree-m system with one map per control symbol. The window is
passed oldest-first, matching the orbit recurrence.

The worked averaging recurrence x_{j+2} = x_{j+1}/4 + x_j/4 + a_j/2 has
an explicit solution whose coefficients follow the integer recurrence
b_{n+1} = b_n + 4 b_{n-1}; those coefficients double as an independent
oracle for orbit evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .constants import DEFAULT_SEED
from .core import Box, GifsMap, GifsSystem

__all__ = [
    "FdeSpec",
    "LinearRhs",
    "CoefficientOracle",
    "compile_fde",
    "coefficients",
    "closed_form_orbit",
    "initial_coefficients",
    "iterate_fde",
]


@dataclass(frozen=True)
class LinearRhs:
    """x_{j+m} = coeffs . window + control_coeff * a, oldest-first window."""

    coeffs: tuple
    control_coeff: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "control_coeff", float(self.control_coeff))

    def __call__(self, *args: float) -> float:
        # control term first, then slots in order: the exact float-op
        # order the orbit engine uses, so cross-checks can be bitwise
        *state, control = args
        total = self.control_coeff * control
        for c, x in zip(self.coeffs, state):
            total += c * x
        return total


@dataclass(frozen=True)
class FdeSpec:
    """Order-m difference equation with a finite control alphabet."""

    order: int
    alphabet: tuple
    rhs: Union[LinearRhs, Callable]
    domain: Box

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not self.alphabet:
            raise ValueError("alphabet must be nonempty")
        if self.domain.dim != 1:
            raise ValueError("difference equations act on scalar states")


def _estimate_lip(fn: Callable, domain: Box, order: int, samples: int, seed: int) -> tuple:
    """Per-slot Lipschitz estimate by one-slot perturbations (not certified)."""
    rng = np.random.default_rng(seed)
    lo, hi = domain.lo[0], domain.hi[0]
    base = rng.uniform(lo, hi, size=(samples, order))
    pert = rng.uniform(lo, hi, size=(samples, order))
    out = []
    for k in range(order):
        moved = base.copy()
        moved[:, k] = pert[:, k]
        num = np.array(
            [abs(fn(*moved[t]) - fn(*base[t])) for t in range(samples)]
        )
        den = np.abs(moved[:, k] - base[:, k])
        keep = den > 1e-12
        out.append(float((num[keep] / den[keep]).max()))
    return tuple(out)


def compile_fde(
    spec: FdeSpec,
    lips: Optional[Sequence[Sequence[float]]] = None,
    lip_samples: int = 2048,
    seed: int = DEFAULT_SEED,
) -> GifsSystem:
    """One map per control symbol; images and hypotheses are checked later.

    Linear right-hand sides compile to affine maps with exact
    coefficients. A general callable compiles to opaque maps whose
    coefficients are taken from `lips` or estimated by sampling; either
    way they are not certified.
    """
    m = spec.order
    maps = []
    if isinstance(spec.rhs, LinearRhs):
        if len(spec.rhs.coeffs) != m:
            raise ValueError("linear rhs needs one coefficient per state slot")
        blocks = np.array([[[c]] for c in spec.rhs.coeffs])
        for a in spec.alphabet:
            offset = np.array([spec.rhs.control_coeff * a])
            maps.append(GifsMap.affine(blocks, offset))
    else:
        for idx, a in enumerate(spec.alphabet):
            rhs = spec.rhs

            def fn(window, _a=a, _rhs=rhs):
                return np.asarray([_rhs(*(float(x) for x in window[:, 0]), _a)])

            if lips is not None:
                lip = lips[idx]
            else:
                lip = _estimate_lip(
                    lambda *state, _a=a, _rhs=rhs: _rhs(*state, _a),
                    spec.domain,
                    m,
                    lip_samples,
                    seed + idx,
                )
            maps.append(GifsMap.opaque(fn, lip))
    return GifsSystem(domain=spec.domain, degree=m, maps=tuple(maps))


def coefficients(count: int) -> list:
    """First `count` terms of b_0 = b_1 = 1, b_{n+1} = b_n + 4 b_{n-1}."""
    if count < 1:
        raise ValueError("count must be >= 1")
    out = [1]
    if count > 1:
        out.append(1)
    while len(out) < count:
        out.append(out[-1] + 4 * out[-2])
    return out


class CoefficientOracle:
    """Integer coefficients next to their closed form via 1 - w - 4w^2.

    The roots r1 < 0 < r2 of the denominator give
    b_n = (r2^{-n-1} - r1^{-n-1}) / sqrt(17).
    """

    def __init__(self, count: int = 32):
        self.b = coefficients(count)
        s = math.sqrt(17.0)
        self.roots = ((-1.0 - s) / 8.0, (-1.0 + s) / 8.0)

    def closed_form(self, n: int) -> float:
        r1, r2 = self.roots
        return (r2 ** (-n - 1) - r1 ** (-n - 1)) / math.sqrt(17.0)


def iterate_fde(spec: FdeSpec, init: Sequence[float], controls: Sequence[float]) -> np.ndarray:
    """Direct recurrence iteration: init window followed by one point per control."""
    win = [float(x) for x in init]
    if len(win) != spec.order:
        raise ValueError(f"need {spec.order} initial values")
    out = list(win)
    for a in controls:
        x = float(spec.rhs(*win, a))
        out.append(x)
        win.pop(0)
        win.append(x)
    return np.asarray(out)


def initial_coefficients(n: int) -> tuple:
    """Coefficients of (x_0, x_1) in the solution value x_{n+2}."""
    b = coefficients(n + 2)
    scale = 4.0 ** (n + 1)
    return (b[n] / scale, b[n + 1] / scale)


def closed_form_orbit(x0: float, x1: float, symbols: Sequence[int], n: int) -> float:
    """Value x_{n+2} of the averaging recurrence from the explicit solution.

    x_{n+2} = b_n/4^{n+1} x_0 + b_{n+1}/4^{n+1} x_1
              + (1/2) sum_{j=0}^{n} b_{n-j}/4^{n-j} a_j.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if len(symbols) < n + 1:
        raise ValueError(f"need at least {n + 1} control symbols")
    b = coefficients(n + 2)
    cx0, cx1 = initial_coefficients(n)
    total = cx0 * x0 + cx1 * x1
    for j in range(n + 1):
        total += 0.5 * b[n - j] / (4.0 ** (n - j)) * symbols[j]
    return total
