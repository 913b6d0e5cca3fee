"""Built-in example systems, mirrored by the bundled JSON system files.

Three contractive families on the unit interval cover the interesting
regimes: a doubling-branch system whose window attractor fills the
square, a mixed-sign system whose window attractor projects to a proper
subset of the base attractor, and an averaging recurrence compiled from
a difference equation. A non-contractive recurrence rounds out the set
as the standard failing case.
"""

from __future__ import annotations

import numpy as np

from .core import Box, GifsMap, GifsSystem, WeightSystem
from .fde import FdeSpec, LinearRhs, compile_fde

__all__ = [
    "doubling_system",
    "mixed_sign_system",
    "averaging_fde_spec",
    "averaging_fde_system",
    "unstable_fde_spec",
    "unstable_gifs_system",
    "affine_e2_weights",
]


def doubling_system():
    """Degree-2 wrapper of the doubling-map branches x/2 and x/2 + 1/2."""
    box = Box.unit(1)
    maps = tuple(
        GifsMap.affine(np.array([[[0.5]], [[0.0]]]), np.array([i / 2.0]))
        for i in (0, 1)
    )
    sys = GifsSystem(domain=box, degree=2, maps=maps)
    ws = WeightSystem.constant((0.5, 0.5), degree=2)
    return sys, ws


def mixed_sign_system():
    """Maps x/3 + y/4 and x/3 - y/4 + 1/2 on [0, 1]."""
    box = Box.unit(1)
    maps = (
        GifsMap.affine(np.array([[[1.0 / 3.0]], [[0.25]]]), np.array([0.0])),
        GifsMap.affine(np.array([[[1.0 / 3.0]], [[-0.25]]]), np.array([0.5])),
    )
    sys = GifsSystem(domain=box, degree=2, maps=maps)
    ws = WeightSystem.constant((0.5, 0.5), degree=2)
    return sys, ws


def averaging_fde_spec() -> FdeSpec:
    """x_{j+2} = x_{j+1}/4 + x_j/4 + a_j/2 with controls {0, 1} on [0, 1]."""
    return FdeSpec(
        order=2,
        alphabet=(0, 1),
        rhs=LinearRhs((0.25, 0.25), 0.5),
        domain=Box.unit(1),
    )


def averaging_fde_system():
    sys = compile_fde(averaging_fde_spec())
    ws = WeightSystem.constant((1.0 / 3.0, 2.0 / 3.0), degree=2)
    return sys, ws


def unstable_fde_spec() -> FdeSpec:
    """x_{j+2} = x_{j+1} + a_j x_j with controls {-1, 1}: no global attractor."""
    return FdeSpec(
        order=2,
        alphabet=(-1, 1),
        rhs=lambda y0, y1, a: y1 + a * y0,
        domain=Box.interval(-1.0, 1.0),
    )


def unstable_gifs_system() -> GifsSystem:
    """The same non-contractive pair x + a*y written as affine maps."""
    box = Box.interval(-1.0, 1.0)
    maps = tuple(
        GifsMap.affine(np.array([[[float(a)]], [[1.0]]]), np.array([0.0]))
        for a in (-1, 1)
    )
    return GifsSystem(domain=box, degree=2, maps=maps)


def affine_e2_weights() -> WeightSystem:
    """Nonconstant weights 0.3 + 0.2x + 0.15y and its complement on [0,1]^2."""
    return WeightSystem.affine(
        coeffs=((0.2, 0.15), (-0.2, -0.15)),
        intercepts=(0.3, 0.7),
        delta=0.3,
        degree=2,
        dim=1,
    )
