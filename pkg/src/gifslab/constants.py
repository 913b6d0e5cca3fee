"""Central defaults shared by the library and the CLI.

All tunable run parameters live here so reports and reruns are
reproducible; nothing is derived from wall-clock time.
"""

from __future__ import annotations

# Fixed default seed for every seeded operation (never time-based).
DEFAULT_SEED = 0x5EED5EED

# Grid resolution (cell side) for deterministic set dynamics.
DEFAULT_EPS = 1.0 / 512.0

# Chaos-game defaults.
DEFAULT_STEPS = 100_000
DEFAULT_BURN_IN = 1_000

# Fixed-point iteration stopping tolerance (measure dynamics; set
# dynamics defaults to 2*eps instead).
DEFAULT_TOL = 1e-3

# Default iteration caps.
DEFAULT_MAX_ITER = 400

# Composed-word enumeration cap for power systems (n**k above this errors).
WORD_CAP = 4096

# Cell-tuple evaluation budget for one Hutchinson grid step.
TUPLE_BUDGET = 1 << 22

# Atom budget for one Markov step (before pruning).
ATOM_BUDGET = 1 << 22

# Support cap per measure for the exact min-cost-flow transport solver.
FLOW_SUPPORT_CAP = 512

# Numerical slacks used by contracts/checks.
WEIGHT_SUM_TOL = 1e-9
LIP_SLACK = 1e-9
AFFINE_LIP_TOL = 1e-12


def prune_cell_for_dim(dim: int) -> float:
    """Default pruning cell size keeping a full grid within the flow cap.

    One dimension keeps the finest 1/512 grid; in higher dimension the
    grid is coarsened so its total cell count stays at most
    FLOW_SUPPORT_CAP, which keeps successive iterates inside the exact
    transport solver's support limit.
    """
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    per_axis = int(FLOW_SUPPORT_CAP ** (1.0 / dim) + 1e-9)
    return 1.0 / max(per_axis, 1)
