"""System description files and deterministic output writers.

System files are strict JSON: unknown keys are rejected so typos cannot
silently change a run. Bitmap output is binary PBM (P4) for set covers
and binary PGM (P5) for densities; both carry a comment line recording
the provenance parameters, and all writers are byte-deterministic for a
given input.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Optional, Tuple

import numpy as np

from .core import Box, GifsMap, GifsSystem, WeightSystem
from .errors import SystemFileError
from .fde import FdeSpec, LinearRhs
from .grids import GridSet
from .measures import DiscreteMeasure

__all__ = [
    "parse_system",
    "load_system",
    "dump_system",
    "parse_fde",
    "load_fde",
    "bundled_system_path",
    "write_pbm",
    "write_pgm",
    "grid_to_csv",
    "measure_to_csv",
    "orbit_to_csv",
    "write_json",
]


def _check_keys(obj: dict, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise SystemFileError(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise SystemFileError(f"{where}: unknown keys {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise SystemFileError(f"{where}: missing keys {sorted(missing)}")


def _floats(value, where: str) -> list:
    if not isinstance(value, list) or not value:
        raise SystemFileError(f"{where}: expected a nonempty list of numbers")
    out = []
    for v in value:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SystemFileError(f"{where}: expected numbers, got {v!r}")
        out.append(float(v))
    return out


def _parse_box(obj, where: str) -> Box:
    _check_keys(obj, {"lo", "hi"}, {"lo", "hi"}, where)
    try:
        return Box(tuple(_floats(obj["lo"], where)), tuple(_floats(obj["hi"], where)))
    except ValueError as exc:
        raise SystemFileError(f"{where}: {exc}") from exc


def _parse_map(obj, degree: int, dim: int, where: str) -> GifsMap:
    _check_keys(obj, {"blocks", "offset", "lip"}, {"blocks", "offset"}, where)
    blocks = np.asarray(obj["blocks"], dtype=float)
    if blocks.shape != (degree, dim, dim):
        raise SystemFileError(
            f"{where}: blocks shape {blocks.shape} != ({degree}, {dim}, {dim})"
        )
    offset = np.asarray(_floats(obj["offset"], where))
    lip = obj.get("lip")
    try:
        return GifsMap.affine(blocks, offset, lip=lip)
    except ValueError as exc:
        raise SystemFileError(f"{where}: {exc}") from exc


def _parse_weights(obj, degree: int, dim: int) -> WeightSystem:
    where = "weights"
    if not isinstance(obj, dict) or "kind" not in obj:
        raise SystemFileError(f"{where}: expected an object with a 'kind'")
    kind = obj["kind"]
    if kind == "constant":
        _check_keys(obj, {"kind", "values"}, {"kind", "values"}, where)
        return WeightSystem.constant(_floats(obj["values"], where), degree=degree)
    if kind == "affine":
        _check_keys(
            obj,
            {"kind", "coeffs", "intercepts", "lip", "delta"},
            {"kind", "coeffs", "intercepts", "delta"},
            where,
        )
        coeffs = [
            _floats(row, f"{where}.coeffs[{j}]") for j, row in enumerate(obj["coeffs"])
        ]
        ws = WeightSystem.affine(
            coeffs,
            _floats(obj["intercepts"], where),
            float(obj["delta"]),
            degree=degree,
            dim=dim,
        )
        if "lip" in obj:
            declared = [
                _floats(row, f"{where}.lip[{j}]") for j, row in enumerate(obj["lip"])
            ]
            got = [list(row) for row in ws.lip]
            if not np.allclose(declared, got, atol=1e-12):
                raise SystemFileError(
                    f"{where}: declared lip {declared} mismatches coefficients {got}"
                )
        return ws
    raise SystemFileError(f"{where}: unknown kind {kind!r}")


def parse_system(obj: dict) -> Tuple[GifsSystem, Optional[WeightSystem]]:
    """Build a system (and optional weights) from a parsed JSON object."""
    _check_keys(
        obj,
        {"domain", "degree", "maps", "weights"},
        {"domain", "degree", "maps"},
        "system",
    )
    domain = _parse_box(obj["domain"], "domain")
    degree = obj["degree"]
    if not isinstance(degree, int) or degree < 1:
        raise SystemFileError(f"degree: expected a positive integer, got {degree!r}")
    if not isinstance(obj["maps"], list) or not obj["maps"]:
        raise SystemFileError("maps: expected a nonempty list")
    maps = tuple(
        _parse_map(mp, degree, domain.dim, f"maps[{j}]")
        for j, mp in enumerate(obj["maps"])
    )
    sys = GifsSystem(domain=domain, degree=degree, maps=maps)
    ws = None
    if "weights" in obj:
        ws = _parse_weights(obj["weights"], degree, domain.dim)
        if ws.n != sys.n:
            raise SystemFileError(f"weights: {ws.n} entries for {sys.n} maps")
    return sys, ws


def load_system(path) -> Tuple[GifsSystem, Optional[WeightSystem]]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{path}: invalid JSON ({exc})") from exc
    return parse_system(obj)


def dump_system(sys: GifsSystem, ws: Optional[WeightSystem] = None) -> dict:
    """Serialize an affine system back to the file schema."""
    maps = []
    for mp in sys.maps:
        if mp.blocks is None:
            raise ValueError("only affine maps are file-serializable")
        maps.append(
            {
                "blocks": mp.blocks.tolist(),
                "offset": mp.offset.tolist(),
                "lip": list(mp.lip),
            }
        )
    obj = {
        "domain": {"lo": list(sys.domain.lo), "hi": list(sys.domain.hi)},
        "degree": sys.degree,
        "maps": maps,
    }
    if ws is not None:
        from .core import _AffineWeight, _ConstantWeight

        if all(isinstance(fn, _ConstantWeight) for fn in ws.fns):
            obj["weights"] = {"kind": "constant", "values": [fn.value for fn in ws.fns]}
        elif all(isinstance(fn, _AffineWeight) for fn in ws.fns):
            obj["weights"] = {
                "kind": "affine",
                "coeffs": [list(fn.coeffs) for fn in ws.fns],
                "intercepts": [fn.intercept for fn in ws.fns],
                "delta": ws.delta,
            }
        else:
            raise ValueError("opaque weights are not file-serializable")
    return obj


def parse_fde(obj: dict) -> FdeSpec:
    """Build an FDE spec from a parsed JSON object (linear rhs only)."""
    _check_keys(
        obj,
        {"order", "alphabet", "rhs", "domain"},
        {"order", "alphabet", "rhs", "domain"},
        "fde",
    )
    order = obj["order"]
    if not isinstance(order, int) or order < 1:
        raise SystemFileError(f"order: expected a positive integer, got {order!r}")
    alphabet = _floats(obj["alphabet"], "alphabet")
    rhs = obj["rhs"]
    _check_keys(
        rhs, {"kind", "coeffs", "control_coeff"}, {"kind", "coeffs", "control_coeff"}, "rhs"
    )
    if rhs["kind"] != "linear":
        raise SystemFileError(f"rhs: only 'linear' is file-expressible, got {rhs['kind']!r}")
    coeffs = _floats(rhs["coeffs"], "rhs.coeffs")
    if len(coeffs) != order:
        raise SystemFileError(f"rhs: {len(coeffs)} coefficients for order {order}")
    domain = _parse_box(obj["domain"], "domain")
    return FdeSpec(
        order=order,
        alphabet=tuple(alphabet),
        rhs=LinearRhs(tuple(coeffs), float(rhs["control_coeff"])),
        domain=domain,
    )


def load_fde(path) -> FdeSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemFileError(f"{path}: invalid JSON ({exc})") from exc
    return parse_fde(obj)


def bundled_system_path(name: str):
    """Filesystem path of a bundled example system file."""
    ref = resources.files("gifslab") / "systems" / name
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled system named {name!r}")
    return ref


# ---------------------------------------------------------------------------
# Writers (all byte-deterministic)


def _grid_image(grid: GridSet) -> np.ndarray:
    """Occupancy as an image array (rows top-down, second axis upward)."""
    if grid.dim == 1:
        return grid.cells[None, :]
    if grid.dim == 2:
        return grid.cells.T[::-1, :]
    raise ValueError("bitmaps support at most two dimensions; use CSV instead")


def write_pbm(grid: GridSet, path, comment: str = "") -> None:
    """Binary PBM (P4); set cells render black."""
    img = _grid_image(grid)
    h, w = img.shape
    header = b"P4\n"
    if comment:
        header += b"# " + comment.encode("ascii") + b"\n"
    header += f"{w} {h}\n".encode("ascii")
    packed = np.packbits(img.astype(np.uint8), axis=1)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(packed.tobytes())


def write_pgm(img: np.ndarray, path, comment: str = "") -> None:
    """Binary 8-bit PGM (P5) from a (rows, cols) uint8 array."""
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 2:
        raise ValueError("PGM output needs a 2-D array")
    h, w = img.shape
    header = b"P5\n"
    if comment:
        header += b"# " + comment.encode("ascii") + b"\n"
    header += f"{w} {h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(img.tobytes())


def _csv_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def grid_to_csv(grid: GridSet, path) -> None:
    """Occupied cell centers, one row per cell."""
    centers = grid.centers()
    lines = [",".join(f"x{a}" for a in range(grid.dim))]
    lines += [_csv_row(row) for row in centers]
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def measure_to_csv(mu: DiscreteMeasure, path) -> None:
    header = ",".join(f"x{a}" for a in range(mu.dim)) + ",weight"
    lines = [header]
    for pt, w in zip(mu.points, mu.weights):
        lines.append(_csv_row(pt) + "," + repr(float(w)))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def orbit_to_csv(orbit, path) -> None:
    """Rows n,symbol,x0,...; initial window rows carry symbol -1."""
    if orbit.points is None:
        raise ValueError("orbit was recorded in windowed mode; no history")
    header = "n,symbol," + ",".join(f"x{a}" for a in range(orbit.dim))
    lines = [header]
    m = orbit.degree
    for nrow, pt in enumerate(orbit.points):
        sym = -1 if nrow < m else int(orbit.symbols[nrow - m])
        lines.append(f"{nrow},{sym}," + _csv_row(pt))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(obj: dict, path) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
