"""Command-line interface.

Commands: validate, attract, chaos, ergodic, measure, fde. Every run is
fully determined by its flags (the seed defaults to a fixed constant),
and re-running a command produces byte-identical outputs.

Exit codes: 0 success, 1 hypothesis violation, 2 malformed input,
3 numeric non-convergence or domain escape.
"""

from __future__ import annotations

import argparse
import math
import sys as _sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .constants import (
    DEFAULT_BURN_IN,
    DEFAULT_EPS,
    DEFAULT_MAX_ITER,
    DEFAULT_SEED,
    DEFAULT_STEPS,
    DEFAULT_TOL,
)
from .core import validate_system
from .errors import (
    CellBudgetExceeded,
    E1Violation,
    GifsError,
    NoConvergence,
    NotEventuallyContractive,
    PointOutsideDomain,
    SumNotOne,
    SupportTooLarge,
    SystemFileError,
    WeightBelowDelta,
)
from .extension import build_extension
from .fde import (
    closed_form_orbit,
    coefficients,
    compile_fde,
    initial_coefficients,
    iterate_fde,
    LinearRhs,
)
from .grids import iterate_attractor, project_set
from .measures import (
    DiscreteMeasure,
    PruneRule,
    iterate_hutchinson_measure,
    marginal,
    wasserstein,
)
from .orbits import chaos_orbit, ergodic_report, orbit_closure

EXIT_OK = 0
EXIT_HYPOTHESIS = 1
EXIT_MALFORMED = 2
EXIT_NUMERIC = 3


@dataclass(frozen=True)
class RunConfig:
    """Checked run parameters shared by the commands."""

    system: str
    seed: int
    steps: int
    eps: float
    tol: float
    burn_in: int
    out: Path
    fmt: str

    def __post_init__(self):
        if self.steps < 1 or self.eps <= 0 or self.tol <= 0 or self.burn_in < 0:
            raise SystemFileError("numeric run parameters must be positive")
        if self.seed < 0:
            raise SystemFileError("seed must be a nonnegative integer")


def _config(args) -> RunConfig:
    cfg = RunConfig(
        system=args.system,
        seed=args.seed,
        steps=args.steps,
        eps=args.eps,
        tol=args.tol if args.tol is not None else DEFAULT_TOL,
        burn_in=args.burn_in,
        out=Path(args.out),
        fmt=args.format,
    )
    cfg.out.mkdir(parents=True, exist_ok=True)
    return cfg


def _comment(cfg: RunConfig, extra: str = "") -> str:
    c = f"seed={cfg.seed} N={cfg.steps}"
    return f"{c} {extra}".strip()


def _write_grid(grid, base: Path, name: str, comment: str, fmt: str = "pgm") -> str:
    if grid.dim <= 2 and fmt != "csv":
        path = base / f"{name}.pbm"
        fileio.write_pbm(grid, path, comment)
    else:
        path = base / f"{name}.csv"
        fileio.grid_to_csv(grid, path)
    return path.name


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    cfg = _config(args)
    sys_, ws = fileio.load_system(cfg.system)
    report = validate_system(sys_, ws, samples=args.samples, seed=cfg.seed)
    fileio.write_json(report.to_dict(), cfg.out / "validate.json")
    status = "ok" if report.ok else "violated"
    print(f"validate: {status} lambda={report.lam!r} -> {cfg.out / 'validate.json'}")
    return EXIT_OK if report.ok else EXIT_HYPOTHESIS


def cmd_attract(args) -> int:
    cfg = _config(args)
    sys_, _ = fileio.load_system(cfg.system)
    ext = build_extension(sys_)   # raises E1Violation -> exit 1
    tol = args.tol if args.tol is not None else 2.0 * cfg.eps

    base = iterate_attractor(
        sys_, eps=cfg.eps, tol=tol, max_iter=args.max_iter
    )
    names = {}
    names["attractor"] = _write_grid(
        base.attractor, cfg.out, "attractor", _comment(cfg, "kind=base"), cfg.fmt
    )
    traces = {"base": base.trace.to_dict()}

    ext_res = iterate_attractor(ext, eps=cfg.eps, tol=tol, max_iter=args.max_iter)
    names["extended"] = _write_grid(
        ext_res.attractor, cfg.out, "attractor_extended",
        _comment(cfg, "kind=extended"), cfg.fmt,
    )
    proj = project_set(ext_res.attractor, 0, block_size=sys_.dim)
    names["projection"] = _write_grid(
        proj, cfg.out, "projection", _comment(cfg, "kind=projection"), cfg.fmt
    )
    traces["extended"] = ext_res.trace.to_dict()

    fileio.write_json(
        {
            "eps": cfg.eps,
            "tol": tol,
            "outputs": names,
            "traces": traces,
        },
        cfg.out / "attractor_trace.json",
    )
    print(
        "attract: base cells=%d extended cells=%d -> %s"
        % (base.attractor.count, ext_res.attractor.count, cfg.out)
    )
    return EXIT_OK


def cmd_chaos(args) -> int:
    cfg = _config(args)
    sys_, ws = fileio.load_system(cfg.system)
    if ws is None:
        raise SystemFileError("chaos requires a system file with weights")
    init = _default_init(sys_)
    orbit = chaos_orbit(
        sys_, ws, init, cfg.steps, seed=cfg.seed, burn_in=cfg.burn_in
    )
    fileio.orbit_to_csv(orbit, cfg.out / "chaos.csv")
    if not 0 <= args.tail_start < cfg.steps:
        raise SystemFileError("tail-start must lie in [0, steps)")
    # bin the windows indexed tail_start .. steps-1 (one per step)
    cover = orbit_closure(
        orbit, cfg.eps, count=orbit.degree + cfg.steps - 1, tail_start=args.tail_start
    )
    outputs = {"csv": "chaos.csv"}
    if cover.dim == 2 and cfg.fmt != "csv":
        counts = _window_counts(orbit, cfg.eps, args.tail_start, cfg.steps - args.tail_start)
        img = _density_image(counts)
        fileio.write_pgm(img, cfg.out / "chaos.pgm", _comment(cfg, f"eps={cfg.eps!r}"))
        outputs["pgm"] = "chaos.pgm"
    else:
        fileio.grid_to_csv(cover, cfg.out / "chaos_cover.csv")
        outputs["cover"] = "chaos_cover.csv"
    fileio.write_json(
        {
            "seed": cfg.seed,
            "steps": cfg.steps,
            "burn_in": cfg.burn_in,
            "eps": cfg.eps,
            "tail_start": args.tail_start,
            "occupied_cells": cover.count,
            "outputs": outputs,
        },
        cfg.out / "chaos.json",
    )
    print(f"chaos: {cover.count} occupied cells -> {cfg.out}")
    return EXIT_OK


def _window_counts(orbit, eps: float, tail_start: int, nwin: int) -> np.ndarray:
    m = orbit.degree
    pts = orbit.points
    cols = [pts[tail_start + i: tail_start + i + nwin] for i in range(m)]
    windows = np.stack(cols, axis=1).reshape(nwin, m * orbit.dim)
    box = orbit.domain.power(m)
    shape = tuple(
        int(math.ceil((hi - lo) / eps - 1e-9)) for lo, hi in zip(box.lo, box.hi)
    )
    idx = np.floor((windows - box.lo_arr) / eps).astype(np.int64)
    idx = np.clip(idx, 0, np.asarray(shape) - 1)
    counts = np.zeros(shape, dtype=np.int64)
    np.add.at(counts, tuple(idx.T), 1)
    return counts


def _density_image(counts: np.ndarray) -> np.ndarray:
    """Log-scaled grayscale: empty bins white (255), the fullest bin black (0)."""
    img = np.full(counts.shape, 255, dtype=np.uint8)
    cmax = counts.max()
    if cmax > 0:
        nz = counts > 0
        scale = np.log1p(counts[nz]) / math.log1p(cmax)
        img[nz] = 255 - np.rint(255.0 * scale).astype(np.uint8)
    return img.T[::-1, :]


def _default_init(sys_) -> np.ndarray:
    lo, hi = sys_.domain.lo_arr, sys_.domain.hi_arr
    # staggered interior points, fixed and documented
    fracs = np.linspace(0.25, 0.75, sys_.degree)
    return np.stack([lo + f * (hi - lo) for f in fracs])


def _parse_observables(specs):
    point, window = {}, {}
    for spec in specs:
        name, _, arg = spec.partition(":")
        if name == "coord":
            a = int(arg or 0)
            point[spec] = lambda pts, _a=a: pts[:, _a]
        elif name == "coord_sq":
            a = int(arg or 0)
            point[spec] = lambda pts, _a=a: pts[:, _a] ** 2
        elif name == "const":
            v = float(arg)
            point[spec] = lambda pts, _v=v: np.full(pts.shape[0], _v)
        elif name == "window_prod":
            window[spec] = lambda wins: np.prod(wins, axis=1)
        else:
            raise SystemFileError(f"unknown observable {spec!r}")
    return point, window


def _parse_regions(specs, domain):
    regions = {}
    for spec in specs:
        name, _, rng = spec.partition("=")
        if not rng:
            raise SystemFileError(f"region {spec!r} must look like name=lo:hi")
        lo_s, _, hi_s = rng.partition(":")
        lo = tuple(float(v) for v in lo_s.split(","))
        hi = tuple(float(v) for v in hi_s.split(","))
        regions[name] = (lo, hi)
    if not regions:
        lo, hi = domain.lo_arr, domain.hi_arr
        mid = hi.copy()
        mid[0] = (lo[0] + hi[0]) / 2.0
        regions["lower_half"] = (tuple(lo), tuple(mid))
    return regions


def cmd_ergodic(args) -> int:
    cfg = _config(args)
    sys_, ws = fileio.load_system(cfg.system)
    if ws is None:
        raise SystemFileError("ergodic requires a system file with weights")
    orbit = chaos_orbit(
        sys_, ws, _default_init(sys_), cfg.steps, seed=cfg.seed, burn_in=cfg.burn_in
    )
    specs = args.observable or ["coord:0", "coord_sq:0", "window_prod"]
    point, window = _parse_observables(specs)
    regions = _parse_regions(args.region or [], sys_.domain)
    report = ergodic_report(orbit, point, window, regions)
    payload = report.to_dict()
    payload.update({"seed": cfg.seed, "steps": cfg.steps, "burn_in": cfg.burn_in})
    fileio.write_json(payload, cfg.out / "ergodic.json")
    print(f"ergodic: N={report.count} -> {cfg.out / 'ergodic.json'}")
    return EXIT_OK


def cmd_measure(args) -> int:
    cfg = _config(args)
    sys_, ws = fileio.load_system(cfg.system)
    if ws is None:
        raise SystemFileError("measure requires a system file with weights")
    ext = build_extension(sys_)
    prune = PruneRule(args.prune_cell) if args.prune_cell else None
    result = iterate_hutchinson_measure(
        ext, ws, tol=cfg.tol, max_iter=args.max_iter, prune=prune
    )
    mu = result.measure
    fileio.measure_to_csv(mu, cfg.out / "measure.csv")
    moments = {f"mean_{a}": float(mu.mean()[a]) for a in range(mu.dim)}
    if mu.dim >= 2:
        exps = [0] * mu.dim
        exps[0] = exps[1] = 1
        moments["prod_01"] = mu.moment(exps)
    payload = {
        "tol": cfg.tol,
        "steps": result.steps,
        "converged": result.converged,
        "gaps": result.gaps,
        "moments": moments,
        "atoms": mu.size,
    }
    if mu.blocks >= 2:
        defect = wasserstein(marginal(mu, 0), marginal(mu, 1)).cost
        payload["marginal_defect"] = defect
    if args.uniqueness_check:
        other_seed = DiscreteMeasure.grid_uniform(ext.domain, 3, blocks=ext.degree)
        other = iterate_hutchinson_measure(
            ext, ws, seeds=[other_seed], tol=cfg.tol, max_iter=args.max_iter, prune=prune
        )
        payload["uniqueness_gap"] = wasserstein(mu, other.measure).cost
    fileio.write_json(payload, cfg.out / "measure_trace.json")
    print(
        "measure: %d atoms after %d steps (gap %r) -> %s"
        % (mu.size, result.steps, result.gaps[-1], cfg.out)
    )
    return EXIT_OK


def cmd_fde(args) -> int:
    cfg = _config(args)
    spec = fileio.load_fde(cfg.system)
    sys_ = compile_fde(spec)
    report = validate_system(sys_, samples=args.samples, seed=cfg.seed)
    coeffs = coefficients(9)
    payload = {
        "e1_ok": report.e1_ok,
        "lambda": report.lam,
        "coefficients": coeffs,
    }
    if not report.e1_ok:
        fileio.write_json(payload, cfg.out / "fde.json")
        print(f"fde: hypothesis violated (lambda={report.lam!r})")
        return EXIT_HYPOTHESIS

    rng = np.random.default_rng(cfg.seed)
    lo, hi = spec.domain.lo[0], spec.domain.hi[0]
    horizon = 21
    direct_err = 0.0
    closed_err = None
    is_averaging = (
        isinstance(spec.rhs, LinearRhs)
        and spec.rhs.coeffs == (0.25, 0.25)
        and spec.rhs.control_coeff == 0.5
        and spec.alphabet == (0.0, 1.0)
    )
    if is_averaging:
        closed_err = 0.0
    for _ in range(args.trials):
        init = rng.uniform(lo, hi, size=spec.order)
        controls = [spec.alphabet[i] for i in rng.integers(0, len(spec.alphabet), horizon)]
        path = iterate_fde(spec, init, controls)
        # compiled maps replayed on the same symbols
        win = list(init)
        for t, a in enumerate(controls):
            j = spec.alphabet.index(a)
            img = sys_.maps[j].eval(np.asarray(win)[:, None])
            direct_err = max(direct_err, abs(float(img[0]) - path[spec.order + t]))
            win.pop(0)
            win.append(path[spec.order + t])
        if is_averaging:
            for n in range(horizon - 1):
                val = closed_form_orbit(init[0], init[1], controls, n)
                closed_err = max(closed_err, abs(val - path[n + 2]))
    payload["direct_iteration_max_err"] = float(direct_err)
    payload["closed_form_max_err"] = None if closed_err is None else float(closed_err)
    payload["x0_coefficient_at_20"] = initial_coefficients(20)[0]
    fileio.write_json(payload, cfg.out / "fde.json")
    print(
        "fde: coefficients %s closed_form_err=%r -> %s"
        % (coeffs, payload["closed_form_max_err"], cfg.out / "fde.json")
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser / entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gifslab",
        description="Attractors, invariant measures and chaos games for "
        "generalized iterated function systems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--system", required=True, help="system description file (JSON)")
        p.add_argument("--seed", type=lambda s: int(s, 0), default=DEFAULT_SEED)
        p.add_argument("--steps", type=int, default=DEFAULT_STEPS)
        p.add_argument("--eps", type=float, default=DEFAULT_EPS)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--burn-in", dest="burn_in", type=int, default=DEFAULT_BURN_IN)
        p.add_argument("--out", default="out")
        p.add_argument("--format", choices=("pgm", "csv", "json"), default="pgm")

    p = sub.add_parser("validate", help="check the contraction/weight hypotheses")
    common(p)
    p.add_argument("--samples", type=int, default=4096)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("attract", help="deterministic attractor iteration")
    common(p)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=DEFAULT_MAX_ITER)
    p.set_defaults(func=cmd_attract)

    p = sub.add_parser("chaos", help="random-iteration density and orbit dump")
    common(p)
    p.add_argument("--tail-start", dest="tail_start", type=int, default=DEFAULT_BURN_IN)
    p.set_defaults(func=cmd_chaos)

    p = sub.add_parser("ergodic", help="orbit averages, visitation, defects")
    common(p)
    p.add_argument("--observable", action="append")
    p.add_argument("--region", action="append")
    p.set_defaults(func=cmd_ergodic)

    p = sub.add_parser("measure", help="invariant-measure fixed point iteration")
    common(p)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--prune-cell", dest="prune_cell", type=float, default=None)
    p.add_argument("--uniqueness-check", dest="uniqueness_check", action="store_true")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("fde", help="compile and verify a difference equation")
    common(p)
    p.add_argument("--samples", type=int, default=2048)
    p.add_argument("--trials", type=int, default=200)
    p.set_defaults(func=cmd_fde)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (E1Violation, SumNotOne, WeightBelowDelta) as exc:
        print(f"hypothesis violation: {exc}", file=_sys.stderr)
        return EXIT_HYPOTHESIS
    except (
        NoConvergence,
        PointOutsideDomain,
        NotEventuallyContractive,
        CellBudgetExceeded,
        SupportTooLarge,
    ) as exc:
        print(f"numeric failure: {exc}", file=_sys.stderr)
        return EXIT_NUMERIC
    except (
        SystemFileError,
        GifsError,
        FileNotFoundError,
        IsADirectoryError,
        ValueError,
    ) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    _sys.exit(main())
